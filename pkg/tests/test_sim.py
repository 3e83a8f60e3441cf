import dataclasses

import numpy as np
import pytest

from liftguard import (
    build_lifted,
    coprime_factorize,
    discretize,
    lift_controller,
    monitor_eval,
    observer_controller,
    run_dual_rate,
    run_lifted_closed_loop,
    run_single_rate,
    standard_loop,
    trace_to_csv,
)
from liftguard.attack import AttackPlan
from liftguard.errors import ConfigurationError
from liftguard.sim import LoopConfig, trace_metadata

from helpers import random_continuous, stable_two_state, triple_integrator, unstable_scalar


class TestMonitor:
    def test_all_zero_streams(self):
        verdict, values = monitor_eval(np.zeros((10, 2)), np.zeros((10, 1)), 0.01)
        assert verdict.stealthy
        assert not np.any(values)

    def test_first_crossing_index(self):
        y = np.zeros((10, 1))
        y[5, 0] = 0.02
        verdict, _ = monitor_eval(y, np.zeros((10, 1)), 0.01)
        assert verdict.detected and verdict.step == 5

    def test_exact_threshold_is_not_detection(self):
        y = np.full((4, 1), 0.01)
        verdict, _ = monitor_eval(y, np.zeros((4, 1)), 0.01)
        assert verdict.stealthy


class TestSingleRate:
    def test_no_attack_zero_traces(self):
        cfg, _ = standard_loop(triple_integrator(), 1.0, horizon=50)
        trace = run_single_rate(cfg)
        assert not np.any(trace.y) and not np.any(trace.u)
        assert trace.verdict.stealthy

    def test_unstable_configuration_rejected(self):
        from liftguard.factor import Controller

        zero_K = Controller(
            A=[[0.0]], B=[[0.0]], C=[[0.0]], D=[[0.0]], kind="observer_based_single_rate"
        )
        cfg = LoopConfig(
            plant=unstable_scalar(),
            T=1.0,
            mode="single_rate",
            controller=zero_K,
            theta=0.01,
            horizon=50,
        )
        with pytest.raises(ConfigurationError, match="unstable"):
            run_single_rate(cfg)

    def test_intersample_rows_match_samples_exactly(self):
        rng = np.random.default_rng(3)
        cfg, _ = standard_loop(stable_two_state(), 0.5, horizon=40, oversample=4)
        x0 = rng.standard_normal(2)
        cfg = dataclasses.replace(cfg, x0_plant=x0)
        trace = run_single_rate(cfg)
        # with no sensor attack the measured samples are the physical outputs
        np.testing.assert_array_equal(trace.y_intersample[::4], trace.y)
        np.testing.assert_allclose(trace.intersample_times[::4], trace.times, atol=0)

    def test_deviation_linear_in_epsilon(self):
        cfg, _ = standard_loop(stable_two_state(), 0.5, theta=1e9, horizon=120)
        base = run_single_rate(cfg)

        def deviation(eps):
            plan = AttackPlan(
                kind="coordinated",
                zeta=1.0,
                direction=[1.0],
                epsilon=1.0,
                horizon=120,
                channel_map=(0,),
                companion={
                    "d_a": eps * np.sin(0.3 * np.arange(120)).reshape(-1, 1),
                    "d_s": np.zeros((120, 1)),
                },
            )
            tr = run_single_rate(dataclasses.replace(cfg, attack=plan))
            return tr.y - base.y

        d1, d2 = deviation(1.0), deviation(2.0)
        np.testing.assert_allclose(d2, 2.0 * d1, atol=1e-10)


class TestDualRate:
    def test_no_attack_zero_traces(self):
        cfg, _ = standard_loop(triple_integrator(), 1.0, mode="dual_rate", m=4, horizon=30)
        trace = run_dual_rate(cfg)
        assert not np.any(trace.y) and not np.any(trace.u)
        assert trace.y.shape == (30 * 4, 1)

    def test_matches_lifted_reference(self):
        rng = np.random.default_rng(11)
        for _ in range(6):
            plant = random_continuous(rng, n=int(rng.integers(2, 4)), n_u=1, n_y=1)
            m = int(rng.integers(2, 4))
            try:
                cfg, factors = standard_loop(plant, 0.8, mode="dual_rate", m=m, horizon=100)
            except Exception:
                continue
            x0 = rng.standard_normal(plant.n) * 0.1
            d_a = rng.standard_normal((100, 1)) * 0.01
            plan = AttackPlan(
                kind="coordinated",
                zeta=1.0,
                direction=[1.0],
                epsilon=1.0,
                horizon=100,
                channel_map=(0,),
                companion={"d_a": d_a, "d_s": np.zeros((100 * m, 1))},
            )
            cfg = dataclasses.replace(cfg, x0_plant=x0, attack=plan, theta=1e9, oversample=1)
            trace = run_dual_rate(cfg)
            L = build_lifted(plant, 0.8, m)
            u_ref, y_ref = run_lifted_closed_loop(
                L, cfg.controller, 100, d_a=d_a, x0=x0
            )
            scale = max(1.0, np.max(np.abs(y_ref)))
            assert np.max(np.abs(trace.u - u_ref)) <= 1e-9 * scale
            stacked = trace.y.reshape(100, -1)
            assert np.max(np.abs(stacked - y_ref)) <= 1e-9 * scale

    def test_subsampled_dual_rate_equals_single_rate(self):
        # when the lifted controller just lifts the single-rate one, the
        # dual-rate loop reproduces the single-rate loop at base instants
        rng = np.random.default_rng(13)
        plant = stable_two_state()
        m = 3
        P = discretize(plant, 0.6)
        factors = coprime_factorize(P)
        K = observer_controller(factors)
        KL = lift_controller(K, m)
        x0 = rng.standard_normal(2)
        cfg_s = LoopConfig(
            plant=plant, T=0.6, mode="single_rate", controller=K, theta=1e9,
            horizon=80, x0_plant=x0, oversample=1,
        )
        cfg_d = LoopConfig(
            plant=plant, T=0.6, mode="dual_rate", controller=KL, theta=1e9,
            horizon=80, m=m, x0_plant=x0, oversample=1,
        )
        tr_s = run_single_rate(cfg_s)
        tr_d = run_dual_rate(cfg_d)
        np.testing.assert_allclose(tr_d.u, tr_s.u, atol=1e-9)
        np.testing.assert_allclose(tr_d.y[::m], tr_s.y, atol=1e-9)

    def test_requires_lifted_controller(self):
        P = discretize(stable_two_state(), 0.6)
        K = observer_controller(coprime_factorize(P))
        with pytest.raises(ConfigurationError, match="lifted"):
            LoopConfig(
                plant=stable_two_state(), T=0.6, mode="dual_rate", controller=K,
                theta=0.01, horizon=10, m=3,
            )


class TestTraceExport:
    def test_csv_layout(self, tmp_path):
        cfg, _ = standard_loop(triple_integrator(), 1.0, mode="dual_rate", m=4, horizon=5)
        trace = run_dual_rate(cfg)
        path = tmp_path / "trace.csv"
        trace_to_csv(trace, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "step,substep,time,u_1,y_1,da_1,ds_1,monitor,crossed"
        assert len(lines) == 1 + 5 * 4
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "0"

    def test_metadata(self):
        cfg, _ = standard_loop(triple_integrator(), 1.0, horizon=5)
        meta = trace_metadata(run_single_rate(cfg))
        assert meta["verdict"] == "stealthy"
        assert meta["horizon"] == 5
        assert meta["mode"] == "single_rate"

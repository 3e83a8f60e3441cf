import dataclasses

import numpy as np
import pytest

from liftguard import (
    DiscretePlant,
    bezout_defect,
    coprime_factorize,
    discretize,
    eval_lambda,
    observer_controller,
    residual_generator,
    run_single_rate,
    standard_loop,
    transmission_zeros,
)
from liftguard.attack import AttackPlan, synth_actuator_attack
from liftguard.errors import ModelError
from liftguard.factor import closed_loop_matrix
from liftguard.linalg import spectral_radius

from helpers import assert_sets_close, double_integrator, random_discrete, triple_integrator


class TestCoprimeFactorize:
    def test_stable_plant_trivial_gains(self):
        sys = DiscretePlant(A=[[0.5]], B=[[1.0]], C=[[1.0]], D=[[0.0]], period=1.0)
        factors = coprime_factorize(sys, F=np.zeros((1, 1)), H=np.zeros((1, 1)))
        # numerator factor collapses to the plant, denominator to identity
        for lam in (0.3, 0.7 + 0.2j, -0.9):
            np.testing.assert_allclose(
                eval_lambda(factors.Nl, lam), eval_lambda(sys, lam), atol=1e-12
            )
            np.testing.assert_allclose(eval_lambda(factors.Ml, lam), [[1.0]], atol=1e-12)

    def test_denominator_zeros_are_plant_poles(self):
        sys = DiscretePlant(A=[[2.0]], B=[[1.0]], C=[[1.0]], D=[[0.0]], period=1.0)
        factors = coprime_factorize(sys)
        report = transmission_zeros(factors.Ml)
        assert_sets_close(
            [r.z_value for r in report.zeros if r.z_value is not None],
            [2.0],
            1e-6,
            "denominator zeros",
        )

    def test_bezout_identity_random(self):
        rng = np.random.default_rng(3)
        for _ in range(15):
            sys = random_discrete(rng, n_u=1, n_y=1, radius=float(rng.uniform(0.5, 1.4)))
            assert bezout_defect(coprime_factorize(sys)) <= 1e-8

    def test_numerator_keeps_nmp_zeros(self):
        sys = discretize(triple_integrator(), 1.0)
        factors = coprime_factorize(sys)
        plant_zeros = [
            r.z_value
            for r in transmission_zeros(sys).zeros
            if r.z_value is not None and abs(r.z_value) > 1.0
        ]
        numer_zeros = [
            r.z_value
            for r in transmission_zeros(factors.Nl).zeros
            if r.z_value is not None and abs(r.z_value) > 1.0
        ]
        assert_sets_close(numer_zeros, plant_zeros, 1e-6, "numerator NMP zeros")

    def test_gain_shapes_checked(self):
        sys = random_discrete(np.random.default_rng(9))
        with pytest.raises(Exception):
            coprime_factorize(sys, F=np.zeros((2, 1)))

    def test_nonminimal_rejected(self):
        sys = DiscretePlant(
            A=[[0.5, 0.0], [0.0, 0.25]], B=[[1.0], [0.0]], C=[[1.0, 0.0]], D=[[0.0]], period=1.0
        )
        with pytest.raises(ModelError):
            coprime_factorize(sys)


class TestObserverController:
    def test_zero_gains_zero_controller(self):
        sys = DiscretePlant(A=[[0.5]], B=[[1.0]], C=[[1.0]], D=[[0.0]], period=1.0)
        factors = coprime_factorize(sys, F=np.zeros((1, 1)), H=np.zeros((1, 1)))
        K = observer_controller(factors)
        assert not np.any(K.C)  # output map is zero, so K == 0
        assert spectral_radius(closed_loop_matrix(sys, K)) < 1.0

    def test_unstable_scalar_loop_stable(self):
        sys = DiscretePlant(A=[[2.0]], B=[[1.0]], C=[[1.0]], D=[[0.0]], period=1.0)
        factors = coprime_factorize(sys)
        K = observer_controller(factors)
        assert spectral_radius(closed_loop_matrix(sys, K)) < 1.0

    def test_double_integrator_loop_bounded(self):
        cfg, _ = standard_loop(double_integrator(), 0.1, theta=1e6, horizon=1000)
        # step disturbance on the actuator: the stable loop keeps signals bounded
        step = AttackPlan(
            kind="coordinated",
            zeta=1.0,
            direction=[1.0],
            epsilon=1.0,
            horizon=1000,
            channel_map=(0,),
            companion={"d_a": np.ones((1000, 1)), "d_s": np.zeros((1000, 1))},
        )
        trace = run_single_rate(dataclasses.replace(cfg, attack=step))
        assert np.max(np.abs(trace.y)) < 1e3
        assert np.max(np.abs(trace.u)) < 1e3

    def test_strictly_proper(self):
        factors = coprime_factorize(discretize(triple_integrator(), 1.0))
        assert observer_controller(factors).strictly_proper


class TestResidualGenerator:
    def test_attack_free_residual_zero(self):
        cfg, factors = standard_loop(triple_integrator(), 1.0, horizon=100)
        trace = run_single_rate(cfg)
        r = residual_generator(factors).run(trace.y, trace.u)
        assert np.max(np.abs(r)) <= 1e-9

    def test_zero_direction_attack_residual_small(self):
        cfg, factors = standard_loop(triple_integrator(), 1.0, theta=0.01, horizon=200)
        plan = synth_actuator_attack(cfg)
        trace = run_single_rate(dataclasses.replace(cfg, attack=plan, horizon=plan.horizon))
        r = residual_generator(factors).run(trace.y, trace.u)
        # the stable numerator factor annihilates the geometric mode
        assert np.max(np.abs(r)) <= cfg.theta

    def test_wrong_mode_attack_residual_grows(self):
        cfg, factors = standard_loop(triple_integrator(), 1.0, theta=0.01, horizon=200)
        plan = synth_actuator_attack(cfg)
        bad = dataclasses.replace(plan, zeta=plan.zeta * 1.1)
        trace = run_single_rate(dataclasses.replace(cfg, attack=bad, horizon=plan.horizon))
        r = residual_generator(factors).run(trace.y, trace.u)
        assert np.max(np.abs(r)) > 100.0 * cfg.theta

    def test_linearity(self):
        rng = np.random.default_rng(31)
        cfg, factors = standard_loop(triple_integrator(), 1.0, horizon=60)
        P = discretize(triple_integrator(), 1.0)
        d_a = rng.standard_normal((60, 1))
        d_s = rng.standard_normal((60, 1))

        def residual(da, ds):
            plan = AttackPlan(
                kind="coordinated",
                zeta=1.0,
                direction=[1.0],
                epsilon=1.0,
                horizon=60,
                channel_map=(0,),
                companion={"d_a": da, "d_s": ds},
            )
            tr = run_single_rate(
                dataclasses.replace(cfg, attack=plan, theta=1e9)
            )
            return residual_generator(factors).run(tr.y, tr.u)

        r_both = residual(d_a, d_s)
        r_sum = residual(d_a, np.zeros_like(d_s)) + residual(np.zeros_like(d_a), d_s)
        np.testing.assert_allclose(r_both, r_sum, atol=1e-9)

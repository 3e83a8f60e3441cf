"""Closed-loop sampled-data simulation with attack injection and a
threshold detection monitor.

All propagation is exact LTI discretization: the plant state advances per
(sub-)step through the zero-order-hold quadruple, intersample behavior is
evaluated on a finer exact grid whose points contain the sample instants,
and no ODE solver is involved.  The monitor watches only the cyber-layer
signals, i.e. the measured outputs and the controller commands; the
continuous intersample output is recorded for inspection but never feeds
detection.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConfigurationError, DimensionError
from .factor import Controller, closed_loop_matrix, coprime_factorize, observer_controller
from .lift import LiftedSystem, build_lifted, choose_m
from .model import ContinuousPlant, discretize

__all__ = [
    "LoopConfig",
    "SimTrace",
    "Verdict",
    "monitor_eval",
    "run_single_rate",
    "run_dual_rate",
    "run_lifted_closed_loop",
    "standard_loop",
    "trace_to_csv",
    "trace_metadata",
    "DIVERGENCE_GUARD",
]

DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class Verdict:
    """Monitor outcome: stealthy over the horizon, or first strict crossing."""

    detected: bool
    step: int | None = None  # flat sample index of the first crossing

    @property
    def stealthy(self) -> bool:
        return not self.detected


@dataclass(frozen=True)
class LoopConfig:
    """Closed-loop run description.

    ``horizon`` counts base steps.  ``oversample`` is the intersample
    refinement per (sub-)sampling interval.  ``attack`` is an attack plan
    (or None); its signals are rendered at the base rate for the actuator
    channel and at the sampling rate of the sensors.
    """

    plant: ContinuousPlant
    T: float
    mode: str  # "single_rate" | "dual_rate"
    controller: Controller
    theta: float
    horizon: int
    m: int | None = None
    oversample: int = 8
    attack: object = None
    x0_plant: np.ndarray | None = None
    x0_controller: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("single_rate", "dual_rate"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "dual_rate":
            if self.m is None or self.m < 2:
                raise ConfigurationError("dual_rate mode requires m >= 2")
            if self.controller.kind != "observer_based_lifted":
                raise ConfigurationError("dual_rate mode requires a lifted controller")
        if not self.theta > 0:
            raise ConfigurationError(f"theta must be positive, got {self.theta}")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be at least one step")
        if self.oversample < 1:
            raise ConfigurationError("oversample must be at least 1")
        if not self.controller.strictly_proper:
            raise ConfigurationError("the loop requires a strictly proper controller")


@dataclass(frozen=True)
class SimTrace:
    """Time-stamped closed-loop trajectories with the monitor verdict.

    ``y`` holds one row per sample (m rows per base step in dual-rate
    mode) of the measured output; ``u`` one row per base step of the
    controller command; ``monitor`` one value per sample row.
    """

    times: np.ndarray  # per sample row
    u: np.ndarray  # (horizon, n_u)
    y: np.ndarray  # (horizon * samples_per_step, n_y)
    y_intersample: np.ndarray
    intersample_times: np.ndarray
    d_a: np.ndarray  # (horizon, n_u)
    d_s: np.ndarray  # (horizon * samples_per_step, n_y)
    monitor: np.ndarray
    verdict: Verdict
    theta: float
    mode: str
    T: float
    samples_per_step: int  # 1 (single rate) or m (dual rate)


def monitor_eval(y_stream, u_stream, theta: float):
    """Max-norm monitor over aligned streams with strict threshold crossing.

    Returns ``(verdict, values)`` where ``values[k]`` is the larger of the
    output and input max-norms at sample k and the verdict reports the
    first k with ``values[k] > theta`` (a value exactly at the threshold
    is not a detection).
    """
    Y = np.atleast_2d(np.asarray(y_stream, dtype=float))
    U = np.atleast_2d(np.asarray(u_stream, dtype=float))
    if Y.shape[0] != U.shape[0]:
        raise DimensionError("monitor streams must be aligned (equal length)")
    values = np.maximum(np.max(np.abs(Y), axis=1), np.max(np.abs(U), axis=1))
    crossing = np.nonzero(values > theta)[0]
    if crossing.size:
        return Verdict(detected=True, step=int(crossing[0])), values
    return Verdict(detected=False, step=None), values


def _render_attack(attack, n_base: int, n_u: int, n_samples: int, n_y: int):
    d_a = np.zeros((n_base, n_u))
    d_s = np.zeros((n_samples, n_y))
    if attack is not None:
        seq_a = attack.actuator_sequence(n_base, n_u)
        seq_s = attack.sensor_sequence(n_samples, n_y)
        if seq_a is not None:
            d_a = seq_a
        if seq_s is not None:
            d_s = seq_s
    return d_a, d_s


def _assert_stable(plant_like, controller, what: str):
    rho = linalg.spectral_radius(closed_loop_matrix(plant_like, controller))
    if rho >= 1.0:
        raise ConfigurationError(
            f"{what} closed loop is unstable (spectral radius {rho:.6f}); "
            "refusing to simulate"
        )


def run_single_rate(cfg: LoopConfig) -> SimTrace:
    """Closed-loop run at a single sample-and-hold rate."""
    if cfg.mode != "single_rate":
        raise ConfigurationError("configuration is not single_rate")
    P = discretize(cfg.plant, cfg.T)
    K = cfg.controller
    if K.B.shape[1] != P.n_y or K.C.shape[0] != P.n_u:
        raise ConfigurationError("controller dimensions do not match the plant")
    _assert_stable(P, K, "single-rate")

    N, r = cfg.horizon, cfg.oversample
    fine = discretize(cfg.plant, cfg.T / r)
    d_a, d_s = _render_attack(cfg.attack, N, P.n_u, N, P.n_y)

    x = np.zeros(P.n) if cfg.x0_plant is None else np.asarray(cfg.x0_plant, dtype=float)
    xk = np.zeros(K.n) if cfg.x0_controller is None else np.asarray(cfg.x0_controller, dtype=float)
    u_log = np.empty((N, P.n_u))
    y_log = np.empty((N, P.n_y))
    y_int = np.empty((N * r, P.n_y))
    attacked = cfg.attack is not None

    for k in range(N):
        u_k = K.C @ xk
        u_applied = u_k + d_a[k]
        y_meas = P.C @ x + P.D @ u_applied + d_s[k]
        u_log[k] = u_k
        y_log[k] = y_meas
        # Intersample grid restarts from the sampled state, so the row at
        # each sample instant matches the sampled physical output exactly.
        xi = x
        for j in range(r):
            y_int[k * r + j] = fine.C @ xi + fine.D @ u_applied
            xi = fine.A @ xi + fine.B @ u_applied
        xk = K.A @ xk + K.B @ y_meas
        x = P.A @ x + P.B @ u_applied
        if not attacked and max(np.max(np.abs(y_meas)), np.max(np.abs(u_k))) > DIVERGENCE_GUARD:
            raise ConfigurationError(
                f"attack-free loop diverged past {DIVERGENCE_GUARD:.0e} at step {k}"
            )

    verdict, monitor = monitor_eval(y_log, np.repeat(u_log, 1, axis=0), cfg.theta)
    return SimTrace(
        times=np.arange(N) * cfg.T,
        u=u_log,
        y=y_log,
        y_intersample=y_int,
        intersample_times=np.arange(N * r) * (cfg.T / r),
        d_a=d_a,
        d_s=d_s,
        monitor=monitor,
        verdict=verdict,
        theta=cfg.theta,
        mode="single_rate",
        T=cfg.T,
        samples_per_step=1,
    )


def run_dual_rate(cfg: LoopConfig) -> SimTrace:
    """Closed-loop run with the output sampled m times per hold period.

    The plant advances m exact sub-steps per base step while the input is
    held; the m measured sub-samples (each possibly corrupted by the
    sensor attack, which runs at the fast rate) are stacked and fed to the
    lifted controller, which emits the next held command.  The monitor is
    evaluated per sub-sample against the held command.
    """
    if cfg.mode != "dual_rate":
        raise ConfigurationError("configuration is not dual_rate")
    m = cfg.m
    L = build_lifted(cfg.plant, cfg.T, m)
    fast = L.fast_plant
    K = cfg.controller
    if K.B.shape[1] != m * fast.n_y or K.C.shape[0] != fast.n_u:
        raise ConfigurationError("lifted controller dimensions do not match (m, plant)")
    _assert_stable(L, K, "dual-rate")

    N, r = cfg.horizon, cfg.oversample
    fine = discretize(cfg.plant, cfg.T / (m * r))
    d_a, d_s = _render_attack(cfg.attack, N, fast.n_u, N * m, fast.n_y)

    x = np.zeros(fast.n) if cfg.x0_plant is None else np.asarray(cfg.x0_plant, dtype=float)
    xk = np.zeros(K.n) if cfg.x0_controller is None else np.asarray(cfg.x0_controller, dtype=float)
    u_log = np.empty((N, fast.n_u))
    y_log = np.empty((N * m, fast.n_y))
    y_int = np.empty((N * m * r, fast.n_y))
    attacked = cfg.attack is not None

    for k in range(N):
        u_k = K.C @ xk
        u_applied = u_k + d_a[k]
        u_log[k] = u_k
        stacked = np.empty(m * fast.n_y)
        for i in range(m):
            idx = k * m + i
            y_sub = fast.C @ x + fast.D @ u_applied + d_s[idx]
            y_log[idx] = y_sub
            stacked[i * fast.n_y : (i + 1) * fast.n_y] = y_sub
            xi = x
            for j in range(r):
                y_int[idx * r + j] = fine.C @ xi + fine.D @ u_applied
                xi = fine.A @ xi + fine.B @ u_applied
            x = fast.A @ x + fast.B @ u_applied
        xk = K.A @ xk + K.B @ stacked
        if not attacked and max(np.max(np.abs(stacked)), np.max(np.abs(u_k))) > DIVERGENCE_GUARD:
            raise ConfigurationError(
                f"attack-free loop diverged past {DIVERGENCE_GUARD:.0e} at step {k}"
            )

    verdict, monitor = monitor_eval(y_log, np.repeat(u_log, m, axis=0), cfg.theta)
    return SimTrace(
        times=np.arange(N * m) * (cfg.T / m),
        u=u_log,
        y=y_log,
        y_intersample=y_int,
        intersample_times=np.arange(N * m * r) * (cfg.T / (m * r)),
        d_a=d_a,
        d_s=d_s,
        monitor=monitor,
        verdict=verdict,
        theta=cfg.theta,
        mode="dual_rate",
        T=cfg.T,
        samples_per_step=m,
    )


def run_lifted_closed_loop(L: LiftedSystem, controller: Controller, n_steps: int,
                           d_a=None, d_s_stacked=None, x0=None, xk0=None):
    """Reference LTI recursion of the lifted loop with stacked signals.

    Used as the oracle for the dual-rate time-domain engine: both must
    produce identical command and stacked-output trajectories.
    Returns ``(u, y_stacked)``.
    """
    n, n_u, n_ys = L.n, L.n_u, L.C.shape[0]
    d_a = np.zeros((n_steps, n_u)) if d_a is None else np.asarray(d_a, dtype=float)
    d_s = np.zeros((n_steps, n_ys)) if d_s_stacked is None else np.asarray(d_s_stacked, dtype=float)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    xk = np.zeros(controller.n) if xk0 is None else np.asarray(xk0, dtype=float)
    u_log = np.empty((n_steps, n_u))
    y_log = np.empty((n_steps, n_ys))
    for k in range(n_steps):
        u_k = controller.C @ xk
        ua = u_k + d_a[k]
        y_k = L.C @ x + L.D @ ua + d_s[k]
        u_log[k] = u_k
        y_log[k] = y_k
        xk = controller.A @ xk + controller.B @ y_k
        x = L.A @ x + L.B @ ua
    return u_log, y_log


def _weight(value, dim: int):
    """Scalar weights become scaled identities; matrices pass through."""
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(dim)
    return arr


def standard_loop(plant: ContinuousPlant, T: float, mode: str = "single_rate",
                  m=None, theta: float = 0.01, horizon: int = 200,
                  oversample: int = 8, attack=None,
                  Q=None, R=None, Qo=None, Ro=None):
    """Assemble a stabilized loop with the default observer controller.

    ``Q``/``R`` weight the state-feedback Riccati problem and ``Qo``/``Ro``
    its observer dual; scalars are taken as multiples of the identity.
    Returns ``(config, factors)``; the factored system (discrete or
    lifted) is available as ``factors.base``.
    """
    if mode == "single_rate":
        sys = discretize(plant, T)
    elif mode == "dual_rate":
        if m is None:
            m = choose_m(plant, T)
        sys = build_lifted(plant, T, int(m))
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")
    factors = coprime_factorize(
        sys,
        Q=_weight(Q, sys.n),
        R=_weight(R, sys.n_u),
        Qo=_weight(Qo, sys.n),
        Ro=_weight(Ro, sys.n_y),
    )
    controller = observer_controller(factors)
    cfg = LoopConfig(
        plant=plant,
        T=T,
        mode=mode,
        controller=controller,
        theta=theta,
        horizon=horizon,
        m=None if mode == "single_rate" else int(m),
        oversample=oversample,
        attack=attack,
    )
    return cfg, factors


def trace_to_csv(trace: SimTrace, path) -> None:
    """Write one CSV row per sub-sample.

    Columns: step, substep, time, u_1..u_nu, y_1..y_ny, da_1..da_nu,
    ds_1..ds_ny, monitor, crossed.
    """
    m = trace.samples_per_step
    n_u = trace.u.shape[1]
    n_y = trace.y.shape[1]
    header = (
        ["step", "substep", "time"]
        + [f"u_{i+1}" for i in range(n_u)]
        + [f"y_{i+1}" for i in range(n_y)]
        + [f"da_{i+1}" for i in range(n_u)]
        + [f"ds_{i+1}" for i in range(n_y)]
        + ["monitor", "crossed"]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx in range(trace.y.shape[0]):
            k, i = divmod(idx, m)
            row = (
                [k, i, repr(float(trace.times[idx]))]
                + [repr(float(v)) for v in trace.u[k]]
                + [repr(float(v)) for v in trace.y[idx]]
                + [repr(float(v)) for v in trace.d_a[k]]
                + [repr(float(v)) for v in trace.d_s[idx]]
                + [repr(float(trace.monitor[idx])), int(trace.monitor[idx] > trace.theta)]
            )
            writer.writerow(row)


def trace_metadata(trace: SimTrace) -> dict:
    """Sidecar summary of a run: verdict, threshold, shape."""
    return {
        "mode": trace.mode,
        "T": trace.T,
        "samples_per_step": trace.samples_per_step,
        "theta": trace.theta,
        "horizon": int(trace.u.shape[0]),
        "verdict": "detected" if trace.verdict.detected else "stealthy",
        "first_crossing": trace.verdict.step,
        "max_monitor": float(np.max(trace.monitor)),
    }

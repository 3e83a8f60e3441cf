"""Coprime factorizations over the stable ring, the observer-based
stabilizing controller, and the residual generator they imply.

With a state-feedback gain F (A+BF Schur) and an output-injection gain H
(A+HC Schur) the factor realizations are the standard ones,

    left:   Ml = [A+HC | H; C | I]       Nl = [A+HC | B+HD; C | D]
    right:  Mr = [A+BF | B; F | I]       Nr = [A+BF | B; C+DF | D]
    unit:   X  = [A+BF | -H; C+DF | I]   Y  = [A+BF | -H; F | 0]

which satisfy the Bezout identity Ml*X - Nl*Y = I exactly (so the unit in
the closed-loop disturbance maps is the identity).  The plant factors as
Ml^{-1} Nl = Nr Mr^{-1}, the zeros of Ml are the plant poles, and Nl
shares the plant's non-minimum-phase zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionError, ModelError, NumericError
from .model import StateSpace, abcd, check_minimal

__all__ = [
    "CoprimeFactors",
    "Controller",
    "ResidualFilter",
    "coprime_factorize",
    "observer_controller",
    "residual_generator",
    "bezout_defect",
    "eval_lambda",
    "closed_loop_matrix",
]


def eval_lambda(sys, lam: complex) -> np.ndarray:
    """Transfer map D + lam*C (I - lam*A)^{-1} B at reciprocal frequency lam."""
    A, B, C, D = abcd(sys)
    n = A.shape[0]
    M = np.eye(n, dtype=complex) - complex(lam) * A
    return D + complex(lam) * (C @ np.linalg.solve(M, B))


@dataclass(frozen=True)
class Controller:
    """Observer-based stabilizing controller (strictly proper)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    kind: str = "observer_based_single_rate"

    def __post_init__(self):
        for attr in ("A", "B", "C", "D"):
            object.__setattr__(self, attr, np.atleast_2d(np.asarray(getattr(self, attr), dtype=float)))

    @property
    def strictly_proper(self) -> bool:
        return not np.any(self.D)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class CoprimeFactors:
    """Doubly-coprime factor realizations plus the gains that built them."""

    F: np.ndarray
    H: np.ndarray
    Nl: StateSpace
    Ml: StateSpace
    Nr: StateSpace
    Mr: StateSpace
    X: StateSpace
    Y: StateSpace
    base: object  # the factored plant (discrete or lifted)


def _is_lifted(sys) -> bool:
    return hasattr(sys, "fast_plant") and hasattr(sys, "m")


def coprime_factorize(sys, F=None, H=None, Q=None, R=None, Qo=None, Ro=None) -> CoprimeFactors:
    """Doubly-coprime factorization of a minimal discrete system.

    Omitted gains are produced by the Riccati solver with identity
    weights (and its dual for the output injection).  Both Schur
    conditions are asserted on the result.
    """
    A, B, C, D = (np.asarray(M, dtype=float) for M in abcd(sys))
    rep = check_minimal((A, B, C, D))
    if not rep.minimal:
        raise ModelError(
            "coprime factorization requires a minimal realization "
            f"(controllable={rep.controllable}, observable={rep.observable})"
        )
    n = A.shape[0]
    if F is None:
        F = linalg.dare_gain(A, B, Q, R)
    else:
        F = np.atleast_2d(np.asarray(F, dtype=float))
    if H is None:
        H = linalg.dare_gain(A.T, C.T, Qo, Ro).T
    else:
        H = np.atleast_2d(np.asarray(H, dtype=float))
    if F.shape != (B.shape[1], n):
        raise DimensionError(f"F must have shape {(B.shape[1], n)}, got {F.shape}")
    if H.shape != (n, C.shape[0]):
        raise DimensionError(f"H must have shape {(n, C.shape[0])}, got {H.shape}")
    if linalg.spectral_radius(A + B @ F) >= 1.0:
        raise ModelError("state-feedback gain F does not make A+BF Schur stable")
    if linalg.spectral_radius(A + H @ C) >= 1.0:
        raise ModelError("output-injection gain H does not make A+HC Schur stable")

    AHC = A + H @ C
    ABF = A + B @ F
    CDF = C + D @ F
    factors = CoprimeFactors(
        F=F,
        H=H,
        Nl=StateSpace(AHC, B + H @ D, C, D),
        Ml=StateSpace(AHC, H, C, np.eye(C.shape[0])),
        Nr=StateSpace(ABF, B, CDF, D),
        Mr=StateSpace(ABF, B, F, np.eye(B.shape[1])),
        X=StateSpace(ABF, -H, CDF, np.eye(C.shape[0])),
        Y=StateSpace(ABF, -H, F, np.zeros((B.shape[1], C.shape[0]))),
        base=sys,
    )
    defect, scale = _bezout_defect_scaled(factors)
    # The identity is exact in algebra; what survives numerically is bounded
    # by round-off amplified by the magnitude of the evaluated products, so
    # the construction-time sanity check is relative to that magnitude.
    if defect > 1e-8 * max(1.0, scale):
        raise NumericError(
            f"Bezout identity violated by the constructed factors (defect {defect:.3e} "
            f"at product magnitude {scale:.3e}); this signals an algebra error"
        )
    return factors


def _bezout_defect_scaled(factors: CoprimeFactors, n_points: int = 16):
    n_y = factors.Ml.n_y
    worst, scale = 0.0, 0.0
    for j in range(n_points):
        lam = np.exp(2j * np.pi * j / n_points)
        P1 = eval_lambda(factors.Ml, lam) @ eval_lambda(factors.X, lam)
        P2 = eval_lambda(factors.Nl, lam) @ eval_lambda(factors.Y, lam)
        worst = max(worst, float(np.linalg.norm(P1 - P2 - np.eye(n_y), 2)))
        scale = max(scale, float(np.linalg.norm(P1, 2)), float(np.linalg.norm(P2, 2)))
    return worst, scale


def bezout_defect(factors: CoprimeFactors, n_points: int = 16) -> float:
    """Largest deviation of Ml*X - Nl*Y from identity on unit-circle samples."""
    return _bezout_defect_scaled(factors, n_points)[0]


def closed_loop_matrix(plant, controller) -> np.ndarray:
    """State matrix of the positive-feedback interconnection u = K y.

    The controller must be strictly proper so no algebraic loop forms.
    """
    A, B, C, D = abcd(plant)
    Ak, Bk, Ck, Dk = abcd(controller)
    if np.any(Dk):
        raise DimensionError("closed-loop assembly expects a strictly proper controller")
    return np.block([[A, B @ Ck], [Bk @ C, Ak + Bk @ (D @ Ck)]])


def observer_controller(factors: CoprimeFactors, kind=None) -> Controller:
    """Observer-based stabilizing controller assembled from the factor gains.

    The realization is [A+BF+HC+HDF | -H; F | 0]: strictly proper, so in a
    multirate implementation the control value for a hold interval depends
    only on samples gathered strictly before it starts.  Internal
    stability of the loop with the factored plant is asserted.
    """
    A, B, C, D = (np.asarray(M, dtype=float) for M in abcd(factors.base))
    F, H = factors.F, factors.H
    K = Controller(
        A=A + B @ F + H @ C + H @ D @ F,
        B=-H,
        C=F,
        D=np.zeros((B.shape[1], C.shape[0])),
        kind=kind or ("observer_based_lifted" if _is_lifted(factors.base) else "observer_based_single_rate"),
    )
    rho = linalg.spectral_radius(closed_loop_matrix(factors.base, K))
    if rho >= 1.0:
        raise NumericError(
            f"assembled observer controller fails internal stability (radius {rho:.6f}); "
            "this should be impossible with exact gains and signals conditioning problems"
        )
    return K


class ResidualFilter:
    """Causal filter over measured (y, u) streams emitting the residual.

    In an attack-free closed loop started from zero states the residual is
    identically zero; injected actuator and sensor disturbances appear in
    it filtered by the stable left factors.  Single-owner: one filter per
    run, distinct filters are independent.
    """

    def __init__(self, factors: CoprimeFactors):
        A, B, C, D = (np.asarray(M, dtype=float) for M in abcd(factors.base))
        H = factors.H
        self._A = A + H @ C
        self._By = H
        self._Bu = -(B + H @ D)
        self._C = C
        self._Du = -D
        self._x = np.zeros(A.shape[0])
        self.n_y = C.shape[0]
        self.n_u = B.shape[1]

    def step(self, y, u) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1)
        u = np.asarray(u, dtype=float).reshape(-1)
        if y.shape[0] != self.n_y or u.shape[0] != self.n_u:
            raise DimensionError(
                f"residual filter expects y of length {self.n_y} and u of length {self.n_u}"
            )
        r = self._C @ self._x + y + self._Du @ u
        self._x = self._A @ self._x + self._By @ y + self._Bu @ u
        return r

    def run(self, ys, us) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        us = np.atleast_2d(np.asarray(us, dtype=float))
        if ys.shape[0] != us.shape[0]:
            raise DimensionError("y and u streams must have equal length")
        return np.array([self.step(y, u) for y, u in zip(ys, us)])


def residual_generator(factors: CoprimeFactors) -> ResidualFilter:
    """Fresh residual filter for the factored plant."""
    return ResidualFilter(factors)

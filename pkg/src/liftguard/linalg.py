"""Dense linear-algebra kernels: matrix exponential, SVD-based rank,
eigenvalues, and a fixed-point Riccati solver producing stabilizing gains.

Everything is plain ``numpy`` arrays in and out, sized for desk-scale
problems (state dimension up to a few tens).  All functions are pure and
safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, ModelError, NumericError

__all__ = [
    "RankResult",
    "expm",
    "rank_svd",
    "eig",
    "spectral_radius",
    "dare_gain",
    "DEFAULT_RANK_RTOL",
]

DEFAULT_RANK_RTOL = 1e-9


def _as_matrix(M, name: str = "matrix") -> np.ndarray:
    A = np.atleast_2d(np.asarray(M))
    if A.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got ndim={A.ndim}")
    if A.size == 0:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(A)):
        raise NumericError(f"{name} contains non-finite entries")
    return A


def _square(M, name: str = "matrix") -> np.ndarray:
    A = _as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def expm(M) -> np.ndarray:
    """Matrix exponential, scaling-and-squaring with a Pade approximant.

    Parameters
    ----------
    M : array_like
        Square matrix with finite entries.

    Returns
    -------
    np.ndarray
        exp(M).
    """
    A = _square(M, "expm input")
    with np.errstate(over="ignore"):
        E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise NumericError("matrix exponential overflowed; input norm is too large")
    return E


@dataclass(frozen=True)
class RankResult:
    """Numerical rank decision together with its audit trail.

    ``rank`` counts singular values strictly greater than
    ``tolerance_used`` (an absolute threshold derived from the relative
    tolerance and the largest singular value).  ``gap`` reports the ratio
    between the smallest retained and the largest discarded singular
    value so borderline decisions are visible.
    """

    rank: int
    singular_values: np.ndarray
    tolerance_used: float

    @property
    def gap(self) -> float:
        s = self.singular_values
        if self.rank == 0:
            return 0.0
        if self.rank >= s.size or s[self.rank] == 0.0:
            return float("inf")
        return float(s[self.rank - 1] / s[self.rank])


def rank_svd(M, rel_tol: float = DEFAULT_RANK_RTOL) -> RankResult:
    """Numerical rank via singular values.

    The rank is the number of singular values exceeding
    ``rel_tol * sigma_max``.  The zero matrix has rank 0.
    """
    A = _as_matrix(M, "rank input")
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    s = np.linalg.svd(A, compute_uv=False)
    tol = rel_tol * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > tol))
    return RankResult(rank=rank, singular_values=s, tolerance_used=float(tol))


def eig(M, vectors: bool = False):
    """Eigenvalues (and optionally right eigenvectors) of a square matrix."""
    A = _square(M, "eig input")
    try:
        if vectors:
            w, V = np.linalg.eig(A)
            return w, V
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigenvalue iteration failed: {exc}") from exc


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    return float(np.max(np.abs(eig(M)))) if np.asarray(M).size else 0.0


def _check_weights(Q: np.ndarray, R: np.ndarray) -> None:
    for W, name in ((Q, "Q"), (R, "R")):
        if not np.allclose(W, W.T, atol=1e-10 * max(1.0, np.max(np.abs(W)))):
            raise ValueError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(Q)) < -1e-10 * max(1.0, np.max(np.abs(Q))):
        raise ValueError("Q must be positive semidefinite")
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise ValueError("R must be positive definite") from None


def dare_gain(
    A,
    B,
    Q=None,
    R=None,
    rel_tol: float = 1e-11,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Stabilizing state-feedback gain from the discrete Riccati equation.

    Iterates the Riccati map

        P <- A' P A - A' P B (R + B' P B)^{-1} B' P A + Q

    to its stabilizing fixed point and returns ``F`` such that every
    eigenvalue of ``A + B F`` has modulus below one.  The iteration stops
    once the entrywise change drops below ``rel_tol`` times the current
    iterate's magnitude, or fails after ``max_iter`` sweeps.

    Parameters
    ----------
    A, B : array_like
        Stabilizable pair.
    Q, R : array_like, optional
        Symmetric PSD / PD weights; both default to identity.

    Raises
    ------
    NumericError
        If the iteration does not converge (try different weights).
    ModelError
        If the resulting gain leaves an unstable eigenvalue, i.e. the
        pair is not stabilizable.
    """
    A = _square(np.asarray(A, dtype=float), "A")
    B = _as_matrix(np.asarray(B, dtype=float), "B")
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionError(f"B has {B.shape[0]} rows, expected {n}")
    n_u = B.shape[1]
    Q = np.eye(n) if Q is None else _square(np.asarray(Q, dtype=float), "Q")
    R = np.eye(n_u) if R is None else _square(np.asarray(R, dtype=float), "R")
    if Q.shape[0] != n or R.shape[0] != n_u:
        raise DimensionError("weight dimensions do not match (A, B)")
    _check_weights(Q, R)

    P = Q.copy()
    converged = False
    for _ in range(max_iter):
        G = R + B.T @ P @ B
        K = np.linalg.solve(G, B.T @ P @ A)
        P_next = A.T @ P @ (A - B @ K) + Q
        P_next = 0.5 * (P_next + P_next.T)
        if not np.all(np.isfinite(P_next)) or np.max(np.abs(P_next)) > 1e100:
            raise ModelError(
                "Riccati iteration diverged: the pair (A, B) appears unstabilizable"
            )
        delta = np.max(np.abs(P_next - P))
        P = P_next
        if delta < rel_tol * max(np.max(np.abs(P)), np.finfo(float).tiny):
            converged = True
            break
    if not converged:
        raise NumericError(
            f"Riccati fixed-point iteration did not converge in {max_iter} sweeps; "
            "try different (Q, R) weights"
        )
    F = -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    if spectral_radius(A + B @ F) >= 1.0:
        raise ModelError(
            "computed gain leaves an unstable eigenvalue: (A, B) is not stabilizable"
        )
    return F

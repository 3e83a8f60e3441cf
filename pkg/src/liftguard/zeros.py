"""Transmission zeros, poles, and stealthy-attack vulnerability classification.

Zeros are computed in the z-domain as the rank-drop points of the system
pencil

    [ zI - A   -B ]
    [   C       D ].

For square systems the finite rank-drop points are the finite generalized
eigenvalues of the pencil.  Non-square systems are squared down twice with
independent random compressions; only candidates produced by both draws
and confirmed by an explicit rank test on the full pencil survive.  The
reciprocal-frequency form of the pencil is used for evaluation outside the
unit circle so the rank tests stay well scaled at any magnitude.

Classification lives in the reciprocal domain used by the vulnerability
rules (w = 1/z): a strictly non-minimum-phase zero has 0 < |w| < 1, the
boundary is |w| = 1, and a zero of the feedthrough relative to the normal
rank sits at w = 0 (it has no causal geometric input associated with it).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg
from .errors import ModelError, NumericError
from .model import abcd, check_minimal

__all__ = [
    "ZeroRecord",
    "PoleRecord",
    "ZeroReport",
    "VulnerabilityVerdict",
    "transmission_zeros",
    "poles",
    "multiplicity_at_one",
    "classify_vulnerability",
    "has_zero_at",
    "pencil_matrix",
    "BOUNDARY_TOL",
    "CONFIRM_RTOL",
]

BOUNDARY_TOL = 1e-7
# A reported zero must drop the pencil rank at the default rank tolerance;
# anything looser admits near-zeros of the system rather than zeros.  True
# zeros of any multiplicity k land within eps^(1/k) of the computed
# candidate, where the pencil's deciding singular value is back at the
# machine level, so the tight threshold does not lose them.
CONFIRM_RTOL = 1e-9
MATCH_TOL = 1e-6
_MAX_SQUARING_RETRIES = 5
# Generalized eigenvalues beyond this magnitude are numerical leakage of the
# pencil's infinite spectrum: the reciprocal-domain pencil genuinely loses
# rank as the reciprocal frequency approaches zero whenever the feedthrough
# is rank deficient, which is exactly the separately-counted zero at
# z-infinity, not a finite zero.
_Z_INFINITY_CUTOFF = 1e8
# Fixed generic probe points for normal-rank estimation (inside and outside
# the unit circle; the max over them is the normal rank almost surely).
_PROBE_POINTS = (
    1.2591 * cmath.exp(0.701j),
    0.7137 * cmath.exp(2.903j),
    1.8300 * cmath.exp(5.101j),
)


@dataclass(frozen=True)
class ZeroRecord:
    """One transmission zero with both frequency representations.

    ``z_value`` is None for a zero at z-infinity (reciprocal value 0);
    ``lambda_value`` is None ("lambda-infinity") for a zero at z = 0.
    ``residual`` is the singular value of the (well-scaled) pencil that
    certifies the rank drop at this point.
    """

    z_value: complex | None
    lambda_value: complex | None
    input_direction: np.ndarray
    state_direction: np.ndarray
    classification: str
    residual: float
    marginal: bool = False


@dataclass(frozen=True)
class PoleRecord:
    value: complex
    classification: str  # "stable" | "boundary" | "unstable"
    marginal: bool = False


@dataclass(frozen=True)
class ZeroReport:
    zeros: tuple
    poles: tuple
    normal_rank: int  # normal column rank of the system pencil
    system_shape: str  # "tall" | "square" | "fat"
    n_zeros_at_lambda_zero: int = 0


@dataclass(frozen=True)
class VulnerabilityVerdict:
    """Per-channel stealthy-attack verdicts with their witnesses."""

    actuator: str  # "yes" | "no" | "undecided"
    actuator_mechanism: str | None  # "nmp_zero" | "fat_plant" | "multiple_zero_at_one"
    actuator_witness: ZeroRecord | None
    sensor: str
    sensor_witness: PoleRecord | None
    notes: tuple = ()


def _eval_transfer(A, B, C, D, lam: complex) -> np.ndarray:
    n = A.shape[0]
    return D + lam * (C @ np.linalg.solve(np.eye(n, dtype=complex) - lam * A, B))


def pencil_matrix(sys, z: complex) -> np.ndarray:
    """System pencil at ``z``, in whichever of the two frequency forms is
    well scaled at that point (|z| <= 1: plain form; otherwise the
    reciprocal form, which has the identical rank profile)."""
    A, B, C, D = abcd(sys)
    n = A.shape[0]
    z = complex(z)
    if abs(z) <= 1.0:
        top = np.hstack([z * np.eye(n) - A, -B])
        bot = np.hstack([C, D])
    else:
        w = 1.0 / z
        top = np.hstack([np.eye(n) - w * A, -B])
        bot = np.hstack([w * C, D])
    return np.vstack([top, bot]).astype(complex)


def _pencil_normal_rank(sys) -> int:
    return max(linalg.rank_svd(pencil_matrix(sys, z)).rank for z in _PROBE_POINTS)


def _rank_drop_residual(sys, z: complex, normal_rank: int):
    """(residual, sigma_max) of the pencil at z: residual is the singular
    value that must vanish for the column rank to fall below normal_rank."""
    s = np.linalg.svd(pencil_matrix(sys, z), compute_uv=False)
    return float(s[normal_rank - 1]), float(s[0])


def has_zero_at(sys, z: complex, rel_tol: float = CONFIRM_RTOL, normal_rank=None) -> bool:
    """Rank test: does the system pencil lose column rank at ``z``?"""
    nr = _pencil_normal_rank(sys) if normal_rank is None else normal_rank
    residual, smax = _rank_drop_residual(sys, z, nr)
    return residual <= rel_tol * smax


def _gevp_candidates(A, B, C, D):
    """Finite generalized eigenvalues of the square system pencil."""
    n = A.shape[0]
    n_u = B.shape[1]
    E1 = np.block([[A, B], [-C, -D]])
    E2 = np.zeros((n + n_u, n + n_u))
    E2[:n, :n] = np.eye(n)
    w = scipy.linalg.eig(E1, E2, right=False)
    return [complex(z) for z in w if np.isfinite(z)]


def _null_direction(sys, z: complex):
    """Right null vector of the pencil at z, split into (state, input) parts."""
    A, B, C, D = abcd(sys)
    n = A.shape[0]
    M = pencil_matrix(sys, z)
    _, _, Vh = np.linalg.svd(M)
    v = Vh[-1].conj()
    xi, nu = v[:n], v[n:]
    if abs(z) > 1.0:
        # reciprocal form carries nu scaled by 1/z relative to the plain form
        nu = nu * z
    return xi, nu


def _normalize_direction(xi, nu):
    """Scale the pair so the input direction has max-norm one with its
    largest component real positive (the monitor's norm)."""
    mags = np.abs(nu)
    idx = int(np.argmax(mags))
    if mags[idx] < 1e-12 * max(1.0, float(np.max(np.abs(xi)))):
        return xi, nu  # degenerate: leave unscaled rather than blow up
    scale = nu[idx] / abs(nu[idx]) * mags[idx]
    return xi / scale, nu / scale


def _match_multisets(a, b, tol):
    """Greedy nearest pairing of two complex multisets; None if they differ."""
    if len(a) != len(b):
        return None
    remaining = list(b)
    paired = []
    for z in a:
        if not remaining:
            return None
        dists = [abs(z - w) for w in remaining]
        j = int(np.argmin(dists))
        if dists[j] > tol:
            return None
        paired.append(0.5 * (z + remaining.pop(j)))
    return paired


def _cluster_sizes(values, tol):
    """Size of the coincidence cluster each value belongs to."""
    k = len(values)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    sizes = {}
    for i in range(k):
        sizes[find(i)] = sizes.get(find(i), 0) + 1
    return [sizes[find(i)] for i in range(k)]


def _classify(z: complex, multiplicity: int):
    az = abs(z)
    dist = abs(az - 1.0)
    marginal = BOUNDARY_TOL * 0.1 < dist < BOUNDARY_TOL * 10.0
    if dist <= BOUNDARY_TOL:
        return ("boundary_multiple" if multiplicity > 1 else "boundary_simple"), marginal
    if az > 1.0:
        return "nmp_strict", marginal
    return "minimum_phase", marginal


def transmission_zeros(sys, rng=None, rel_tol: float = CONFIRM_RTOL) -> ZeroReport:
    """Finite transmission zeros and poles of a discrete state-space system.

    Square systems are handled by one generalized eigenvalue problem on
    the pencil.  Non-square systems are squared down twice with
    independent random full-rank compressions of the wide side, the two
    candidate sets are intersected, and every survivor is confirmed by a
    rank test on the full pencil; disagreement after five retries raises
    :class:`NumericError` with both candidate sets attached.

    Zeros at z = 0 are recorded with ``lambda_value`` None
    ("lambda-infinity").  Zeros of the feedthrough relative to the normal
    rank (zeros at z-infinity, reciprocal value 0) are reported as
    ``at_lambda_zero`` records and counted separately in the report.
    """
    A, B, C, D = abcd(sys)
    A, B, C, D = (np.asarray(M, dtype=float) for M in (A, B, C, D))
    n, n_u, n_y = A.shape[0], B.shape[1], C.shape[0]
    rep = check_minimal((A, B, C, D))
    if not rep.minimal:
        raise ModelError(
            "transmission zeros require a minimal realization "
            f"(controllable={rep.controllable}, observable={rep.observable})"
        )
    if rng is None:
        rng = np.random.default_rng(0)

    quad = (A, B, C, D)
    normal_rank = _pencil_normal_rank(quad)
    shape = "square" if n_y == n_u else ("tall" if n_y > n_u else "fat")

    def confirmed(cands):
        out = []
        for z in cands:
            if abs(z) > _Z_INFINITY_CUTOFF:
                continue
            residual, smax = _rank_drop_residual(quad, z, normal_rank)
            if residual <= rel_tol * smax:
                out.append(z)
        return out

    def compression(rows, cols):
        while True:  # Gaussian draws are full rank almost surely
            V = rng.standard_normal((rows, cols))
            if linalg.rank_svd(V).rank == min(rows, cols):
                return V

    if n_y == n_u:
        finite = confirmed(_gevp_candidates(A, B, C, D))
    else:
        finite = None
        last = (None, None)
        for _ in range(_MAX_SQUARING_RETRIES):
            if n_y > n_u:
                V1 = compression(n_u, n_y)
                V2 = compression(n_u, n_y)
                c1 = confirmed(_gevp_candidates(A, B, V1 @ C, V1 @ D))
                c2 = confirmed(_gevp_candidates(A, B, V2 @ C, V2 @ D))
            else:
                W1 = compression(n_u, n_y)
                W2 = compression(n_u, n_y)
                c1 = confirmed(_gevp_candidates(A, B @ W1, C, D @ W1))
                c2 = confirmed(_gevp_candidates(A, B @ W2, C, D @ W2))
            matched = _match_multisets(c1, c2, MATCH_TOL)
            last = (c1, c2)
            if matched is not None:
                finite = matched
                break
        if finite is None:
            raise NumericError(
                "randomized squarings disagree on the zero set after "
                f"{_MAX_SQUARING_RETRIES} retries: {last[0]} vs {last[1]}"
            )

    # Conjugate-pair and multiplicity bookkeeping, then record assembly.
    sizes = _cluster_sizes(finite, MATCH_TOL) if finite else []
    records = []
    for z, mult in zip(finite, sizes):
        residual, _ = _rank_drop_residual(quad, z, normal_rank)
        xi, nu = _null_direction(quad, z)
        xi, nu = _normalize_direction(xi, nu)
        classification, marginal = _classify(z, mult)
        lam = None if abs(z) <= 1e-9 else 1.0 / z  # None encodes "lambda-infinity"
        records.append(
            ZeroRecord(
                z_value=z,
                lambda_value=lam,
                input_direction=nu,
                state_direction=xi,
                classification=classification,
                residual=residual,
                marginal=marginal,
            )
        )

    # Zeros at z-infinity: the reciprocal-domain pencil at 0 is
    # [[I, -B], [0, D]], whose column rank is n + rank(D).  The feedthrough
    # rank is judged against the overall system scale, not against itself.
    sys_scale = max(float(np.max(np.abs(M))) for M in (A, B, C, D)) or 1.0
    sD = np.linalg.svd(D, compute_uv=False)
    rank_D = int(np.count_nonzero(sD > linalg.DEFAULT_RANK_RTOL * sys_scale))
    n_at_lambda_zero = max(0, (normal_rank - n) - rank_D)
    if n_at_lambda_zero > 0:
        M0 = np.vstack([np.hstack([np.eye(n), -B]), np.hstack([np.zeros((n_y, n)), D])])
        s0 = np.linalg.svd(M0, compute_uv=False)
        residual0 = float(s0[normal_rank - 1])
        _, _, Vh = np.linalg.svd(D)
        null_D = Vh[rank_D:].conj()
        for i in range(n_at_lambda_zero):
            nu = null_D[i] if i < null_D.shape[0] else null_D[-1]
            xi = (B @ nu).astype(complex)
            xi, nu = _normalize_direction(xi, nu)
            records.append(
                ZeroRecord(
                    z_value=None,
                    lambda_value=0j,
                    input_direction=nu,
                    state_direction=xi,
                    classification="at_lambda_zero",
                    residual=residual0,
                    marginal=False,
                )
            )

    return ZeroReport(
        zeros=tuple(records),
        poles=poles(quad),
        normal_rank=normal_rank,
        system_shape=shape,
        n_zeros_at_lambda_zero=n_at_lambda_zero,
    )


def poles(sys) -> tuple:
    """Eigenvalues of the state matrix, classified against the unit circle."""
    A, _, _, _ = abcd(sys)
    out = []
    for lam in linalg.eig(A):
        az = abs(lam)
        dist = abs(az - 1.0)
        marginal = BOUNDARY_TOL * 0.1 < dist < BOUNDARY_TOL * 10.0
        if dist <= BOUNDARY_TOL:
            cls = "boundary"
        elif az > 1.0:
            cls = "unstable"
        else:
            cls = "stable"
        out.append(PoleRecord(value=complex(lam), classification=cls, marginal=marginal))
    return tuple(out)


def multiplicity_at_one(left_numerator) -> str:
    """Algebraic multiplicity of a possible zero at frequency one of a
    stable left-factor numerator.

    The factor's transfer map and its frequency derivative are evaluated
    in closed form at the point, then stacked into the two-block test
    matrix whose right null chain certifies multiplicity greater than
    one.  Returns ``"not_a_zero"``, ``"simple"``, or ``"multiple"``.
    """
    A, B, C, D = abcd(left_numerator)
    if linalg.spectral_radius(A) >= 1.0:
        raise ModelError("left-factor state matrix must be Schur stable")
    n = A.shape[0]
    n_u = B.shape[1]
    I = np.eye(n)
    S = np.linalg.solve(I - A, B)  # (I - A)^{-1} B
    N1 = C @ S + D
    N1p = C @ np.linalg.solve(I - A, S)  # C (I - A)^{-2} B
    # Rank decisions need an absolute scale: a numerator that vanishes
    # entirely at the point would otherwise look full rank relative to its
    # own largest singular value.  Generic unit-circle samples of the
    # (stable) factor provide the scale.
    scale = max(
        float(np.linalg.norm(_eval_transfer(A, B, C, D, lam), 2))
        for lam in (np.exp(0.379j), np.exp(2.211j))
    )
    tol = linalg.DEFAULT_RANK_RTOL * max(scale, np.finfo(float).tiny)
    s1 = np.linalg.svd(N1, compute_uv=False)
    r1 = int(np.count_nonzero(s1 > tol))
    if r1 == n_u:
        return "not_a_zero"
    T = np.block([[N1, np.zeros_like(N1)], [N1p, N1]])
    sT = np.linalg.svd(T, compute_uv=False)
    rT = int(np.count_nonzero(sT > tol))
    # A null vector with nonzero leading block exists iff the stacked rank
    # falls short of (columns of one block) + rank of one block.
    return "multiple" if rT < n_u + r1 else "simple"


def classify_vulnerability(report: ZeroReport, left_numerator=None) -> VulnerabilityVerdict:
    """Stealthy-attack verdicts per channel from a zero/pole report.

    Actuator side: fat plants are always vulnerable (one input masks the
    other); otherwise a strictly non-minimum-phase zero is the witness;
    boundary zeros with multiplicity at frequency one are decided by the
    null-chain test when the stable left-factor numerator is supplied;
    multiple boundary zeros elsewhere are reported undecided.  Sensor
    side: an unstable pole is the witness; simple boundary poles are
    harmless; repeated boundary poles are undecided.
    """
    notes = []

    actuator = "no"
    mechanism = None
    witness = None
    if report.system_shape == "fat":
        actuator, mechanism = "yes", "fat_plant"
        notes.append("fat plant: one input channel can mask another regardless of zeros")
    else:
        strict = [r for r in report.zeros if r.classification == "nmp_strict"]
        if strict:
            witness = max(strict, key=lambda r: abs(r.z_value))
            actuator, mechanism = "yes", "nmp_zero"
            if witness.marginal:
                notes.append("actuator witness zero is marginal (near the boundary tolerance)")
        else:
            multi = [r for r in report.zeros if r.classification == "boundary_multiple"]
            at_one = [r for r in multi if abs(r.z_value - 1.0) <= MATCH_TOL]
            elsewhere = [r for r in multi if abs(r.z_value - 1.0) > MATCH_TOL]
            if at_one:
                if left_numerator is None:
                    actuator = "undecided"
                    notes.append(
                        "multiple boundary zero at frequency one: supply the left-factor "
                        "numerator to run the null-chain multiplicity test"
                    )
                else:
                    mult = multiplicity_at_one(left_numerator)
                    if mult == "multiple":
                        actuator, mechanism = "yes", "multiple_zero_at_one"
                        witness = at_one[0]
                    else:
                        notes.append("boundary zero at frequency one is simple: no unbounded plan")
            if elsewhere and actuator == "no":
                actuator = "undecided"
                notes.append(
                    "multiple boundary zeros away from frequency one: undecided "
                    "(out of scope: invariant-factor multiplicity analysis)"
                )

    sensor = "no"
    sensor_witness = None
    unstable = [p for p in report.poles if p.classification == "unstable"]
    if unstable:
        sensor_witness = max(unstable, key=lambda p: abs(p.value))
        sensor = "yes"
        if sensor_witness.marginal:
            notes.append("sensor witness pole is marginal (near the boundary tolerance)")
    else:
        boundary = [p for p in report.poles if p.classification == "boundary"]
        if boundary:
            sizes = _cluster_sizes([p.value for p in boundary], MATCH_TOL)
            if any(s > 1 for s in sizes):
                sensor = "undecided"
                notes.append(
                    "repeated boundary poles: undecided (out of scope: "
                    "invariant-factor multiplicity analysis)"
                )
            else:
                notes.append("boundary poles are simple: no unbounded sensor plan")

    return VulnerabilityVerdict(
        actuator=actuator,
        actuator_mechanism=mechanism,
        actuator_witness=witness,
        sensor=sensor,
        sensor_witness=sensor_witness,
        notes=tuple(notes),
    )

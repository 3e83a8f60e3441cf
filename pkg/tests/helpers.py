"""Shared fixtures-as-functions for the test suite."""

import numpy as np

from liftguard import ContinuousPlant, DiscretePlant, check_minimal
from liftguard.errors import LiftguardError


def triple_integrator(name="triple-int"):
    return ContinuousPlant(
        Ac=[[0, 1, 0], [0, 0, 1], [0, 0, 0]],
        Bc=[[0], [0], [1]],
        Cc=[[1, 0, 0]],
        Dc=[[0]],
        name=name,
    )


def double_integrator(name="double-int"):
    return ContinuousPlant(
        Ac=[[0, 1], [0, 0]], Bc=[[0], [1]], Cc=[[1, 0]], Dc=[[0]], name=name
    )


def unstable_scalar(name="unstable-scalar"):
    # pole at 2 when sampled with T = 1
    return ContinuousPlant(Ac=[[np.log(2.0)]], Bc=[[1.0]], Cc=[[1.0]], Dc=[[0.0]], name=name)


def stable_two_state(name="stable-2"):
    return ContinuousPlant(
        Ac=[[-1.0, 0.3], [0.0, -0.5]], Bc=[[1.0], [0.5]], Cc=[[1.0, 0.2]], Dc=[[0.0]], name=name
    )


def random_continuous(rng, n=None, n_u=None, n_y=None, max_tries=80):
    """Random minimal continuous plant; redraws until minimal."""
    for _ in range(max_tries):
        nn = int(rng.integers(2, 6)) if n is None else n
        nu = int(rng.integers(1, 3)) if n_u is None else n_u
        ny = int(rng.integers(1, 4)) if n_y is None else n_y
        nu = min(nu, nn)
        try:
            return ContinuousPlant(
                Ac=rng.standard_normal((nn, nn)),
                Bc=rng.standard_normal((nn, nu)),
                Cc=rng.standard_normal((ny, nn)),
                Dc=np.zeros((ny, nu)),
            )
        except LiftguardError:
            continue
    raise RuntimeError("could not draw a minimal plant")


def random_tall_continuous(rng, **kw):
    n_u = int(rng.integers(1, 3))
    n_y = int(rng.integers(n_u, n_u + 2))
    return random_continuous(rng, n_u=n_u, n_y=n_y, **kw)


def random_discrete(rng, n=None, n_u=1, n_y=1, radius=0.85, max_tries=80, biproper=True):
    """Random minimal discrete plant with spectral radius scaled to `radius`."""
    for _ in range(max_tries):
        nn = int(rng.integers(2, 6)) if n is None else n
        A = rng.standard_normal((nn, nn))
        A = A * (radius / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-9))
        sys = DiscretePlant(
            A=A,
            B=rng.standard_normal((nn, n_u)),
            C=rng.standard_normal((n_y, nn)),
            D=rng.standard_normal((n_y, n_u)) if biproper else np.zeros((n_y, n_u)),
            period=1.0,
        )
        if check_minimal(sys).minimal:
            return sys
    raise RuntimeError("could not draw a minimal discrete plant")


def assert_sets_close(actual, expected, tol, label=""):
    """Multiset comparison of complex values via greedy nearest matching."""
    actual = list(actual)
    expected = list(expected)
    assert len(actual) == len(expected), (
        f"{label}: cardinality {len(actual)} vs {len(expected)}: {actual} vs {expected}"
    )
    rest = list(expected)
    for z in actual:
        dists = [abs(z - w) for w in rest]
        j = int(np.argmin(dists))
        assert dists[j] <= tol, f"{label}: {z} has no match within {tol} in {expected}"
        rest.pop(j)

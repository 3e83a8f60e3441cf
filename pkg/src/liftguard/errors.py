"""Exception types shared across the package.

The command-line front end maps these onto its exit-code contract:
dimension/model problems are validation failures (exit 2), capability
errors mean "the requested synthesis is provably impossible" (exit 3),
numeric errors are failed numerical procedures (exit 4), and
configuration errors are unusable closed-loop setups (exit 5).
"""

__all__ = [
    "LiftguardError",
    "DimensionError",
    "ModelError",
    "NumericError",
    "CapabilityError",
    "ConfigurationError",
]


class LiftguardError(Exception):
    """Base class for package-specific failures."""


class DimensionError(LiftguardError, ValueError):
    """Matrix or signal dimensions are inconsistent."""


class ModelError(LiftguardError, ValueError):
    """A plant violates a structural assumption (minimality, rank, stabilizability)."""


class NumericError(LiftguardError, RuntimeError):
    """An iterative or randomized numerical procedure did not produce a trustworthy answer."""


class CapabilityError(LiftguardError):
    """The requested attack synthesis is impossible for this plant."""


class ConfigurationError(LiftguardError):
    """A closed-loop configuration is unusable (e.g. unstable before any attack is injected)."""

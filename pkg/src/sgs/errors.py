"""Exception hierarchy.

``ConfigError`` maps to CLI exit code 2, every ``NumericalError`` subclass to
exit code 3, and I/O failures (plain ``OSError``) to exit code 4.
"""


class SgsError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SgsError):
    """Malformed, unknown, or inconsistent configuration input."""


class NumericalError(SgsError):
    """Base class for errors raised by the numerical pipelines."""


class MaxIterationsExceeded(NumericalError):
    """Iterative solver ran out of iterations before converging."""


class WidthTooLarge(NumericalError):
    """Converged soliton is too wide for its box; result untrusted."""


class NormDrift(NumericalError):
    """Wave-function norm left the allowed conservation band."""


class NonFinite(NumericalError):
    """A field acquired NaN or Inf values."""


class NodeProximity(NumericalError):
    """Guidance velocity queried too close to a wave-function node."""


class StepOutOfBand(NumericalError):
    """Pilot snapshots too coarse for reliable trajectory interpolation."""


class VelocityCapExceeded(NumericalError):
    """A guidance velocity exceeded the configured sanity cap."""


class SourceOverlap(NumericalError):
    """Point-source separations violate the non-overlap requirement."""


class WindowTooNarrow(NumericalError):
    """Radial fit window contains too few usable shells."""


class PerturbationTooLarge(NumericalError):
    """Potential-to-c^2 ratio outside the perturbative regime."""


class NoEquilibria(NumericalError):
    """No orbit equilibria found inside the requested radius."""


class CollisionDetected(NumericalError):
    """Two-body integration reached an unphysically small separation."""

"""Exception types raised by the numerical contracts."""


class SpecflowError(Exception):
    """Base class for all package-specific failures."""


class EigenvalueAtCutoff(SpecflowError):
    """An eigenvalue sits within tolerance of a spectral cutoff under the
    strict policy; pass an explicit inclusive/exclusive policy instead."""


class IllConditioned(SpecflowError):
    """Singular values cluster at the rank threshold, so a kernel or rank
    decision would be arbitrary.  The message reports the offending gap."""


class NoGapFound(SpecflowError):
    """Adaptive bisection hit the minimum interval width without certifying
    a spectral gap on some parameter subinterval."""


class ResolutionExceeded(SpecflowError):
    """The partition grew past the subdivision budget."""


class UnstableIndex(SpecflowError):
    """An index disagreed between two truncations (or refinements); the
    result would not be trustworthy."""


class DoublingDetected(UnstableIndex):
    """Kernel counts changed under grid doubling beyond the analytic
    prediction, indicating spurious discrete modes."""


class RankJump(SpecflowError):
    """A pointwise kernel/cokernel dimension is not constant over the base.
    Perturb the family; automatic stabilization is not performed."""


class SingularOverlap(SpecflowError):
    """A plaquette overlap determinant is numerically singular; the base
    grid is too coarse for the link-variable method."""


class RoundingAmbiguous(SpecflowError):
    """A quantity that must round to an integer is too far from one."""


class AmbiguousJump(SpecflowError):
    """A detected discontinuity is not close to an integer, so it cannot be
    counted as an eigenvalue crossing."""


class NonconvergentExtrapolation(SpecflowError):
    """The small-time limit of the heat regularization did not stabilize."""


class GluingInconsistent(SpecflowError):
    """The loop endpoints are not conjugate under the declared gluing map."""


class InvalidSection(SpecflowError):
    """A projector fails the spectral-section condition for its operator."""


class GridResolutionError(SpecflowError):
    """A cochain total that must be an integer is too far from one."""


class ConfigError(SpecflowError):
    """A run configuration failed schema validation."""

"""Exception types raised across the package."""


class LandscapeError(Exception):
    """Base class for all package errors."""


class NodesTooFew(LandscapeError, ValueError):
    pass


class BadSpec(LandscapeError, ValueError):
    pass


class RankDeficient(LandscapeError, ValueError):
    pass


class NonUnitRow(LandscapeError, ValueError):
    pass


class NotOrthogonal(LandscapeError, ValueError):
    pass


class DimMismatch(LandscapeError, ValueError):
    pass


class EmptyBatch(LandscapeError, ValueError):
    pass


class SingularGram(LandscapeError, ValueError):
    pass


class RegularizerTooWeak(LandscapeError, ValueError):
    pass


class DivergenceDetected(LandscapeError, RuntimeError):
    pass


class StepUnderflow(LandscapeError, RuntimeError):
    pass


class NoConvergence(LandscapeError, RuntimeError):
    pass


class OddBatchDropsLast(UserWarning):
    """Emitted when split-half pairing discards the final sample of an odd batch."""

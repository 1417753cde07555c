"""Exception types shared across the package."""


class DomainError(ValueError):
    """An evaluation point lies outside the domain of a representation."""


class NumericalFailure(RuntimeError):
    """A numerical procedure broke down (singular system, invalid state)."""


class NonconvergenceError(NumericalFailure):
    """The adaptive solver exceeded its subdivision budget.

    Attributes
    ----------
    interval : tuple of float or None
        The worst interval encountered when the budget ran out.
    tail : float
        The tail ratio observed on that interval.
    """

    def __init__(self, msg, interval=None, tail=float("nan")):
        super().__init__(msg)
        self.interval = interval
        self.tail = tail


class NonlinearFailure(NumericalFailure):
    """Newton's method failed to converge on a subinterval."""

    def __init__(self, msg, residuals=()):
        super().__init__(msg)
        self.residuals = list(residuals)


class StageError(NumericalFailure):
    """Wraps a failure inside one stage of the phase-function pipeline."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause

"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class NonHermitian(EngineError):
    """Input matrix is not Hermitian within tolerance."""

    def __init__(self, defect: float, tol: float):
        self.defect = defect
        self.tol = tol
        super().__init__(
            f"matrix is not Hermitian: relative defect {defect:.3e} exceeds {tol:.1e}"
        )


class TimeOutOfRange(EngineError):
    """Requested time lies outside the protocol window."""


class InvalidBond(EngineError):
    """Requested bond does not exist for this system."""


class DegenerateSplit(EngineError):
    """c1 + c2 = 0: effective coupling vanishes, splitting ratio undefined."""


class NoCrossing(EngineError):
    """Protocol never sweeps the on-site potential through the resonance."""


class StepUnderflow(EngineError):
    """Adaptive step size fell below the hard floor (1e-12 time units)."""


class BranchAmbiguity(EngineError):
    """Consecutive eigenvector overlap too small; frame grid too coarse."""


class ReductionInvalid(EngineError):
    """Two-level reduction assumptions violated for this protocol/state."""


class UnnormalizedState(EngineError):
    """State vector is not normalized."""


class GridTooCoarse(EngineError):
    """Counting-field grid violates its resolution contract."""


class OutOfRange(EngineError):
    """Argument outside the declared domain of a closed-form expression."""


class NumericalFailure(EngineError):
    """An internal numerical consistency guard tripped."""


class ConfigError(EngineError):
    """Scenario configuration failed to parse or validate."""

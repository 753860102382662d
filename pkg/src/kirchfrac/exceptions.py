"""Exception hierarchy shared by the solver modules."""


class ParameterDomainError(ValueError):
    """A parameter lies outside the domain where the method is defined."""


class NumericalError(RuntimeError):
    """Base class for failures raised while solving."""


class BreakdownError(NumericalError):
    """The system matrix is not symmetric positive definite."""


class NonConvergenceError(NumericalError):
    """An iteration exhausted its budget without meeting its tolerance."""


class SingularUpdateError(NumericalError):
    """A rank-one update made the system matrix singular."""


class IndefiniteSystemError(NumericalError):
    """The first-level nonlinear system has lost coercivity."""

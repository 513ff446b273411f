"""Exception types raised by the solver stack."""


class SolverError(Exception):
    """Base class; carries optional location context."""

    def __init__(self, message, *, cell=None, time=None):
        self.message = message
        self.cell = cell
        self.time = time
        super().__init__(message)

    def __str__(self):
        where = []
        if self.cell is not None:
            where.append(f"cell={self.cell}")
        if self.time is not None:
            where.append(f"t={self.time:.17g}")
        return f"{self.message} ({', '.join(where)})" if where else self.message


class StateInvalid(SolverError, ValueError):
    """Density or internal energy is not positive."""


class NoConvergence(SolverError):
    pass


class Vacuum(SolverError):
    """The Riemann data would open a vacuum region."""


class NoAdmissibleSolution(SolverError):
    pass


class SingularEigenbasis(SolverError):
    pass


class PositivityViolation(SolverError):
    pass


class CFLCollapse(SolverError):
    pass


class PreconditionFailed(SolverError):
    pass


class NoCrossing(SolverError):
    pass


class ConfigError(ValueError):
    pass

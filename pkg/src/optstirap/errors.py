"""Exception hierarchy shared by every module of the package."""


class StirapError(Exception):
    """Base class for all package errors."""


class InputError(StirapError, ValueError):
    """Malformed or non-finite input."""


class FrameMismatchError(InputError):
    """A Bloch state was handed to an operation expecting the other frame."""


class ConstraintViolationError(InputError):
    """A control violates the active nonnegativity or bound constraint."""


class ScheduleError(InputError):
    """A control schedule is inconsistent with the problem it is run against."""


class DomainError(StirapError, ValueError):
    """A formula was evaluated where it is singular or undefined."""


class SingularFeedbackUndefined(DomainError):
    """The singular feedback law was evaluated too close to y = 0."""


class NoSolutionError(StirapError, RuntimeError):
    """A root finder found no sign change / no admissible root."""


class NoSingularArcError(NoSolutionError):
    """No singular constant c1 reaches the required exit angle."""


class SolverFailure(StirapError, RuntimeError):
    """An optimal-control solver failed; ``diagnostics`` holds what is known."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

"""Optimal control of dissipative three-level population transfer."""
from .dynamics import BlochState, ProblemSpec, TrajectoryTrace
from .errors import (
    ConstraintViolationError, DomainError, FrameMismatchError, InputError, NoSingularArcError,
    NoSolutionError, ScheduleError, SingularFeedbackUndefined, SolverFailure, StirapError,
)
from .schedule import Bang, ControlSchedule, Off, Sampled, SingularArc, run_schedule

__all__ = [
    "BlochState", "ProblemSpec", "TrajectoryTrace", "Bang", "ControlSchedule", "Off", "Sampled",
    "SingularArc", "run_schedule", "StirapError", "InputError", "FrameMismatchError",
    "ConstraintViolationError", "ScheduleError", "DomainError", "SingularFeedbackUndefined",
    "NoSolutionError", "NoSingularArcError", "SolverFailure",
]

"""Three-level system dynamics in the lab and dark/bright frames.

Time is measured in units of 1/Omega_0 and the loss rate in units of Omega_0.
The lab-frame Bloch vector is (X, Y, Z) with populations (Z^2, Y^2, X^2) of
levels 1, 2, 3.  The dark/bright vector (x, y, z) is obtained by rotating the
(Z, X) plane by the mixing angle theta.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import _kernels
from .errors import ConstraintViolationError, FrameMismatchError, InputError

LAB = "lab"
DARKBRIGHT = "darkbright"
DEFAULT_DT = 1e-3

Control = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class ProblemSpec:
    """Loss rate, total duration and control bound of a transfer problem."""

    gamma: float
    duration: float
    u_max: float = float("inf")
    allow_negative_u: bool = False

    def __post_init__(self):
        for name in ("gamma", "duration", "u_max"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or np.isnan(v):
                raise InputError(f"{name} must be a number, got {v!r}")
        if self.gamma < 0 or not np.isfinite(self.gamma):
            raise InputError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not (self.duration > 0) or not np.isfinite(self.duration):
            raise InputError(f"duration must be finite and > 0, got {self.duration}")
        if not (self.u_max > 0):
            raise InputError(f"u_max must be > 0, got {self.u_max}")

    @property
    def bounded(self) -> bool:
        return bool(np.isfinite(self.u_max))


@dataclass(frozen=True)
class BlochState:
    frame: str
    v: np.ndarray

    def __post_init__(self):
        if self.frame not in (LAB, DARKBRIGHT):
            raise InputError(f"unknown frame {self.frame!r}")
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise InputError("Bloch vector must be a finite 3-vector")
        object.__setattr__(self, "v", v)

    @classmethod
    def lab(cls, X, Y, Z):
        return cls(LAB, np.array([X, Y, Z], dtype=float))

    @classmethod
    def darkbright(cls, x, y, z):
        return cls(DARKBRIGHT, np.array([x, y, z], dtype=float))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.v))


NORTH_POLE = BlochState.lab(0.0, 0.0, 1.0)


@dataclass
class TrajectoryTrace:
    """Sampled trajectory. ``lab`` and ``db`` hold (N, 3) arrays of both frames."""

    times: np.ndarray
    lab: np.ndarray
    db: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def populations(self) -> np.ndarray:
        """Columns are |C1|^2, |C2|^2, |C3|^2."""
        return self.lab[:, [2, 1, 0]] ** 2

    @property
    def final_population(self) -> float:
        return float(self.lab[-1, 0] ** 2)

    def final_state(self, frame: str = DARKBRIGHT) -> BlochState:
        return BlochState(frame, (self.db if frame == DARKBRIGHT else self.lab)[-1])

    @classmethod
    def concatenate(cls, parts: list["TrajectoryTrace"]) -> "TrajectoryTrace":
        keep = [parts[0]] + [
            cls(p.times[1:], p.lab[1:], p.db[1:], p.theta[1:], p.u[1:]) for p in parts[1:]
        ]
        return cls(
            np.concatenate([p.times for p in keep]),
            np.vstack([p.lab for p in keep]),
            np.vstack([p.db for p in keep]),
            np.concatenate([p.theta for p in keep]),
            np.concatenate([p.u for p in keep]),
        )


def _rotation(theta):
    # Maps lab (X, Y, Z) to (x, y, z); orthogonal and symmetric.
    s, c = np.sin(theta), np.cos(theta)
    return np.array([[-c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def lab_to_db_array(lab: np.ndarray, theta) -> np.ndarray:
    lab = np.asarray(lab, float)
    theta = np.asarray(theta, float)
    X, Y, Z = lab[..., 0], lab[..., 1], lab[..., 2]
    s, c = np.sin(theta), np.cos(theta)
    return np.stack([Z * s - X * c, Y, Z * c + X * s], axis=-1)


def db_to_lab_array(db: np.ndarray, theta) -> np.ndarray:
    # The transform is an involution, so the inverse has the same form.
    return lab_to_db_array(db, theta)


def _check_theta(theta):
    if not np.all(np.isfinite(np.asarray(theta, float))):
        raise InputError("non-finite mixing angle")


def to_dark_bright(lab: BlochState, theta: float) -> BlochState:
    if lab.frame != LAB:
        raise FrameMismatchError(f"expected lab frame, got {lab.frame}")
    _check_theta(theta)
    return BlochState(DARKBRIGHT, lab_to_db_array(lab.v, theta))


def from_dark_bright(db: BlochState, theta: float) -> BlochState:
    if db.frame != DARKBRIGHT:
        raise FrameMismatchError(f"expected darkbright frame, got {db.frame}")
    _check_theta(theta)
    return BlochState(LAB, db_to_lab_array(db.v, theta))


def _steps(duration, dt):
    if not (dt > 0):
        raise InputError(f"dt must be > 0, got {dt}")
    if duration < 0 or not np.isfinite(duration):
        raise InputError(f"duration must be finite and >= 0, got {duration}")
    n = int(np.ceil(duration / dt - 1e-9)) if duration > 0 else 0
    h = duration / n if n else 0.0
    return n, h


def _stage_values(f: Control, t0, h, n):
    """Evaluate a control at the RK4 stage times of n steps of size h."""
    if n == 0:
        return np.zeros((0, 3))
    t = t0 + h * np.arange(n)
    pts = np.stack([t, t + 0.5 * h, t + h], axis=1)
    if callable(f):
        vals = np.asarray(f(pts.ravel()), dtype=float)
        if vals.shape == ():
            vals = np.full(pts.size, float(vals))
        vals = vals.reshape(n, 3)
    else:
        vals = np.full((n, 3), float(f))
    if not np.all(np.isfinite(vals)):
        raise InputError("control produced non-finite values")
    return np.ascontiguousarray(vals)


def propagate_lab(state: BlochState, theta_of_t: Control, gamma: float,
                  dt: float = DEFAULT_DT, duration: float = 1.0, t0: float = 0.0) -> TrajectoryTrace:
    """RK4 integration of the lab-frame equations for a prescribed theta(t).

    ``u`` in the returned trace is a centred finite difference of theta.
    """
    if state.frame != LAB:
        raise FrameMismatchError(f"expected lab frame, got {state.frame}")
    n, h = _steps(duration, dt)
    th = _stage_values(theta_of_t, t0, h, n)
    lab = _kernels.rk4_lab(state.v, th, float(gamma), h)
    times = t0 + h * np.arange(n + 1)
    if n:
        theta = np.concatenate([th[:, 0], th[-1:, 2]])
        u = np.gradient(theta, h) if n > 1 else np.zeros(n + 1)
    else:
        theta = np.array([float(theta_of_t(np.array([t0]))[0]) if callable(theta_of_t) else float(theta_of_t)])
        u = np.zeros(1)
    return TrajectoryTrace(times, lab, lab_to_db_array(lab, theta), theta, u)


def propagate_dark_bright(state: BlochState, u_of_t: Control, gamma: float,
                          dt: float = DEFAULT_DT, duration: float = 1.0,
                          theta0: float = 0.0, t0: float = 0.0) -> TrajectoryTrace:
    """RK4 integration of the dark/bright equations; theta = theta0 + int u."""
    if state.frame != DARKBRIGHT:
        raise FrameMismatchError(f"expected darkbright frame, got {state.frame}")
    _check_theta(theta0)
    n, h = _steps(duration, dt)
    us = _stage_values(u_of_t, t0, h, n)
    out = _kernels.rk4_darkbright(state.v, float(theta0), us, float(gamma), h)
    times = t0 + h * np.arange(n + 1)
    u = np.concatenate([us[:, 0], us[-1:, 2]]) if n else np.zeros(1)
    db = out[:, :3]
    theta = out[:, 3]
    return TrajectoryTrace(times, db_to_lab_array(db, theta), db, theta, u)


def apply_bang(state: BlochState, angle: float, allow_negative: bool = False) -> BlochState:
    """Instantaneous rotation of theta by ``angle`` (y is untouched)."""
    if state.frame != DARKBRIGHT:
        raise FrameMismatchError(f"expected darkbright frame, got {state.frame}")
    if not np.isfinite(angle):
        raise InputError("non-finite bang angle")
    if angle < 0 and not allow_negative:
        raise ConstraintViolationError(f"negative bang angle {angle} under u >= 0")
    return BlochState(DARKBRIGHT, bang_rotate(state.v, angle))


def bang_rotate(v: np.ndarray, angle: float) -> np.ndarray:
    x, y, z = v
    c, s = np.cos(angle), np.sin(angle)
    return np.array([x * c + z * s, y, z * c - x * s])


def darkbright_generator(u: float, gamma: float) -> np.ndarray:
    """Matrix A with d(x, y, z)/dt = A (x, y, z) for constant u."""
    return np.array([[0.0, 0.5, u], [-0.5, -0.5 * gamma, 0.0], [-u, 0.0, 0.0]])


CONTROL_DIRECTION = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])


def spring_reduce(u_trace, z_trace) -> np.ndarray:
    """Drive v = u z of the linearised (spring) model."""
    u = np.asarray(u_trace, float)
    z = np.asarray(z_trace, float)
    if u.shape != z.shape:
        raise InputError(f"grid mismatch: u has shape {u.shape}, z has {z.shape}")
    return u * z


def propagate_spring(v_trace, gamma: float, dt: float, yx0=(0.0, 0.0)) -> np.ndarray:
    """Integrate the spring model on the grid of ``v_trace``.

    The drive is linearly interpolated for the RK4 midpoint stages.  Returns
    an (N, 2) array of (x, y).
    """
    v = np.asarray(v_trace, float)
    if v.ndim != 1 or v.size < 1:
        raise InputError("v_trace must be a non-empty 1-D array")
    if not (dt > 0):
        raise InputError("dt must be > 0")
    stages = np.stack([v[:-1], 0.5 * (v[:-1] + v[1:]), v[1:]], axis=1)
    out = _kernels.rk4_spring(np.asarray(yx0, float), np.ascontiguousarray(stages), float(gamma), float(dt))
    return out[:, ::-1].copy()

"""Maximum-principle quantities: control Hamiltonian, adjoint flow, singular arcs.

Multipliers normalised by mu (lambda / mu) are called "normalised" below.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .dynamics import DEFAULT_DT, BlochState, Control, _stage_values, _steps, bang_rotate
from .errors import DomainError, InputError, SingularFeedbackUndefined

Y_FLOOR = 1e-10


@dataclass(frozen=True)
class AdjointState:
    lam: np.ndarray
    mu: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.lam, float).reshape(-1)
        if lam.shape != (3,):
            raise InputError("adjoint must be a 3-vector")
        object.__setattr__(self, "lam", lam)

    @classmethod
    def terminal(cls, mu: float = 0.0):
        return cls(np.array([0.0, 0.0, 1.0]), mu)


@dataclass(frozen=True)
class SingularConstants:
    c1: float
    c2: Optional[float]
    c: Optional[float] = None
    mu: Optional[float] = None

    @classmethod
    def from_mu(cls, c1, c2, mu):
        return cls(c1, c2, -0.5 * c1 * mu, mu)

    @property
    def c_prime(self):
        return None if self.c2 is None or self.mu is None else self.c2 * self.mu


def _vec(s):
    return np.asarray(s.v if isinstance(s, BlochState) else s, float)


def _lam(a):
    return (a.lam, a.mu) if isinstance(a, AdjointState) else (np.asarray(a, float), 0.0)


def switching_function(state, adjoint) -> float:
    x, _, z = _vec(state)
    lam, mu = _lam(adjoint)
    return float(lam[0] * z - lam[2] * x + mu)


def control_hamiltonian(state, adjoint, u: float, gamma: float) -> float:
    x, y, z = _vec(state)
    lam, mu = _lam(adjoint)
    lx, ly, lz = lam
    return float((lx * z - lz * x + mu) * u + 0.5 * lx * y - 0.5 * gamma * ly * y - 0.5 * ly * x)


def adjoint_generator(u: float, gamma: float) -> np.ndarray:
    """Matrix of the adjoint flow, equal to -A(u)^T."""
    return np.array([[0.0, 0.5, u], [-0.5, 0.5 * gamma, 0.0], [-u, 0.0, 0.0]])


def propagate_adjoint(adjoint: AdjointState, u_of_t: Control, gamma: float,
                      dt: float = DEFAULT_DT, duration: float = 1.0,
                      direction: str = "forward", t_start: float = 0.0):
    """RK4 integration of the adjoint equations.

    ``direction="backward"`` starts at time ``t_start`` and integrates toward
    ``t_start - duration``.  Returns (times, (N, 3) lambda trace) ordered along
    the direction of integration.
    """
    if direction not in ("forward", "backward"):
        raise InputError(f"direction must be 'forward' or 'backward', got {direction!r}")
    n, h = _steps(duration, dt)
    if direction == "forward":
        us = _stage_values(u_of_t, t_start, h, n)
        times = t_start + h * np.arange(n + 1)
        step = h
    else:
        us = _stage_values(u_of_t, t_start - duration, h, n)[::-1, ::-1].copy()
        times = t_start - h * np.arange(n + 1)
        step = -h
    lam = _kernels.rk4_adjoint(adjoint.lam, us, float(gamma), step)
    return times, lam


def propagate_adjoint_stages(lam0, u_stages: np.ndarray, gamma: float, h: float, backward=False):
    """Adjoint RK4 driven by stage controls on a forward grid of step h."""
    us = np.ascontiguousarray(u_stages[::-1, ::-1] if backward else u_stages)
    return _kernels.rk4_adjoint(np.asarray(lam0, float), us, float(gamma), -h if backward else h)


def bang_adjoint(lam, angle):
    """Adjoint across a bang rotates like the state; lambda_y is untouched."""
    return bang_rotate(np.asarray(lam, float), angle)


def singular_feedback(state, c1: float, y_floor: float = Y_FLOOR) -> float:
    _, y, z = _vec(state)
    if not abs(y) > y_floor:
        raise SingularFeedbackUndefined(f"|y|={abs(y):.3g} below floor {y_floor}")
    w = z / y
    return float(w * (c1 * w - 0.5))


def singular_surface_residual(state, c1: float, c2: float, gamma: float) -> float:
    x, y, z = _vec(state)
    r2 = x * x + y * y + z * z
    if z == 0 or r2 == 0:
        raise DomainError("singular surface undefined for z = 0 or r = 0")
    return float(y / z + gamma * y * y / r2 * (c2 + x / z) - c1)


def singular_multipliers(state, u: float, gamma: float) -> np.ndarray:
    """Normalised multipliers that make phi and its first two derivatives vanish."""
    x, y, z = _vec(state)
    if gamma <= 0 or y == 0 or z == 0:
        raise DomainError("singular multipliers need gamma > 0, y != 0 and z != 0")
    a = u * y - 0.5 * z
    lz = a / (gamma * y * z)
    return np.array([x * a / (gamma * y * z * z) - 1.0 / z, a / (gamma * z * z), lz])


def multipliers_from_c2(state, c2: float) -> np.ndarray:
    """Normalised multipliers on the singular surface, parametrised by c2."""
    x, y, z = _vec(state)
    if z == 0:
        raise DomainError("z = 0")
    r2 = x * x + y * y + z * z
    lz = (c2 * z + x) / r2
    return np.array([x / z * lz - 1.0 / z, y / z * lz, lz])


def switching_derivatives(state, lam_bar, u: float, gamma: float):
    """(phi, dphi/dt, d2phi/dt2) for normalised multipliers along a control u.

    phi-dot is independent of u and phi-ddot is evaluated with u held
    constant over the instant.
    """
    s = _vec(state)
    lam = np.asarray(lam_bar, float)
    x, y, z = s
    lx, ly, lz = lam
    phi = lx * z - lz * x + 1.0
    dphi = 0.5 * (ly * z - lz * y)
    ds = np.array([0.5 * y + u * z, -0.5 * x - 0.5 * gamma * y, -u * x])
    dl = adjoint_generator(u, gamma) @ lam
    ddphi = 0.5 * (dl[1] * z + ly * ds[2] - dl[2] * y - lz * ds[1])
    return phi, dphi, ddphi


def motion_constant(state, lam_bar) -> float:
    return float(np.dot(_vec(state), np.asarray(lam_bar, float)))

"""Closed-form lossless (gamma = 0) protocols.

The symmetric bang-constant-bang family consists of a bang of angle theta0, a
constant control u for a time T, and a second bang of theta0.  The middle
segment is a rotation by phi = omega T about the axis (0, u, -1/2)/omega.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .errors import DomainError, NoSolutionError
from .schedule import Bang, ControlSchedule, Off, Sampled

U_LOW = -1.0 / (2.0 * np.sqrt(3.0))
U_HIGH = 1.0 / (2.0 * np.sqrt(15.0))
T_MIN_UNCONSTRAINED = np.pi * np.sqrt(3.0)
T_MIN_NONNEGATIVE = 2.0 * np.pi
T_MAX_FAMILY = np.pi * np.sqrt(15.0)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class BangConstantBangFamily:
    theta0: float
    u: float
    T: float
    phi: float
    omega: float
    ny: float
    nz: float

    @classmethod
    def build(cls, u: float, T: float) -> "BangConstantBangFamily":
        omega = np.sqrt(u * u + 0.25)
        return cls(0.5 * (np.pi / 2 - u * T), u, T, omega * T, omega, u / omega, -0.5 / omega)

    def angle_residual(self) -> float:
        return 2 * self.theta0 + self.u * self.T - np.pi / 2

    def closure_residual(self) -> float:
        """Coefficient of the sigma_y term of the propagator (up to -i)."""
        h = 0.5 * self.phi
        return np.sin(self.theta0) * np.cos(h) + self.ny * np.cos(self.theta0) * np.sin(h)

    def schedule(self) -> ControlSchedule:
        mid = Off(self.T) if self.u == 0 else Sampled(np.array([self.u]), self.T)
        return ControlSchedule([Bang(self.theta0), mid, Bang(self.theta0)])


def _closure(phi, u):
    return BangConstantBangFamily.build(u, phi / np.sqrt(u * u + 0.25)).closure_residual()


def solve_family(u: float, eps: float = 1e-9, n_scan: int = 400) -> BangConstantBangFamily:
    """Family member with interior control ``u``.

    theta0 is eliminated through the angle budget, leaving a scalar equation
    in phi that is bracketed on (0, 2 pi) and solved with Brent's method.
    """
    if not np.isfinite(u):
        raise NoSolutionError(f"non-finite control {u}")
    omega = np.sqrt(u * u + 0.25)
    if abs(u - U_LOW) < 1e-15:
        # theta0 = pi/2 kills the cot(theta0) factor, the closure gives phi = pi.
        return BangConstantBangFamily.build(u, np.pi / omega)
    if abs(u - U_HIGH) < 1e-15:
        # theta0 = 0 and phi = 2 pi, a root the scan cannot bracket
        return BangConstantBangFamily.build(u, 2 * np.pi / omega)
    grid = np.linspace(np.pi * eps, 2 * np.pi - eps, n_scan)
    vals = np.array([_closure(p, u) for p in grid])
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        phi = brentq(_closure, grid[i], grid[i + 1], args=(u,), xtol=1e-15, rtol=1e-15, maxiter=200)
        fam = BangConstantBangFamily.build(u, phi / omega)
        if -1e-12 <= fam.theta0 <= np.pi / 2 + 1e-12:
            return fam
    raise NoSolutionError(f"no admissible family member for u={u}")


def family_for_duration(T: float) -> BangConstantBangFamily:
    """Invert T(u) on the family, for T between pi*sqrt(3) and pi*sqrt(15)."""
    if not (T_MIN_UNCONSTRAINED - 1e-12 <= T <= T_MAX_FAMILY + 1e-12):
        raise NoSolutionError(f"T={T} outside the family range [{T_MIN_UNCONSTRAINED}, {T_MAX_FAMILY}]")
    if abs(T - T_MIN_UNCONSTRAINED) < 1e-12:
        return solve_family(U_LOW)
    if abs(T - T_MIN_NONNEGATIVE) < 1e-12:
        return solve_family(0.0)
    hi = U_HIGH * (1 - 1e-9)
    if T >= solve_family(hi).T:
        return solve_family(hi)
    u = brentq(lambda v: solve_family(v).T - T, U_LOW, hi, xtol=1e-15, rtol=1e-15)
    return solve_family(u)


def su2_propagator(theta0: float, u: float, T: float) -> np.ndarray:
    """Two-level propagator of bang(theta0), constant u for T, bang(theta0)."""
    omega = np.sqrt(u * u + 0.25)
    ny, nz = u / omega, -0.5 / omega
    h = 0.5 * omega * T
    s0, c0 = np.sin(theta0), np.cos(theta0)
    a = c0 * np.cos(h) - ny * s0 * np.sin(h)
    b = s0 * np.cos(h) + ny * c0 * np.sin(h)
    return a * np.eye(2) - 1j * b * SIGMA_Y - 1j * nz * np.sin(h) * SIGMA_Z


def su2_product(theta0: float, u: float, T: float) -> np.ndarray:
    """Same propagator built from three matrix exponentials."""
    bang = expm(-0.5j * theta0 * SIGMA_Y)
    mid = expm(-0.5j * T * (u * SIGMA_Y - 0.5 * SIGMA_Z))
    return bang @ mid @ bang


def bloch_rotation(U: np.ndarray) -> np.ndarray:
    """SO(3) matrix induced on (x, y, z) by conjugation with U."""
    sig = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    R = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            R[i, j] = 0.5 * np.real(np.trace(sig[i] @ U @ sig[j] @ U.conj().T))
    return R


def dT_du(family: BangConstantBangFamily) -> float:
    if abs(np.sin(family.theta0)) < 1e-14:
        raise DomainError("dT/du is singular at theta0 = 0")
    return float(2.0 / np.tan(family.theta0) / (family.u ** 2 + 0.25) * monotonicity_helper(0.5 * family.phi))


def monotonicity_helper(x):
    """f(x) = 1 - x cot(x), with f(0) = 0."""
    x = np.asarray(x, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(x) < 1e-8, x * x / 3.0, 1.0 - x / np.tan(x))
    return float(out) if out.ndim == 0 else out


def min_time_unconstrained():
    T = T_MIN_UNCONSTRAINED
    return T, ControlSchedule([Bang(np.pi / 2), Sampled(np.array([-np.pi / (2 * T)]), T), Bang(np.pi / 2)])


def min_time_nonnegative():
    T = T_MIN_NONNEGATIVE
    return T, ControlSchedule([Bang(np.pi / 4), Off(T), Bang(np.pi / 4)])


def bang_off_bang_population(T: float) -> float:
    """Lossless final population of Bang(pi/4), Off(T), Bang(pi/4)."""
    return (0.5 * (1.0 - np.cos(0.5 * T))) ** 2

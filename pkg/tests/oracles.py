"""Independent reference computations used by the tests.

Nothing here calls into the package's integrators; everything is built from
scipy primitives so that agreement is meaningful.
"""
import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.optimize import brentq


def lab_matrix(theta, gamma):
    s, c = np.sin(theta), np.cos(theta)
    # order (X, Y, Z)
    return np.array([[0.0, -0.5 * c, 0.0], [0.5 * c, -0.5 * gamma, -0.5 * s], [0.0, 0.5 * s, 0.0]])


def db_matrix(u, gamma):
    return np.array([[0.0, 0.5, u], [-0.5, -0.5 * gamma, 0.0], [-u, 0.0, 0.0]])


def lab_expm(S0, theta, gamma, t):
    return expm(lab_matrix(theta, gamma) * t) @ np.asarray(S0, float)


def db_expm(s0, u, gamma, t):
    return expm(db_matrix(u, gamma) * t) @ np.asarray(s0, float)


def lab_ivp(S0, theta_fn, gamma, T, t_eval=None):
    sol = solve_ivp(lambda t, S: lab_matrix(theta_fn(t), gamma) @ S, (0, T), np.asarray(S0, float),
                    method="DOP853", rtol=1e-12, atol=1e-13, t_eval=t_eval)
    return sol.y.T


def db_ivp(s0, u_fn, gamma, T, t_eval=None):
    sol = solve_ivp(lambda t, s: db_matrix(u_fn(t), gamma) @ s, (0, T), np.asarray(s0, float),
                    method="DOP853", rtol=1e-12, atol=1e-13, t_eval=t_eval)
    return sol.y.T


def rotation_y(angle):
    # bang: (x, z) rotate, y fixed
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def zoh_population(u, gamma, T):
    """Final X^2 for a zero-order-hold control, by chained expm."""
    n = len(u)
    dt = T / n
    s = np.array([0.0, 0.0, 1.0])
    for uk in u:
        s = expm(db_matrix(uk, gamma) * dt) @ s
    th = dt * np.sum(u)
    X = s[2] * np.sin(th) - s[0] * np.cos(th)
    return X * X


def central_difference(f, u, h=1e-6):
    u = np.asarray(u, float)
    g = np.empty_like(u)
    for k in range(u.size):
        e = np.zeros_like(u)
        e[k] = h
        g[k] = (f(u + e) - f(u - e)) / (2 * h)
    return g


def capped_simplex_projection(v, cap, total, dt):
    """Projection by bisection on the shift, a different route from the package's sort."""
    target = total / dt
    f = lambda tau: np.clip(v - tau, 0, cap).sum() - target
    lo, hi = np.min(v) - cap - 1.0, np.max(v) + 1.0
    tau = brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return np.clip(v - tau, 0, cap)


def su2_from_exponentials(theta0, u, T):
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    bang = expm(-0.5j * theta0 * sy)
    return bang @ expm(-0.5j * T * (u * sy - 0.5 * sz)) @ bang


def family_closure_residual(theta0, u, T):
    """cot(phi/2) + ny cot(theta0), the textbook form of the closure condition."""
    om = np.sqrt(u * u + 0.25)
    return 1 / np.tan(om * T / 2) + (u / om) / np.tan(theta0)

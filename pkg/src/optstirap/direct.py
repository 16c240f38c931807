"""Direct transcription: zero-order-hold control, exact gradients, projected ascent.

Each hold interval is propagated with the exact matrix exponential of the
dark/bright generator, and the derivative of that exponential with respect to
the interval's control comes from the same call (block-triangular trick).  The
objective is the lab-frame X(T)^2, i.e. the final population of level 3.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .dynamics import CONTROL_DIRECTION, ProblemSpec, TrajectoryTrace, db_to_lab_array
from .errors import InputError, SolverFailure, StirapError
from .pmp import Y_FLOOR
from .report import SolveReport
from .schedule import ControlSchedule, Sampled

TARGET_ANGLE = np.pi / 2
NORTH = np.array([0.0, 0.0, 1.0])


@dataclass
class DiscretizedControl:
    u: np.ndarray
    duration: float

    def __post_init__(self):
        self.u = np.asarray(self.u, float).reshape(-1)
        if self.u.size < 1:
            raise InputError("control needs at least one interval")

    @property
    def n(self) -> int:
        return self.u.size

    @property
    def dt(self) -> float:
        return self.duration / self.n

    @property
    def angle(self) -> float:
        return float(self.u.sum() * self.dt)

    def resample(self, n: int, duration: Optional[float] = None) -> "DiscretizedControl":
        """Linear resampling on interval midpoints, onto a new grid and horizon."""
        duration = self.duration if duration is None else duration
        src = (np.arange(self.n) + 0.5) / self.n
        dst = (np.arange(n) + 0.5) / n
        return DiscretizedControl(np.interp(dst, src, self.u), duration)


@dataclass
class OptimizeConfig:
    tol: float = 1e-6
    max_iter: int = 10000
    armijo: float = 1e-4
    shrink: float = 0.5
    step0: float = 1.0
    impose_final_angle: bool = True
    min_step: float = 1e-10
    max_step: float = 1e6


def control_cap(spec: ProblemSpec, dt: float) -> float:
    """Finite bound used by the optimizer; an unbounded control may put the whole angle in one interval."""
    return spec.u_max if spec.bounded else TARGET_ANGLE / dt


def _propagators(u, gamma, dt):
    n = u.size
    big = np.zeros((n, 6, 6))
    A = np.zeros((n, 3, 3))
    A[:, 0, 1], A[:, 1, 0], A[:, 1, 1] = 0.5, -0.5, -0.5 * gamma
    A[:, 0, 2], A[:, 2, 0] = u, -u
    big[:, :3, :3] = A * dt
    big[:, 3:, 3:] = A * dt
    big[:, :3, 3:] = CONTROL_DIRECTION * dt
    E = expm(big)
    return np.ascontiguousarray(E[:, :3, :3]), np.ascontiguousarray(E[:, :3, 3:])


def forward_states(u, gamma, dt):
    M, _ = _propagators(np.asarray(u, float), gamma, dt)
    return _kernels.zoh_forward(M, NORTH)


def objective_and_gradient(spec: ProblemSpec, control, return_states: bool = False):
    """Final population X(T)^2 and its exact gradient with respect to each hold value."""
    if not isinstance(control, DiscretizedControl):
        control = DiscretizedControl(control, spec.duration)
    u, dt = control.u, control.dt
    M, D = _propagators(u, spec.gamma, dt)
    s = _kernels.zoh_forward(M, NORTH)
    theta = dt * u.sum()
    x, _, z = s[-1]
    st, ct = np.sin(theta), np.cos(theta)
    X = z * st - x * ct
    Z = z * ct + x * st
    J = X * X
    p = 2 * X * np.array([-ct, 0.0, st])
    g = _kernels.zoh_backward(M, D, s, p) + 2 * X * Z * dt
    if return_states:
        return J, g, s
    return J, g


def project(v, cap: float, total: Optional[float] = None, dt: float = 1.0):
    """Euclidean projection onto {0 <= u <= cap} intersected with {dt * sum(u) = total}."""
    v = np.asarray(v, float)
    if total is None:
        return np.clip(v, 0.0, cap)
    target = total / dt
    if target < 0 or target > cap * v.size + 1e-12:
        raise InputError(f"angle {total} is not reachable with cap {cap} on {v.size} intervals")
    # sum(clip(v - tau, 0, cap)) is piecewise linear and non-increasing in tau
    bp = np.unique(np.concatenate([v, v - cap]))

    def mass(tau):
        return np.clip(v - tau, 0.0, cap).sum()

    m = np.array([mass(t) for t in bp]) if bp.size < 64 else _mass_sorted(v, cap, bp)
    idx = np.searchsorted(-m, -target)
    if idx == 0:
        tau = bp[0]
    elif idx >= bp.size:
        tau = bp[-1]
    else:
        t0, t1 = bp[idx - 1], bp[idx]
        m0, m1 = m[idx - 1], m[idx]
        tau = t0 if m0 == m1 else t0 + (target - m0) * (t1 - t0) / (m1 - m0)
    return np.clip(v - tau, 0.0, cap)


def _mass_sorted(v, cap, taus):
    # sum_i clip(v_i - tau, 0, cap) for every tau via sorted cumulative sums
    vs = np.sort(v)
    cs = np.concatenate([[0.0], np.cumsum(vs)])
    n = vs.size
    hi = np.searchsorted(vs, taus, side="right")        # v_i <= tau contribute 0
    top = np.searchsorted(vs, taus + cap, side="right")  # v_i >= tau + cap contribute cap
    mid = cs[top] - cs[hi] - (top - hi) * taus
    return mid + (n - top) * cap


def _feasible_start(spec, n, cap, impose, kind="bang-off-bang"):
    """Flat control, or pi/4 ramps at the cap at both ends with an idle interior."""
    dt = spec.duration / n
    if kind == "flat":
        u = np.full(n, TARGET_ANGLE / spec.duration)
    elif kind == "bang-off-bang":
        u = np.zeros(n)
        need = np.pi / 4 / dt
        k = 0
        while need > 1e-15 and k < n // 2:
            take = min(cap, need)
            u[k] = u[n - 1 - k] = take
            need -= take
            k += 1
    else:
        raise InputError(f"unknown start {kind!r}")
    return project(u, cap, TARGET_ANGLE if impose else None, dt)


def spg(spec: ProblemSpec, u0: np.ndarray, cfg: OptimizeConfig):
    """Spectral projected gradient ascent with monotone Armijo backtracking."""
    n = u0.size
    dt = spec.duration / n
    cap = control_cap(spec, dt)
    total = TARGET_ANGLE if cfg.impose_final_angle else None

    def P(v):
        return project(v, cap, total, dt)

    u = P(u0)
    J, g = objective_and_gradient(spec, DiscretizedControl(u, spec.duration))
    alpha = cfg.step0
    history = [J]
    status, it, pg = "max_iter", 0, np.inf
    for it in range(1, cfg.max_iter + 1):
        pg = float(np.linalg.norm(P(u + g) - u))
        if pg < cfg.tol:
            status = "converged"
            break
        d = P(u + alpha * g) - u
        slope = float(g @ d)
        lam = 1.0
        while True:
            un = u + lam * d
            Jn, gn = objective_and_gradient(spec, DiscretizedControl(un, spec.duration))
            if Jn >= J + cfg.armijo * lam * slope or lam < 1e-12:
                break
            lam *= cfg.shrink
        if Jn < J:
            status = "stalled"
            break
        s_, y_ = un - u, gn - g
        sy = float(s_ @ y_)
        alpha = float(np.clip((s_ @ s_) / -sy, cfg.min_step, cfg.max_step)) if sy < 0 else cfg.max_step
        u, J, g = un, Jn, gn
        history.append(J)
    else:
        pg = float(np.linalg.norm(P(u + g) - u))
        if pg < cfg.tol:
            status = "converged"
    return u, J, dict(status=status, iterations=it, projected_gradient=pg, history=np.asarray(history))


def symmetry_defect(u) -> float:
    u = np.asarray(u, float)
    return float(np.max(np.abs(u - u[::-1])))


def nonzero_runs(u, threshold: float):
    """(start, stop) index pairs of maximal runs with u > threshold."""
    on = np.r_[False, np.asarray(u) > threshold, False].astype(int)
    edges = np.flatnonzero(np.diff(on))
    return list(zip(edges[::2], edges[1::2]))


def structure_tag(u, dt: float, threshold: float = 1e-3):
    """Classify a control as bang-off-bang or with an interior singular segment.

    Returns (tag, singular_time): interior runs are all runs except the first
    and the last.
    """
    runs = nonzero_runs(u, threshold)
    if len(runs) >= 3:
        interior = sum(b - a for a, b in runs[1:-1])
        return "bang-off-singular-off-bang", interior * dt
    if len(runs) == 2:
        return "bang-off-bang", 0.0
    if len(runs) == 1:
        return "continuous", 0.0
    return "idle", 0.0


def trace_from_control(spec: ProblemSpec, u, states=None) -> TrajectoryTrace:
    u = np.asarray(u, float)
    n = u.size
    dt = spec.duration / n
    if states is None:
        states = forward_states(u, spec.gamma, dt)
    theta = np.concatenate([[0.0], np.cumsum(u) * dt])
    times = dt * np.arange(n + 1)
    uu = np.concatenate([u, u[-1:]])
    return TrajectoryTrace(times, db_to_lab_array(states, theta), states, theta, uu)


@dataclass
class SingularFit:
    c1: Optional[float]
    c2: Optional[float]
    feedback_rms: float
    surface_rms: Optional[float]
    window: tuple
    samples: int
    poor: bool
    threshold: float = 1e-2
    u_feedback: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self):
        return dict(c1=self.c1, c2=self.c2, feedback_rms=self.feedback_rms, surface_rms=self.surface_rms,
                    window=list(self.window), samples=self.samples, poor_fit=self.poor)


def auto_window(times, u, threshold: float = 1e-3):
    """Interior window strictly between the two control maxima ("ears") of the singular run."""
    u = np.asarray(u, float)
    runs = nonzero_runs(u[:-1] if u.size > 1 else u, threshold)
    if len(runs) < 3:
        raise InputError("no interior control segment to fit")
    a, b = runs[1][0], runs[-2][1]
    mid = (a + b) // 2
    left = a + int(np.argmax(u[a:mid]))
    right = mid + int(np.argmax(u[mid:b]))
    return float(times[left + 1]), float(times[right])


def fit_singular_constants(trace: TrajectoryTrace, gamma: float, window=None,
                           threshold: float = 1e-2) -> SingularFit:
    """Least-squares c1 from the feedback law, then c2 from the singular surface.

    Each row's control is paired with the state at the middle of its hold
    interval (mean of the bounding samples).  ``window`` is a (t_start, t_end)
    pair; by default it is placed between the ears of the interior segment.
    """
    t = np.asarray(trace.times, float)
    if window is None:
        window = auto_window(t, trace.u)
    t0, t1 = window
    mid_t = 0.5 * (t[:-1] + t[1:])
    sel = np.flatnonzero((mid_t >= t0) & (mid_t <= t1) & (np.diff(t) > 0))
    if sel.size < 10:
        raise InputError(f"fit window [{t0}, {t1}] holds {sel.size} samples, need at least 10")
    s = 0.5 * (trace.db[sel] + trace.db[sel + 1])
    u = np.asarray(trace.u, float)[sel]
    x, y, z = s.T
    if np.any(np.abs(y) < Y_FLOOR):
        return SingularFit(None, None, np.inf, None, (t0, t1), sel.size, True, threshold)
    w = z / y
    c1 = float(np.sum(w * w * (u + 0.5 * w)) / np.sum(w ** 4))
    us = c1 * w * w - 0.5 * w
    rms = float(np.sqrt(np.mean((u - us) ** 2)))
    c2 = srms = None
    if gamma > 0:
        a = gamma * y * y / (x * x + y * y + z * z)
        b = y / z + a * x / z - c1
        c2 = float(-np.sum(a * b) / np.sum(a * a))
        srms = float(np.sqrt(np.mean((b + a * c2) ** 2)))
    poor = not (rms < threshold)
    if poor:
        return SingularFit(None, None, rms, srms, (t0, t1), sel.size, True, threshold, us)
    return SingularFit(c1, c2, rms, srms, (t0, t1), sel.size, False, threshold, us)


def optimize(spec: ProblemSpec, n: int = 400, init=None, config: Optional[OptimizeConfig] = None,
             fit: bool = True) -> SolveReport:
    """Maximise the final population over n hold values; never fails silently.

    ``init`` may be a DiscretizedControl (resampled to n), "flat", or
    "bang-off-bang" (default).
    """
    cfg = config or OptimizeConfig()
    if n < 2:
        raise InputError("n must be at least 2")
    dt = spec.duration / n
    cap = control_cap(spec, dt)
    if cfg.impose_final_angle and cap * spec.duration < TARGET_ANGLE:
        raise SolverFailure("control bound too small to reach theta = pi/2",
                            {"u_max": spec.u_max, "duration": spec.duration})
    if init is None or isinstance(init, str):
        u0 = _feasible_start(spec, n, cap, cfg.impose_final_angle, init or "bang-off-bang")
    else:
        if not isinstance(init, DiscretizedControl):
            init = DiscretizedControl(init, spec.duration)
        u0 = init.resample(n, spec.duration).u
    u, J, info = spg(spec, u0, cfg)
    tr = trace_from_control(spec, u)
    tag, ts = structure_tag(u, dt, threshold=1e-3 * min(1.0, cap))
    rep = SolveReport(
        solver="direct", status=info["status"], spec=spec, structure=tag,
        population=float(J), schedule=ControlSchedule([Sampled(u, dt)]),
        singular_duration=ts, symmetry_defect=symmetry_defect(u),
        residuals={"projected_gradient": info["projected_gradient"], "theta_T": float(tr.theta[-1])},
        extra={"iterations": info["iterations"], "n": n, "objective_monotone": bool(np.all(np.diff(info["history"]) >= 0))},
        trace=tr, control=u,
    )
    ramp = nonzero_runs(u, 1e-3 * min(1.0, cap))
    if ramp:
        rep.theta0 = float(u[ramp[0][0]:ramp[0][1]].sum() * dt)
    if len(ramp) >= 2:
        rep.t1 = float((ramp[1][0] - ramp[0][1]) * dt)
    if fit and tag == "bang-off-singular-off-bang":
        try:
            f = fit_singular_constants(tr, spec.gamma)
            rep.fit = f.to_dict()
            rep.c1, rep.c2 = f.c1, f.c2
        except StirapError as exc:
            rep.fit = {"error": str(exc)}
    return rep


@dataclass
class SweepResult:
    gammas: list
    durations: list
    population: np.ndarray
    structure: list
    singular_fraction: np.ndarray
    status: list
    reports: dict = field(default_factory=dict, repr=False)

    def rows(self):
        for i, g in enumerate(self.gammas):
            for j, T in enumerate(self.durations):
                yield dict(gamma=g, duration=T, population=self.population[i, j],
                           structure=self.structure[i][j], singular_fraction=self.singular_fraction[i, j],
                           status=self.status[i][j])

    def monotone_in_duration(self, tol: float = 0.0):
        return [bool(np.all(np.diff(row[np.isfinite(row)]) >= -tol)) for row in self.population]

    def dominates(self, i: int, j: int, tol: float = 0.0) -> bool:
        """Row i pointwise >= row j."""
        a, b = self.population[i], self.population[j]
        ok = np.isfinite(a) & np.isfinite(b)
        return bool(np.all(a[ok] >= b[ok] - tol))

    def onset(self, i: int):
        """First duration whose structure has an interior singular segment."""
        for T, tag in zip(self.durations, self.structure[i]):
            if tag == "bang-off-singular-off-bang":
                return T
        return None


def efficiency_sweep(gammas: Sequence[float], durations: Sequence[float], n: Optional[int] = None,
                     u_max: float = 1.0, dt: float = 0.05, solver: str = "direct",
                     config: Optional[OptimizeConfig] = None) -> SweepResult:
    """Final population over a (gamma, T) grid.

    With ``solver="direct"`` each row is warm-started along increasing T;
    ``n`` fixes the interval count, otherwise it is round(T / dt).
    ``solver="shooting"`` uses the indirect solver per cell.
    """
    if not len(gammas) or not len(durations):
        raise InputError("sweep grids must be non-empty")
    if solver not in ("direct", "shooting"):
        raise InputError(f"unknown sweep solver {solver!r}")
    from . import shooting

    Ts = sorted(float(T) for T in durations)
    pop = np.full((len(gammas), len(Ts)), np.nan)
    frac = np.full_like(pop, np.nan)
    tags = [[None] * len(Ts) for _ in gammas]
    status = [["failed"] * len(Ts) for _ in gammas]
    reports = {}
    for i, g in enumerate(gammas):
        prev = None
        for j, T in enumerate(Ts):
            spec = ProblemSpec(float(g), T, u_max)
            try:
                if solver == "direct":
                    nn = n or max(10, int(round(T / dt)))
                    init = None if prev is None else DiscretizedControl(prev.u, prev.duration)
                    rep = optimize(spec, nn, init=init, config=config, fit=False)
                    prev = DiscretizedControl(rep.control, T)
                else:
                    rep = shooting.solve(spec, diagnostics=False)
            except StirapError as exc:
                status[i][j] = f"failed: {exc}"
                continue
            pop[i, j] = rep.population
            tags[i][j] = rep.structure
            frac[i, j] = rep.singular_fraction
            status[i][j] = rep.status
            reports[(g, T)] = rep
    return SweepResult(list(gammas), Ts, pop, tags, frac, status, reports)

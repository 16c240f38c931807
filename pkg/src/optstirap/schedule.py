"""Piecewise control schedules and their execution."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .dynamics import (
    DARKBRIGHT, DEFAULT_DT, BlochState, ProblemSpec, TrajectoryTrace, bang_rotate,
    db_to_lab_array, propagate_dark_bright,
)
from .errors import ConstraintViolationError, ScheduleError, SingularFeedbackUndefined

Y_FLOOR = 1e-10
DURATION_TOL = 1e-9


@dataclass(frozen=True)
class Bang:
    angle: float


@dataclass(frozen=True)
class Off:
    duration: float


@dataclass(frozen=True)
class SingularArc:
    """Singular arc driven by the feedback law with constant ``c1``.

    The closed-loop feedback is dynamically unstable inside the singular
    surface, so long arcs cannot be reproduced by integrating it forward.
    Solvers therefore attach ``u_stages``, the feedback control evaluated at
    the RK4 stage times of a uniform grid over the arc; when present the arc
    is replayed open loop from these values.
    """

    c1: float
    duration: float
    u_stages: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sampled:
    """Zero-order-hold control: ``values[k]`` is held for ``step``."""

    values: np.ndarray
    step: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, float).reshape(-1))

    @property
    def duration(self) -> float:
        return self.values.size * self.step


Segment = Union[Bang, Off, SingularArc, Sampled]


@dataclass
class ControlSchedule:
    segments: list = field(default_factory=list)

    def timed_duration(self) -> float:
        return float(sum(s.duration for s in self.segments if not isinstance(s, Bang)))

    def bang_total(self) -> float:
        return float(sum(s.angle for s in self.segments if isinstance(s, Bang)))

    def total_duration(self, u_max: float = float("inf")) -> float:
        """Wall duration; bangs take angle/u_max each when the control is bounded."""
        ramps = self.bang_total() / u_max if np.isfinite(u_max) else 0.0
        return self.timed_duration() + ramps

    def to_list(self) -> list:
        out = []
        for s in self.segments:
            if isinstance(s, Bang):
                out.append({"type": "bang", "angle": float(s.angle)})
            elif isinstance(s, Off):
                out.append({"type": "off", "duration": float(s.duration)})
            elif isinstance(s, SingularArc):
                rec = {"type": "singular", "c1": float(s.c1), "duration": float(s.duration)}
                if s.u_stages is not None:
                    rec["u_stages"] = np.asarray(s.u_stages).tolist()
                out.append(rec)
            else:
                out.append({"type": "sampled", "step": float(s.step), "values": s.values.tolist()})
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_list(cls, records: list, lines: Optional[list] = None) -> "ControlSchedule":
        if not isinstance(records, list):
            raise ScheduleError("line 1: schedule must be a JSON list of segment records")
        segs = []
        for i, rec in enumerate(records):
            where = f"line {lines[i]}" if lines else f"record {i}"
            segs.append(_parse_record(rec, where))
        return cls(segs)

    @classmethod
    def loads(cls, text: str) -> "ControlSchedule":
        try:
            records, lines = _decode_with_lines(text)
        except json.JSONDecodeError as exc:
            raise ScheduleError(f"line {exc.lineno}: {exc.msg}") from None
        return cls.from_list(records, lines)

    @classmethod
    def load(cls, path) -> "ControlSchedule":
        with open(path) as fh:
            return cls.loads(fh.read())


def _decode_with_lines(text):
    """Decode a JSON document; for a top-level list also return each element's line."""
    dec = json.JSONDecoder()
    pos = len(text) - len(text.lstrip())
    if not text[pos:pos + 1] == "[":
        return json.loads(text), None
    json.loads(text)  # surfaces syntax errors with proper line numbers
    items, lines = [], []
    pos += 1
    ws = " \t\r\n"
    while True:
        while pos < len(text) and text[pos] in ws:
            pos += 1
        if text[pos] == "]":
            break
        lines.append(text.count("\n", 0, pos) + 1)
        obj, pos = dec.raw_decode(text, pos)
        items.append(obj)
        while text[pos] in ws:
            pos += 1
        if text[pos] == ",":
            pos += 1
    return items, lines


def _number(rec, key, where, positive=False, nonneg=False):
    if key not in rec:
        raise ScheduleError(f"{where}: segment {rec.get('type')!r} needs field {key!r}")
    v = rec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ScheduleError(f"{where}: field {key!r} must be a finite number, got {v!r}")
    if positive and v <= 0:
        raise ScheduleError(f"{where}: field {key!r} must be > 0, got {v}")
    if nonneg and v < 0:
        raise ScheduleError(f"{where}: field {key!r} must be >= 0, got {v}")
    return float(v)


def _parse_record(rec, where) -> Segment:
    if not isinstance(rec, dict) or "type" not in rec:
        raise ScheduleError(f"{where}: each segment must be an object with a 'type' field")
    kind = str(rec["type"]).lower()
    if kind == "bang":
        return Bang(_number(rec, "angle", where))
    if kind == "off":
        return Off(_number(rec, "duration", where, positive=True))
    if kind in ("singular", "singulararc", "singular_arc"):
        st = rec.get("u_stages")
        return SingularArc(_number(rec, "c1", where), _number(rec, "duration", where, positive=True),
                           None if st is None else np.asarray(st, float).reshape(-1, 3))
    if kind == "sampled":
        vals = rec.get("values")
        if not isinstance(vals, list) or not vals:
            raise ScheduleError(f"{where}: sampled segment needs a non-empty 'values' list")
        arr = np.asarray(vals, float)
        if not np.all(np.isfinite(arr)):
            raise ScheduleError(f"{where}: sampled values must be finite")
        return Sampled(arr, _number(rec, "step", where, positive=True))
    raise ScheduleError(f"{where}: unknown segment type {rec['type']!r}")


def validate(spec: ProblemSpec, schedule: ControlSchedule, tol: float = DURATION_TOL):
    total = schedule.total_duration(spec.u_max)
    if abs(total - spec.duration) > tol:
        raise ScheduleError(
            f"schedule lasts {total:.12g} but the problem duration is {spec.duration:.12g}")
    if spec.allow_negative_u:
        return
    for s in schedule.segments:
        if isinstance(s, Bang) and s.angle < 0:
            raise ConstraintViolationError(f"negative bang angle {s.angle}")
        if isinstance(s, Sampled) and np.any(s.values < 0):
            raise ConstraintViolationError("negative sampled control under u >= 0")
    if spec.bounded:
        for s in schedule.segments:
            if isinstance(s, Sampled) and np.any(s.values > spec.u_max * (1 + 1e-12)):
                raise ConstraintViolationError("sampled control exceeds u_max")


def _single(t, s, theta):
    db = np.asarray(s, float)[None, :]
    return TrajectoryTrace(np.array([t]), db_to_lab_array(db, theta), db, np.array([theta]), np.zeros(1))


def run_sampled(spec: ProblemSpec, seg: Sampled, s0, theta0, t0, dt):
    m = max(1, int(np.ceil(seg.step / dt - 1e-9)))
    h = seg.step / m
    stages = np.repeat(seg.values, m)[:, None] * np.ones(3)
    out = _kernels.rk4_darkbright(np.asarray(s0, float), float(theta0),
                                  np.ascontiguousarray(stages), spec.gamma, h)
    times = t0 + h * np.arange(out.shape[0])
    u = np.concatenate([stages[:, 0], stages[-1:, 0]])
    return TrajectoryTrace(times, db_to_lab_array(out[:, :3], out[:, 3]), out[:, :3], out[:, 3], u)


def run_singular(spec: ProblemSpec, seg: SingularArc, s0, theta0, t0, dt, y_floor=Y_FLOOR):
    if seg.u_stages is not None:
        us = np.ascontiguousarray(np.asarray(seg.u_stages, float).reshape(-1, 3))
        n = us.shape[0]
        h = seg.duration / n
        out = _kernels.rk4_darkbright(np.asarray(s0, float), float(theta0), us, spec.gamma, h)
    else:
        n = max(1, int(np.ceil(seg.duration / dt - 1e-9)))
        h = seg.duration / n
        out, us = _kernels.rk4_singular(np.asarray(s0, float), float(theta0), float(seg.c1),
                                        spec.gamma, h, n, y_floor)
        if not np.all(np.isfinite(out)):
            raise SingularFeedbackUndefined(
                f"singular feedback left the domain (|y| < {y_floor} or overflow)")
    times = t0 + h * np.arange(n + 1)
    u = np.concatenate([us[:, 0], us[-1:, 2]])
    return TrajectoryTrace(times, db_to_lab_array(out[:, :3], out[:, 3]), out[:, :3], out[:, 3], u)


def run_schedule(spec: ProblemSpec, schedule: ControlSchedule, dt: float = DEFAULT_DT,
                 initial: Optional[BlochState] = None, check_duration: bool = True) -> TrajectoryTrace:
    """Execute a schedule from the north pole (or ``initial``, darkbright frame at theta=0)."""
    if check_duration:
        validate(spec, schedule)
    s = np.array([0.0, 0.0, 1.0]) if initial is None else np.asarray(initial.v, float)
    theta, t = 0.0, 0.0
    parts = []
    for seg in schedule.segments:
        if isinstance(seg, Bang):
            if spec.bounded and seg.angle != 0:
                u = np.sign(seg.angle) * spec.u_max
                tr = propagate_dark_bright(BlochState(DARKBRIGHT, s), u, spec.gamma, dt,
                                           abs(seg.angle) / spec.u_max, theta0=theta, t0=t)
            else:
                s2 = bang_rotate(s, seg.angle)
                tr = TrajectoryTrace(np.array([t, t]), db_to_lab_array(np.vstack([s, s2]), [theta, theta + seg.angle]),
                                     np.vstack([s, s2]), np.array([theta, theta + seg.angle]), np.zeros(2))
        elif isinstance(seg, Off):
            tr = propagate_dark_bright(BlochState(DARKBRIGHT, s), 0.0, spec.gamma, dt,
                                       seg.duration, theta0=theta, t0=t)
        elif isinstance(seg, SingularArc):
            tr = run_singular(spec, seg, s, theta, t, dt)
        elif isinstance(seg, Sampled):
            tr = run_sampled(spec, seg, s, theta, t, dt)
        else:
            raise ScheduleError(f"unknown segment {seg!r}")
        parts.append(tr)
        s, theta, t = tr.db[-1].copy(), float(tr.theta[-1]), float(tr.times[-1])
    if not parts:
        return _single(t, s, theta)
    return TrajectoryTrace.concatenate(parts)

"""Serializable solver output."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .dynamics import ProblemSpec, TrajectoryTrace
from .schedule import ControlSchedule


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


@dataclass
class SolveReport:
    solver: str
    status: str
    spec: ProblemSpec
    structure: Optional[str] = None
    population: Optional[float] = None
    schedule: Optional[ControlSchedule] = None
    theta0: Optional[float] = None
    t1: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    mu: Optional[float] = None
    c: Optional[float] = None
    c_prime: Optional[float] = None
    singular_duration: Optional[float] = None
    symmetry_defect: Optional[float] = None
    residuals: dict = field(default_factory=dict)
    conservation: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    trace: Optional[TrajectoryTrace] = field(default=None, repr=False)
    control: Optional[np.ndarray] = field(default=None, repr=False)
    candidate: Any = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "converged"

    @property
    def singular_fraction(self) -> float:
        if not self.singular_duration:
            return 0.0
        return float(self.singular_duration / self.spec.duration)

    def to_dict(self, include_schedule: bool = False) -> dict:
        d = {
            "solver": self.solver,
            "status": self.status,
            "gamma": self.spec.gamma,
            "duration": self.spec.duration,
            "u_max": self.spec.u_max if np.isfinite(self.spec.u_max) else "inf",
            "structure": self.structure,
            "population": self.population,
            "theta0": self.theta0,
            "t1": self.t1,
            "c1": self.c1,
            "c2": self.c2,
            "mu": self.mu,
            "c": self.c,
            "c_prime": self.c_prime,
            "singular_duration": self.singular_duration,
            "singular_fraction": self.singular_fraction,
            "symmetry_defect": self.symmetry_defect,
            "residuals": self.residuals,
            "conservation": self.conservation,
            "fit": self.fit,
            "extra": self.extra,
        }
        if include_schedule and self.schedule is not None:
            d["schedule"] = [
                {k: v for k, v in rec.items() if k != "u_stages"} for rec in self.schedule.to_list()
            ]
        return _plain(d)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2, sort_keys=True)

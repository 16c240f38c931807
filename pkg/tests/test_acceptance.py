"""Acceptance checks, one test per criterion.

Each test records a one-line verdict in RESULTS before asserting, so the
pytest summary (and ``python3 tests/test_acceptance.py``) lists every
criterion with its measured numbers.
"""
import functools
import time

import numpy as np
import pytest

from optstirap import direct, lossless, shooting
from optstirap.dynamics import ProblemSpec
from optstirap.schedule import run_schedule

import oracles

RESULTS = {}

REF_C1 = -0.081368
REF_C2 = 31.556
CELLS = [(g, T) for g in (0.05, 0.1, 0.2) for T in (10.0, 15.0, 20.0)]
SWEEP_GAMMAS = (0.1, 0.2)
SWEEP_DURATIONS = (5.0, 6.0, 6.5, 7.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 40.0)


def record(n, ok, detail):
    RESULTS[n] = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    return ok


@functools.lru_cache(maxsize=None)
def _warm():
    # compile the numba kernels so that runtimes measure the solvers only
    run_schedule(ProblemSpec(0.0, 2 * np.pi), lossless.min_time_nonnegative()[1])
    shooting.solve(ProblemSpec(0.1, 8.0, 1.0))
    shooting.solve(ProblemSpec(0.1, 8.0))
    direct.optimize(ProblemSpec(0.1, 4.0, 1.0), 40)
    return True


@functools.lru_cache(maxsize=None)
def extremal(gamma, T, u_max=np.inf):
    return shooting.solve(ProblemSpec(gamma, T, u_max))


def solved_extremals():
    _warm()
    out = []
    for g, T in CELLS:
        out.append(extremal(g, T, 1.0))
        out.append(extremal(g, T))
    return out


def test_criterion_1_lossless_min_time():
    _warm()
    t0 = time.perf_counter()
    T, sched = lossless.min_time_unconstrained()
    pop = run_schedule(ProblemSpec(0.0, T, allow_negative_u=True), sched).final_population
    dt = time.perf_counter() - t0
    ok = abs(T - np.pi * np.sqrt(3)) < 1e-12 and pop >= 1 - 1e-8 and dt < 1
    record(1, ok, f"T={T:.12f}, population={pop:.12f}, runtime={dt:.3f}s")
    assert ok


def test_criterion_2_nonnegative_min_time():
    _warm()
    t0 = time.perf_counter()
    T, sched = lossless.min_time_nonnegative()
    pop = run_schedule(ProblemSpec(0.0, T), sched).final_population
    dt = time.perf_counter() - t0
    theta0 = sched.segments[0].angle
    ok = abs(T - 2 * np.pi) < 1e-12 and abs(theta0 - np.pi / 4) < 1e-15 and pop >= 1 - 1e-8 and dt < 1
    record(2, ok, f"theta0={theta0:.12f}, T={T:.12f}, population={pop:.12f}, runtime={dt:.3f}s")
    assert ok


def test_criterion_3_family_consistency():
    t0 = time.perf_counter()
    fam = lossless.solve_family(0.0)
    err0 = max(abs(fam.theta0 - np.pi / 4), abs(fam.phi - np.pi), abs(fam.T - 2 * np.pi))
    h = 1e-6
    rel = []
    for u in np.linspace(lossless.U_LOW, lossless.U_HIGH, 7)[1:-1]:
        fd = (lossless.solve_family(u + h).T - lossless.solve_family(u - h).T) / (2 * h)
        rel.append(abs(lossless.dT_du(lossless.solve_family(u)) - fd) / abs(fd))
    # the endpoints are excluded: dT/du diverges where theta0 reaches 0
    grid = np.linspace(lossless.U_LOW, lossless.U_HIGH, 52)[1:-1]
    slopes = np.array([lossless.dT_du(lossless.solve_family(u)) for u in grid])
    dt = time.perf_counter() - t0
    ok = err0 < 1e-10 and max(rel) < 1e-5 and slopes.min() >= 0 and dt < 1
    record(3, ok, f"u=0 error={err0:.2e}, max FD rel error={max(rel):.2e}, "
                  f"min dT/du on 50 points={slopes.min():.3e}, runtime={dt:.3f}s")
    assert ok


def test_criterion_4_direct_reproduction():
    _warm()
    t0 = time.perf_counter()
    rep = direct.optimize(ProblemSpec(0.1, 20.0, 1.0), 400)
    dt = time.perf_counter() - t0
    c1, c2 = rep.c1, rep.c2
    surf = rep.fit.get("surface_rms", np.inf) if rep.fit else np.inf
    ok = (rep.structure == "bang-off-singular-off-bang" and rep.symmetry_defect < 1e-2
          and c1 is not None and abs(c1 - REF_C1) < 0.1 * abs(REF_C1)
          and c2 is not None and abs(c2 - REF_C2) < 0.1 * REF_C2
          and surf < 1e-3 and dt < 60)
    record(4, ok, f"structure={rep.structure}, symmetry defect={rep.symmetry_defect:.2e}, c1={c1:.6f}, "
                  f"c2={c2:.4f}, surface RMS={surf:.2e}, population={rep.population:.7f}, runtime={dt:.1f}s")
    assert ok


def test_criterion_5_dual_solver_agreement():
    _warm()
    t0 = time.perf_counter()
    gaps = {}
    for g, T in CELLS:
        sh = extremal(g, T, 1.0)
        dr = direct.optimize(ProblemSpec(g, T, 1.0), int(round(T / 0.05)), fit=False)
        gaps[(g, T)] = abs(sh.population - dr.population)
    dt = time.perf_counter() - t0
    worst = max(gaps, key=gaps.get)
    ok = max(gaps.values()) < 1e-3 and dt < 300
    record(5, ok, f"max |shooting - direct|={gaps[worst]:.2e} at (gamma, T)={worst}, runtime={dt:.1f}s")
    assert ok


def test_criterion_6_efficiency_curve():
    _warm()
    t0 = time.perf_counter()
    res = direct.efficiency_sweep(SWEEP_GAMMAS, SWEEP_DURATIONS)
    dt = time.perf_counter() - t0
    mono = res.monotone_in_duration()
    dom = res.dominates(0, 1)
    onsets = [res.onset(i) for i in range(len(SWEEP_GAMMAS))]
    below = [all(tag == "bang-off-bang" for T, tag in zip(res.durations, res.structure[i]) if T < 2 * np.pi)
             for i in range(len(SWEEP_GAMMAS))]
    near = [o is not None and abs(o - 2 * np.pi) <= 1.0 for o in onsets]
    ok = all(mono) and dom and all(below) and all(near) and all(s == "converged" for r in res.status for s in r) \
        and dt < 600
    record(6, ok, f"monotone rows={mono}, gamma 0.1 >= gamma 0.2: {dom}, singular onset T={onsets}, "
                  f"bang-off-bang below 2 pi: {below}, runtime={dt:.1f}s")
    assert ok


def test_criterion_7_conservation():
    reps = solved_extremals()
    keys = ("hamiltonian_drift_per_time", "motion_constant_drift", "switching_max_on_arc")
    worst = {k: max(r.conservation[k] for r in reps) for k in keys}
    jumps = [r.conservation["lambda_y_bang_jump"] for r in reps if r.conservation["lambda_y_bang_jump"] is not None]
    jump = max(jumps)
    ok = (worst["hamiltonian_drift_per_time"] < 1e-8 and worst["motion_constant_drift"] < 1e-8
          and worst["switching_max_on_arc"] < 1e-6 and jump < 1e-14)
    record(7, ok, f"{len(reps)} extremals: H drift/time={worst['hamiltonian_drift_per_time']:.2e}, "
                  f"motion constant drift={worst['motion_constant_drift']:.2e}, "
                  f"max |phi| on arcs={worst['switching_max_on_arc']:.2e}, "
                  f"lambda_y bang jump={jump:.1e} over {len(jumps)} impulsive extremals")
    assert ok


def test_criterion_8_gradient():
    rng = np.random.default_rng(8)
    errs = []
    for _ in range(10):
        gamma = rng.uniform(0.0, 0.5)
        T = rng.uniform(2.0, 20.0)
        n = int(rng.integers(20, 120))
        u = rng.uniform(0.0, 1.0, n)
        _, g = direct.objective_and_gradient(ProblemSpec(gamma, T), u)
        fd = oracles.central_difference(lambda v: oracles.zoh_population(v, gamma, T), u, 1e-6)
        errs.append(np.max(np.abs(g - fd)) / np.max(np.abs(fd)))
    ok = max(errs) < 1e-5
    record(8, ok, f"max relative gradient error over 10 controls={max(errs):.2e}")
    assert ok


def test_criterion_9_time_reversal_identity():
    reps = solved_extremals()
    gaps = [abs(r.conservation["z_T_minus_lambda_z_0"]) for r in reps]
    ok = max(gaps) < 1e-6
    record(9, ok, f"max |z(T) - lambda_z(0)| over {len(reps)} extremals={max(gaps):.2e}")
    assert ok


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    for fn in tests:
        try:
            fn()
        except AssertionError:
            pass
    for n in sorted(RESULTS):
        print(RESULTS[n])

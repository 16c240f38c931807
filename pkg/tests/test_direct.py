import numpy as np
import pytest
from numpy.testing import assert_allclose

from optstirap import direct
from optstirap.dynamics import ProblemSpec, TrajectoryTrace
from optstirap.errors import InputError

import oracles

REF_C1 = -0.081368
REF_C2 = 31.556


def test_zero_control_transfers_nothing():
    spec = ProblemSpec(0.1, 5.0)
    J, g, s = direct.objective_and_gradient(spec, np.zeros(50), return_states=True)
    assert J == 0
    assert np.max(np.abs(s - [0, 0, 1])) < 1e-15


def test_objective_matches_chained_expm(rng):
    spec = ProblemSpec(0.2, 6.0)
    u = rng.uniform(0, 1, 40)
    J, _ = direct.objective_and_gradient(spec, u)
    assert J == pytest.approx(oracles.zoh_population(u, 0.2, 6.0), abs=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 0.1, 0.3])
def test_gradient_matches_finite_differences(rng, gamma):
    spec = ProblemSpec(gamma, 5.0)
    for _ in range(3):
        u = rng.uniform(0, 1, 50)
        _, g = direct.objective_and_gradient(spec, u)
        fd = oracles.central_difference(lambda v: oracles.zoh_population(v, gamma, 5.0), u, 1e-6)
        assert np.max(np.abs(g - fd)) / np.max(np.abs(fd)) < 1e-5


def test_projection_matches_bisection(rng):
    for n, cap in [(50, 1.0), (400, 1.0), (30, 100.0)]:
        v = rng.normal(0.05, 0.5, n)
        dt = 20.0 / n
        p = direct.project(v, cap, np.pi / 2, dt)
        assert_allclose(p, oracles.capped_simplex_projection(v, cap, np.pi / 2, dt), atol=1e-12)
        assert p.sum() * dt == pytest.approx(np.pi / 2, abs=1e-12)
        assert p.min() >= 0 and p.max() <= cap


def test_projection_is_a_projection(rng):
    v = rng.normal(0.1, 0.3, 100)
    p = direct.project(v, 1.0, np.pi / 2, 0.2)
    assert_allclose(direct.project(p, 1.0, np.pi / 2, 0.2), p, atol=1e-14)
    # variational inequality against random feasible points
    for _ in range(20):
        w = direct.project(rng.normal(0.1, 0.3, 100), 1.0, np.pi / 2, 0.2)
        assert (v - p) @ (w - p) <= 1e-10


def test_projection_unreachable():
    with pytest.raises(InputError):
        direct.project(np.zeros(10), 0.1, np.pi / 2, 0.1)


def test_shooting_optimum_is_nearly_stationary(shooting_t20):
    spec = shooting_t20.spec
    n = 400
    dt = spec.duration / n
    tr = shooting_t20.trace
    keep = np.r_[True, np.diff(tr.times) > 0]
    theta = np.interp(np.linspace(0, spec.duration, n + 1), tr.times[keep], tr.theta[keep])
    u = direct.project(np.diff(theta) / dt, 1.0, np.pi / 2, dt)
    _, g = direct.objective_and_gradient(spec, u)
    pg = np.linalg.norm(direct.project(u + g, 1.0, np.pi / 2, dt) - u)
    assert pg < 1e-4


def test_reference_case(direct_t20):
    rep = direct_t20
    assert rep.status == "converged"
    assert rep.structure == "bang-off-singular-off-bang"
    assert rep.symmetry_defect < 1e-2
    assert rep.extra["objective_monotone"]
    u = rep.control
    # flat off segments on both sides of the interior arc
    runs = direct.nonzero_runs(u, 1e-3)
    assert len(runs) == 3
    assert u[runs[0][0]] == pytest.approx(1.0)
    assert abs(rep.c1 - REF_C1) < 0.1 * abs(REF_C1)
    assert abs(rep.c2 - REF_C2) < 0.1 * REF_C2
    assert rep.fit["feedback_rms"] < 1e-2
    assert rep.fit["surface_rms"] < 1e-3


def test_lossless_recovers_bang_off_bang():
    rep = direct.optimize(ProblemSpec(0.0, 2 * np.pi), 400)
    u = rep.control
    n = u.size
    assert np.max(u[n // 10: n - n // 10]) < 1e-3
    assert rep.population > 0.9999


def test_fit_flags_idle_segment():
    spec = ProblemSpec(0.1, 4.0)
    u = np.zeros(200)
    u[0] = np.pi / 4 / 0.02
    tr = direct.trace_from_control(spec, u)
    fit = direct.fit_singular_constants(tr, 0.1, window=(1.0, 3.0))
    assert fit.poor and fit.c1 is None


def test_fit_window_too_small(direct_t20):
    with pytest.raises(InputError):
        direct.fit_singular_constants(direct_t20.trace, 0.1, window=(10.0, 10.2))


def test_fit_lossless_skips_c2():
    # gamma = 0 arc on the plane y = c1 z: constant control 1/(2 c1)
    c1 = 0.4
    z0 = 1 / np.sqrt(1 + c1 ** 2)
    from optstirap.dynamics import BlochState
    from optstirap.schedule import ControlSchedule, SingularArc, run_schedule
    tr = run_schedule(ProblemSpec(0.0, 0.8), ControlSchedule([SingularArc(c1, 0.8)]),
                      initial=BlochState.darkbright(0.0, c1 * z0, z0))
    fit = direct.fit_singular_constants(tr, 0.0, window=(0.0, 0.8))
    assert fit.c2 is None and fit.surface_rms is None
    assert fit.c1 == pytest.approx(c1, rel=1e-6)


def test_resample_preserves_shape():
    c = direct.DiscretizedControl(np.linspace(0, 1, 10), 5.0)
    r = c.resample(20, 10.0)
    assert r.n == 20 and r.duration == 10.0
    assert r.u[0] == pytest.approx(0.0, abs=0.06) and r.u[-1] == pytest.approx(1.0, abs=0.06)


def test_structure_tags():
    assert direct.structure_tag(np.r_[1, 1, 0, 0, 1, 1], 0.1)[0] == "bang-off-bang"
    tag, ts = direct.structure_tag(np.r_[1, 0, 0.2, 0.3, 0, 1], 0.1)
    assert tag == "bang-off-singular-off-bang" and ts == pytest.approx(0.2)


def test_sweep_lossless_row():
    res = direct.efficiency_sweep([0.0], [8.0, 10.0, 12.0])
    assert np.all(np.abs(res.population - 1) < 1e-6)


def test_sweep_long_horizon_trend():
    res = direct.efficiency_sweep([0.1], [20.0, 40.0], solver="shooting")
    assert res.population[0, 1] > res.population[0, 0]


def test_sweep_single_cell_and_errors():
    res = direct.efficiency_sweep([0.1], [8.0])
    assert res.population.shape == (1, 1)
    assert len(list(res.rows())) == 1
    with pytest.raises(InputError):
        direct.efficiency_sweep([], [8.0])

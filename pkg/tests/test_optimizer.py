import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spiralcap.capacitor import CapacitorConfig
from spiralcap.errors import ConfigError, OptimizationError
from spiralcap.optimizer import SensitivityObjective, nelder_mead, optimize_sensitivity


def quad(x):
    return (x[0] - 1.0) ** 2 + (x[1] - 2.0) ** 2


def test_quadratic_minimum():
    res = nelder_mead(quad, [[0, 0], [0.5, 0], [0, 0.5]], tol_x=1e-6, tol_f=1e-12)
    assert res.converged
    assert np.allclose(res.x, [1.0, 2.0], atol=1e-2)


def test_constant_objective_stops_immediately():
    res = nelder_mead(lambda x: 3.0, [[0, 0], [1, 0], [0, 1]])
    assert res.converged and res.reason == "tol_f" and res.iterations == 0
    assert res.n_evaluations == 3


def test_minimum_at_initial_vertex():
    simplex = [[1.0, 2.0], [1.5, 2.0], [1.0, 2.5]]
    res = nelder_mead(quad, simplex)
    assert res.fun <= 0.0


def test_max_iter_and_tol_x():
    res = nelder_mead(quad, [[0, 0], [0.5, 0], [0, 0.5]], tol_x=0, tol_f=0, max_iter=5)
    assert not res.converged and res.reason == "max_iter" and res.iterations == 5
    res = nelder_mead(quad, [[0, 0], [0.5, 0], [0, 0.5]], tol_x=1e-2, tol_f=0)
    assert res.reason == "tol_x"


def test_degenerate_simplex():
    with pytest.raises(ConfigError):
        nelder_mead(quad, [[0, 0], [1, 1], [2, 2]])
    with pytest.raises(ConfigError):
        nelder_mead(quad, [[0, 0], [1, 1]])


@settings(max_examples=40, deadline=None)
@given(cx=st.floats(-3, 3), cy=st.floats(-3, 3), a=st.floats(0.2, 5), b=st.floats(0.2, 5))
def test_best_is_monotone_and_finds_minimum(cx, cy, a, b):
    f = lambda x: a * (x[0] - cx) ** 2 + b * (x[1] - cy) ** 2
    # tol_f = 0: a symmetric simplex can tie all vertex values away from the minimum
    res = nelder_mead(f, [[0, 0], [1, 0], [0, 1]], tol_x=1e-8, tol_f=0.0, max_iter=500)
    hist = res.best_history
    assert all(y <= x for x, y in zip(hist, hist[1:]))
    assert res.fun < 1e-6


def test_deterministic_sequence():
    seen = [[], []]
    for out in seen:
        nelder_mead(lambda x: (out.append(tuple(x)), quad(x))[1], [[0, 0], [0.5, 0], [0, 0.5]])
    assert seen[0] == seen[1]


def test_guard_never_solves():
    obj = SensitivityObjective(CapacitorConfig())
    assert obj([1.0, 0.01]) == 0.0
    assert obj([1.0, 0.02]) == 0.0
    assert obj([-0.5, 0.3]) == 0.0
    assert obj([1.0, 3.5]) == 0.0  # cross-section angle above pi
    assert obj.solves == 0
    assert all(e.error == "guard" for e in obj.evaluations)


def test_all_guarded_raises():
    with pytest.raises(OptimizationError):
        optimize_sensitivity(CapacitorConfig(), [[0.5, 0.005], [1.0, 0.005], [0.7, 0.01]])


@pytest.fixture(scope="module")
def short_runs(coarse_geometry):
    base = CapacitorConfig(mesh=coarse_geometry)
    return [optimize_sensitivity(base, max_iter=3) for _ in range(2)]


def test_optimizer_deterministic_and_audited(short_runs):
    a, b = short_runs
    assert a.as_dict() == b.as_dict()
    assert a.iterations == 3
    assert len(a.evaluations) >= 4
    assert a.sensitivity_star == max(e.sensitivity for e in a.evaluations)
    omega = 2 * math.pi * a.nu_star
    assert a.d_star_along_stripe == pytest.approx(a.d_star_cross_section / math.sqrt(1 + omega ** 2))


def test_cache_avoids_repeat_solves(coarse_geometry):
    obj = SensitivityObjective(CapacitorConfig(mesh=coarse_geometry))
    first = obj([0.5, 0.3])
    assert obj([0.5 + 1e-12, 0.3]) == first
    assert obj.solves == 1

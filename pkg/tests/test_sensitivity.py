import numpy as np
import pytest

from wallsens import Grid, run, validation_case
from wallsens.envelope import GlassSpec, glass_grid, glass_problem
from wallsens.oracle import eps2, reference_sensitivity
from wallsens.sensitivity import (output_sensitivities, propagate, propagate_first_order,
                                  propagate_second_order, sensitivity_outputs)
from wallsens.solver import BOUNDARY_SCHEMES, FLUX_STENCILS
from wallsens.wall import Signal

GRID = Grid(0.05, 5e-3, 1.0)


def _central(problem, grid, i, h=1e-5, **kw):
    th = problem.theta()
    rows = np.array([th, th])
    rows[0, i] += h
    rows[1, i] -= h
    r = run(problem, grid, rows, save_every=1, **kw)
    return r, lambda a: (a[0] - a[1]) / (2 * h)


@pytest.mark.parametrize("boundary", BOUNDARY_SCHEMES)
@pytest.mark.parametrize("param, i", [("k1", 0), ("k2", 1), ("c1", 2), ("c2", 3)])
def test_tangent_march_differentiates_the_scheme(problem, boundary, param, i):
    sol = run(problem, GRID, params=[param], save_every=1, boundary=boundary)
    r, d = _central(problem, GRID, i, boundary=boundary)
    np.testing.assert_allclose(sol.X[0, 0], d(r.u), atol=2e-8)
    np.testing.assert_allclose(sol.dE[0, 0], d(r.E), atol=2e-8)
    np.testing.assert_allclose(sol.dj[0, 0], d(r.j), atol=5e-8)


@pytest.mark.parametrize("stencil", FLUX_STENCILS)
def test_second_order_differentiates_first_order(problem, stencil):
    sol = run(problem, GRID, params=["k1", "k2"], pairs=[(0, 1), (1, 1)], save_every=1, flux_stencil=stencil)
    th = problem.theta()
    h = 1e-5
    for col, i in ((0, 0), (1, 1)):
        rows = np.array([th, th])
        rows[0, i] += h
        rows[1, i] -= h
        r = run(problem, GRID, rows, params=["k2"], save_every=1, flux_stencil=stencil)
        np.testing.assert_allclose(sol.Y[0, col], (r.X[0, 0] - r.X[1, 0]) / (2 * h), atol=1e-10)
        np.testing.assert_allclose(sol.d2E[0, col], (r.dE[0, 0] - r.dE[1, 0]) / (2 * h), atol=1e-10)


@pytest.mark.parametrize("pair", [("k1", "c2"), ("k2", "c1"), ("c1", "c2")])
def test_mixed_partials_symmetric(problem, pair):
    p, q = pair
    a = propagate(problem, GRID, [p, q], pairs=[(p, q)])
    b = propagate(problem, GRID, [q, p], pairs=[(q, p)])
    diff = np.abs(a.X(p, q) - b.X(q, p)).max()
    assert diff <= 1e-12
    assert np.abs(a.X(p, q)).max() > 1e-6


def test_glass_optical_parameters():
    gl = glass_problem(GlassSpec(), 280.0, 293.0, Signal.sampled([0, 36000], [0, 500]))
    gg = glass_grid(10.0, 5e-3)
    sol = run(gl, gg, params=["tau", "rho"], pairs=[(0, 1)], save_every=1)
    for col, i in ((0, 2), (1, 3)):
        r, d = _central(gl, gg, i)
        np.testing.assert_allclose(sol.X[0, col], d(r.u), atol=1e-8)
        assert np.abs(sol.X[0, col]).max() > 1e-5
    # more transmission leaves less to absorb; the pane runs cooler
    assert sol.X[0, 0, -1].mean() < 0


def test_field_api(problem):
    f = propagate_second_order(problem, GRID, "k1", "c2")
    assert f.X("c2", "k1") is f.X("k1", "c2")
    assert set(f.first) == {f_ for f_ in f.first}
    g = propagate_first_order(problem, GRID, "k1")
    np.testing.assert_array_equal(g.X("k1"), f.X("k1"))
    with pytest.raises(ValueError):
        g.X("k1", "k2")


@pytest.mark.parametrize("stencil", FLUX_STENCILS)
def test_stored_and_streamed_outputs_agree(problem, stencil):
    f = propagate_second_order(problem, GRID, "k2", "c2", flux_stencil=stencil)
    a = output_sensitivities(f, problem, GRID, "k2", "c2", edges=[0, 0.5, 1], flux_stencil=stencil)
    b = sensitivity_outputs(problem, GRID, ["k2", "c2"], pairs=[("k2", "c2")], edges=[0, 0.5, 1],
                            flux_stencil=stencil)
    for key in a.dE:
        np.testing.assert_allclose(a.dE[key], b.dE[key], atol=1e-13)
    for key in a.d2E:
        np.testing.assert_allclose(a.d2E[key], b.d2E[key], atol=1e-13)
    np.testing.assert_allclose(a.E, b.E, atol=1e-13)


def test_output_sensitivities_need_every_level(problem):
    f = propagate(problem, GRID, ["k1"], save_every=2)
    with pytest.raises(ValueError):
        output_sensitivities(f, problem, GRID, "k1")


def test_continuous_sensitivity_against_oracle():
    problem = validation_case()
    g = Grid(0.01, 1e-3, 3.0)
    X = propagate_first_order(problem, g, "k1").X("k1")
    assert eps2(X, reference_sensitivity(problem, g, "k1")).max() < 1e-2

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wallsens.errors import InputError
from wallsens.fd import ORDER, FdScheme, evaluation_count, fd_sensitivity, stencil_points


def model(p):
    p = np.atleast_2d(p)
    return np.exp(0.7 * p[:, 0]) * np.sin(p[:, 1]) + p[:, 0] ** 3


def dmodel(p):
    return 0.7 * np.exp(0.7 * p[0]) * np.sin(p[1]) + 3 * p[0] ** 2


@pytest.mark.parametrize("kind", ["forward", "backward", "central", "three_point_backward"])
def test_observed_order(kind):
    p0 = np.array([0.4, 1.1])
    errs = [abs(fd_sensitivity(model, p0, FdScheme(kind, h), 0, batched=True).value - dmodel(p0))
            for h in (1e-2, 5e-3)]
    assert np.log2(errs[0] / errs[1]) == pytest.approx(ORDER[kind], abs=0.15)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(1e-3, 0.5))
def test_schemes_exact_on_quadratics(a, b, h):
    f = lambda p: a * p[0] ** 2 + b * p[0] * p[1] + p[1]
    p0 = [0.3, -0.2]
    for kind in ("central", "three_point_backward"):
        assert fd_sensitivity(f, p0, FdScheme(kind, h), 0).value == pytest.approx(2 * a * 0.3 - 0.2 * b, abs=1e-8)
    assert fd_sensitivity(f, p0, FdScheme("second_central", h), 0).value == pytest.approx(2 * a, abs=1e-6)
    assert fd_sensitivity(f, p0, FdScheme("mixed_central", h), [0, 1]).value == pytest.approx(b, abs=1e-6)


def test_batched_and_pointwise_agree():
    p0 = [0.2, 0.9]
    a = fd_sensitivity(lambda v: model(v)[0], p0, FdScheme("central", 1e-3), 1)
    b = fd_sensitivity(model, p0, FdScheme("central", 1e-3), 1, batched=True)
    assert a.value == pytest.approx(b.value, abs=1e-12)
    assert a.evaluations == 2


def test_array_outputs():
    f = lambda p: np.outer(np.arange(3), np.arange(4)) * p[0] ** 2
    r = fd_sensitivity(f, [1.5], FdScheme("central", 1e-3))
    np.testing.assert_allclose(r.value, np.outer(np.arange(3), np.arange(4)) * 3.0, atol=1e-9)


def test_stencil_points_offsets():
    pts, w = stencil_points(FdScheme("three_point_backward", 0.1), [1.0, 2.0], [1])
    np.testing.assert_allclose(pts, [[1.0, 2.0], [1.0, 1.9], [1.0, 1.8]])
    np.testing.assert_allclose(w, [3, -4, 1])


def test_domain_guard():
    with pytest.raises(InputError, match="admissible"):
        fd_sensitivity(model, [0.001, 1.0], FdScheme("central", 0.01), 0, domain=[(0.0, 1.0), (0.0, 2.0)])


@pytest.mark.parametrize("scheme, n, expected", [
    ("forward", 1, 2), ("forward", 3, 4), ("central", 2, 4), ("three_point_backward", 2, 5),
    ("mixed_central", 2, 4), ("hessian", 2, 9), ("hessian", 3, 19)])
def test_evaluation_count(scheme, n, expected):
    assert evaluation_count(scheme, n) == expected


@pytest.mark.parametrize("kw", [dict(kind="upwind"), dict(kind="central", step=0.0), dict(kind="mixed_central", step=(1e-3, -1.0))])
def test_scheme_rejects(kw):
    with pytest.raises(InputError):
        FdScheme(**kw)


def test_mixed_needs_two_axes():
    with pytest.raises(InputError):
        fd_sensitivity(model, [0.1, 0.2], FdScheme("mixed_central"), 0)

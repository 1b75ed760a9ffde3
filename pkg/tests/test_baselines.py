import numpy as np
import pytest
from hypothesis import given, strategies as st

from wallsens.baselines import (ISHIGAMI_DOMAINS, SampleDesign, evaluate_rows, ishigami, ishigami_indices, lhs,
                                rbd_design, rbd_fast, saltelli_matrices, sobol_indices, sobol_points, src_srrc)
from wallsens.errors import InputError

BOX = [(0.0, 1.0), (2.0, 4.0)]


@given(st.integers(2, 60), st.integers(0, 10**6))
def test_lhs_one_point_per_stratum(n, seed):
    X = lhs(n, BOX, seed)
    for j, (lo, hi) in enumerate(BOX):
        bins = np.floor((X[:, j] - lo) / (hi - lo) * n).astype(int)
        assert sorted(bins) == list(range(n))


def test_designs_are_seeded():
    np.testing.assert_array_equal(lhs(16, BOX, 3), lhs(16, BOX, 3))
    assert not np.array_equal(lhs(16, BOX, 3), lhs(16, BOX, 4))
    np.testing.assert_array_equal(sobol_points(8, BOX, 5), SampleDesign("sobol_sequence", 8, tuple(BOX), 5).sample())
    np.testing.assert_array_equal(lhs(8, BOX, 5), SampleDesign("latin_hypercube", 8, tuple(BOX), 5).sample())


def test_unscrambled_sobol_prefix():
    X = sobol_points(4, [(0, 1), (0, 1)], scramble=False)
    np.testing.assert_allclose(X, [[0, 0], [0.5, 0.5], [0.75, 0.25], [0.25, 0.75]])


@pytest.mark.parametrize("bad", [dict(kind="grid"), dict(n_samples=0), dict(domains=((1.0, 1.0),))])
def test_design_rejects(bad):
    with pytest.raises(InputError):
        SampleDesign(**{"kind": "latin_hypercube", "n_samples": 4, "domains": ((0.0, 1.0),), **bad})


def test_saltelli_columns():
    A, B, AB = saltelli_matrices(8, BOX, 0)
    for i in range(2):
        np.testing.assert_array_equal(AB[i][:, i], B[:, i])
        np.testing.assert_array_equal(np.delete(AB[i], i, axis=1), np.delete(A, i, axis=1))


@given(st.floats(-5, 5), st.floats(-5, 5).filter(lambda b: abs(b) > 0.1))
def test_src_exact_on_linear_model(a, b):
    X = lhs(40, BOX, 1)
    y = 1.0 + a * X[:, 0] + b * X[:, 1]
    r = src_srrc(X, y)
    sd = X.std(axis=0)
    expected = np.array([a, b]) * sd / y.std()
    np.testing.assert_allclose(r.src, expected, atol=1e-10)
    assert r.r2 == pytest.approx(1.0)
    assert r.src_normalized.sum() == pytest.approx(1.0)


def test_srrc_sees_monotone_transform():
    X = lhs(200, BOX, 2)
    lin = X[:, 0] + 0.5 * X[:, 1]
    a, b = src_srrc(X, np.exp(5 * lin)), src_srrc(X, lin)
    assert a.r2_rank > a.r2
    np.testing.assert_allclose(a.srrc, b.srrc, atol=1e-12)


@pytest.mark.parametrize("X, y", [(np.ones((5, 2)), np.arange(5.0)), (np.random.default_rng(0).random((3, 2)), np.ones(3))])
def test_src_rejects(X, y):
    with pytest.raises(InputError):
        src_srrc(X, y)


def test_ishigami_indices_closed_form():
    S1, ST = ishigami_indices()
    assert S1 == pytest.approx([0.3139, 0.4424, 0.0], abs=1e-4)
    assert ST == pytest.approx([0.5576, 0.4424, 0.2437], abs=1e-4)


@pytest.mark.parametrize("seed", [1, 2])
def test_sobol_recovers_ishigami(seed):
    r = sobol_indices(ishigami, 8192, ISHIGAMI_DOMAINS, seed)
    S1, ST = ishigami_indices()
    np.testing.assert_allclose(r.first, S1, atol=0.03)
    np.testing.assert_allclose(r.total, ST, atol=0.03)
    assert r.evaluations == 5 * 8192
    assert r.estimators == {"first": "Janon", "total": "Jansen"}


def test_sobol_additive_model_and_dtot():
    f = lambda X: 2 * X[:, 0] + X[:, 1]
    r = sobol_indices(f, 4096, [(0, 1), (0, 1)], 0)
    np.testing.assert_allclose(r.first, [0.8, 0.2], atol=0.01)
    np.testing.assert_allclose(r.total, [0.8, 0.2], atol=0.01)
    np.testing.assert_allclose(r.d_total, [4 / 12, 1 / 12], rtol=0.02)
    assert np.all(r.first_clamped >= 0)


def test_sobol_rejects_constant_and_bad_model():
    with pytest.raises(InputError, match="variance"):
        sobol_indices(lambda X: np.ones(len(X)), 64, BOX)
    with pytest.raises(InputError):
        sobol_indices(lambda X: np.ones(3), 64, BOX)


def test_rbd_design_curve():
    X, perms = rbd_design(64, [(0, 1)], seed=0)
    assert X.min() >= 0 and X.max() <= 1
    assert sorted(perms[:, 0]) == list(range(64))


def test_rbd_fast_additive():
    f = lambda X: X[:, 0] + X[:, 1]
    r = rbd_fast(f, 1000, [(0, 1), (0, 1)], seed=3)
    np.testing.assert_allclose(r.first, [0.5, 0.5], atol=0.05)


def test_rbd_fast_ishigami_first_order():
    S1, _ = ishigami_indices()
    r = rbd_fast(ishigami, 4000, ISHIGAMI_DOMAINS, harmonics=10, seed=0)
    np.testing.assert_allclose(r.first, S1, atol=0.05)


def test_rbd_fast_sample_floor():
    with pytest.raises(InputError, match="n >= 25"):
        rbd_fast(ishigami, 24, ISHIGAMI_DOMAINS)


def test_seeded_estimators_are_deterministic():
    a = sobol_indices(ishigami, 256, ISHIGAMI_DOMAINS, 7)
    b = sobol_indices(ishigami, 256, ISHIGAMI_DOMAINS, 7)
    np.testing.assert_array_equal(a.first, b.first)
    np.testing.assert_array_equal(rbd_fast(ishigami, 200, ISHIGAMI_DOMAINS, seed=4).first,
                                  rbd_fast(ishigami, 200, ISHIGAMI_DOMAINS, seed=4).first)


def test_evaluate_rows():
    np.testing.assert_allclose(evaluate_rows(lambda x: x.sum(), [[1, 2], [3, 4]]), [3, 7])

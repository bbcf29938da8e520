import numpy as np
import pytest
from conftest import random_buffer, rel_inf

from qnspectrum import (
    CurvatureError,
    DimensionError,
    PairBuffer,
    SkippedUpdateWarning,
    UpdateFamily,
    build_compact,
    eigenvalues,
    qr_from_scratch,
    relative_error,
)
from qnspectrum.oracle import (
    CharPoly1,
    appendix_matrix,
    appendix_spectrum,
    bfgs_step,
    broyden_step,
    dense_build,
    dense_eigenvalues,
    dfp_step,
)


@pytest.fixture
def one_pair():
    buf = PairBuffer(2)
    buf.push([1.0, 0.0], [2.0, 0.0])
    return buf


@pytest.mark.parametrize("family", [UpdateFamily.bfgs(), UpdateFamily.dfp(), UpdateFamily.broyden(0.5)],
                         ids=str)
def test_collinear_pair_gives_diag(one_pair, family):
    np.testing.assert_allclose(dense_build(one_pair, 1.0, family), np.diag([2.0, 1.0]), atol=1e-15)


def test_zero_pairs_is_scaled_identity():
    np.testing.assert_array_equal(dense_build(PairBuffer(3), 2.5, UpdateFamily.sr1()), 2.5 * np.eye(3))


def test_dense_eigenvalues_examples(rng):
    np.testing.assert_array_equal(dense_eigenvalues(np.diag([2.0, 1.0])), [1.0, 2.0])
    np.testing.assert_allclose(dense_eigenvalues(3.0 * np.eye(5)), [3.0] * 5, rtol=1e-15)
    X = rng.standard_normal((20, 20))
    B = X + X.T
    total = dense_eigenvalues(B).sum()
    assert abs(total - np.trace(B)) <= 1e-11 * np.linalg.norm(B, 2) * 20


def test_curvature_violation():
    buf = PairBuffer(2)
    buf.push([1.0, 0.0], [-1.0, 0.5])
    with pytest.raises(CurvatureError):
        dense_build(buf, 1.0, UpdateFamily.dfp())


def test_size_guard():
    with pytest.raises(DimensionError):
        dense_build(PairBuffer(5001), 1.0, UpdateFamily.bfgs())


def test_sr1_skip_warns():
    buf = PairBuffer(3)
    buf.push([1.0, 2.0, 0.0], [2.0, 4.0, 0.0])
    with pytest.warns(SkippedUpdateWarning):
        B = dense_build(buf, 2.0, UpdateFamily.sr1())
    np.testing.assert_array_equal(B, 2.0 * np.eye(3))


def test_updates_are_symmetric_and_secant(rng):
    n = 10
    X = rng.standard_normal((n, n))
    B = X @ X.T + np.eye(n)
    s = rng.uniform(-1, 1, n)
    y = B @ s + 0.2 * rng.uniform(-1, 1, n)
    for B1 in (bfgs_step(B, s, y), dfp_step(B, s, y), broyden_step(B, s, y, 0.4)):
        assert np.array_equal(B1, B1.T)
        assert np.linalg.norm(B1 @ s - y) <= 1e-12 * np.linalg.norm(B1, 2) * np.linalg.norm(s)


def test_dense_broyden_is_convex_combination_per_step(rng):
    phi = 0.35
    buf = random_buffer(rng, 12, 4, UpdateFamily.broyden(phi))
    B = 3.0 * np.eye(12)
    for p in buf:
        mixed = (1 - phi) * bfgs_step(B, p.s, p.y) + phi * dfp_step(B, p.s, p.y)
        B = broyden_step(B, p.s, p.y, phi)
        assert rel_inf(B, mixed) <= 1e-12
    assert rel_inf(dense_build(buf, 3.0, UpdateFamily.broyden(phi)), B) <= 1e-15


def test_single_update_examples():
    np.testing.assert_allclose(appendix_spectrum([1.0, 0.0], [2.0, 0.0], 4), [2.0] * 4, rtol=1e-15)
    poly = CharPoly1.from_pair([1.0, 0.0], [2.0, 0.0])
    assert poly.theta == 0.5
    assert poly.quad_coeffs == (1.0, -4.0, 4.0)
    s = np.array([0.3, -1.2, 0.7])
    np.testing.assert_allclose(appendix_spectrum(s, s), [1.0] * 3, rtol=1e-15)


def test_single_update_polynomial_vanishes_at_roots(rng):
    s = rng.uniform(-1, 1, 6)
    y = rng.uniform(-1, 1, 6)
    y *= np.sign(s @ y)
    poly = CharPoly1.from_pair(s, y)
    for lam in poly.quadratic_roots():
        _, b, c = poly.quad_coeffs
        assert abs(lam * lam + b * lam + c) <= 1e-12 * (lam * lam + abs(b * lam) + c)


def test_single_update_errors():
    with pytest.raises(CurvatureError):
        appendix_spectrum([1.0, 0.0], [-1.0, 0.0])
    with pytest.raises(DimensionError):
        appendix_spectrum([1.0], [1.0])


def test_single_update_against_dense_and_compact(rng):
    for _ in range(20):
        n = int(rng.integers(2, 51))
        s = rng.uniform(-1, 1, n)
        y = rng.uniform(-1, 1, n)
        y *= np.sign(s @ y)
        vals = appendix_spectrum(s, y, n)
        assert relative_error(vals, dense_eigenvalues(appendix_matrix(s, y))) <= 1e-12
        buf = PairBuffer(n, 1)
        buf.push(s, y)
        gamma = (s @ y) / (s @ s)
        form = build_compact(buf, gamma, UpdateFamily.bfgs())
        spec = eigenvalues(form, qr_from_scratch(form.psi_hat(buf)), n)
        assert relative_error(vals, spec.values()) <= 1e-12


def test_single_update_matrix_is_bfgs_step(rng):
    s = rng.uniform(-1, 1, 7)
    y = rng.uniform(-1, 1, 7)
    y *= np.sign(s @ y)
    B0 = (s @ y) / (s @ s) * np.eye(7)
    assert rel_inf(appendix_matrix(s, y), bfgs_step(B0, s, y)) <= 1e-14

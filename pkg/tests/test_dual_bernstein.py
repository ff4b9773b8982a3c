import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from bernmodal import dual_bernstein
from bernmodal.bernstein import BernsteinForm, derivative, eval_form, gauss_legendre_01, mass_matrix
from bernmodal.dual_bernstein import (
    alpha0,
    dual_coeffs,
    dual_coeffs_exact,
    dual_derivative,
    dual_endpoint_derivative,
    dual_form,
    dual_values,
)
from bernmodal.exceptions import DegreeRangeError


def exact_mass(N):
    return [[Fraction(comb(N, i) * comb(N, j), (2 * N + 1) * comb(2 * N, i + j)) for j in range(N + 1)]
            for i in range(N + 1)]


def test_degree_one_matrix():
    np.testing.assert_array_equal(dual_coeffs(1).entries, [[4.0, -2.0], [-2.0, 4.0]])


def test_degree_one_biorthogonal_by_quadrature():
    r = gauss_legendre_01(4)
    x = r.nodes
    psi0 = 4 * (1 - x) - 2 * x
    assert r.integrate((1 - x) * psi0) == pytest.approx(1.0, abs=1e-15)
    assert r.integrate(x * psi0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("N", range(0, 17))
def test_biorthogonality(N):
    C = dual_coeffs(N).entries
    err = np.abs(mass_matrix(N) @ C.T - np.eye(N + 1)).max()
    assert err <= 1e-9 * np.abs(C).max()


@pytest.mark.parametrize("N", range(0, 13))
def test_biorthogonality_exact(N):
    M = exact_mass(N)
    C = dual_coeffs_exact(N)
    for i in range(N + 1):
        for j in range(N + 1):
            assert sum(M[i][k] * C[j][k] for k in range(N + 1)) == (1 if i == j else 0)


@pytest.mark.parametrize("N", range(0, 21))
def test_row_and_column_sums_exact(N):
    exact = dual_coeffs_exact(N)
    assert all(sum(row) == N + 1 for row in exact)
    assert all(sum(col) == N + 1 for col in zip(*exact))


@pytest.mark.parametrize("N", range(0, 9))
def test_row_sums_of_rounded_matrix_small_degree(N):
    C = dual_coeffs(N).entries
    np.testing.assert_allclose([math.fsum(r) for r in C], N + 1, rtol=1e-12)


@pytest.mark.parametrize("N", range(0, 21))
def test_row_sums_of_rounded_matrix_within_storage_error(N):
    # each stored entry is off by up to half an ulp, so that is the best any double matrix can do
    C = dual_coeffs(N).entries
    bound = np.finfo(float).eps * np.abs(C).sum(axis=1)
    assert np.all(np.abs([math.fsum(r) - (N + 1) for r in C]) <= bound)


@pytest.mark.parametrize("N", range(0, 21))
def test_bisymmetry_exact(N):
    C = dual_coeffs(N).entries
    np.testing.assert_array_equal(C, C.T)
    np.testing.assert_array_equal(C, C[::-1, ::-1])
    assert C[0, 0] == C[N, N]


def test_row_accessor_and_range():
    m = dual_coeffs(3)
    np.testing.assert_array_equal(m.row(1), m.entries[1])
    with pytest.raises(IndexError):
        m.row(4)
    assert m.exact() == dual_coeffs_exact(3)


def test_overflow_is_reported(monkeypatch):
    huge = Fraction(10**400)
    monkeypatch.setattr(dual_bernstein, "dual_coeffs_exact", lambda N: ((huge,),))
    dual_bernstein.dual_coeffs.cache_clear()
    try:
        with pytest.raises(DegreeRangeError, match="N=0"):
            dual_bernstein.dual_coeffs(0)
    finally:
        dual_bernstein.dual_coeffs.cache_clear()


def test_dual_form_degree_one():
    np.testing.assert_array_equal(dual_form(1, 0).coeffs, [4.0, -2.0])
    with pytest.raises(IndexError):
        dual_form(1, 2)


@pytest.mark.parametrize("N", [1, 4, 9, 14])
def test_dual_integrals_are_one(N):
    for i in range(N + 1):
        c = dual_form(N, i).coeffs
        tol = np.finfo(float).eps * np.abs(c).sum() / (N + 1)
        assert dual_form(N, i).integral() == pytest.approx(1.0, abs=max(tol, 1e-14))


@pytest.mark.parametrize("N", [1, 5, 10])
def test_dual_pointwise_sum(N):
    x = np.linspace(0, 1, 11)
    total = sum(eval_form(dual_form(N, i), x) for i in range(N + 1))
    np.testing.assert_allclose(total, N + 1, atol=1e-9 * np.abs(dual_coeffs(N).entries).max())


@pytest.mark.parametrize("N", [2, 7, 12, 16])
def test_reflection_symmetry(N):
    rng = np.random.default_rng(N)
    x = rng.random(25)
    scale = np.abs(dual_coeffs(N).entries).max()
    for i in range(N + 1):
        left = eval_form(dual_form(N, N - i), x)
        right = eval_form(dual_form(N, i), 1 - x)
        assert np.abs(left - right).max() <= 1e-9 * scale


@pytest.mark.parametrize("N", [3, 10, 20])
def test_legendre_evaluation_matches_bernstein_form(N):
    x = np.linspace(0, 1, 15)
    C = dual_coeffs(N).entries
    ref = np.array([[float(sum(Fraction(v) * Fraction(comb(N, k)) * Fraction(xx) ** k * (1 - Fraction(xx)) ** (N - k)
                                for k, v in enumerate(dual_coeffs_exact(N)[i]))) for i in range(N + 1)] for xx in x])
    np.testing.assert_allclose(dual_values(N, x), ref, atol=1e-11 * np.abs(ref).max())


# alpha0

def test_alpha0_examples():
    assert alpha0(1, 0) == -3
    assert alpha0(1, 1) == 3


@pytest.mark.parametrize("N", [1, 2, 5, 11])
def test_alpha0_first_index(N):
    assert alpha0(N, 0) == -((N + 1) ** 2) + N


def test_alpha0_range():
    with pytest.raises(IndexError):
        alpha0(3, -1)


# dual_derivative

def test_degree_one_stencil():
    s = dual_derivative(1, 0)
    np.testing.assert_array_equal(s.vector(), [-3.0, -3.0])
    np.testing.assert_allclose(s.as_form().coeffs, [-6.0, -6.0])


@pytest.mark.parametrize("N", range(1, 17))
def test_stencil_matches_direct_differentiation(N):
    for i in range(N + 1):
        direct = derivative(dual_form(N, i)).coeffs
        via = dual_derivative(N, i).as_form().coeffs
        np.testing.assert_allclose(via, direct, rtol=1e-10, atol=1e-10 * np.abs(direct).max())


@pytest.mark.parametrize("N", range(1, 25))
def test_stencil_matches_exact_differentiation(N):
    C = dual_coeffs_exact(N)
    for i in range(N + 1):
        v = dual_derivative(N, i).vector()
        # derivative of dual_i in Bernstein form, exact: (N) * differences, degree raised back
        d = [N * (C[i][k + 1] - C[i][k]) for k in range(N)]
        raised = [Fraction(0)] * (N + 1)
        for k, dk in enumerate(d):
            raised[k] += dk * Fraction(N - k, N)
            raised[k + 1] += dk * Fraction(k + 1, N)
        via = [sum(Fraction(v[r]) * C[r][k] for r in range(N + 1)) for k in range(N + 1)]
        assert via == raised


@pytest.mark.parametrize("N", [2, 6, 13])
def test_stencil_reflection(N):
    for i in range(N + 1):
        a = dual_derivative(N, i).vector()
        b = dual_derivative(N, N - i).vector()
        np.testing.assert_array_equal(a, -b[::-1])


@pytest.mark.parametrize("N", [1, 4, 9])
def test_derivative_of_dual_sum_vanishes(N):
    total = sum(dual_derivative(N, i).vector() for i in range(N + 1))
    np.testing.assert_array_equal(total, 0.0)


@pytest.mark.parametrize("N", [3, 8])
def test_stencil_matches_finite_differences(N):
    x = np.linspace(0.1, 0.9, 9)
    h = 1e-5
    for i in range(N + 1):
        f = dual_form(N, i)
        fd = (eval_form(f, x + h) - eval_form(f, x - h)) / (2 * h)
        val = eval_form(dual_derivative(N, i).as_form(), x)
        np.testing.assert_allclose(val, fd, rtol=1e-7, atol=1e-7 * np.abs(fd).max())


# dual_endpoint_derivative

def test_endpoint_examples():
    assert dual_endpoint_derivative(1, 0, 0, 0) == 4.0
    assert dual_endpoint_derivative(1, 0, 1, 0) == -6.0


@pytest.mark.parametrize("N", [2, 5, 9])
def test_endpoint_value_is_first_coefficient(N):
    C = dual_coeffs(N).entries
    for i in range(N + 1):
        assert dual_endpoint_derivative(N, i, 0, 0) == C[i, 0]
        assert dual_endpoint_derivative(N, i, 0, 1) == C[i, N]


@pytest.mark.parametrize("N", [3, 7, 12])
def test_endpoint_derivatives_match_repeated_differentiation(N):
    for i in range(N + 1):
        for p in range(min(N, 5) + 1):
            d = derivative(dual_form(N, i), p).coeffs
            scale = np.abs(d).max() + 1
            assert dual_endpoint_derivative(N, i, p, 0) == pytest.approx(d[0], rel=1e-9, abs=1e-9 * scale)
            assert dual_endpoint_derivative(N, i, p, 1) == pytest.approx(d[-1], rel=1e-9, abs=1e-9 * scale)


def test_endpoint_rejects_high_order():
    with pytest.raises(ValueError):
        dual_endpoint_derivative(2, 0, 3, 0)

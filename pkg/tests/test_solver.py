import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bernmodal import solver as solver_module
from bernmodal.assembly import BandedMatrix, OperatorSpec, operator_matrix, psi_moments, q_matrix
from bernmodal.bernstein import default_quad_points, gauss_legendre_01
from bernmodal.driver import error_linf
from bernmodal.exceptions import SingularSystemError
from bernmodal.modal import modal_basis
from bernmodal.problem import Problem, example1, example2
from bernmodal.solver import BernsteinPetrovGalerkin


def test_first_example_reference_cell():
    p = example1(0.5)
    est = BernsteinPetrovGalerkin(degree=8, n_steps=100).fit(p)
    assert error_linf(p.exact, est, 1.0) == pytest.approx(1.34e-4, rel=0.1)


def test_second_example_smallest_degree():
    p = example2(0.25)
    est = BernsteinPetrovGalerkin(degree=6, n_steps=100).fit(p)
    assert error_linf(p.exact, est, 1.0) == pytest.approx(1.05e-2, rel=0.15)


def test_zero_data_gives_zero_solution():
    p = Problem(0.5, OperatorSpec((0.0, -1.0, 1.0)), lambda x: 0.0 * x, lambda x, t: 0.0 * x)
    est = BernsteinPetrovGalerkin(degree=10, n_steps=20).fit(p)
    assert np.all(est.coef_ == 0.0)
    assert np.all(est.predict(np.linspace(0, 1, 7)) == 0.0)


def test_steady_state_in_trial_space():
    # u = x(1-x) is a trial function; with s = -(u'' - u') it is a fixed point of every step
    p = Problem.from_exact(1.0, (0.0, -1.0, 1.0), "x*(1-x)", source="3 - 2*x")
    est = BernsteinPetrovGalerkin(degree=6, n_steps=400).fit(p)
    assert error_linf(p.exact, est, 1.0) <= 1e-10


def test_constant_coefficients_factorize_once():
    est = BernsteinPetrovGalerkin(degree=10, n_steps=50).fit(example2(0.5))
    assert est.n_factorizations_ == 1
    assert est.system_matrix_.n_factorizations == 1


def test_time_dependent_coefficient_refactorizes_each_step():
    p = Problem.from_exact(0.5, ("0", "0", "1 + t"), "x*(1-x)*sin(x)*exp(-t)")
    est = BernsteinPetrovGalerkin(degree=8, n_steps=12).fit(p)
    assert est.n_factorizations_ == 12


def test_space_dependent_coefficient_factorizes_once_and_converges():
    # linear in t, so the L1 quotient is exact and only the spatial error remains
    p = Problem.from_exact(0.5, ("0", "0", "1 + x^2"), "sin(pi*x)*(1+t)")
    errs = [error_linf(p.exact, BernsteinPetrovGalerkin(degree=N, n_steps=20).fit(p), 1.0) for N in (4, 8, 12)]
    assert errs[0] > 100 * errs[1] > 1e4 * errs[2]
    assert BernsteinPetrovGalerkin(degree=6, n_steps=5).fit(p).n_factorizations_ == 1


def test_weak_and_strong_forms_give_same_solution():
    p = example2(0.75)
    a = BernsteinPetrovGalerkin(degree=11, n_steps=30, form="weak").fit(p)
    b = BernsteinPetrovGalerkin(degree=11, n_steps=30, form="strong").fit(p)
    np.testing.assert_allclose(a.coef_, b.coef_, rtol=1e-9, atol=1e-12)


def test_fit_is_deterministic():
    p = example1(0.25)
    a = BernsteinPetrovGalerkin(degree=8, n_steps=40).fit(p)
    b = BernsteinPetrovGalerkin(degree=8, n_steps=40).fit(p)
    np.testing.assert_array_equal(a.coef_, b.coef_)


def test_history_and_levels():
    p = example1(0.5)
    est = BernsteinPetrovGalerkin(degree=6, n_steps=10).fit(p)
    assert len(est.history_) == 11
    assert est.times_[-1] == 1.0 and est.tau_ == 0.1
    np.testing.assert_array_equal(est.level(10).coeffs, est.solution_.coeffs)
    with pytest.raises(IndexError):
        est.level(0)


def test_estimator_api():
    est = BernsteinPetrovGalerkin(degree=7, n_steps=5)
    assert est.get_params() == {"degree": 7, "n_steps": 5, "quad_points": None, "form": "weak"}
    c = clone(est).set_params(degree=9)
    assert c.degree == 9 and est.degree == 7
    with pytest.raises(NotFittedError):
        est.predict([0.5])
    est.fit(example1(0.5))
    assert isinstance(est.predict(0.5), float)
    assert est.predict([0.0, 1.0]).tolist() == pytest.approx([0.0, 0.0], abs=1e-14)


@pytest.mark.parametrize("kwargs", [{"degree": 1}, {"n_steps": 0}, {"form": "mixed"}, {"quad_points": 0}])
def test_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        BernsteinPetrovGalerkin(**{"degree": 6, **kwargs}).fit(example1(0.5))


def test_fit_requires_problem():
    with pytest.raises(TypeError):
        BernsteinPetrovGalerkin().fit(np.zeros((3, 2)))


def test_singular_system_reports_step(monkeypatch):
    def singular(spec, N, mu, t, **kw):
        d = N - spec.order + 1
        return BandedMatrix.from_dense(np.zeros((d, d)), 0, 0)

    monkeypatch.setattr(solver_module, "system_matrix", singular)
    with pytest.raises(SingularSystemError) as info:
        BernsteinPetrovGalerkin(degree=5, n_steps=3).fit(example1(0.5))
    assert info.value.step == 1
    assert "time step 1" in str(info.value)


def implicit_euler(problem, N, M):
    """Independent backward-Euler loop: (u^{k+1} - u^k)/tau = L u^{k+1} + s."""
    n = problem.order
    tau = problem.T / M
    basis = modal_basis(N, n)
    rule = gauss_legendre_01(default_quad_points(N, n))
    Q = q_matrix(N, n).to_dense()
    A = (1.0 / tau) * Q
    for r, b in enumerate(problem.operator.coefficients):
        if b != 0.0:
            A = A - operator_matrix(N, n, r, b)
    c = None
    for k in range(M):
        t1 = (k + 1) * problem.T / M
        if c is None:
            f = (1.0 / tau) * psi_moments(problem.initial, basis, rule)
        else:
            f = (1.0 / tau) * (Q @ c)
        f = f + psi_moments(lambda x: problem.source(x, t1), basis, rule)
        c = np.linalg.solve(A, f)
    return A, c


@pytest.mark.parametrize("make,N", [(example1, 8), (example2, 10)])
def test_alpha_one_is_implicit_euler(make, N):
    p = make(1.0)
    est = BernsteinPetrovGalerkin(degree=N, n_steps=25).fit(p)
    A, c = implicit_euler(p, N, 25)
    np.testing.assert_array_equal(est.system_matrix_.to_dense(), A)
    np.testing.assert_allclose(est.coef_, c, rtol=0, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_temporal_order(alpha):
    p = example1(alpha)
    errs = [error_linf(p.exact, BernsteinPetrovGalerkin(degree=16, n_steps=M).fit(p), 1.0) for M in (20, 40, 80)]
    order = math.log(errs[1] / errs[2], 2)
    assert abs(order - (2 - alpha)) <= 0.35

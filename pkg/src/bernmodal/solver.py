"""Time-stepping solver with an estimator-style interface."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .assembly import q_matrix, rhs_vector, system_matrix
from .bernstein import BernsteinForm, default_quad_points, eval_form, gauss_legendre_01
from .exceptions import SingularSystemError
from .modal import modal_basis, trial_space
from .problem import Problem
from .timefrac import L1Scheme, SolutionHistory, history_term

__all__ = ["BernsteinPetrovGalerkin"]


class BernsteinPetrovGalerkin(BaseEstimator):
    """Bernstein-dual Petrov-Galerkin solver for time-fractional problems.

    Parameters
    ----------
    degree : int
        Polynomial degree ``N``; at least the operator order.
    n_steps : int
        Number of L1 time steps ``M`` (``tau = T / M``).
    quad_points : int or None
        Gauss-Legendre points for source/initial-data integrals and for
        variable coefficients.  Defaults to ``N + ceil(n/2) + 2``.
    form : {"weak", "strong"}
        Bilinear form used for constant coefficients.  Variable coefficients
        always use the strong form by quadrature.

    Attributes
    ----------
    coef_ : ndarray of shape (N - n + 1,)
        Trial coefficients of the solution at the final time.
    solution_ : BernsteinForm
        The same solution as a full degree-``N`` Bernstein form.
    history_ : SolutionHistory
        Every computed time level.
    times_ : ndarray of shape (M + 1,)
    n_factorizations_ : int
        LU factorisations performed; 1 for constant coefficients.
    """

    def __init__(self, degree: int = 8, n_steps: int = 100, quad_points: int | None = None, form: str = "weak"):
        self.degree = degree
        self.n_steps = n_steps
        self.quad_points = quad_points
        self.form = form

    def _validate(self, problem: Problem) -> None:
        if not isinstance(problem, Problem):
            raise TypeError(f"fit expects a Problem, got {type(problem).__name__}")
        if self.degree < problem.order:
            raise ValueError(f"degree={self.degree} is below the operator order {problem.order}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.form not in ("weak", "strong"):
            raise ValueError(f"form must be 'weak' or 'strong', got {self.form!r}")
        if self.quad_points is not None and self.quad_points < 1:
            raise ValueError("quad_points must be positive")

    def fit(self, problem: Problem, y=None) -> "BernsteinPetrovGalerkin":
        self._validate(problem)
        N, n = int(self.degree), problem.order
        spec = problem.operator
        scheme = L1Scheme(problem.alpha, problem.T, int(self.n_steps))
        mu = scheme.mu
        rule = gauss_legendre_01(self.quad_points or default_quad_points(N, n))
        basis = modal_basis(N, n)
        space = trial_space(N, n)

        form = self.form if spec.is_constant else "strong"
        op_rule = None if spec.is_constant else rule
        time_dependent = spec.time_dependent

        history = SolutionHistory(problem.initial)
        n_fact = 0
        A = None
        for k in range(scheme.M):
            t1 = scheme.time(k + 1)
            if A is None or time_dependent:
                A = system_matrix(spec, N, mu, t1, form=form, rule=op_rule)
            term = history_term(history, k, problem.alpha, mu)
            f = rhs_vector(term, problem.source, problem.initial, basis, t1, rule)
            try:
                if not A.is_factorized:
                    A.factorize()
                    n_fact += 1
                c = A.solve(f)
            except SingularSystemError as exc:
                raise SingularSystemError(exc.message, condition=exc.condition, step=k + 1) from exc
            history.append(c)

        self.trial_space_ = space
        self.basis_ = basis
        self.system_matrix_ = A
        self.q_matrix_ = q_matrix(N, n)
        self.history_ = history
        self.times_ = np.array([scheme.time(k) for k in range(scheme.M + 1)])
        self.coef_ = history.latest
        self.solution_ = space.form(self.coef_)
        self.n_factorizations_ = n_fact
        self.tau_ = scheme.tau
        self.final_time_ = problem.T
        return self

    def level(self, k: int) -> BernsteinForm:
        """Solution at ``t_k`` (``k >= 1``) as a Bernstein form."""
        check_is_fitted(self, "coef_")
        if k < 1:
            raise IndexError("level 0 is the initial data, which is not a trial function")
        return self.trial_space_.form(self.history_[k])

    def predict(self, x) -> np.ndarray:
        """Evaluate the final-time solution at points ``x`` in [0, 1]."""
        check_is_fitted(self, "coef_")
        scalar = np.ndim(x) == 0
        pts = check_array(np.atleast_1d(np.asarray(x, dtype=float)), ensure_2d=False, ensure_min_samples=0)
        vals = eval_form(self.solution_, pts)
        return float(vals[0]) if scalar else vals

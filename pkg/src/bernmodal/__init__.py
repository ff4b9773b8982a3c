"""Bernstein-dual modal Petrov-Galerkin solver for time-fractional PDEs."""

from .assembly import BandedMatrix, OperatorSpec, q_matrix, r_matrix, rhs_vector, solve, system_matrix
from .bernstein import (
    BernsteinForm,
    QuadratureRule,
    derivative,
    endpoint_derivative,
    eval_basis,
    eval_form,
    gauss_legendre_01,
    mass_matrix,
)
from .driver import ErrorReport, ProblemConfig, convergence_rates, emit, error_linf, load_config, run, sweep
from .dual_bernstein import (
    DualCoeffMatrix,
    DualDerivativeStencil,
    alpha0,
    dual_coeffs,
    dual_derivative,
    dual_endpoint_derivative,
    dual_form,
)
from .exceptions import (
    BernmodalError,
    ConfigError,
    DegreeRangeError,
    ExprEvaluationError,
    ExprSyntaxError,
    SingularSystemError,
)
from .expr import Expr, parse
from .modal import ModalBasis, TrialSpace, modal_basis, modal_coeffs, trial_space
from .problem import Problem, example1, example2
from .solver import BernsteinPetrovGalerkin
from .timefrac import L1Scheme, SolutionHistory, history_term, l1_weights, mu

__version__ = "0.1.0"

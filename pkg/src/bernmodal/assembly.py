"""Per-step Petrov-Galerkin system ``A c^{k+1} = f^{k+1}``.

Rows are indexed by test functions ``psi_i`` (``0 <= i <= N-n``), columns by
trial functions ``B_j`` (``floor(n/2) <= j <= N - ceil(n/2)``).  The system
matrix is

    A = mu * Q - sum_r (-1)**ceil(r/2) * R_r,
    Q   = [(B_j, psi_i)],
    R_r = [(d^floor(r/2) B_j, d^ceil(r/2) (b_r psi_i))].

For constant coefficients every entry is computed exactly from
biorthogonality: pairing a polynomial with ``dual_k`` reads off its ``k``-th
Bernstein coefficient, so only the (tridiagonal) Bernstein derivative matrix
and the dual derivative stencils are needed.  Variable coefficients go
through Gauss quadrature of the un-integrated form ``(b_r d^r B_j, psi_i)``,
which needs no derivatives of ``b_r``.
"""

from __future__ import annotations

import numbers
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .bernstein import QuadratureRule, basis_matrix, default_quad_points, derivative_matrix, gauss_legendre_01
from .dual_bernstein import dual_derivative_matrix
from .exceptions import SingularSystemError
from .modal import ModalBasis, modal_basis, modal_coeffs_exact, trial_space
from .timefrac import HistoryTerm

__all__ = [
    "BandedMatrix",
    "OperatorSpec",
    "q_matrix",
    "r_matrix",
    "operator_matrix",
    "system_matrix",
    "psi_moments",
    "rhs_vector",
    "solve",
]

Coefficient = Union[float, Callable]

# packed LU is used while its storage stays below this share of the dense matrix
BANDED_FILL_LIMIT = 0.75


class BandedMatrix:
    """Square matrix in LAPACK band storage with a cached LU factorisation.

    ``ab[ku + i - j, j] == A[i, j]`` inside the band; everything outside is
    zero by construction.  When the band is so wide that packed LU would not
    save memory the factorisation falls back to dense LU.
    """

    def __init__(self, ab: np.ndarray, kl: int, ku: int):
        ab = np.asarray(ab, dtype=float)
        if ab.ndim != 2 or ab.shape[0] != kl + ku + 1:
            raise ValueError("band array must have kl + ku + 1 rows")
        self.ab = ab
        self.kl = int(kl)
        self.ku = int(ku)
        self.n_factorizations = 0
        self._lu = None

    @property
    def shape(self) -> tuple[int, int]:
        d = self.ab.shape[1]
        return d, d

    @property
    def dim(self) -> int:
        return self.ab.shape[1]

    @classmethod
    def from_dense(cls, A, kl: int | None = None, ku: int | None = None, rtol: float = 1e-12) -> "BandedMatrix":
        """Pack ``A``; bandwidths are measured when not given.

        Entries below ``rtol * max|A|`` do not widen the measured band.  Any
        entry left outside the band (measured or declared) is discarded, so
        callers declaring a band must know it holds.
        """
        A = np.asarray(A, dtype=float)
        d = A.shape[0]
        if A.shape != (d, d):
            raise ValueError("matrix must be square")
        if kl is None or ku is None:
            mkl, mku = measured_bandwidth(A, rtol)
            kl = mkl if kl is None else kl
            ku = mku if ku is None else ku
        ab = np.zeros((kl + ku + 1, d))
        for k in range(-kl, ku + 1):
            diag = np.diagonal(A, k)
            if k >= 0:
                ab[ku - k, k:] = diag
            else:
                ab[ku - k, : d + k] = diag
        return cls(ab, kl, ku)

    def to_dense(self) -> np.ndarray:
        d = self.dim
        A = np.zeros((d, d))
        for k in range(-self.kl, self.ku + 1):
            idx = np.arange(max(0, -k), min(d, d - k))
            A[idx, idx + k] = self.ab[self.ku - k, idx + k]
        return A

    def __matmul__(self, x):
        return self.to_dense() @ x

    def norm_inf(self) -> float:
        return float(np.max(np.sum(np.abs(self.to_dense()), axis=1))) if self.dim else 0.0

    @property
    def uses_band_storage(self) -> bool:
        return self.dim > 1 and (2 * self.kl + self.ku + 1) <= BANDED_FILL_LIMIT * self.dim

    def factorize(self) -> "BandedMatrix":
        d = self.dim
        if d == 1:
            if self.ab[self.ku, 0] == 0.0:
                raise SingularSystemError("1x1 system matrix is zero", condition=np.inf)
            self._lu = ("scalar", float(self.ab[self.ku, 0]))
        elif self.uses_band_storage:
            lu_ab = np.zeros((2 * self.kl + self.ku + 1, d))
            lu_ab[self.kl :] = self.ab
            lu, piv, info = lapack.dgbtrf(lu_ab, self.kl, self.ku)
            if info > 0:
                raise SingularSystemError("banded LU hit a zero pivot", condition=_cond(self.to_dense()))
            self._lu = ("band", lu, piv)
        else:
            dense = self.to_dense()
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                lu, piv = linalg.lu_factor(dense, check_finite=False)
            if np.any(np.diag(lu) == 0.0):
                raise SingularSystemError("dense LU hit a zero pivot", condition=_cond(dense))
            self._lu = ("dense", lu, piv)
        self.n_factorizations += 1
        return self

    @property
    def is_factorized(self) -> bool:
        return self._lu is not None

    def solve(self, b) -> np.ndarray:
        if self._lu is None:
            self.factorize()
        b = np.asarray(b, dtype=float)
        kind = self._lu[0]
        if kind == "scalar":
            return b / self._lu[1]
        if kind == "band":
            x, info = lapack.dgbtrs(self._lu[1], self.kl, self.ku, b, self._lu[2])
            if info != 0:
                raise SingularSystemError(f"dgbtrs failed with info={info}")
            return x
        return linalg.lu_solve((self._lu[1], self._lu[2]), b, check_finite=False)


def _cond(A: np.ndarray) -> float:
    with np.errstate(all="ignore"):
        try:
            return float(np.linalg.cond(A))
        except np.linalg.LinAlgError:
            return float("inf")


def measured_bandwidth(A: np.ndarray, rtol: float = 1e-12) -> tuple[int, int]:
    """(lower, upper) bandwidth of the entries above ``rtol * max|A|``."""
    A = np.asarray(A)
    scale = np.max(np.abs(A)) if A.size else 0.0
    rows, cols = np.nonzero(np.abs(A) > rtol * scale)
    if rows.size == 0:
        return 0, 0
    off = cols - rows
    return int(max(0, -off.min())), int(max(0, off.max()))


def _is_constant(b) -> bool:
    return isinstance(b, numbers.Real)


@dataclass(frozen=True)
class OperatorSpec:
    """Spatial operator ``sum_r b_r(x, t) d^r/dx^r``.

    Coefficients are numbers or vectorised callables ``b(x, t)``; the order is
    the index of the last coefficient, which must not be the constant 0.
    Callables exposing ``free_variables`` (parsed expressions) are inspected
    to decide whether the operator changes in time.
    """

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(float(b) if _is_constant(b) else b for b in self.coefficients)
        if len(coeffs) < 2:
            raise ValueError("operator needs coefficients b_0..b_n with n >= 1")
        if _is_constant(coeffs[-1]) and coeffs[-1] == 0.0:
            raise ValueError("leading coefficient b_n is identically zero")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_mapping(cls, coeffs: dict) -> "OperatorSpec":
        n = max(coeffs)
        return cls(tuple(coeffs.get(r, 0.0) for r in range(n + 1)))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_constant(self) -> bool:
        return all(_is_constant(b) for b in self.coefficients)

    @property
    def time_dependent(self) -> bool:
        for b in self.coefficients:
            if _is_constant(b):
                continue
            free = getattr(b, "free_variables", None)
            if free is None or "t" in free:
                return True
        return False


def q_matrix(N: int, n: int) -> BandedMatrix:
    """``Q = [(B_j, psi_i)]``; entry ``a[i, j-i]`` for ``0 <= j-i <= n``.

    Lower bandwidth ``floor(n/2)``, upper ``ceil(n/2)``.
    """
    basis = modal_basis(N, n)
    d = basis.dim
    kl, ku = n // 2, (n + 1) // 2
    ab = np.zeros((kl + ku + 1, d))
    for i in range(d):
        for jc in range(max(0, i - kl), min(d, i + ku + 1)):
            ab[ku + i - jc, jc] = basis.weights[i, jc + kl - i]
    return BandedMatrix(ab, kl, ku)


def _bernstein_derivative_columns(N: int, n: int, p: int) -> np.ndarray:
    """``(N+1, d)`` Bernstein coefficients of ``d^p B_j`` for trial ``j``."""
    ts = trial_space(N, n)
    Dt = derivative_matrix(N).T
    cols = np.zeros((N + 1, ts.dim))
    cols[ts.first : ts.last + 1, :] = np.eye(ts.dim)
    for _ in range(p):
        cols = Dt @ cols
    return cols


@lru_cache(maxsize=None)
def _weak_constant(N: int, n: int, r: int) -> np.ndarray:
    # d^q psi_i in the dual basis via the dual derivative stencils, then
    # (dual_k, d^p B_j) = k-th Bernstein coefficient of d^p B_j.  Done in
    # rationals: the stencil's psi_0/psi_N weights are ~(N+1)C(N+1,i+1) and
    # cancel almost completely, which costs ~7 digits at N=20 in floats.
    p, q = r // 2, (r + 1) // 2
    ts = trial_space(N, n)
    E = [[int(v) for v in row] for row in dual_derivative_matrix(N)]
    duals = []
    for i in range(ts.dim):
        v = [Fraction(0)] * (N + 1)
        v[i : i + n + 1] = modal_coeffs_exact(N, n, i)
        for _ in range(q):
            v = [sum(v[m] * E[m][k] for m in range(N + 1) if v[m] and E[m][k]) for k in range(N + 1)]
        duals.append(v)
    cols = [[int(v) for v in row] for row in _bernstein_derivative_columns(N, n, p)]
    out = np.array(
        [[float(sum(duals[i][k] * cols[k][j] for k in range(N + 1) if cols[k][j])) for j in range(ts.dim)]
         for i in range(ts.dim)]
    )
    out.setflags(write=False)
    return out


def _strong_constant(N: int, n: int, r: int) -> np.ndarray:
    basis = modal_basis(N, n)
    return basis.dual_coeffs() @ _bernstein_derivative_columns(N, n, r)


def _strong_quadrature(N: int, n: int, r: int, b, t: float, rule: QuadratureRule) -> np.ndarray:
    basis = modal_basis(N, n)
    trial_d = basis_matrix(N, rule.nodes) @ _bernstein_derivative_columns(N, n, r)
    psi = basis.values(rule.nodes)
    if _is_constant(b):
        bx = np.full(rule.nodes.shape, float(b))
    else:
        bx = np.broadcast_to(np.asarray(b(rule.nodes, t), dtype=float), rule.nodes.shape)
    return (psi * (rule.weights * bx)[:, None]).T @ trial_d


def operator_matrix(N: int, n: int, r: int, b: Coefficient = 1.0, t: float = 0.0, *, form: str | None = None,
                    rule: QuadratureRule | None = None) -> np.ndarray:
    """``[(b_r d^r B_j, psi_i)]``, the signed contribution of order ``r``.

    ``form='weak'`` (default for constants) integrates by parts and uses the
    dual derivative stencils; ``form='strong'`` works on ``d^r B_j``
    directly, exactly for constants and by quadrature when ``rule`` is given
    or ``b`` is a callable.
    """
    if not 0 <= r <= n:
        raise ValueError(f"derivative order r={r} outside 0..{n}")
    trial_space(N, n)
    if form is None:
        form = "weak" if _is_constant(b) and rule is None else "strong"
    if form == "weak":
        if not _is_constant(b):
            raise ValueError("the integrated-by-parts form needs a constant coefficient")
        return (-1) ** ((r + 1) // 2) * float(b) * _weak_constant(N, n, r)
    if form != "strong":
        raise ValueError(f"unknown form {form!r}")
    if _is_constant(b) and rule is None:
        return float(b) * _strong_constant(N, n, r)
    rule = rule or gauss_legendre_01(default_quad_points(N, n))
    return _strong_quadrature(N, n, r, b, t, rule)


def r_matrix(N: int, n: int, r: int, b: Coefficient = 1.0, t: float = 0.0, *, form: str | None = None,
             rule: QuadratureRule | None = None) -> np.ndarray:
    """``R_r = [(d^floor(r/2) B_j, d^ceil(r/2) (b_r psi_i))]``.

    Strong-form evaluations return the same bilinear form through the
    integration-by-parts identity ``R_r = (-1)**ceil(r/2) (b_r d^r B_j, psi_i)``.
    """
    return (-1) ** ((r + 1) // 2) * operator_matrix(N, n, r, b, t, form=form, rule=rule)


def system_matrix(spec: OperatorSpec, N: int, mu: float, t: float = 0.0, *, form: str | None = None,
                  rule: QuadratureRule | None = None) -> BandedMatrix:
    """Assemble ``A = mu Q - sum_r (-1)**ceil(r/2) R_r`` in band storage."""
    n = spec.order
    Q = q_matrix(N, n).to_dense()
    A = mu * Q
    for r, b in enumerate(spec.coefficients):
        if _is_constant(b) and b == 0.0:
            continue
        A = A - operator_matrix(N, n, r, b, t, form=form, rule=rule)
    return BandedMatrix.from_dense(A)


def psi_moments(func: Callable, basis: ModalBasis, rule: QuadratureRule) -> np.ndarray:
    """``[(func, psi_i)]`` by quadrature; ``func`` takes the node array."""
    psi = basis.values(rule.nodes)
    vals = np.broadcast_to(np.asarray(func(rule.nodes), dtype=float), rule.nodes.shape)
    return psi.T @ (rule.weights * vals)


def rhs_vector(history: HistoryTerm, source: Callable | None, initial: Callable | None, basis: ModalBasis,
               t: float, rule: QuadratureRule) -> np.ndarray:
    """``f_i = (f^{k+1}, psi_i)``.

    The coefficient part of the history is contracted exactly through ``Q``;
    the initial state and ``source(x, t)`` are integrated with ``rule``.
    """
    f = np.zeros(basis.dim)
    if history.coeffs is not None:
        f += q_matrix(basis.degree, basis.order) @ history.coeffs
    if history.initial_weight != 0.0:
        if initial is None:
            raise ValueError("history refers to the initial state but none was given")
        f += history.initial_weight * psi_moments(initial, basis, rule)
    if source is not None:
        f += psi_moments(lambda x: source(x, t), basis, rule)
    return f


def solve(A: BandedMatrix, f: Sequence[float]) -> np.ndarray:
    return A.solve(f)

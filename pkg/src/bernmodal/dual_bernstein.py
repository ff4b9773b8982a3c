"""Dual Bernstein polynomials.

``dual_form(N, i)`` is the degree-``N`` polynomial biorthogonal to the
Bernstein basis, ``(B_{j,N}, dual_i) = delta_ij``.  Its Bernstein coefficients
are row ``i`` of the matrix built by :func:`dual_coeffs`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, perm

import numpy as np

from .bernstein import BernsteinForm
from .exceptions import DegreeRangeError

__all__ = [
    "DualCoeffMatrix",
    "DualDerivativeStencil",
    "dual_coeffs",
    "dual_coeffs_exact",
    "dual_form",
    "alpha0",
    "dual_derivative",
    "dual_derivative_matrix",
    "dual_endpoint_derivative",
    "dual_values",
]


def _check_index(N: int, i: int) -> None:
    if not 0 <= i <= N:
        raise IndexError(f"index {i} out of range for degree {N}")


@lru_cache(maxsize=None)
def dual_coeffs_exact(N: int) -> tuple[tuple[Fraction, ...], ...]:
    """Coefficient matrix as exact rationals.

    The alternating-sign numerator is summed in Python integers, so no digits
    are lost however large the binomials get.
    """
    if N < 0:
        raise ValueError("degree must be non-negative")
    rows = [[Fraction(0)] * (N + 1) for _ in range(N + 1)]
    for i in range(N + 1):
        for j in range(i, N + 1):
            num = sum(
                (2 * r + 1)
                * comb(N + r + 1, N - i)
                * comb(N - r, N - i)
                * comb(N + r + 1, N - j)
                * comb(N - r, N - j)
                for r in range(i + 1)
            )
            val = Fraction((-1) ** (i + j) * num, comb(N, i) * comb(N, j))
            rows[i][j] = rows[j][i] = val
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class DualCoeffMatrix:
    """Bernstein coefficients of the dual polynomials, one row per dual."""

    degree: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)

    def row(self, i: int) -> np.ndarray:
        _check_index(self.degree, i)
        return self.entries[i]

    def exact(self) -> tuple[tuple[Fraction, ...], ...]:
        return dual_coeffs_exact(self.degree)


@lru_cache(maxsize=None)
def dual_coeffs(N: int) -> DualCoeffMatrix:
    """Build the (N+1) x (N+1) dual coefficient matrix.

    Raises :class:`DegreeRangeError` once an entry no longer fits a double.
    """
    exact = dual_coeffs_exact(N)
    try:
        entries = np.array([[float(v) for v in row] for row in exact])
    except OverflowError as exc:
        raise DegreeRangeError(f"dual coefficients overflow double precision at N={N}") from exc
    return DualCoeffMatrix(N, entries)


def dual_form(N: int, i: int) -> BernsteinForm:
    _check_index(N, i)
    return BernsteinForm(dual_coeffs(N).entries[i])


def alpha0(N: int, i: int) -> float:
    """Weight of ``dual_0`` in the derivative of ``dual_i``."""
    _check_index(N, i)
    return float(-((-1) ** i) * (N + 1) * comb(N + 1, i + 1) + N * (i == 0) + (i == 1))


@dataclass(frozen=True)
class DualDerivativeStencil:
    """``dual_i'`` written as a short combination of dual polynomials.

    ``terms`` lists ``(coefficient, target_index)`` pairs; targets may repeat
    (e.g. ``i = 1`` hits ``dual_0`` twice) and are summed by :meth:`vector`.
    """

    degree: int
    index: int
    terms: tuple[tuple[float, int], ...]

    def vector(self) -> np.ndarray:
        v = np.zeros(self.degree + 1)
        for coef, k in self.terms:
            v[k] += coef
        return v

    def as_form(self) -> BernsteinForm:
        return BernsteinForm(self.vector() @ dual_coeffs(self.degree).entries)


def dual_derivative(N: int, i: int) -> DualDerivativeStencil:
    _check_index(N, i)
    d = lambda a, b: 1 if a == b else 0  # noqa: E731
    candidates = [
        (alpha0(N, i), 0),
        ((1 - d(i, 1)) * i, i - 1),
        ((1 - d(i, 0)) * (1 - d(i, N)) * (N - 2 * i), i),
        (-(1 - d(i, N - 1)) * (N - i), i + 1),
        (-alpha0(N, N - i), N),
    ]
    terms = tuple((float(c), k) for c, k in candidates if 0 <= k <= N and c != 0)
    return DualDerivativeStencil(N, i, terms)


@lru_cache(maxsize=None)
def _dual_derivative_matrix(N: int) -> np.ndarray:
    E = np.array([dual_derivative(N, i).vector() for i in range(N + 1)])
    E.setflags(write=False)
    return E


def dual_derivative_matrix(N: int) -> np.ndarray:
    """Row ``i`` holds the dual-basis coefficients of ``dual_i'``.

    Dense only in the first and last columns; the rest is tridiagonal.
    """
    return _dual_derivative_matrix(N)


def dual_endpoint_derivative(N: int, i: int, p: int, end: int) -> float:
    """``dual_i^{(p)}`` at ``end``.

    At 0 this is ``(-1)**p N!/(N-p)! sum_r (-1)**r c[i, r] C(p, r)``; the value
    at 1 comes from the reflection ``dual_{N-i}(x) = dual_i(1 - x)``.
    """
    _check_index(N, i)
    if p < 0 or p > N:
        raise ValueError(f"derivative order p={p} must satisfy 0 <= p <= N={N}")
    if end not in (0, 1):
        raise ValueError("end must be 0 or 1")
    if end == 1:
        return (-1) ** p * dual_endpoint_derivative(N, N - i, p, 0)
    c = dual_coeffs_exact(N)[i]
    total = sum((-1) ** r * c[r] * comb(p, r) for r in range(p + 1))
    return float((-1) ** p * perm(N, p) * total)


@lru_cache(maxsize=None)
def _legendre_weights(N: int) -> np.ndarray:
    # dual_i = sum_r (2r+1) beta[r, i] P_r(2x-1), beta[r, i] the i-th
    # degree-N Bernstein coefficient of the shifted Legendre polynomial P_r
    W = np.empty((N + 1, N + 1))
    for r in range(N + 1):
        for i in range(N + 1):
            ks = range(max(0, i - (N - r)), min(r, i) + 1)
            num = sum((-1) ** k * comb(r, k) ** 2 * comb(N - r, i - k) for k in ks)
            W[r, i] = (2 * r + 1) * float(Fraction((-1) ** r * num, comb(N, i)))
    W.setflags(write=False)
    return W


def dual_values(N: int, x) -> np.ndarray:
    """Values of every dual polynomial at ``x``; shape ``x.shape + (N+1,)``.

    Evaluated through the shifted Legendre expansion rather than the
    Bernstein coefficients, whose alternating entries reach ~1e12 at N=20
    and would cost most of the significant digits.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("evaluation points must lie in [0, 1]")
    P = np.polynomial.legendre.legvander(2.0 * x - 1.0, N)
    return P @ _legendre_weights(N)

"""Bernstein basis algebra on [0, 1].

A polynomial of degree ``N`` is carried around as the vector of its ``N + 1``
Bernstein coefficients, ``p(x) = sum_i c[i] * B_{i,N}(x)`` with
``B_{i,N}(x) = C(N, i) x**i (1 - x)**(N - i)``.  Everything here works on
that representation: evaluation (de Casteljau), differentiation within the
same degree (three-term recurrence), exact inner products, and Gauss-Legendre
rules mapped to the unit interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb, perm

import numpy as np

__all__ = [
    "BernsteinForm",
    "QuadratureRule",
    "eval_basis",
    "basis_matrix",
    "eval_form",
    "derivative_matrix",
    "derivative",
    "endpoint_derivative",
    "mass_matrix",
    "gauss_legendre_01",
    "default_quad_points",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(np.isnan(x)):
        raise ValueError("evaluation points must lie in [0, 1]")
    return x


@dataclass(frozen=True)
class BernsteinForm:
    """Polynomial stored by its Bernstein coefficients.

    ``coeffs[i]`` multiplies ``B_{i,N}`` where ``N = len(coeffs) - 1``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size == 0:
            raise ValueError("a Bernstein form needs at least one coefficient")
        object.__setattr__(self, "coeffs", _readonly(c))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return eval_form(self, x)

    def __add__(self, other: "BernsteinForm") -> "BernsteinForm":
        if not isinstance(other, BernsteinForm):
            return NotImplemented
        if other.degree != self.degree:
            raise ValueError("degrees differ")
        return BernsteinForm(self.coeffs + other.coeffs)

    def __mul__(self, scalar: float) -> "BernsteinForm":
        return BernsteinForm(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def derivative(self, order: int = 1) -> "BernsteinForm":
        return derivative(self, order)

    def integral(self) -> float:
        # each B_{i,N} integrates to 1/(N+1)
        return math.fsum(self.coeffs) / (self.degree + 1)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for integrals over [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if nodes.shape != weights.shape:
            raise ValueError("nodes and weights must have the same length")
        object.__setattr__(self, "nodes", _readonly(nodes))
        object.__setattr__(self, "weights", _readonly(weights))

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> np.ndarray:
        """Contract sampled values (first axis = nodes) with the weights."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def basis_matrix(N: int, x) -> np.ndarray:
    """Values of all ``B_{i,N}`` at the points ``x``; shape ``x.shape + (N+1,)``.

    Built by the degree-raising recurrence
    ``B_{i,k} = (1 - x) B_{i,k-1} + x B_{i-1,k-1}``, which only ever forms
    convex combinations of non-negative numbers.
    """
    if N < 0:
        raise ValueError("degree must be non-negative")
    x = _as_points(x)
    xs = x[..., None]
    out = np.zeros(x.shape + (N + 1,))
    out[..., 0] = 1.0
    for k in range(1, N + 1):
        prev = out[..., :k].copy()
        out[..., :k] = (1.0 - xs) * prev
        out[..., 1 : k + 1] += xs * prev
    return out


def eval_basis(N: int, i: int, x):
    """``B_{i,N}(x)``; identically zero when ``i < 0`` or ``i > N``."""
    x = _as_points(x)
    if i < 0 or i > N:
        return np.zeros_like(x) if x.ndim else 0.0
    e = np.zeros(N + 1)
    e[i] = 1.0
    return eval_form(BernsteinForm(e), x)


def eval_form(p: BernsteinForm, x):
    """Evaluate a Bernstein form with the de Casteljau algorithm."""
    x = _as_points(x)
    scalar = x.ndim == 0
    xs = x.reshape(-1)[:, None]
    b = np.broadcast_to(p.coeffs, (xs.shape[0], p.coeffs.size)).copy()
    for k in range(p.degree, 0, -1):
        b = (1.0 - xs) * b[:, :k] + xs * b[:, 1 : k + 1]
    out = b[:, 0].reshape(np.shape(x) if not scalar else ())
    return float(out) if scalar else out


@lru_cache(maxsize=None)
def _derivative_matrix(N: int) -> np.ndarray:
    D = np.zeros((N + 1, N + 1))
    for i in range(N + 1):
        if i > 0:
            D[i, i - 1] = N - i + 1
        D[i, i] = -(N - 2 * i)
        if i < N:
            D[i, i + 1] = -(i + 1)
    return _readonly(D)


def derivative_matrix(N: int) -> np.ndarray:
    """Row ``i`` holds the same-degree Bernstein coefficients of ``B_{i,N}'``.

    ``B_i' = (N-i+1) B_{i-1} - (N-2i) B_i - (i+1) B_{i+1}``, so the matrix is
    tridiagonal.  Coefficients of ``p'`` are ``derivative_matrix(N).T @ c``.
    """
    return _derivative_matrix(N)


def derivative(p: BernsteinForm, order: int = 1) -> BernsteinForm:
    """Derivative of ``p`` kept in the degree-``N`` basis.

    Applies the three-term recurrence ``order`` times, so the result is
    degree-``N`` even though the true derivative has lower degree.
    """
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    Dt = derivative_matrix(p.degree).T
    c = p.coeffs.copy()
    for _ in range(order):
        c = Dt @ c
    return BernsteinForm(c)


def endpoint_derivative(N: int, i: int, p: int, end: int) -> float:
    """``B_{i,N}^{(p)}`` at ``x = end`` from the closed forms.

    At 0: ``(-1)**(i+p) N!/(N-p)! C(p, i)``;
    at 1: ``(-1)**(N-i) N!/(N-p)! C(p, N-i)``.
    """
    if p < 0 or p > N:
        raise ValueError(f"derivative order p={p} must satisfy 0 <= p <= N={N}")
    if end not in (0, 1):
        raise ValueError("end must be 0 or 1")
    if i < 0 or i > N:
        return 0.0
    falling = perm(N, p)
    if end == 0:
        return float((-1) ** (i + p) * falling * comb(p, i))
    return float((-1) ** (N - i) * falling * comb(p, N - i))


@lru_cache(maxsize=None)
def _mass_matrix(N: int) -> np.ndarray:
    M = np.empty((N + 1, N + 1))
    for i in range(N + 1):
        for j in range(i, N + 1):
            M[i, j] = M[j, i] = comb(N, i) * comb(N, j) / ((2 * N + 1) * comb(2 * N, i + j))
    return _readonly(M)


def mass_matrix(N: int) -> np.ndarray:
    """Gram matrix ``[(B_i, B_j)]`` of the degree-``N`` basis on [0, 1]."""
    if N < 0:
        raise ValueError("degree must be non-negative")
    return _mass_matrix(N)


@lru_cache(maxsize=None)
def _gauss_legendre_01(m: int) -> QuadratureRule:
    t, w = np.polynomial.legendre.leggauss(m)
    return QuadratureRule(0.5 * (t + 1.0), 0.5 * w)


def gauss_legendre_01(m: int) -> QuadratureRule:
    """``m``-point Gauss-Legendre rule on [0, 1], exact to degree ``2m - 1``."""
    if m < 1:
        raise ValueError("a quadrature rule needs at least one point")
    return _gauss_legendre_01(int(m))


def default_quad_points(N: int, n: int) -> int:
    """Point count exact for every polynomial integrand of the weak forms."""
    return N + (n + 1) // 2 + 2

"""Trial and test bases for homogeneous boundary conditions of order ``n``.

Trial functions are the Bernstein polynomials that already vanish to the
right order at both ends.  Test functions are short combinations of
neighbouring dual polynomials, ``psi_i = sum_j a[i, j] dual_{i+j}``.

Boundary bookkeeping: a polynomial has vanishing derivatives of orders
``0..k-1`` at 0 exactly when its first ``k`` Bernstein coefficients are zero
(and symmetrically at 1).  The trial space needs ``floor(n/2)`` such
conditions at 0 and ``ceil(n/2)`` at 1; the test space swaps the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .bernstein import BernsteinForm, derivative
from .dual_bernstein import dual_coeffs_exact, dual_values

__all__ = [
    "TrialSpace",
    "ModalBasis",
    "trial_space",
    "modal_coeffs",
    "modal_coeffs_exact",
    "modal_basis",
    "trial_conditions",
    "test_conditions",
]


def _check_orders(N: int, n: int) -> None:
    if n < 1:
        raise ValueError(f"operator order must be at least 1, got n={n}")
    if n > N:
        raise ValueError(f"degree N={N} is below the operator order n={n}")


def trial_conditions(n: int) -> tuple[int, int]:
    """Number of vanishing derivative orders at (0, 1) for trial functions."""
    return n // 2, (n + 1) // 2


def test_conditions(n: int) -> tuple[int, int]:
    """Number of vanishing derivative orders at (0, 1) for test functions."""
    return (n + 1) // 2, n // 2


@dataclass(frozen=True)
class TrialSpace:
    degree: int
    order: int

    @property
    def first(self) -> int:
        return self.order // 2

    @property
    def last(self) -> int:
        return self.degree - (self.order + 1) // 2

    @property
    def indices(self) -> range:
        return range(self.first, self.last + 1)

    @property
    def dim(self) -> int:
        return self.degree - self.order + 1

    def embed(self, coeffs) -> np.ndarray:
        """Full-length Bernstein coefficient vector of a trial combination."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != self.dim:
            raise ValueError(f"expected {self.dim} trial coefficients, got {coeffs.shape[-1]}")
        full = np.zeros(coeffs.shape[:-1] + (self.degree + 1,))
        full[..., self.first : self.last + 1] = coeffs
        return full

    def form(self, coeffs) -> BernsteinForm:
        return BernsteinForm(self.embed(coeffs))


def trial_space(N: int, n: int) -> TrialSpace:
    _check_orders(N, n)
    return TrialSpace(N, n)


def _shifts(n: int) -> tuple[int, int]:
    return (n + 1) // 2, n // 2


def modal_coeffs_exact(N: int, n: int, i: int) -> tuple[Fraction, ...]:
    """Combination weights ``a[i, 0..n]`` as exact rationals, from factorials."""
    _check_orders(N, n)
    if not 0 <= i <= N - n:
        raise IndexError(f"test index {i} out of range 0..{N - n}")
    p, q = _shifts(n)
    den = factorial(i + p) * factorial(N - i + q)
    return tuple(
        Fraction(comb(n, j) * factorial(i + j + p) * factorial(N - i - j + q), den)
        for j in range(n + 1)
    )


def modal_coeffs(N: int, n: int, i: int) -> np.ndarray:
    """Combination weights ``a[i, 0..n]``; ``a[i, 0] == 1``.

    Each weight is the previous one times
    ``(n-j+1)/j * (i+j+p)/(N-i-j+1+q)`` so no factorial is ever formed.
    """
    _check_orders(N, n)
    if not 0 <= i <= N - n:
        raise IndexError(f"test index {i} out of range 0..{N - n}")
    p, q = _shifts(n)
    a = np.empty(n + 1)
    a[0] = 1.0
    for j in range(1, n + 1):
        a[j] = a[j - 1] * (n - j + 1) / j * (i + j + p) / (N - i - j + 1 + q)
    return a


@dataclass(frozen=True)
class ModalBasis:
    """Test basis ``psi_0 .. psi_{N-n}``.

    ``weights[i]`` are the dual-combination weights of ``psi_i``; ``forms[i]``
    is ``psi_i`` expanded in the Bernstein basis.
    """

    degree: int
    order: int
    weights: np.ndarray
    forms: tuple[BernsteinForm, ...]

    @property
    def dim(self) -> int:
        return len(self.forms)

    @property
    def bernstein_coeffs(self) -> np.ndarray:
        return np.array([f.coeffs for f in self.forms])

    def dual_coeffs(self) -> np.ndarray:
        """``(dim, N+1)`` matrix of each ``psi_i`` in the dual basis."""
        out = np.zeros((self.dim, self.degree + 1))
        for i in range(self.dim):
            out[i, i : i + self.order + 1] = self.weights[i]
        return out

    def values(self, x) -> np.ndarray:
        """``psi_i(x)`` for all ``i``; shape ``x.shape + (dim,)``."""
        return dual_values(self.degree, x) @ self.dual_coeffs().T

    def boundary_residuals(self) -> np.ndarray:
        """Endpoint derivative values that the test space requires to vanish.

        Row ``i`` collects ``psi_i^{(p)}(0)`` and ``psi_i^{(p)}(1)`` over the
        required orders; all should be zero up to rounding.
        """
        k0, k1 = test_conditions(self.order)
        rows = []
        for f in self.forms:
            vals = []
            for p in range(max(k0, k1)):
                d = derivative(f, p).coeffs
                if p < k0:
                    vals.append(d[0])
                if p < k1:
                    vals.append(d[-1])
            rows.append(vals)
        return np.array(rows)

    def check(self, rtol: float = 1e-8) -> None:
        res = self.boundary_residuals()
        for i, f in enumerate(self.forms):
            scale = np.max(np.abs(f.coeffs))
            if res.size and np.max(np.abs(res[i])) > rtol * scale:
                raise ArithmeticError(
                    f"test function {i} (N={self.degree}, n={self.order}) violates "
                    f"its boundary conditions: residual {np.max(np.abs(res[i])):.3e}"
                )


@lru_cache(maxsize=None)
def _modal_basis(N: int, n: int) -> ModalBasis:
    # psi_i's Bernstein coefficients are summed in rationals and rounded once,
    # so the ones the boundary conditions force to zero come out exactly zero
    C = dual_coeffs_exact(N)
    weights = np.array([modal_coeffs(N, n, i) for i in range(N - n + 1)])
    weights.setflags(write=False)
    forms = []
    for i in range(N - n + 1):
        a = modal_coeffs_exact(N, n, i)
        forms.append(BernsteinForm([float(sum(a[j] * C[i + j][k] for j in range(n + 1))) for k in range(N + 1)]))
    forms = tuple(forms)
    return ModalBasis(N, n, weights, forms)


def modal_basis(N: int, n: int, check: bool = False) -> ModalBasis:
    _check_orders(N, n)
    basis = _modal_basis(N, n)
    if check:
        basis.check()
    return basis

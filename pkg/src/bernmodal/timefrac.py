"""L1 discretisation of the Caputo time derivative.

At ``t_{k+1}`` the Caputo derivative of order ``alpha`` is approximated by

    mu * sum_{j=0}^{k} a[k, j] * (u^{j+1} - u^j),
    mu = 1 / (tau**alpha * Gamma(2 - alpha)),
    a[k, j] = (k+1-j)**(1-alpha) - (k-j)**(1-alpha),

with truncation error O(tau**(2-alpha)).  Moving the ``j = k`` term to the
left leaves ``mu * u^{k+1}`` there and the history below on the right.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate
from scipy.special import gamma

__all__ = [
    "L1Scheme",
    "SolutionHistory",
    "HistoryTerm",
    "l1_weights",
    "mu",
    "history_term",
    "caputo_derivative",
]


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"fractional order must lie in (0, 1], got {alpha}")


def l1_weights(k: int, alpha: float) -> np.ndarray:
    """``a[k, 0..k]``; the last entry is exactly 1.

    At ``alpha = 1`` every entry but the last is 0 (backward Euler).
    """
    _check_alpha(alpha)
    if k < 0:
        raise ValueError("step index must be non-negative")
    m = np.arange(k, 0, -1, dtype=float)  # k - j for j = 0..k-1
    a = np.empty(k + 1)
    a[:k] = (m + 1.0) ** (1.0 - alpha) - m ** (1.0 - alpha)
    a[k] = 1.0  # 0**0 would give 0 at alpha = 1
    return a


def mu(tau: float, alpha: float) -> float:
    """Scaling ``1 / (tau**alpha * Gamma(2 - alpha))``."""
    _check_alpha(alpha)
    if tau <= 0:
        raise ValueError("time step must be positive")
    return float(1.0 / (tau**alpha * gamma(2.0 - alpha)))


@dataclass(frozen=True)
class L1Scheme:
    alpha: float
    T: float
    M: int

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.T <= 0 or self.M < 1:
            raise ValueError("need T > 0 and M >= 1")

    @property
    def tau(self) -> float:
        return self.T / self.M

    @property
    def mu(self) -> float:
        return mu(self.tau, self.alpha)

    def time(self, k: int) -> float:
        return k * self.T / self.M

    def weights(self, k: int) -> np.ndarray:
        return l1_weights(k, self.alpha)


InitialState = Union[Callable, np.ndarray]


@dataclass
class SolutionHistory:
    """Past time levels of one solve.

    Level 0 is the initial state: either a callable ``g(x)`` or, when ``g``
    is known to lie in the trial space, its coefficient vector.  Later levels
    are always trial coefficient vectors.
    """

    initial: InitialState
    levels: list = field(default_factory=list)

    @property
    def initial_is_coeffs(self) -> bool:
        return not callable(self.initial)

    def __len__(self) -> int:
        return 1 + len(self.levels)

    def append(self, coeffs) -> None:
        self.levels.append(np.asarray(coeffs, dtype=float))

    def __getitem__(self, j: int):
        if j == 0:
            return self.initial
        return self.levels[j - 1]

    @property
    def latest(self) -> np.ndarray:
        if not self.levels:
            if self.initial_is_coeffs:
                return np.asarray(self.initial, dtype=float)
            raise IndexError("history holds only a callable initial state")
        return self.levels[-1]


@dataclass(frozen=True)
class HistoryTerm:
    """Right-hand-side history ``initial_weight * g + (coefficient part)``.

    ``coeffs`` is a trial coefficient vector (``None`` when only the initial
    state contributes); ``initial_weight`` multiplies a callable initial
    state and is 0 when level 0 is stored as coefficients.
    """

    initial_weight: float
    coeffs: np.ndarray | None


def history_term(history: SolutionHistory, k: int, alpha: float, mu_value: float) -> HistoryTerm:
    """``mu * (u^k - sum_{j<k} a[k, j] (u^{j+1} - u^j))`` for step ``k -> k+1``."""
    if k < 0:
        raise ValueError("step index must be non-negative")
    if len(history) < k + 1:
        raise IndexError(f"history has {len(history)} levels, step {k} needs {k + 1}")
    callable_g = not history.initial_is_coeffs
    if k == 0:
        if callable_g:
            return HistoryTerm(mu_value, None)
        return HistoryTerm(0.0, mu_value * np.asarray(history.initial, dtype=float))
    a = l1_weights(k, alpha)
    acc = np.array(history[k], dtype=float)
    g_weight = 0.0
    for j in range(k):
        if j == 0 and callable_g:
            acc -= a[0] * history[1]
            g_weight += a[0]
        else:
            acc -= a[j] * (history[j + 1] - history[j])
    return HistoryTerm(mu_value * g_weight, mu_value * acc)


def caputo_derivative(dfdt: Callable[[float], float], t: float, alpha: float, tol: float = 1e-12) -> float:
    """Caputo derivative of order ``alpha`` at ``t`` given the first derivative.

    ``1/Gamma(1-alpha) * int_0^t (t-s)**(-alpha) f'(s) ds``; the endpoint
    singularity is handled by QUADPACK's algebraic-weight rule.
    """
    _check_alpha(alpha)
    if t < 0:
        raise ValueError("time must be non-negative")
    if alpha == 1.0:
        return float(dfdt(t))
    if t == 0.0:
        return 0.0
    val, _ = integrate.quad(dfdt, 0.0, t, weight="alg", wvar=(0.0, -alpha), epsabs=tol, epsrel=tol, limit=200)
    return float(val / gamma(1.0 - alpha))

"""Problem definitions and manufactured sources."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .assembly import OperatorSpec
from .exceptions import ConfigError
from .expr import BinOp, Expr, Neg, Num, diff, parse
from .timefrac import caputo_derivative

__all__ = ["Problem", "ManufacturedSource", "example1", "example2"]


def _as_expr(v) -> Expr:
    return parse(v) if isinstance(v, str) else v


def _as_coefficient(v):
    if isinstance(v, str):
        v = parse(v)
    if isinstance(v, Expr) and not v.free_variables:
        return float(v())
    return v


def _factors(e: Expr, sign: int = 1):
    """Flatten a product into (sign, factors)."""
    if isinstance(e, Neg):
        s, fs = _factors(e.operand)
        return -sign * s, fs
    if isinstance(e, BinOp) and e.op == "*":
        sl, fl = _factors(e.left)
        sr, fr = _factors(e.right)
        return sign * sl * sr, fl + fr
    return sign, [e]


def _product(factors) -> Expr:
    out: Expr = Num(1.0)
    for f in factors:
        out = out * f
    return out


class ManufacturedSource:
    """``s = D_t^alpha u - sum_r b_r d^r u / dx^r`` for a separable ``u``.

    ``u`` must be a product whose factors each depend on ``x`` or on ``t``
    alone (``X(x) T(t)``).  Spatial derivatives are taken symbolically; the
    Caputo derivative of ``T`` is integrated numerically once per time and
    cached.
    """

    def __init__(self, exact: Expr | str, operator: OperatorSpec, alpha: float):
        exact = _as_expr(exact)
        sign, factors = _factors(exact)
        space, time = [], []
        for f in factors:
            free = f.free_variables
            if {"x", "t"} <= free:
                raise ConfigError(
                    f"exact solution {exact} is not a product X(x)*T(t); supply the source explicitly"
                )
            (time if "t" in free else space).append(f)
        self.exact = exact
        self.operator = operator
        self.alpha = float(alpha)
        self.space = _product(space) * float(sign)
        self.time = _product(time)
        self._dtime = diff(self.time, "t")
        self._space_derivs = [diff(self.space, "x", r) for r in range(operator.order + 1)]
        self._caputo: dict[float, float] = {}

    def caputo_time(self, t: float) -> float:
        t = float(t)
        if t not in self._caputo:
            if "t" not in self.time.free_variables:
                self._caputo[t] = 0.0
            else:
                self._caputo[t] = caputo_derivative(lambda s: self._dtime(0.0, s), t, self.alpha)
        return self._caputo[t]

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        out = self.space(x) * self.caputo_time(t)
        T = self.time(0.0, t)
        for r, b in enumerate(self.operator.coefficients):
            if isinstance(b, float) and b == 0.0:
                continue
            bx = b if isinstance(b, float) else b(x, t)
            out = out - bx * self._space_derivs[r](x) * T
        return out


@dataclass(frozen=True)
class Problem:
    """``D_t^alpha u = sum_r b_r(x, t) d^r u/dx^r + s`` on (0, 1) x (0, T].

    Homogeneous boundary conditions of the operator's order are implied.
    ``initial`` is ``g(x) = u(x, 0)``; ``source`` and ``exact`` take
    ``(x, t)``.
    """

    alpha: float
    operator: OperatorSpec
    initial: Callable
    source: Callable | None = None
    exact: Callable | None = None
    T: float = 1.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.T <= 0:
            raise ConfigError("final time T must be positive")

    @property
    def order(self) -> int:
        return self.operator.order

    @classmethod
    def from_exact(cls, alpha: float, coefficients: Mapping[int, object] | tuple, exact: Expr | str,
                   T: float = 1.0, initial=None, source=None, name: str = "") -> "Problem":
        """Problem whose source (unless given) is manufactured from ``exact``."""
        if isinstance(coefficients, Mapping):
            spec = OperatorSpec.from_mapping({int(r): _as_coefficient(b) for r, b in coefficients.items()})
        else:
            spec = OperatorSpec(tuple(_as_coefficient(b) for b in coefficients))
        exact = _as_expr(exact)
        if initial is None:
            initial = lambda x: exact(x, 0.0)  # noqa: E731
        else:
            initial = _as_expr(initial)
        if source is None:
            source = ManufacturedSource(exact, spec, alpha)
        else:
            source = _as_expr(source)
        return cls(alpha, spec, initial, source, exact, T, name)


def example1(alpha: float, kappa1: float = 1.0, kappa2: float = 1.0, T: float = 1.0) -> Problem:
    """Advection-dispersion ``u_t^alpha = k1 u_xx - k2 u_x + s``, ``u = sin(2 pi x) e^-t``."""
    return Problem.from_exact(alpha, {0: 0.0, 1: -kappa2, 2: kappa1}, "sin(2*pi*x)*exp(-t)", T=T, name="example1")


def example2(alpha: float, T: float = 1.0) -> Problem:
    """Fifth-order ``u_t^alpha = u_x + u_xxx - u_xxxxx + s``, ``u = (1-x) sin(pi x)^2 e^-t``."""
    return Problem.from_exact(
        alpha, {0: 0.0, 1: 1.0, 2: 0.0, 3: 1.0, 4: 0.0, 5: -1.0}, "(1-x)*sin(pi*x)^2*exp(-t)", T=T, name="example2"
    )

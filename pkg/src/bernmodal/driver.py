"""Problem ingestion, the time loop, error measurement and report output.

Config files come in two equivalent flavours.  The plain-text one is INI::

    [problem]
    name = example1
    alpha = 0.25, 0.5, 0.75
    T = 1
    b0 = 0
    b1 = -1
    b2 = 1
    exact = sin(2*pi*x)*exp(-t)
    # initial = ...          (default: exact at t = 0)
    # source = manufactured  (default when exact is given)

    [discretization]
    N = 2, 4, 6, 8
    M = 100
    # quad_points = 12
    # grid = 20

    [output]
    dir = results
    format = csv

The structured one is JSON with the same three sections and keys; lists may
be given as JSON arrays and coefficients either as ``bR`` keys or as a
``coefficients`` array / object.  Coefficient, initial, source and exact
values are expressions in the language of :mod:`bernmodal.expr`.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ConfigError, ExprSyntaxError
from .expr import parse
from .problem import Problem
from .solver import BernsteinPetrovGalerkin
from .timefrac import SolutionHistory

__all__ = [
    "ProblemConfig",
    "ReportRow",
    "ErrorReport",
    "RunResult",
    "load_config",
    "build_problem",
    "error_linf",
    "convergence_rates",
    "run",
    "sweep",
    "emit",
    "FORMATS",
]

FORMATS = ("csv", "markdown", "plotdata")
CSV_HEADER = ("alpha", "N", "M", "tau", "linf_error", "rate", "seconds")
PLOT_HEADER = ("alpha", "N", "h", "linf_error", "ref_h4", "ref_h6")


@dataclass(frozen=True)
class ProblemConfig:
    alpha: tuple[float, ...]
    degrees: tuple[int, ...]
    coefficients: tuple[str, ...]
    M: int = 100
    T: float = 1.0
    order: int | None = None
    exact: str | None = None
    initial: str | None = None
    source: str = "manufactured"
    quad_points: int | None = None
    grid: int = 20
    out_dir: str = "."
    format: str = "csv"
    name: str = "problem"

    def __post_init__(self):
        n = len(self.coefficients) - 1
        if self.order is not None and self.order != n:
            raise ConfigError(f"order n={self.order} does not match the highest coefficient b{n}")
        if n < 1:
            raise ConfigError("at least b1 is required (spatial order n >= 1)")
        if not self.alpha or not all(0.0 < a <= 1.0 for a in self.alpha):
            raise ConfigError(f"alpha values must lie in (0, 1], got {self.alpha}")
        if not self.degrees or not all(N >= n for N in self.degrees):
            raise ConfigError(f"degrees N must be at least the order n={n}, got {self.degrees}")
        if self.M < 1:
            raise ConfigError("M must be at least 1")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.grid < 1:
            raise ConfigError("grid must be at least 1")
        if self.quad_points is not None and self.quad_points < 1:
            raise ConfigError("quad_points must be positive")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        if self.exact is None and (self.initial is None or self.source == "manufactured"):
            raise ConfigError("without an exact solution both initial and source expressions are required")
        self._check_expressions()

    def _check_expressions(self):
        fields = {f"b{r}": b for r, b in enumerate(self.coefficients)}
        fields.update(exact=self.exact, initial=self.initial)
        if self.source != "manufactured":
            fields["source"] = self.source
        for key, text in fields.items():
            if text is None:
                continue
            try:
                e = parse(str(text))
            except ExprSyntaxError as exc:
                raise ConfigError(f"{key} = {text!r}: {exc}") from None
            if key == f"b{self.n}" and not e.free_variables and e() == 0.0:
                raise ConfigError(f"leading coefficient {key} is zero")

    @property
    def n(self) -> int:
        return len(self.coefficients) - 1

    @property
    def tau(self) -> float:
        return self.T / self.M


def _split_list(value, conv):
    if isinstance(value, (list, tuple)):
        items = value
    elif isinstance(value, str):
        items = [v for v in value.replace(";", ",").split(",") if v.strip()]
    else:
        items = [value]
    try:
        return tuple(conv(v.strip() if isinstance(v, str) else v) for v in items)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read list {value!r}: {exc}") from None


def _int(v) -> int:
    f = float(v)
    if f != int(f):
        raise ValueError(f"{v!r} is not an integer")
    return int(f)


def _coefficients(problem: dict) -> tuple[str, ...]:
    coeffs: dict[int, str] = {}
    raw = problem.get("coefficients")
    if isinstance(raw, (list, tuple)):
        coeffs.update(enumerate(raw))
    elif isinstance(raw, dict):
        coeffs.update({int(k): v for k, v in raw.items()})
    elif raw is not None:
        raise ConfigError("coefficients must be a list or an object keyed by order")
    for key, v in problem.items():
        k = key.lower()
        if len(k) > 1 and k[0] == "b" and k[1:].isdigit():
            coeffs[int(k[1:])] = v
    if not coeffs:
        raise ConfigError("no operator coefficients (b0, b1, ...) given")
    n = max(coeffs)
    return tuple(str(coeffs.get(r, 0)) for r in range(n + 1))


def _from_sections(sections: dict) -> ProblemConfig:
    try:
        return _parse_sections(sections)
    except ConfigError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def _parse_sections(sections: dict) -> ProblemConfig:
    unknown = set(sections) - {"problem", "discretization", "output"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    prob = {k.lower(): v for k, v in sections.get("problem", {}).items()}
    disc = {k.lower(): v for k, v in sections.get("discretization", {}).items()}
    out = {k.lower(): v for k, v in sections.get("output", {}).items()}
    if "alpha" not in prob:
        raise ConfigError("[problem] alpha is required")
    if "n" not in disc:
        raise ConfigError("[discretization] N is required")
    T = float(prob.get("t", 1.0))
    if "m" in disc:
        M = _int(disc["m"])
    elif "tau" in disc:
        M = round(T / float(disc["tau"]))
        if not math.isclose(M * float(disc["tau"]), T, rel_tol=1e-9):
            raise ConfigError(f"tau={disc['tau']} does not divide T={T}")
    else:
        M = 100
    qp = disc.get("quad_points")
    return ProblemConfig(
        alpha=_split_list(prob["alpha"], float),
        degrees=_split_list(disc["n"], _int),
        coefficients=_coefficients(prob),
        M=M,
        T=T,
        order=_int(prob["order"]) if prob.get("order") not in (None, "") else None,
        exact=prob.get("exact") or None,
        initial=prob.get("initial") or None,
        source=prob.get("source") or "manufactured",
        quad_points=_int(qp) if qp not in (None, "") else None,
        grid=_int(disc.get("grid", 20)),
        out_dir=str(out.get("dir", ".")),
        format=str(out.get("format", "csv")),
        name=str(prob.get("name", "problem")),
    )


def load_config(path: str | Path) -> ProblemConfig:
    """Read an ``.ini``/``.cfg`` or ``.json`` config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return _from_sections(data)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return _from_sections({s: dict(parser[s]) for s in parser.sections()})


def build_problem(config: ProblemConfig, alpha: float) -> Problem:
    source = None if config.source == "manufactured" else config.source
    p = Problem.from_exact(alpha, config.coefficients, config.exact or "0", T=config.T,
                           initial=config.initial, source=source, name=config.name)
    return p if config.exact is not None else replace(p, exact=None)


@dataclass(frozen=True)
class ReportRow:
    alpha: float
    N: int
    M: int
    tau: float
    linf_error: float | None
    rate: float | None
    seconds: float

    def key(self) -> tuple:
        """Everything but the wall-clock time."""
        return (self.alpha, self.N, self.M, self.tau, self.linf_error, self.rate)


@dataclass
class ErrorReport:
    rows: list[ReportRow] = field(default_factory=list)
    name: str = ""
    T: float = 1.0
    grid: int = 20

    def alphas(self) -> list[float]:
        return list(dict.fromkeys(r.alpha for r in self.rows))

    def degrees(self) -> list[int]:
        return list(dict.fromkeys(r.N for r in self.rows))

    def block(self, alpha: float) -> list[ReportRow]:
        return [r for r in self.rows if r.alpha == alpha]

    def cell(self, alpha: float, N: int) -> ReportRow:
        for r in self.rows:
            if r.alpha == alpha and r.N == N:
                return r
        raise KeyError((alpha, N))

    def keys(self) -> list[tuple]:
        return [r.key() for r in self.rows]


@dataclass
class RunResult:
    estimator: BernsteinPetrovGalerkin
    history: SolutionHistory
    report: ErrorReport


def error_linf(exact, approx, T: float = 1.0, grid: int = 20) -> float:
    """Max of ``|u(x_i, T) - approx(x_i)|`` over ``x_i = i / grid``.

    ``approx`` may be a fitted solver (uses ``predict``) or any callable of ``x``.
    """
    x = np.linspace(0.0, 1.0, grid + 1)
    values = approx.predict(x) if hasattr(approx, "predict") else approx(x)
    ref = np.broadcast_to(np.asarray(exact(x, T), dtype=float), x.shape)
    return float(np.max(np.abs(ref - np.asarray(values, dtype=float))))


def convergence_rates(degrees: Sequence[int], errors: Sequence[float | None]) -> list[float | None]:
    """``ln(e1/e2) / ln(N2/N1)`` between consecutive rows; the first is None."""
    if len(degrees) != len(errors):
        raise ValueError("degrees and errors differ in length")
    rates: list[float | None] = [None] if degrees else []
    for (n1, e1), (n2, e2) in zip(zip(degrees, errors), zip(degrees[1:], errors[1:])):
        if e1 is None or e2 is None or e1 <= 0 or e2 <= 0 or n1 == n2:
            rates.append(None)
        else:
            rates.append(math.log(e1 / e2) / math.log(n2 / n1))
    return rates


def _estimator(config: ProblemConfig, N: int) -> BernsteinPetrovGalerkin:
    return BernsteinPetrovGalerkin(degree=N, n_steps=config.M, quad_points=config.quad_points)


def _cell(config: ProblemConfig, problem: Problem, N: int) -> tuple[BernsteinPetrovGalerkin, float | None, float]:
    est = _estimator(config, N)
    start = time.perf_counter()
    est.fit(problem)
    seconds = time.perf_counter() - start
    err = error_linf(problem.exact, est, problem.T, config.grid) if problem.exact is not None else None
    return est, err, seconds


def run(config: ProblemConfig, degree: int | None = None, alpha: float | None = None) -> RunResult:
    """Solve one cell (default: the first N and alpha of the config)."""
    N = config.degrees[0] if degree is None else int(degree)
    a = config.alpha[0] if alpha is None else float(alpha)
    problem = build_problem(config, a)
    est, err, seconds = _cell(config, problem, N)
    row = ReportRow(a, N, config.M, config.tau, err, None, seconds)
    report = ErrorReport([row], name=config.name, T=config.T, grid=config.grid)
    return RunResult(est, est.history_, report)


def sweep(config: ProblemConfig, degrees: Iterable[int] | None = None,
          alphas: Iterable[float] | None = None) -> ErrorReport:
    """Every (alpha, N) cell, rates computed within each alpha block."""
    degrees = tuple(config.degrees if degrees is None else degrees)
    alphas = tuple(config.alpha if alphas is None else alphas)
    rows: list[ReportRow] = []
    for a in alphas:
        problem = build_problem(config, a)
        cells = [_cell(config, problem, N) for N in degrees]
        rates = convergence_rates(degrees, [c[1] for c in cells])
        rows.extend(
            ReportRow(a, N, config.M, config.tau, err, rate, sec)
            for N, (_, err, sec), rate in zip(degrees, cells, rates)
        )
    return ErrorReport(rows, name=config.name, T=config.T, grid=config.grid)


def _sci(v: float | None) -> str:
    return "" if v is None else f"{v:.6e}"


def to_csv(report: ErrorReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.rows:
        w.writerow([_sci(r.alpha), r.N, r.M, _sci(r.tau), _sci(r.linf_error), _sci(r.rate), _sci(r.seconds)])
    return buf.getvalue()


def to_markdown(report: ErrorReport) -> str:
    """One row per N, an (error, rate) column pair per alpha."""
    alphas = report.alphas()
    head = "| N | " + " | ".join(f"L∞ (α={a:g}) | rate" for a in alphas) + " |"
    sep = "|---|" + "---|---|" * len(alphas)
    lines = [head, sep]
    for N in report.degrees():
        cells = []
        for a in alphas:
            try:
                r = report.cell(a, N)
            except KeyError:
                cells += ["", ""]
                continue
            cells.append("" if r.linf_error is None else f"{r.linf_error:.2E}")
            cells.append("" if r.rate is None else f"{r.rate:.2f}")
        lines.append(f"| {N} | " + " | ".join(cells) + " |")
    if report.rows:
        r0 = report.rows[0]
        lines.append("")
        lines.append(f"tau = {r0.tau:g}, M = {r0.M}, T = {report.T:g}, grid = {report.grid}")
    return "\n".join(lines) + "\n"


def plot_rows(report: ErrorReport) -> list[tuple]:
    """``(alpha, N, h, error, ref_h4, ref_h6)`` with references anchored at each block's first row."""
    out = []
    for a in report.alphas():
        block = report.block(a)
        if not block:
            continue
        h0, e0 = 1.0 / block[0].N, block[0].linf_error
        for r in block:
            h = 1.0 / r.N
            if e0 is None:
                out.append((a, r.N, h, r.linf_error, None, None))
            else:
                out.append((a, r.N, h, r.linf_error, e0 * (h / h0) ** 4, e0 * (h / h0) ** 6))
    return out


def to_plotdata(report: ErrorReport) -> str:
    buf = io.StringIO()
    buf.write(" ".join(PLOT_HEADER) + "\n")
    for a, N, h, e, r4, r6 in plot_rows(report):
        buf.write(" ".join([_sci(a), str(N), _sci(h), _sci(e) or "nan", _sci(r4) or "nan", _sci(r6) or "nan"]) + "\n")
    return buf.getvalue()


_WRITERS = {"csv": (to_csv, ".csv"), "markdown": (to_markdown, ".md"), "plotdata": (to_plotdata, ".dat")}


def emit(report: ErrorReport, format: str = "csv", out_dir: str | Path = ".", stem: str | None = None) -> Path:
    """Write the report in ``format`` to ``out_dir`` and return the file path."""
    if format not in _WRITERS:
        raise ValueError(f"unknown format {format!r}; choose from {', '.join(FORMATS)}")
    render, suffix = _WRITERS[format]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem or report.name or 'report'}{suffix}"
    path.write_text(render(report))
    return path

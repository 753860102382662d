"""Manufactured test problem with exact solution ``t^alpha x(1-x) y(1-y)``.

Also holds the error measurement and the convergence tables for space,
uniform-time and graded-time refinement.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .caputo import gamma
from .exceptions import ParameterDomainError
from .stepper import ProblemSpec, Stepper
from .time_mesh import GRADED, TWO_PART, UNIFORM, build_mesh

CSV_HEADER = ("M", "N", "alpha", "r", "mesh_kind", "error_l2", "rate_l2", "error_h1", "rate_h1")

# expected table entries, used by the --check comparisons
REFERENCE_VALUES = {
    1: {0.4: {"l2": [1.88e-02, 5.71e-03, 1.51e-03, 3.89e-04],
              "h1": [8.24e-02, 4.38e-02, 2.22e-02, 1.11e-02]},
        0.6: {"l2": [1.88e-02, 5.71e-03, 1.51e-03, 3.83e-04],
              "h1": [8.25e-02, 4.38e-02, 2.22e-02, 1.11e-02]}},
    2: {0.4: {"N": [15, 55, 243, 1191], "rate": [None, 0.468, 0.451, 0.432]},
        0.6: {"N": [6, 14, 38, 112], "rate": [None, 0.661, 0.648, 0.627]}},
    3: {0.4: {"l2": [2.21e-02, 8.52e-03, 2.77e-03, 8.06e-04]},
        0.6: {"l2": [2.06e-02, 7.27e-03, 2.15e-03, 5.85e-04]}},
    4: {0.4: {"l2": [2.07e-02, 6.76e-03, 1.91e-03, 4.75e-04]},
        0.6: {"l2": [1.96e-02, 6.49e-03, 1.73e-03, 4.41e-04]}},
}


def bubble(x, y):
    return (x - x * x) * (y - y * y)


def bubble_grad(x, y):
    return (1 - 2 * x) * (y - y * y), (x - x * x) * (1 - 2 * y)


def bubble_laplacian(x, y):
    return 2.0 * (x * x + y * y - x - y)


# int_Omega |grad(bubble)|^2
BUBBLE_GRADSQ = 1.0 / 45.0


def exact_solution(alpha, x, y, t):
    return t**alpha * bubble(x, y)


def source_eval(alpha, x, y, t):
    """Right-hand side that makes ``t^alpha x(1-x) y(1-y)`` exact."""
    time_factor = t**alpha + t ** (3 * alpha) / 45.0 - t ** (1 + alpha) / (1 + alpha)
    return gamma(1 + alpha) * bubble(x, y) - time_factor * bubble_laplacian(x, y)


@dataclass
class ManufacturedProblem:
    alpha: float
    T: float = 1.0

    def exact(self, t):
        return lambda x, y: exact_solution(self.alpha, x, y, t)

    def exact_grad(self, t):
        scale = t**self.alpha

        def grad(x, y):
            gx, gy = bubble_grad(x, y)
            return scale * gx, scale * gy

        return grad

    def source(self, x, y, t):
        return source_eval(self.alpha, x, y, t)

    def spec(self, mesh, tri, **kwargs) -> ProblemSpec:
        return ProblemSpec(alpha=self.alpha, mesh=mesh, tri=tri, source=self.source, **kwargs)


def verify_manufactured(alpha, n_samples: int = 5) -> dict:
    """Substitute the exact solution into the PDE term by term.

    Every term is built from its own closed form (Caputo power rule,
    Kirchhoff coefficient from the gradient integral, antiderivative of the
    memory term) and compared with :func:`source_eval` on a sample grid.
    """
    grid = np.linspace(0.0, 1.0, n_samples)
    x, y, t = np.meshgrid(grid, grid, grid, indexing="ij")
    lap = bubble_laplacian(x, y)
    caputo = gamma(1 + alpha) * bubble(x, y)                      # D^alpha t^alpha = Gamma(1+alpha)
    coeff = 1.0 + t ** (2 * alpha) * BUBBLE_GRADSQ                # 1 + ||grad u(t)||^2
    diffusion = -coeff * t**alpha * lap
    memory = t ** (1 + alpha) / (1 + alpha) * lap                 # int_0^t Lap u ds
    residual = caputo + diffusion - (source_eval(alpha, x, y, t) - memory)
    return {"alpha": alpha, "max_residual": float(np.max(np.abs(residual))), "samples": residual.size}


def rate(e1, e2, d1, d2) -> float:
    """Observed order ``log(e1/e2) / log(d1/d2)``."""
    if min(e1, e2, d1, d2) <= 0:
        raise ParameterDomainError("rates need positive errors and discretisation parameters")
    return math.log(e1 / e2) / math.log(d1 / d2)


def space_step(M: int) -> float:
    return 1.0 / (M - 1)


@dataclass
class SolveResult:
    M: int
    N: int
    alpha: float
    r: float
    mesh_kind: str
    error_l2: float
    error_h1: float
    levels_l2: np.ndarray = field(repr=False)
    levels_h1: np.ndarray = field(repr=False)
    report: object = field(repr=False, default=None)


def solve_and_measure(alpha, M, N, r=1.0, mesh_kind=UNIFORM, **spec_kwargs) -> SolveResult:
    """Run the benchmark and return max-over-levels errors for ``n = 1..N``."""
    problem = ManufacturedProblem(alpha)
    mesh = build_mesh(mesh_kind, problem.T, N, r)
    tri = fem.build_square_mesh(M)
    stepper = Stepper(problem.spec(mesh, tri, **spec_kwargs))
    history, report = stepper.run()
    integ = fem.ErrorIntegrator(tri)
    l2 = np.empty(N)
    h1 = np.empty(N)
    for n in range(1, N + 1):
        t = mesh.nodes[n]
        l2[n - 1], h1[n - 1] = integ.errors(history[n], problem.exact(t), problem.exact_grad(t))
    return SolveResult(M=M, N=N, alpha=alpha, r=float(mesh.r), mesh_kind=mesh.kind,
                       error_l2=float(l2.max()), error_h1=float(h1.max()),
                       levels_l2=l2, levels_h1=h1, report=report)


@dataclass
class RateRow:
    M: int
    N: int
    alpha: float
    r: float
    mesh_kind: str
    error_l2: float
    error_h1: float
    rate_l2: float | None = None
    rate_h1: float | None = None


@dataclass
class RateTable:
    title: str
    rows: list[RateRow]
    # "space": rates against h = 1/(M-1); "time": against 1/N
    rate_variable: str = "space"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow([
                row.M, row.N, f"{row.alpha:g}", f"{row.r:.12g}", row.mesh_kind,
                f"{row.error_l2:.6e}", _fmt_rate(row.rate_l2, ""),
                f"{row.error_h1:.6e}", _fmt_rate(row.rate_h1, ""),
            ])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [self.title,
                 f"{'M':>4} {'N':>6} {'Error-1':>11} {'R-1':>7} {'Error-2':>11} {'R-2':>7}"]
        for row in self.rows:
            lines.append(
                f"{row.M:>4} {row.N:>6} {row.error_l2:>11.3e} {_fmt_rate(row.rate_l2):>7} "
                f"{row.error_h1:>11.3e} {_fmt_rate(row.rate_h1):>7}"
            )
        return "\n".join(lines)


def _fmt_rate(value, blank="-----"):
    return blank if value is None else f"{value:.3f}"


def _build_table(title, results, rate_variable):
    rows = []
    prev = None
    for res in results:
        row = RateRow(M=res.M, N=res.N, alpha=res.alpha, r=res.r, mesh_kind=res.mesh_kind,
                      error_l2=res.error_l2, error_h1=res.error_h1)
        if prev is not None:
            if rate_variable == "space":
                d1, d2 = space_step(prev.M), space_step(row.M)
            else:
                d1, d2 = 1.0 / prev.N, 1.0 / row.N
            row.rate_l2 = rate(prev.error_l2, row.error_l2, d1, d2)
            row.rate_h1 = rate(prev.error_h1, row.error_h1, d1, d2)
        rows.append(row)
        prev = row
    return RateTable(title=title, rows=rows, rate_variable=rate_variable)


def table_space(alpha, N_fixed=150, r=1.0, M_list=(3, 5, 9, 17), **kwargs) -> RateTable:
    """Spatial refinement at a fixed fine time mesh."""
    kind = UNIFORM if r == 1 else GRADED
    results = [solve_and_measure(alpha, M, N_fixed, r, kind, **kwargs) for M in M_list]
    return _build_table(f"space refinement, alpha={alpha:g}, N={N_fixed}, r={r:g}", results, "space")


def uniform_time_steps(M, alpha) -> int:
    # the small offset keeps floor() exact when M^(1/alpha) is an integer
    return int(math.floor(M ** (1.0 / alpha) + 1e-9))


def table_time_uniform(alpha, M_list=(3, 5, 9, 17), **kwargs) -> RateTable:
    """Uniform time mesh with ``N = floor(M^(1/alpha))``; rates against ``1/N``."""
    results = [solve_and_measure(alpha, M, uniform_time_steps(M, alpha), 1.0, UNIFORM, **kwargs)
               for M in M_list]
    return _build_table(f"uniform time mesh, alpha={alpha:g}, N=floor(M^(1/alpha))", results, "time")


def table_time_graded(alpha, r=None, mesh_kind=TWO_PART, MN_list=(3, 5, 9, 17), **kwargs) -> RateTable:
    """Graded or two-part time mesh with ``M = N``.

    Rates use ``h = 1/(M-1)``.  With ``M = N`` this differs from ``1/N``
    by a factor that tends to one.
    """
    r = 2.0 / alpha if r is None else r
    if mesh_kind not in (GRADED, TWO_PART):
        raise ParameterDomainError(f"graded table needs a graded or two-part mesh, got {mesh_kind!r}")
    results = [solve_and_measure(alpha, k, k, r, mesh_kind, **kwargs) for k in MN_list]
    return _build_table(f"{mesh_kind} time mesh, alpha={alpha:g}, r={r:g}, M=N", results, "space")

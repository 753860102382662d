"""Command-line front end: ``solve``, ``table`` and ``verify``.

Exit codes: 0 success, 1 numerical failure or failed check, 2 bad configuration.
The output directory defaults to ``$KIRCHFRAC_OUTPUT_DIR`` or the working
directory.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import benchmark, fem
from .exceptions import NumericalError, ParameterDomainError
from .linalg import SOLVER_MODES
from .stepper import Stepper
from .time_mesh import MESH_KINDS, TWO_PART, UNIFORM, build_mesh

log = logging.getLogger("kirchfrac")

OUTPUT_ENV = "KIRCHFRAC_OUTPUT_DIR"
EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


@dataclass
class RunConfig:
    alpha: float = 0.5
    sigma: float | None = None
    T: float = 1.0
    N: int = 16
    M: int = 9
    r: float = 1.0
    mesh_kind: str = UNIFORM
    newton_tol: float = 1e-7
    newton_max_iter: int = 50
    solver_mode: str = "direct"
    source_mode: str = "l2"
    output_path: str | None = None

    def validate(self):
        if not 0 < self.alpha < 1:
            raise ParameterDomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.sigma is not None and not 0 <= self.sigma < 1:
            raise ParameterDomainError(f"sigma must lie in [0, 1), got {self.sigma}")
        if self.mesh_kind not in MESH_KINDS:
            raise ParameterDomainError(f"mesh_kind must be one of {MESH_KINDS}")
        if self.solver_mode not in SOLVER_MODES:
            raise ParameterDomainError(f"solver_mode must be one of {SOLVER_MODES}")
        if self.source_mode not in ("l2", "nodal"):
            raise ParameterDomainError("source_mode must be 'l2' or 'nodal'")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise ParameterDomainError("Newton tolerance and iteration cap must be positive")
        # mesh constructors carry the remaining domain checks
        build_mesh(self.mesh_kind, self.T, self.N, self.r)
        fem.build_square_mesh(self.M)
        return self


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, value):
    kind = _TYPES[key]
    if value in ("", "none", "None"):
        return None
    if "int" in kind:
        return int(value)
    if "float" in kind:
        return float(value)
    return value


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterDomainError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ParameterDomainError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError as exc:
            raise ParameterDomainError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def output_dir(explicit=None) -> Path:
    path = Path(explicit or os.environ.get(OUTPUT_ENV, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _config_from_args(args) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for name in _TYPES:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    return RunConfig(**values).validate()


def cmd_solve(config: RunConfig, field_path=None) -> int:
    problem = benchmark.ManufacturedProblem(config.alpha, T=config.T)
    mesh = build_mesh(config.mesh_kind, config.T, config.N, config.r)
    tri = fem.build_square_mesh(config.M)
    spec = problem.spec(
        mesh, tri, sigma=config.sigma, solver_mode=config.solver_mode,
        source_mode=config.source_mode, newton_tol=config.newton_tol,
        newton_max_iter=config.newton_max_iter,
    )
    history, report = Stepper(spec).run()
    integ = fem.ErrorIntegrator(tri)
    path = Path(config.output_path) if config.output_path else output_dir() / "levels.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "t", "norm_l2", "norm_h1", "weighted_norm", "kirchhoff",
                         "error_l2", "error_h1"])
        for n in range(1, mesh.N + 1):
            t = mesh.nodes[n]
            e0, e1 = integ.errors(history[n], problem.exact(t), problem.exact_grad(t))
            i = n - 1
            writer.writerow([n, f"{t:.15e}", f"{report.l2[i]:.10e}", f"{report.h1[i]:.10e}",
                             f"{report.weighted[i]:.10e}", f"{report.kirchhoff[i]:.10e}",
                             f"{e0:.10e}", f"{e1:.10e}"])
    log.info("newton: %s", report.newton)
    print(f"wrote {path} ({mesh.N} levels, {report.elapsed:.2f}s)")
    if field_path:
        field_path = Path(field_path)
        field_path.parent.mkdir(parents=True, exist_ok=True)
        u_exact = problem.exact(config.T)(tri.nodes[:, 0], tri.nodes[:, 1])
        data = np.column_stack([tri.nodes, tri.to_full(history[mesh.N]), u_exact])
        np.savetxt(field_path, data, header="x y u_h u_exact", comments="# ", fmt="%.10e")
        print(f"wrote {field_path}")
    return EXIT_OK


def build_table(table_id: int, alpha: float, include_slow: bool = True):
    if table_id == 1:
        return benchmark.table_space(alpha)
    if table_id == 2:
        m_list = (3, 5, 9, 17)
        if not include_slow:
            m_list = tuple(m for m in m_list if benchmark.uniform_time_steps(m, alpha) <= 300)
        return benchmark.table_time_uniform(alpha, M_list=m_list)
    if table_id == 3:
        return benchmark.table_time_graded(alpha, mesh_kind="graded")
    if table_id == 4:
        return benchmark.table_time_graded(alpha, mesh_kind=TWO_PART)
    raise ParameterDomainError(f"unknown table id {table_id}")


def check_table(table_id: int, table) -> list[tuple[str, bool, str]]:
    """Tolerance checks of a reproduced table; returns ``(name, passed, detail)``."""
    rows = table.rows
    last = rows[-1]
    alpha = last.alpha
    reference = benchmark.REFERENCE_VALUES[table_id].get(alpha)
    checks = []

    def within_factor(name, value, ref):
        ok = ref / 2 <= value <= 2 * ref
        checks.append((name, ok, f"{value:.3e} vs {ref:.3e}"))

    if table_id == 1:
        checks.append(("final L2 rate in [1.85, 2.15]", 1.85 <= last.rate_l2 <= 2.15, f"{last.rate_l2:.3f}"))
        checks.append(("final H1 rate in [0.90, 1.10]", 0.90 <= last.rate_h1 <= 1.10, f"{last.rate_h1:.3f}"))
        if reference and last.M == 17:
            within_factor("M=17 L2 error within factor 2", last.error_l2, reference["l2"][-1])
            within_factor("M=17 H1 error within factor 2", last.error_h1, reference["h1"][-1])
    elif table_id == 2:
        for row in rows[1:]:
            ok = alpha - 0.1 <= row.rate_h1 <= alpha + 0.1
            checks.append((f"M={row.M} rate in [{alpha - 0.1:.1f}, {alpha + 0.1:.1f}]", ok, f"{row.rate_h1:.3f}"))
    elif table_id == 3:
        rates = [row.rate_l2 for row in rows[1:]]
        checks.append(("rates increasing", all(b > a for a, b in zip(rates, rates[1:])),
                       ", ".join(f"{x:.3f}" for x in rates)))
        checks.append(("final rate >= 1.7", last.rate_l2 >= 1.7, f"{last.rate_l2:.3f}"))
    elif table_id == 4:
        checks.append(("final rate in [1.85, 2.15]", 1.85 <= last.rate_l2 <= 2.15, f"{last.rate_l2:.3f}"))
        if reference and last.M == 17:
            within_factor("M=N=17 error within factor 2", last.error_l2, reference["l2"][-1])
    return checks


def _table_job(job):
    table_id, alpha, include_slow = job
    return build_table(table_id, alpha, include_slow)


def cmd_table(table_id: int, alpha_list, check=False, jobs=1, include_slow=True, out=None) -> int:
    jobs_list = [(table_id, a, include_slow) for a in alpha_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            tables = list(pool.map(_table_job, jobs_list))
    else:
        tables = [_table_job(j) for j in jobs_list]
    directory = output_dir(out)
    failed = False
    for alpha, table in zip(alpha_list, tables):
        # with_suffix would eat the decimal part of alpha
        stem = f"table{table_id}_alpha{alpha:g}"
        (directory / f"{stem}.csv").write_text(table.to_csv())
        (directory / f"{stem}.txt").write_text(table.to_text() + "\n")
        print(table.to_text())
        if check:
            for name, ok, detail in check_table(table_id, table):
                print(f"  [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
                failed |= not ok
        print()
    return EXIT_NUMERICAL if failed else EXIT_OK


def verification_checks() -> list[tuple[str, bool, str]]:
    """Fast property checks of the weights, the quadrature and the test problem."""
    from .caputo import apply_discrete_caputo, caputo_row, gamma
    from .memory import memory_weights, quadrature_error_probe
    from .time_mesh import build_graded, build_two_part

    results = []
    meshes = [build_graded(1.0, 32, 5.0), build_two_part(1.0, 17, 2 / 0.6), build_graded(1.0, 20, 1.0)]
    for alpha in (0.4, 0.6):
        sigma = alpha / 2
        ok_weights = ok_const = ok_linear = True
        for mesh in meshes:
            for n in range(1, mesh.N + 1):
                row = caputo_row(mesh, n, sigma, alpha)
                ok_weights &= bool(np.all(row.c > 0) and np.all(np.diff(row.c) > 0))
                ok_const &= apply_discrete_caputo(row, np.full(n + 1, 3.0)) == 0.0
                t_ns = (1 - sigma) * mesh.nodes[n] + sigma * mesh.nodes[n - 1]
                want = t_ns ** (1 - alpha) / gamma(2 - alpha)
                got = apply_discrete_caputo(row, mesh.nodes[: n + 1])
                ok_linear &= abs(got - want) <= 1e-12 * want
        results.append((f"alpha={alpha}: weights positive and increasing", ok_weights, ""))
        results.append((f"alpha={alpha}: constants annihilated", ok_const, ""))
        results.append((f"alpha={alpha}: exact on u=t", ok_linear, ""))

        ok_sum = True
        for mesh in meshes:
            for n in range(3, mesh.N + 1):
                w = memory_weights(mesh, n, sigma).tau_tilde
                t_ns = (1 - sigma) * mesh.nodes[n] + sigma * mesh.nodes[n - 1]
                ok_sum &= abs(w.sum() - (t_ns - mesh.nodes[1])) <= 1e-14
        results.append((f"alpha={alpha}: memory weights integrate constants", ok_sum, ""))
        errs = []
        for N in (16, 32, 64):
            mesh = build_graded(1.0, N, 2 / alpha)
            errs.append(max(quadrature_error_probe(mesh, n, sigma, lambda t: t**alpha)
                            for n in range(2, N + 1)))
        order = np.log2(errs[-2] / errs[-1])
        results.append((f"alpha={alpha}: memory quadrature order >= 1.8", order >= 1.8, f"{order:.3f}"))

    for alpha in (0.4, 0.5, 0.6):
        res = benchmark.verify_manufactured(alpha)["max_residual"]
        results.append((f"alpha={alpha}: manufactured residual <= 1e-10", res <= 1e-10, f"{res:.2e}"))
    return results


def cmd_verify() -> int:
    failed = False
    for name, ok, detail in verification_checks():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
        failed |= not ok
    return EXIT_NUMERICAL if failed else EXIT_OK


def _add_solve_args(p):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--alpha", type=float)
    p.add_argument("--sigma", type=float, help="offset of the evaluation point (default alpha/2)")
    p.add_argument("--T", type=float)
    p.add_argument("--N", type=int, help="time intervals")
    p.add_argument("--M", type=int, help="nodes per side of the square")
    p.add_argument("--r", type=float, help="grading exponent (>= 1)")
    p.add_argument("--mesh-kind", dest="mesh_kind", choices=MESH_KINDS)
    p.add_argument("--newton-tol", dest="newton_tol", type=float)
    p.add_argument("--newton-max-iter", dest="newton_max_iter", type=int)
    p.add_argument("--solver-mode", dest="solver_mode", choices=SOLVER_MODES)
    p.add_argument("--source-mode", dest="source_mode", choices=("l2", "nodal"))
    p.add_argument("--output", dest="output_path", help="per-level CSV path")
    p.add_argument("--field", help="write the final field as an 'x y u_h u_exact' table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kirchfrac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one solve of the manufactured problem")
    _add_solve_args(solve)

    table = sub.add_parser("table", help="reproduce a convergence table")
    table.add_argument("--id", dest="table_id", type=int, choices=(1, 2, 3, 4), required=True)
    table.add_argument("--alpha", dest="alphas", type=float, action="append")
    table.add_argument("--check", action="store_true", help="exit 1 if a tolerance check fails")
    table.add_argument("--jobs", type=int, default=1)
    table.add_argument("--skip-slow", action="store_true", help="drop table-2 rows with N > 300")
    table.add_argument("--output-dir")

    sub.add_parser("verify", help="run the fast property checks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            try:
                config = _config_from_args(args)
            except (ParameterDomainError, OSError) as exc:
                print(f"kirchfrac solve: configuration error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            return cmd_solve(config, args.field)
        if args.command == "table":
            alphas = args.alphas or [0.4, 0.6]
            for a in alphas:
                if not 0 < a < 1:
                    print(f"kirchfrac table: alpha must lie in (0, 1), got {a}", file=sys.stderr)
                    return EXIT_CONFIG
            return cmd_table(args.table_id, alphas, check=args.check, jobs=args.jobs,
                             include_slow=not args.skip_slow, out=args.output_dir)
        return cmd_verify()
    except NumericalError as exc:
        print(f"kirchfrac: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

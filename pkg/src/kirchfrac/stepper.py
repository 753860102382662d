"""Time stepping for the Kirchhoff-type fractional integro-differential problem

    D^alpha u - (1 + ||grad u||^2) Lap u = f - int_0^t Lap u ds   on (0,1)^2,

with homogeneous Dirichlet data.  Level 1 is nonlinear and solved by Newton
in the sigma-averaged unknown; levels n >= 2 freeze the Kirchhoff
coefficient at an extrapolated state and are linear.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fem
from .caputo import CaputoRow, caputo_row
from .exceptions import (
    BreakdownError,
    IndefiniteSystemError,
    NonConvergenceError,
    NumericalError,
    ParameterDomainError,
)
from .linalg import DIRECT, SOLVER_MODES, SpdSolver, solve_rank_one
from .memory import memory_weights
from .time_mesh import TimeMesh

log = logging.getLogger(__name__)

SOURCE_L2 = "l2"
SOURCE_NODAL = "nodal"


def kirchhoff(s: float) -> float:
    """Diffusion coefficient as a function of ``s = ||grad u||^2``."""
    return 1.0 + s


@dataclass
class ProblemSpec:
    """Discrete problem data.

    ``source(x, y, t)`` and ``u0(x, y)`` must accept numpy arrays.  ``u0=None``
    means a zero initial datum.  ``sigma`` defaults to ``alpha / 2``.
    """

    alpha: float
    mesh: TimeMesh
    tri: fem.Triangulation
    source: Callable
    u0: Callable | None = None
    u0_grad: Callable | None = None
    sigma: float | None = None
    source_mode: str = SOURCE_L2
    solver_mode: str = DIRECT
    newton_tol: float = 1e-7
    newton_max_iter: int = 50

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterDomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.sigma is None:
            self.sigma = self.alpha / 2.0
        if not 0 <= self.sigma < 1:
            raise ParameterDomainError(f"sigma must lie in [0, 1), got {self.sigma}")
        if self.source_mode not in (SOURCE_L2, SOURCE_NODAL):
            raise ParameterDomainError(f"unknown source mode {self.source_mode!r}")
        if self.solver_mode not in SOLVER_MODES:
            raise ParameterDomainError(f"unknown solver mode {self.solver_mode!r}")


class StateHistory:
    """Append-only store of ``u_h^0, u_h^1, ...`` with cached ``||grad u_h^j||^2``."""

    def __init__(self, n_dofs: int, capacity: int):
        self._u = np.zeros((capacity, n_dofs))
        self.gradsq: list[float] = []

    def __len__(self):
        return len(self.gradsq)

    def append(self, u, gradsq: float) -> None:
        n = len(self)
        if n == self._u.shape[0]:
            self._u = np.vstack([self._u, np.zeros_like(self._u)])
        self._u[n] = u
        self.gradsq.append(float(gradsq))

    @property
    def u(self) -> np.ndarray:
        """Read-only view of the stored levels, shape ``(len, n_dofs)``."""
        view = self._u[: len(self)]
        view.flags.writeable = False
        return view

    def __getitem__(self, j):
        return self.u[j]


@dataclass
class NewtonReport:
    iterations: int
    final_residual: float
    converged: bool
    method: str = "newton"


@dataclass
class RunReport:
    """Per-level diagnostics for ``n = 1..N`` (index 0 holds level 1)."""

    times: np.ndarray
    l2: np.ndarray
    h1: np.ndarray
    weighted: np.ndarray
    kirchhoff: np.ndarray
    newton: NewtonReport
    elapsed: float
    step_seconds: np.ndarray = field(repr=False, default=None)


def sigma_average(u_n, u_nm1, sigma: float) -> np.ndarray:
    u_n = np.asarray(u_n, dtype=float)
    u_nm1 = np.asarray(u_nm1, dtype=float)
    if u_n.shape != u_nm1.shape:
        raise ValueError(f"dimension mismatch: {u_n.shape} vs {u_nm1.shape}")
    return (1.0 - sigma) * u_n + sigma * u_nm1


def extrapolate_tilde(history, mesh: TimeMesh, n: int, sigma: float) -> np.ndarray:
    """Two-level extrapolation of the state to ``t_{n-sigma}``."""
    if n < 2 or len(history) < n:
        raise ValueError(f"extrapolation to level {n} needs levels {n - 2} and {n - 1}")
    u1 = history[n - 1]
    u2 = history[n - 2]
    ratio = mesh.tau(n) / mesh.tau(n - 1)
    return u1 + (1.0 - sigma) * ratio * (u1 - u2)


class Stepper:
    """Assembled operators and per-level solves for one ``ProblemSpec``."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.mass = fem.assemble_mass(spec.tri)
        self.stiff = fem.assemble_stiffness(spec.tri)
        self._rows: dict[int, CaputoRow] = {}

    def row(self, n: int) -> CaputoRow:
        if n not in self._rows:
            self._rows[n] = caputo_row(self.spec.mesh, n, self.spec.sigma, self.spec.alpha)
        return self._rows[n]

    def gradsq(self, v) -> float:
        return float(v @ (self.stiff @ v))

    def source_load(self, n: int) -> np.ndarray:
        """``(f_h^{n-sigma}, phi_i)``; equals the load of ``f`` in L2 mode."""
        spec = self.spec
        t = (1.0 - spec.sigma) * spec.mesh.nodes[n] + spec.sigma * spec.mesh.nodes[n - 1]

        def f(x, y):
            return spec.source(x, y, t)

        if spec.source_mode == SOURCE_L2:
            return fem.load_vector(spec.tri, f)
        return self.mass @ fem.interpolate(spec.tri, f)

    def initial_state(self) -> np.ndarray:
        spec = self.spec
        if spec.u0 is None:
            return np.zeros(spec.tri.n_dofs)
        return fem.ritz_project_u0(spec.tri, spec.u0, spec.u0_grad, stiffness=self.stiff)

    # level 1 -----------------------------------------------------------

    def first_level_residual(self, v, u0, load) -> np.ndarray:
        """Residual of the level-1 equation in ``v = u^{1,sigma}``, scaled by 1/(1-sigma)."""
        spec = self.spec
        s1 = 1.0 - spec.sigma
        c11 = self.row(1).c[0]
        kappa = memory_weights(spec.mesh, 1, spec.sigma).first_level_coeff
        Av = self.stiff @ v
        return (c11 / s1) * (self.mass @ (v - u0)) + (kirchhoff(v @ Av) - kappa) * Av - load

    def step_first(self, u0, load=None) -> tuple[np.ndarray, NewtonReport]:
        """Solve level 1; ``load`` overrides the source load vector."""
        spec = self.spec
        s1 = 1.0 - spec.sigma
        c11 = self.row(1).c[0]
        kappa = memory_weights(spec.mesh, 1, spec.sigma).first_level_coeff
        if kirchhoff(0.0) - kappa <= 0.0:
            raise IndefiniteSystemError(
                f"memory coefficient (1-sigma)*tau_1 = {kappa:.4g} destroys coercivity "
                "of the first-level system; refine the first step"
            )
        load = self.source_load(1) if load is None else np.asarray(load, dtype=float)
        tol = spec.newton_tol

        def residual(v):
            return self.first_level_residual(v, u0, load)

        v = np.array(u0, dtype=float)
        res = residual(v)
        rnorm = float(np.linalg.norm(res))
        it = 0
        while rnorm > tol and it < spec.newton_max_iter:
            it += 1
            Av = self.stiff @ v
            B = (c11 / s1) * self.mass + (kirchhoff(v @ Av) - kappa) * self.stiff
            try:
                delta = solve_rank_one(B, Av, 2.0, -res, mode=spec.solver_mode)
            except BreakdownError as exc:
                raise IndefiniteSystemError(f"first-level Jacobian is not SPD: {exc}") from exc
            step = 1.0
            while True:
                trial = v + step * delta
                trial_res = residual(trial)
                trial_norm = float(np.linalg.norm(trial_res))
                if trial_norm < rnorm or step < 2.0**-20:
                    break
                step *= 0.5
            if trial_norm >= rnorm:
                log.info("Newton line search stalled at residual %.3e; switching to Picard", rnorm)
                return self._picard_first(v, u0, load, it)
            v, res, rnorm = trial, trial_res, trial_norm
        if rnorm > tol:
            raise NonConvergenceError(
                f"Newton did not reach {tol:g} in {spec.newton_max_iter} iterations "
                f"(residual {rnorm:.3e})"
            )
        u1 = (v - spec.sigma * u0) / s1
        return u1, NewtonReport(iterations=it, final_residual=rnorm, converged=True)

    def _picard_first(self, v, u0, load, it):
        spec = self.spec
        s1 = 1.0 - spec.sigma
        c11 = self.row(1).c[0]
        kappa = memory_weights(spec.mesh, 1, spec.sigma).first_level_coeff
        rhs = load + (c11 / s1) * (self.mass @ u0)
        rnorm = float(np.linalg.norm(self.first_level_residual(v, u0, load)))
        while rnorm > spec.newton_tol and it < spec.newton_max_iter:
            it += 1
            B = (c11 / s1) * self.mass + (kirchhoff(self.gradsq(v)) - kappa) * self.stiff
            v = SpdSolver(B, mode=spec.solver_mode).solve(rhs)
            rnorm = float(np.linalg.norm(self.first_level_residual(v, u0, load)))
        if rnorm > spec.newton_tol:
            raise NonConvergenceError(
                f"Picard fallback did not reach {spec.newton_tol:g} (residual {rnorm:.3e})"
            )
        u1 = (v - spec.sigma * u0) / s1
        return u1, NewtonReport(iterations=it, final_residual=rnorm, converged=True, method="picard")

    # levels n >= 2 -----------------------------------------------------

    def linear_system(self, history, n: int):
        """Matrix, right-hand side and Kirchhoff coefficient of level ``n``."""
        spec = self.spec
        sigma = spec.sigma
        U = history.u if isinstance(history, StateHistory) else np.asarray(history)
        w = self.row(n).operator_weights()
        tilde = extrapolate_tilde(U, spec.mesh, n, sigma)
        D = kirchhoff(self.gradsq(tilde))
        matrix = w[n] * self.mass + (D * (1.0 - sigma)) * self.stiff
        caputo_hist = w[:n] @ U[:n]
        memory_hist = memory_weights(spec.mesh, n, sigma).tau_tilde @ U[1:n]
        rhs = (self.source_load(n)
               - self.mass @ caputo_hist
               - (D * sigma) * (self.stiff @ U[n - 1])
               + self.stiff @ memory_hist)
        return matrix, rhs, D

    def step_linear(self, history, n: int) -> np.ndarray:
        if n < 2:
            raise ValueError("linear steps start at level 2")
        if len(history) < n:
            raise ValueError(f"history holds {len(history)} levels, level {n} needs {n}")
        matrix, rhs, _ = self.linear_system(history, n)
        return SpdSolver(matrix, mode=self.spec.solver_mode).solve(rhs)

    # full run ----------------------------------------------------------

    def run(self) -> tuple[StateHistory, RunReport]:
        spec = self.spec
        N = spec.mesh.N
        start = time.perf_counter()
        history = StateHistory(spec.tri.n_dofs, N + 1)
        u0 = self.initial_state()
        history.append(u0, self.gradsq(u0))
        kirch = np.empty(N)
        step_seconds = np.empty(N)

        t0 = time.perf_counter()
        try:
            u1, newton = self.step_first(u0)
        except NumericalError as exc:
            raise type(exc)(f"level 1: {exc}") from exc
        history.append(u1, self.gradsq(u1))
        kirch[0] = kirchhoff(self.gradsq(sigma_average(u1, u0, spec.sigma)))
        step_seconds[0] = time.perf_counter() - t0

        for n in range(2, N + 1):
            t0 = time.perf_counter()
            try:
                matrix, rhs, D = self.linear_system(history, n)
                un = SpdSolver(matrix, mode=spec.solver_mode).solve(rhs)
            except NumericalError as exc:
                raise type(exc)(f"level {n}: {exc}") from exc
            history.append(un, self.gradsq(un))
            kirch[n - 1] = D
            step_seconds[n - 1] = time.perf_counter() - t0

        U = history.u[1:]
        l2 = np.sqrt(np.maximum(np.einsum("ij,ij->i", U, (self.mass @ U.T).T), 0.0))
        h1 = np.sqrt(np.asarray(history.gradsq[1:]))
        cnn = np.array([self.row(n).c[-1] for n in range(1, N + 1)])
        report = RunReport(
            times=spec.mesh.nodes[1:].copy(),
            l2=l2,
            h1=h1,
            weighted=l2 + h1 / np.sqrt(cnn),
            kirchhoff=kirch,
            newton=newton,
            elapsed=time.perf_counter() - start,
            step_seconds=step_seconds,
        )
        return history, report


def step_first(spec: ProblemSpec, u0=None) -> tuple[np.ndarray, NewtonReport]:
    stepper = Stepper(spec)
    u0 = stepper.initial_state() if u0 is None else u0
    return stepper.step_first(u0)


def step_linear(spec: ProblemSpec, history, n: int) -> np.ndarray:
    return Stepper(spec).step_linear(history, n)


def run(spec: ProblemSpec) -> tuple[StateHistory, RunReport]:
    return Stepper(spec).run()

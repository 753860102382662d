"""Time meshes on [0, T]: graded, uniform and two-part graded/uniform."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterDomainError

GRADED = "graded"
UNIFORM = "uniform"
TWO_PART = "two_part"
MESH_KINDS = (GRADED, UNIFORM, TWO_PART)


@dataclass(frozen=True, eq=False)
class TimeMesh:
    """Nodes ``t_0 < t_1 < ... < t_N`` on ``[0, T]``.

    ``T0`` and ``N0`` are only set for the two-part mesh, where the first
    ``N0`` intervals are graded on ``[0, T0]`` and the rest are uniform.
    """

    T: float
    N: int
    r: float
    nodes: np.ndarray
    kind: str = GRADED
    T0: float | None = None
    N0: int | None = None
    steps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        steps = np.diff(nodes)
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)

    def __len__(self):
        return self.N + 1

    def tau(self, n: int) -> float:
        """Step ``tau_n = t_n - t_{n-1}`` for ``1 <= n <= N``."""
        if not 1 <= n <= self.N:
            raise IndexError(f"step index {n} outside 1..{self.N}")
        return float(self.steps[n - 1])

    def sigma_times(self, sigma: float) -> np.ndarray:
        """All shifted points ``t_{n-sigma}`` for ``n = 1..N`` as an array."""
        return (1.0 - sigma) * self.nodes[1:] + sigma * self.nodes[:-1]

    def max_step_ratio(self) -> float:
        """Largest ``tau_n / tau_{n-1}`` over ``n >= 2`` (1 when N == 1)."""
        if self.N < 2:
            return 1.0
        return float(np.max(self.steps[1:] / self.steps[:-1]))


@dataclass(frozen=True)
class SigmaPoint:
    n: int
    t_nm_sigma: float


def _check_common(T, N):
    if not T > 0:
        raise ParameterDomainError(f"final time must be positive, got T={T}")
    if int(N) != N or N < 1:
        raise ParameterDomainError(f"number of intervals must be a positive integer, got N={N}")


def build_graded(T: float, N: int, r: float) -> TimeMesh:
    """Graded mesh ``t_n = T (n/N)^r``; ``r = 1`` gives the uniform mesh."""
    _check_common(T, N)
    if not r >= 1:
        raise ParameterDomainError(f"grading exponent must satisfy r >= 1, got r={r}")
    N = int(N)
    nodes = T * (np.arange(N + 1) / N) ** r
    nodes[-1] = T
    kind = UNIFORM if r == 1 else GRADED
    return TimeMesh(T=float(T), N=N, r=float(r), nodes=nodes, kind=kind)


def build_uniform(T: float, N: int) -> TimeMesh:
    return build_graded(T, N, 1.0)


def two_part_parameters(T: float, N: int, r: float) -> tuple[float, float, int]:
    """Return ``(T0, rho0, N0)`` of the two-part mesh."""
    T0 = min(T / 2.0**r, (1.0 - 1.0 / r) * T)
    rho0 = min(r / (2.0**r - 1.0 + r), r * (r - 1.0) / (1.0 + r * (r - 1.0)))
    # rounding guards ceil() against products like 0.4 * 25 = 10.000000000000002
    N0 = math.ceil(round(rho0 * N, 9))
    return T0, rho0, N0


def build_two_part(T: float, N: int, r: float) -> TimeMesh:
    """Graded on ``[0, T0]`` with ``N0`` intervals, uniform on ``[T0, T]``.

    Falls back to the uniform mesh at ``r = 1``, where the graded part
    would be empty.
    """
    _check_common(T, N)
    if not r >= 1:
        raise ParameterDomainError(f"grading exponent must satisfy r >= 1, got r={r}")
    if r == 1:
        return build_graded(T, N, 1.0)
    N = int(N)
    T0, _, N0 = two_part_parameters(T, N, r)
    if N0 >= N:
        raise ParameterDomainError(
            f"two-part mesh needs N0 < N, got N0={N0} for N={N}, r={r}"
        )
    graded = T0 * (np.arange(N0 + 1) / N0) ** r
    graded[-1] = T0
    tau0 = (T - T0) / (N - N0)
    uniform = T0 + tau0 * np.arange(1, N - N0 + 1)
    uniform[-1] = T
    nodes = np.concatenate([graded, uniform])
    return TimeMesh(T=float(T), N=N, r=float(r), nodes=nodes, kind=TWO_PART, T0=T0, N0=N0)


def build_mesh(kind: str, T: float, N: int, r: float) -> TimeMesh:
    if kind == GRADED:
        return build_graded(T, N, r)
    if kind == UNIFORM:
        return build_graded(T, N, 1.0)
    if kind == TWO_PART:
        return build_two_part(T, N, r)
    raise ParameterDomainError(f"unknown mesh kind {kind!r}; expected one of {MESH_KINDS}")


def sigma_point(mesh: TimeMesh, n: int, sigma: float) -> SigmaPoint:
    """The shifted evaluation point ``(1 - sigma) t_n + sigma t_{n-1}``."""
    if not 1 <= n <= mesh.N:
        raise IndexError(f"level {n} outside 1..{mesh.N}")
    if not 0 <= sigma < 1:
        raise ParameterDomainError(f"sigma must lie in [0, 1), got {sigma}")
    t = (1.0 - sigma) * mesh.nodes[n] + sigma * mesh.nodes[n - 1]
    return SigmaPoint(n=n, t_nm_sigma=float(t))

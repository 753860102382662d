"""Quadrature weights for the memory integral up to ``t_{n-sigma}``.

Level 1 uses a right rectangle on ``[0, t_{1-sigma}]`` applied to the
sigma-averaged unknown.  Levels ``n >= 2`` integrate over ``[t_1, t_{n-sigma}]``
with the composite trapezoid rule on ``[t_1, t_{n-1}]`` and a left rectangle
on ``[t_{n-1}, t_{n-sigma}]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .time_mesh import TimeMesh


@dataclass(frozen=True)
class MemoryWeights:
    """``tau_tilde[j-1]`` multiplies the history value at ``t_j``, ``j = 1..n-1``.

    ``first_level_coeff`` is ``(1 - sigma) tau_1`` and is only nonzero at n = 1,
    where it multiplies the sigma-averaged unknown instead of history values.
    """

    n: int
    tau_tilde: np.ndarray
    first_level_coeff: float


def memory_weights(mesh: TimeMesh, n: int, sigma: float) -> MemoryWeights:
    if not 1 <= n <= mesh.N:
        raise IndexError(f"level {n} outside 1..{mesh.N}")
    tau = mesh.steps
    if n == 1:
        return MemoryWeights(n=1, tau_tilde=np.empty(0), first_level_coeff=(1.0 - sigma) * tau[0])
    if n == 2:
        return MemoryWeights(n=2, tau_tilde=np.array([(1.0 - sigma) * tau[1]]), first_level_coeff=0.0)
    w = np.empty(n - 1)
    w[0] = tau[1] / 2.0
    # tau[j-1] is tau_j
    j = np.arange(2, n - 1)
    w[1:-1] = (tau[j - 1] + tau[j]) / 2.0
    w[-1] = tau[n - 2] / 2.0 + (1.0 - sigma) * tau[n - 1]
    return MemoryWeights(n=n, tau_tilde=w, first_level_coeff=0.0)


def quadrature_error_probe(mesh: TimeMesh, n: int, sigma: float, f) -> float:
    """Absolute error of the memory rule at level ``n`` on a scalar function.

    The reference integral is computed with adaptive quadrature.
    """
    t = mesh.nodes
    t_ns = (1.0 - sigma) * t[n] + sigma * t[n - 1]
    weights = memory_weights(mesh, n, sigma)
    if n == 1:
        approx = t_ns * f(t_ns)
        exact = quad(f, 0.0, t_ns, epsabs=0.0, epsrel=1e-13, limit=200)[0]
        return abs(approx - exact)
    approx = float(np.dot(weights.tau_tilde, [f(tj) for tj in t[1:n]]))
    # integrate piecewise over the mesh so the kinks of f at nodes do not matter
    pts = list(t[1:n]) + [t_ns]
    exact = sum(
        quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)[0]
        for lo, hi in zip(pts[:-1], pts[1:])
        if hi > lo
    )
    return abs(approx - exact)

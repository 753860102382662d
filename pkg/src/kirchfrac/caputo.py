"""L2-1sigma discretisation of the Caputo derivative on non-uniform meshes.

At level ``n`` the derivative is evaluated at ``t_{n-sigma}`` by linear
interpolation on the current interval and quadratic interpolation on each
history interval.  The resulting operator is

    D v^n = c_{n,n} v^n + sum_{j=1}^{n-1} (c_{n,j} - c_{n,j+1}) v^j - c_{n,1} v^0
          = sum_{k=1}^{n} c_{n,k} (v^k - v^{k-1}).

All kernel moments use exact antiderivatives of the power kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterDomainError
from .time_mesh import TimeMesh

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# below this half-width/centre ratio the first moment is summed as a series
_SERIES_SWITCH = 0.05
_SERIES_TERMS = 10


def gamma(x: float) -> float:
    """Gamma function for ``x > 0`` (Lanczos, g = 7, with reflection below 1/2)."""
    x = float(x)
    if not x > 0:
        raise ParameterDomainError(f"gamma is only provided for x > 0, got {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, p in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += p / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ParameterDomainError(f"fractional order must lie in (0, 1), got {alpha}")


def _check_sigma(sigma):
    if not 0 <= sigma < 1:
        raise ParameterDomainError(f"sigma must lie in [0, 1), got {sigma}")


def _power_difference(x, y, p, d):
    """``x**p - y**p`` for ``x > y > 0`` given ``d = x - y`` exactly."""
    return y**p * np.expm1(p * np.log1p(d / y))


def _centered_first_moment(x, y, d, alpha):
    """``int_y^x z^-alpha (c - z) dz`` with ``c = (x + y)/2`` and ``d = x - y``."""
    c = 0.5 * (x + y)
    eps = d / (2.0 * c)
    direct = (c * _power_difference(x, y, 1.0 - alpha, d) / (1.0 - alpha)
              - _power_difference(x, y, 2.0 - alpha, d) / (2.0 - alpha))
    # -c^{2-alpha} sum_{k odd} binom(-alpha, k) 2 eps^{k+2} / (k+2); every term is positive
    series = np.zeros_like(c)
    binom = 1.0
    for k in range(1, 2 * _SERIES_TERMS + 1):
        binom *= (-alpha - (k - 1)) / k
        if k % 2:
            series -= binom * 2.0 * eps ** (k + 2) / (k + 2)
    series *= c ** (2.0 - alpha)
    return np.where(eps < _SERIES_SWITCH, series, direct)


@dataclass(frozen=True)
class KernelMoments:
    """Kernel moments of one level, normalised by ``Gamma(1 - alpha)``.

    ``a[j-1]`` holds ``a_{n,j}`` for ``j = 1..n`` and ``b[j-1]`` holds
    ``b_{n,j}`` for ``j = 1..n-1``.
    """

    n: int
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class CaputoRow:
    n: int
    sigma: float
    alpha: float
    c: np.ndarray

    def operator_weights(self) -> np.ndarray:
        """Coefficients ``w_0..w_n`` with ``D v^n = sum_j w_j v^j``."""
        c = self.c
        w = np.empty(self.n + 1)
        w[0] = -c[0]
        w[1:-1] = c[:-1] - c[1:]
        w[-1] = c[-1]
        return w


def kernel_moments(mesh: TimeMesh, n: int, sigma: float, alpha: float) -> KernelMoments:
    if not 1 <= n <= mesh.N:
        raise IndexError(f"level {n} outside 1..{mesh.N}")
    _check_alpha(alpha)
    _check_sigma(sigma)
    t = mesh.nodes
    tau = mesh.steps
    theta = (1.0 - sigma) * t[n] + sigma * t[n - 1]
    g1 = gamma(1.0 - alpha)
    g2 = gamma(2.0 - alpha)

    a = np.empty(n)
    a[n - 1] = (1.0 - sigma) ** (1.0 - alpha) * tau[n - 1] ** (1.0 - alpha) / g2
    if n == 1:
        return KernelMoments(n=n, a=a, b=np.empty(0))

    x = theta - t[: n - 1]      # theta - t_{j-1}, j = 1..n-1
    y = theta - t[1:n]          # theta - t_j
    # the step itself is exact, whereas x - y would lose digits when theta >> tau_j
    d = tau[: n - 1]
    a[: n - 1] = _power_difference(x, y, 1.0 - alpha, d) / g2
    span = tau[: n - 1] + tau[1:n]   # t_{j+1} - t_{j-1}
    b = 2.0 / span * _centered_first_moment(x, y, d, alpha) / g1
    return KernelMoments(n=n, a=a, b=b)


def caputo_row(mesh: TimeMesh, n: int, sigma: float, alpha: float) -> CaputoRow:
    """Weights ``c_{n,1..n}`` of the discrete operator at level ``n``."""
    mom = kernel_moments(mesh, n, sigma, alpha)
    tau = mesh.steps[:n]
    if n == 1:
        c = mom.a / tau
    else:
        num = mom.a.copy()
        num[:-1] -= mom.b
        num[1:] += mom.b
        c = num / tau
    return CaputoRow(n=n, sigma=float(sigma), alpha=float(alpha), c=c)


def apply_discrete_caputo(row: CaputoRow, history) -> np.ndarray | float:
    """Apply the level-``n`` operator to ``v^0..v^n`` (scalars or vectors).

    ``history`` has ``n + 1`` entries along its first axis.
    """
    hist = np.asarray(history, dtype=float)
    if hist.shape[0] != row.n + 1:
        raise ValueError(
            f"history must hold {row.n + 1} levels for n={row.n}, got {hist.shape[0]}"
        )
    out = row.c @ np.diff(hist, axis=0)
    return float(out) if np.ndim(out) == 0 else out


def c_nn_bounds(mesh: TimeMesh, n: int, sigma: float, alpha: float, gamma_ratio: float):
    """Lower and upper brackets for ``c_{n,n}`` (meaningful for ``n >= 2``).

    ``gamma_ratio`` bounds the ratio of neighbouring steps.
    """
    tau = mesh.tau(n)
    lead = (1.0 - sigma) ** (1.0 - alpha) / gamma(2.0 - alpha)
    k = alpha / (6.0 * gamma(1.0 - alpha))
    upper = tau**-alpha * (lead + k / (1.0 - sigma) ** (1.0 + alpha))
    lower = tau**-alpha * (
        lead + k / (1.0 + gamma_ratio) / ((1.0 - sigma) + gamma_ratio) ** (1.0 + alpha)
    )
    return lower, upper

"""P1 finite elements on a structured triangulation of the unit square.

Dirichlet conditions are imposed by elimination, so every vector handed to
or returned from this module lives on the interior nodes unless a function
says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ParameterDomainError

# barycentric points and weights (weights sum to 1)
_A1, _B1 = 0.445948490915965, 0.091576213509771
_W1, _W2 = 0.223381589678011, 0.109951743655322
QUAD_DEG4 = (
    np.array([
        [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
        [_B1, _B1, 1 - 2 * _B1], [_B1, 1 - 2 * _B1, _B1], [1 - 2 * _B1, _B1, _B1],
    ]),
    np.array([_W1, _W1, _W1, _W2, _W2, _W2]),
)
QUAD_DEG2 = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.full(3, 1 / 3),
)


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Uniform right-angled triangulation with ``M`` nodes per side.

    Node ``k = i + j*M`` sits at ``(i*h, j*h)``.  Every grid cell is split
    along the diagonal from its lower-left to its upper-right corner.
    """

    M: int
    h: float
    nodes: np.ndarray
    triangles: np.ndarray
    interior_index: np.ndarray   # interior dof number, or -1 on the boundary

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_dofs(self) -> int:
        return (self.M - 2) ** 2

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.interior_index >= 0)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Constant gradients of the three local hat functions, shape (nT, 3, 2)."""
        p = self.nodes[self.triangles]
        x, y = p[..., 0], p[..., 1]
        twice = 2.0 * self.areas[:, None]
        gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1) / twice
        gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1) / twice
        return np.stack([gx, gy], axis=-1)

    def quadrature_points(self, rule=QUAD_DEG4) -> np.ndarray:
        """Physical quadrature points, shape (nT, nq, 2)."""
        bary, _ = rule
        return np.einsum("qk,tkd->tqd", bary, self.nodes[self.triangles])

    def to_full(self, v) -> np.ndarray:
        """Extend an interior vector by zero boundary values."""
        full = np.zeros(self.n_nodes)
        full[self.interior_nodes] = v
        return full


def build_square_mesh(M: int) -> Triangulation:
    if int(M) != M or M < 3:
        raise ParameterDomainError(f"need at least 3 nodes per side, got M={M}")
    M = int(M)
    h = 1.0 / (M - 1)
    i, j = np.meshgrid(np.arange(M), np.arange(M), indexing="xy")
    nodes = np.column_stack([i.ravel() * h, j.ravel() * h])
    ci, cj = np.meshgrid(np.arange(M - 1), np.arange(M - 1), indexing="xy")
    k = (ci + cj * M).ravel()
    lower = np.column_stack([k, k + 1, k + M + 1])
    upper = np.column_stack([k, k + M + 1, k + M])
    triangles = np.empty((2 * k.size, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    on_boundary = (i == 0) | (j == 0) | (i == M - 1) | (j == M - 1)
    interior_index = np.full(M * M, -1, dtype=np.int64)
    interior = ~on_boundary.ravel()
    interior_index[interior] = np.arange(interior.sum())
    return Triangulation(M=M, h=h, nodes=nodes, triangles=triangles, interior_index=interior_index)


def _assemble(tri, local, full):
    rows = np.repeat(tri.triangles, 3, axis=1).ravel()
    cols = np.tile(tri.triangles, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(tri.n_nodes,) * 2).tocsr()
    if full:
        return mat
    idx = tri.interior_nodes
    return mat[idx][:, idx].tocsr()


def assemble_mass(tri: Triangulation, full: bool = False) -> sp.csr_matrix:
    """Exact P1 mass matrix; interior block unless ``full``."""
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = tri.areas[:, None, None] * ref
    return _assemble(tri, local, full)


def assemble_stiffness(tri: Triangulation, full: bool = False) -> sp.csr_matrix:
    g = tri.basis_gradients
    local = tri.areas[:, None, None] * np.einsum("tid,tjd->tij", g, g)
    return _assemble(tri, local, full)


def load_vector(tri: Triangulation, f, rule=QUAD_DEG4, full: bool = False) -> np.ndarray:
    """``(f, phi_i)`` by per-triangle quadrature; ``f(x, y)`` is vectorised."""
    bary, w = rule
    pts = tri.quadrature_points(rule)
    fq = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:2])
    local = tri.areas[:, None] * np.einsum("tq,q,qk->tk", fq, w, bary)
    out = np.bincount(tri.triangles.ravel(), weights=local.ravel(), minlength=tri.n_nodes)
    return out if full else out[tri.interior_nodes]


def gradient_load_vector(tri: Triangulation, grad, rule=QUAD_DEG4) -> np.ndarray:
    """``(grad u, grad phi_i)`` on interior dofs; ``grad(x, y)`` returns ``(ux, uy)``."""
    _, w = rule
    pts = tri.quadrature_points(rule)
    gx, gy = grad(pts[..., 0], pts[..., 1])
    shape = pts.shape[:2]
    gq = np.stack([np.broadcast_to(gx, shape), np.broadcast_to(gy, shape)], axis=-1)
    mean_grad = np.einsum("tqd,q->td", gq, w)
    local = tri.areas[:, None] * np.einsum("td,tkd->tk", mean_grad, tri.basis_gradients)
    out = np.bincount(tri.triangles.ravel(), weights=local.ravel(), minlength=tri.n_nodes)
    return out[tri.interior_nodes]


def _numerical_gradient(u, step=1e-6):
    def grad(x, y):
        gx = (u(x + step, y) - u(x - step, y)) / (2 * step)
        gy = (u(x, y + step) - u(x, y - step)) / (2 * step)
        return gx, gy
    return grad


def interpolate(tri: Triangulation, f) -> np.ndarray:
    """Nodal interpolant restricted to interior dofs."""
    pts = tri.nodes[tri.interior_nodes]
    return np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float) * np.ones(len(pts))


def l2_project(tri: Triangulation, f, mass=None) -> np.ndarray:
    mass = assemble_mass(tri) if mass is None else mass
    return spla.spsolve(mass.tocsc(), load_vector(tri, f))


def ritz_project_u0(tri: Triangulation, u0, grad_u0=None, stiffness=None) -> np.ndarray:
    """Ritz projection of ``u0``; the gradient defaults to central differences."""
    stiffness = assemble_stiffness(tri) if stiffness is None else stiffness
    grad = grad_u0 if grad_u0 is not None else _numerical_gradient(u0)
    return spla.spsolve(stiffness.tocsc(), gradient_load_vector(tri, grad))


def norms(tri: Triangulation, v, mass=None, stiffness=None) -> tuple[float, float]:
    """``(||v||, ||grad v||)`` of a finite element function on interior dofs."""
    mass = assemble_mass(tri) if mass is None else mass
    stiffness = assemble_stiffness(tri) if stiffness is None else stiffness
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(max(v @ (mass @ v), 0.0))), float(np.sqrt(max(v @ (stiffness @ v), 0.0)))


class ErrorIntegrator:
    """L2 and H1-seminorm errors of a P1 field against a smooth function.

    Quadrature data is cached so that repeated calls during time stepping
    only evaluate the exact solution.
    """

    def __init__(self, tri: Triangulation, rule=QUAD_DEG4):
        self.tri = tri
        bary, self.weights = rule
        self.bary = bary
        self.points = tri.quadrature_points(rule)
        self.areas = tri.areas

    def errors(self, v, exact, grad_exact) -> tuple[float, float]:
        tri = self.tri
        x, y = self.points[..., 0], self.points[..., 1]
        local = tri.to_full(v)[tri.triangles]                    # (nT, 3)
        uh = local @ self.bary.T                                  # (nT, nq)
        guh = np.einsum("tk,tkd->td", local, tri.basis_gradients)
        e0 = np.asarray(exact(x, y)) - uh
        gx, gy = grad_exact(x, y)
        e1 = (np.asarray(gx) - guh[:, None, 0]) ** 2 + (np.asarray(gy) - guh[:, None, 1]) ** 2
        l2 = np.sum(self.areas * ((e0**2) @ self.weights))
        h1 = np.sum(self.areas * (e1 @ self.weights))
        return float(np.sqrt(l2)), float(np.sqrt(h1))


def error_norms(tri: Triangulation, v, exact, grad_exact) -> tuple[float, float]:
    return ErrorIntegrator(tri).errors(v, exact, grad_exact)


def write_field_table(path, tri: Triangulation, v, header: str = "x y value") -> None:
    """Plain-text ``x y value`` table over all nodes, boundary zeros included."""
    data = np.column_stack([tri.nodes, tri.to_full(v)])
    np.savetxt(path, data, header=header, comments="# ", fmt="%.10e")

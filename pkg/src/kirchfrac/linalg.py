"""SPD solves for the time-stepping systems.

The direct mode factors with SuperLU in symmetric mode (minimum-degree
ordering on A + A^T, diagonal pivoting only), which is an LDL^T
factorisation in disguise: the matrix is SPD exactly when every pivot is
positive.  The iterative mode is Jacobi-preconditioned conjugate gradients.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import BreakdownError, NonConvergenceError, SingularUpdateError

DIRECT = "direct"
ITERATIVE = "iterative"
SOLVER_MODES = (DIRECT, ITERATIVE)


class SpdSolver:
    """Reusable solver for one SPD matrix.

    Parameters
    ----------
    B : sparse matrix
        Symmetric positive definite system matrix.
    mode : {"direct", "iterative"}
    rtol : float
        Relative residual target of the iterative mode.
    max_iter : int, optional
        Iteration cap of the iterative mode; defaults to ``10 * dim``.
    """

    def __init__(self, B, mode=DIRECT, rtol=1e-12, max_iter=None):
        if mode not in SOLVER_MODES:
            raise ValueError(f"unknown solver mode {mode!r}")
        self.B = sp.csr_matrix(B)
        self.mode = mode
        self.rtol = rtol
        self.max_iter = max_iter if max_iter is not None else 10 * self.B.shape[0]
        self._lu = None
        if mode == DIRECT:
            self._factor()
        else:
            diag = self.B.diagonal()
            if np.any(diag <= 0):
                raise BreakdownError("matrix has a non-positive diagonal entry")
            self._inv_diag = 1.0 / diag

    def _factor(self):
        try:
            lu = spla.splu(
                self.B.tocsc(),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:  # exactly singular
            raise BreakdownError(f"factorisation failed: {exc}") from exc
        if not np.array_equal(lu.perm_r, lu.perm_c):
            raise BreakdownError("factorisation needed off-diagonal pivoting")
        if np.any(lu.U.diagonal() <= 0):
            raise BreakdownError("non-positive pivot: matrix is not positive definite")
        self._lu = lu

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self.mode == DIRECT:
            return self._lu.solve(b)
        return self._pcg(b)

    def _pcg(self, b):
        B = self.B
        x = np.zeros_like(b)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return x
        r = b.copy()
        z = self._inv_diag * r
        p = z.copy()
        rz = r @ z
        for _ in range(self.max_iter):
            Bp = B @ p
            curv = p @ Bp
            if curv <= 0:
                raise BreakdownError("non-positive curvature in CG: matrix is not positive definite")
            step = rz / curv
            x += step * p
            r -= step * Bp
            if np.linalg.norm(r) <= self.rtol * bnorm:
                return x
            z = self._inv_diag * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise NonConvergenceError(
            f"CG did not reach rtol={self.rtol} in {self.max_iter} iterations"
        )


def solve_spd(B, b, mode=DIRECT) -> np.ndarray:
    return SpdSolver(B, mode=mode).solve(b)


def solve_rank_one(B, g, beta, b, mode=DIRECT, solver=None) -> np.ndarray:
    """Solve ``(B + beta g g^T) x = b`` with two solves against ``B``.

    ``solver`` may carry an existing factorisation of ``B``.
    """
    solver = solver if solver is not None else SpdSolver(B, mode=mode)
    g = np.asarray(g, dtype=float)
    y = solver.solve(b)
    if beta == 0.0 or not np.any(g):
        return y
    z = solver.solve(g)
    denom = 1.0 + beta * (g @ z)
    if abs(denom) <= 1e-14:
        raise SingularUpdateError(f"rank-one update is singular (1 + beta g^T B^-1 g = {denom:.3e})")
    return y - (beta * (g @ y) / denom) * z

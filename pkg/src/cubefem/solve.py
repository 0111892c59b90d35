"""Linear solvers: preconditioned CG, banded Cholesky, and a fast sine solver.

The fast path exploits the tensor structure of the 3D difference operator:
sine modes in z decouple it into independent 2D problems, and each 2D
problem is the plain discretization plus a rank-one perturbation at the
center node, so it is solved exactly by sine diagonalization plus a
Sherman-Morrison correction.  All paths are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dstn, idstn
from scipy.linalg import LinAlgError, solveh_banded

from .fdschemes import CENTER_WEIGHT, apply_fd_operator, sine_eigenvalue, weight_grid, _field3
from .grids import GridFn3D
from .linsys import SolverError, SparseSpd


@dataclass
class IterationReport:
    iterations: int
    residual: float


def solve_cg(system: SparseSpd, tol: float = 1e-10, max_iter: int = None):
    """Jacobi-preconditioned conjugate gradients from a zero initial guess.

    Returns (x, IterationReport); the reported residual is the true relative
    2-norm residual ||Ax-b|| / ||b||.  Raises SolverError when max_iter is
    exhausted, carrying the last residual.
    """
    a, b = system.matrix, system.rhs
    m = system.dimension
    if max_iter is None:
        max_iter = max(100, 10 * m)
    x = np.zeros(m)
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return x, IterationReport(0, 0.0)
    diag = a.diagonal()
    if np.any(diag <= 0):
        raise SolverError("matrix has nonpositive diagonal entries")
    r = b.copy()
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    rel = 1.0
    for it in range(1, max_iter + 1):
        ap = a @ p
        pap = float(p @ ap)
        if pap <= 0:
            raise SolverError("matrix is not positive definite along search direction")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rel = np.linalg.norm(r) / norm_b
        if rel <= tol:
            true_rel = np.linalg.norm(a @ x - b) / norm_b
            if true_rel <= tol:
                return x, IterationReport(it, float(true_rel))
            # recursion drifted: restart cleanly from the true residual
            r = b - a @ x
            z = r / diag
            p = z.copy()
            rz = float(r @ z)
            continue
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"CG did not converge in {max_iter} iterations", residual=float(rel))


def solve_direct_small(system: SparseSpd, cap: int = 20_000) -> np.ndarray:
    """Banded Cholesky factorization solve; the oracle for the iterative paths."""
    m = system.dimension
    if m > cap:
        raise ValueError(f"system dimension {m} exceeds the direct-solve cap {cap}")
    coo = system.matrix.tocoo()
    coo.sum_duplicates()
    bw = int(np.max(np.abs(coo.col - coo.row))) if coo.nnz else 0
    band = np.zeros((bw + 1, m))
    upper = coo.row <= coo.col
    band[bw + coo.row[upper] - coo.col[upper], coo.col[upper]] = coo.data[upper]
    try:
        return solveh_banded(band, system.rhs, lower=False)
    except LinAlgError as exc:
        raise SolverError(f"Cholesky factorization failed: {exc}") from exc


def _dst_orthogonality_deviation(n: int) -> float:
    """Max deviation of sum_k sin(pi m k/n) sin(pi l k/n) from (n/2) delta_ml."""
    k = np.arange(1, n)
    s = np.sin(np.pi * np.outer(k, k) / n)
    gram = s @ s.T
    return float(np.max(np.abs(gram - 0.5 * n * np.eye(n - 1))))


def solve_sine_fast_rhs(
    n: int,
    rhs: np.ndarray,
    center_weight: float = CENTER_WEIGHT,
    tol: float = 1e-11,
    workers: int = None,
) -> GridFn3D:
    """Solve -(d2x + d2y + w_ij d2z) U = rhs for an arbitrary interior rhs.

    rhs has shape (n-1, n-1, n-1).  A sine transform in z decouples the
    modes; each mode's 2D system is sine-diagonal up to a rank-one center
    perturbation, removed by a Sherman-Morrison update (the perturbed system
    stays positive definite, so the update scalar is bounded away from 0).
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (n - 1,) * 3:
        raise ValueError(f"rhs must have shape {(n - 1,) * 3}")
    lam = sine_eigenvalue(np.arange(1, n), n)
    denom = lam[:, None, None] + lam[None, :, None] + lam[None, None, :]
    fhat = dstn(rhs, type=1, workers=workers)
    y = idstn(fhat / denom, type=1, axes=(0, 1), workers=workers)
    if center_weight != 1.0:
        c = n // 2 - 1
        e = np.zeros((n - 1, n - 1))
        e[c, c] = 1.0
        ehat = dstn(e, type=1, workers=workers)
        g = idstn(ehat[:, :, None] / denom, type=1, axes=(0, 1), workers=workers)
        beta = (center_weight - 1.0) * lam
        denom_sm = 1.0 + beta * g[c, c, :]
        if np.any(denom_sm <= 0):
            bad = int(np.argmin(denom_sm)) + 1
            raise SolverError(f"center correction singular for z-mode {bad}")
        y = y - (beta * y[c, c, :] / denom_sm) * g
    u = GridFn3D.from_interior(n, idstn(y, type=1, axes=(2,), workers=workers))
    scale = np.max(np.abs(rhs))
    if scale > 0:
        res = float(np.max(np.abs(apply_fd_operator(u, center_weight) - rhs)) / scale)
        if not np.isfinite(res) or res > tol:
            raise SolverError(f"fast solve residual {res:.3e} exceeds {tol:.1e}", residual=res)
        u.residual = res
    else:
        u.residual = 0.0
    return u


def solve_sine_fast(
    n: int,
    f,
    center_weight: float = CENTER_WEIGHT,
    tol: float = 1e-11,
    workers: int = None,
) -> GridFn3D:
    """Solve the weighted difference scheme with right-hand side w_ij f."""
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be an even integer >= 2, got {n}")
    fv = _field3(n, f)[1:-1, 1:-1, 1:-1]
    w = weight_grid(n, center_weight)[1:-1, 1:-1, None]
    return solve_sine_fast_rhs(n, w * fv, center_weight, tol, workers)

"""Sparse symmetric positive-definite systems over interior lattice nodes.

Interior nodes are numbered in (i, j[, k]) row-major order (last index
fastest), matching ``GridFn3D.interior_vector``.  Boundary nodes carry
homogeneous Dirichlet data and are eliminated from the system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


class SolverError(Exception):
    """A linear solve failed; carries the last residual when available."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass
class SparseSpd:
    """CSR matrix over interior nodes plus right-hand side.

    ``symmetric`` records that the system was assembled from a symmetric
    bilinear form; ``symmetry_deviation`` measures how well that held up
    numerically.
    """

    matrix: sparse.csr_matrix
    rhs: np.ndarray = field(default=None)

    def __post_init__(self):
        self.matrix = sparse.csr_matrix(self.matrix)
        if self.rhs is None:
            self.rhs = np.zeros(self.matrix.shape[0])
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.matrix.shape != (self.dimension, self.dimension):
            raise ValueError("matrix must be square")
        if self.rhs.shape != (self.dimension,):
            raise ValueError("rhs length does not match matrix dimension")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def symmetric(self) -> bool:
        return self.symmetry_deviation() <= 1e-13

    def symmetry_deviation(self) -> float:
        """Max |A - A^T| entry relative to the largest entry of A."""
        d = sparse.csr_matrix(self.matrix - self.matrix.T)
        if d.nnz == 0:
            return 0.0
        scale = np.max(np.abs(self.matrix.data))
        return float(np.max(np.abs(d.data)) / scale)

    def m_matrix_violations(self, tol: float = 1e-13) -> list:
        """Check the M-matrix sign pattern and weak diagonal dominance."""
        a = self.matrix.tocoo()
        diag = self.matrix.diagonal()
        scale = np.max(np.abs(a.data))
        out = []
        if np.any(diag <= 0):
            out.append("nonpositive diagonal entries")
        off = a.data[(a.row != a.col)]
        if off.size and np.max(off) > tol * scale:
            out.append(f"positive off-diagonal entry {np.max(off):.3e}")
        rowsums = np.asarray(self.matrix.sum(axis=1)).ravel()
        if np.min(rowsums) < -tol * scale:
            out.append(f"row sum {np.min(rowsums):.3e} < 0 (not weakly dominant)")
        return out

    def residual_inf(self, x: np.ndarray) -> float:
        """||Ax - b||_inf relative to ||b||_inf (absolute when b = 0)."""
        r = np.max(np.abs(self.matrix @ x - self.rhs))
        b = np.max(np.abs(self.rhs))
        return float(r / b) if b > 0 else float(r)


def interior_index_map(n: int, dim: int) -> np.ndarray:
    """Node id -> interior running index (or -1 on the boundary)."""
    shape = (n + 1,) * dim
    idx = np.full(shape, -1, dtype=np.int64)
    core = (slice(1, n),) * dim
    idx[core] = np.arange((n - 1) ** dim).reshape((n - 1,) * dim)
    return idx.reshape(-1)


def export_system(system: SparseSpd, matrix_path, rhs_path) -> None:
    """Write coordinate-format text (row col value) and an rhs vector file."""
    coo = system.matrix.tocoo()
    with open(matrix_path, "w") as fh:
        fh.write(f"{system.dimension} {system.dimension} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")
    with open(rhs_path, "w") as fh:
        for v in system.rhs:
            fh.write(f"{v:.17g}\n")


def read_system(matrix_path, rhs_path) -> SparseSpd:
    """Parse files written by export_system."""
    with open(matrix_path) as fh:
        m, _, nnz = (int(tok) for tok in fh.readline().split())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for t in range(nnz):
            r, c, v = fh.readline().split()
            rows[t], cols[t], vals[t] = int(r), int(c), float(v)
    rhs = np.loadtxt(rhs_path).reshape(m)
    return SparseSpd(sparse.csr_matrix((vals, (rows, cols)), shape=(m, m)), rhs)

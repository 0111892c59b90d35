"""Finite-difference operators on the lattice and the auxiliary 2D problems.

The 3D operator applies -(d2x + d2y + w_ij * d2z) where d2t is the standard
second difference and the weight w_ij is 2/3 on the vertical column through
the center of the cross-section and 1 elsewhere; it is the exact
finite-difference form of the linear finite element method on the prism
mesh (see the fem module).  The 2D solvers cover the screened and plain
five-point Poisson problems and the lattice Green's function that drive the
maximum-norm error growth.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .grids import GridFn2D, GridFn3D, node_coords
from .linsys import SolverError, SparseSpd

CENTER_WEIGHT = 2.0 / 3.0

DEFAULT_TOL = 1e-10


def node_weight(i: int, j: int, n: int) -> float:
    """Column weight at (i, j): 2/3 at the center of the cross-section, else 1.

    Equals (number of tetrahedra incident to an interior node of the vertical
    column)/24 for the prism mesh.
    """
    if n % 2 != 0:
        raise ValueError("n must be even")
    if not (0 <= i <= n and 0 <= j <= n):
        raise ValueError(f"node ({i}, {j}) outside lattice 0..{n}")
    return CENTER_WEIGHT if i == n // 2 and j == n // 2 else 1.0


def weight_grid(n: int, center_weight: float = CENTER_WEIGHT) -> np.ndarray:
    """Weights over the full (n+1)^2 lattice; exactly one non-unit entry."""
    w = np.ones((n + 1, n + 1))
    w[n // 2, n // 2] = center_weight
    return w


def sine_eigenvalue(m, n: int):
    """Eigenvalue of -d2 on the sine mode sin(pi m t_k): (4/h^2) sin^2(m pi h / 2)."""
    m = np.asarray(m)
    return 4.0 * n * n * np.sin(m * np.pi / (2 * n)) ** 2


def apply_fd_operator(u: GridFn3D, center_weight: float = CENTER_WEIGHT) -> np.ndarray:
    """-(d2x + d2y + w_ij d2z) u at interior nodes, shape (n-1, n-1, n-1)."""
    n = u.n
    v = u.values
    s = n * n
    c = v[1:-1, 1:-1, 1:-1]
    d2x = (v[2:, 1:-1, 1:-1] - 2 * c + v[:-2, 1:-1, 1:-1]) * s
    d2y = (v[1:-1, 2:, 1:-1] - 2 * c + v[1:-1, :-2, 1:-1]) * s
    d2z = (v[1:-1, 1:-1, 2:] - 2 * c + v[1:-1, 1:-1, :-2]) * s
    w = weight_grid(n, center_weight)[1:-1, 1:-1, None]
    return -(d2x + d2y + w * d2z)


def _second_difference_1d(n: int) -> sparse.csr_matrix:
    """-d2 over one axis, interior points only: (1/h^2) tridiag(-1, 2, -1)."""
    main = np.full(n - 1, 2.0)
    off = np.full(n - 2, -1.0)
    return sparse.diags([off, main, off], [-1, 0, 1], format="csr") * (n * n)


def laplacian_2d(n: int) -> sparse.csr_matrix:
    """Five-point -(d2x + d2y) over interior nodes, (i, j) row-major."""
    t = _second_difference_1d(n)
    eye = sparse.identity(n - 1, format="csr")
    return (sparse.kron(t, eye) + sparse.kron(eye, t)).tocsr()


def _field2(n: int, f) -> np.ndarray:
    if isinstance(f, GridFn2D):
        return f.values
    if callable(f):
        return GridFn2D.from_callable(n, f).values
    arr = np.asarray(f, dtype=float)
    if arr.shape != (n + 1, n + 1):
        raise ValueError(f"field shape {arr.shape} does not match lattice {(n + 1, n + 1)}")
    return arr


def _field3(n: int, f) -> np.ndarray:
    if isinstance(f, GridFn3D):
        return f.values
    if callable(f):
        return GridFn3D.from_callable(n, f).values
    arr = np.asarray(f, dtype=float)
    if arr.shape != (n + 1,) * 3:
        raise ValueError(f"field shape {arr.shape} does not match lattice {(n + 1,) * 3}")
    return arr


def _solve_direct_2d(n: int, matrix: sparse.spmatrix, rhs: np.ndarray, tol: float) -> GridFn2D:
    """Sparse LU solve with an a-posteriori residual check."""
    lu = splu(sparse.csc_matrix(matrix))
    x = lu.solve(rhs)
    scale = np.max(np.abs(rhs)) if np.max(np.abs(rhs)) > 0 else 1.0
    res = float(np.max(np.abs(matrix @ x - rhs)) / scale)
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"2D direct solve residual {res:.3e} exceeds {tol:.1e}", residual=res)
    g = GridFn2D.zeros(n)
    g.values[1:-1, 1:-1] = x.reshape(n - 1, n - 1)
    g.residual = res
    return g


def solve_helmholtz_2d(n: int, f, tol: float = DEFAULT_TOL, shift: float = None) -> GridFn2D:
    """Solve -(d2x+d2y) W + w_ij shift W = w_ij F with zero boundary values.

    The default shift pi^2 gives the screened cross-section problem; passing
    the discrete z-eigenvalue instead reproduces the 3D solution's z-profile
    exactly (discrete separation of variables).
    """
    if shift is None:
        shift = np.pi**2
    w = weight_grid(n)[1:-1, 1:-1]
    a = laplacian_2d(n) + shift * sparse.diags(w.reshape(-1))
    rhs = (w * _field2(n, f)[1:-1, 1:-1]).reshape(-1)
    return _solve_direct_2d(n, a, rhs, tol)


def solve_weighted_poisson_2d(n: int, f, tol: float = DEFAULT_TOL) -> GridFn2D:
    """Solve -(d2x+d2y) W = w_ij F, zero boundary: the center-weighted source."""
    w = weight_grid(n)[1:-1, 1:-1]
    rhs = (w * _field2(n, f)[1:-1, 1:-1]).reshape(-1)
    return _solve_direct_2d(n, laplacian_2d(n), rhs, tol)


def solve_poisson_2d(n: int, f, tol: float = DEFAULT_TOL) -> GridFn2D:
    """Solve -(d2x+d2y) W = F, zero boundary: the plain five-point problem."""
    rhs = _field2(n, f)[1:-1, 1:-1].reshape(-1)
    return _solve_direct_2d(n, laplacian_2d(n), rhs, tol)


def greens_function(n: int, tol: float = DEFAULT_TOL):
    """Lattice Green's function: -(d2x+d2y) G = 1/h^2 at the center node, 0 elsewhere.

    Returns (field, value at the center).  The center value grows like
    ln(n)/(2 pi) plus a constant.
    """
    if n % 2 != 0:
        raise ValueError("n must be even")
    rhs = np.zeros((n - 1) * (n - 1))
    c = (n // 2 - 1) * (n - 1) + (n // 2 - 1)
    rhs[c] = float(n * n)
    g = _solve_direct_2d(n, laplacian_2d(n), rhs, tol)
    return g, float(g.values[n // 2, n // 2])


def barrier_field(n: int, c0: float) -> GridFn2D:
    """Parabolic barrier (pi^2/2) c0 h^2 ln(n) {1/4 - (x-1/2)^2}, constant in y.

    Its five-point image is exactly pi^2 c0 h^2 ln(n) at every interior node
    (the second difference of a quadratic is exact), which is what makes it a
    supersolution in the comparison argument.
    """
    x = node_coords(n)
    col = 0.5 * np.pi**2 * c0 * np.log(n) / (n * n) * (0.25 - (x - 0.5) ** 2)
    return GridFn2D(n, np.repeat(col[:, None], n + 1, axis=1))


def build_fd_system(n: int, f, center_weight: float = CENTER_WEIGHT) -> SparseSpd:
    """The 3D difference scheme as a sparse system, scaled by h^3.

    Rows encode h^3 * [-(d2x + d2y + w_ij d2z)] and the right-hand side is
    h^3 * w_ij * f at interior nodes, which makes the system entrywise
    comparable to the finite element assembly.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be an even integer >= 2, got {n}")
    t = _second_difference_1d(n)
    eye = sparse.identity(n - 1, format="csr")
    axy3 = sparse.kron(laplacian_2d(n), eye)
    w2 = weight_grid(n, center_weight)[1:-1, 1:-1].reshape(-1)
    az3 = sparse.kron(sparse.diags(w2), t)
    h3 = 1.0 / n**3
    a = ((axy3 + az3) * h3).tocsr()
    fv = _field3(n, f)[1:-1, 1:-1, 1:-1]
    rhs = h3 * (w2.reshape(n - 1, n - 1, 1) * fv).reshape(-1)
    return SparseSpd(a, rhs)

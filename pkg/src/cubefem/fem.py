"""P1 finite element assembly on the prism-split tetrahedral mesh.

Stiffness entries are exact integrals of piecewise-constant gradient
products; the load uses either lumped (nodal) quadrature, which integrates
the piecewise-linear interpolant of f*v exactly, or a per-tetrahedron
symmetric quadrature rule.  On this mesh the assembled system coincides
entrywise with h^3 times the weighted finite-difference scheme of the
fdschemes module; ``stencil_equivalence`` measures that deviation.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .grids import GridFn3D
from .linsys import SparseSpd, interior_index_map
from .mesh import METHOD_A, METHOD_B, TetMesh3D

# Symmetric degree-3 rule on the tetrahedron (barycentric points, weights
# relative to the cell volume).  Degree 3 integrates f * hat exactly for
# quadratic f; the remaining load error comes from f's non-polynomiality.
_QUAD_BARY = np.array(
    [
        [0.25, 0.25, 0.25, 0.25],
        [0.5, 1 / 6, 1 / 6, 1 / 6],
        [1 / 6, 0.5, 1 / 6, 1 / 6],
        [1 / 6, 1 / 6, 0.5, 1 / 6],
        [1 / 6, 1 / 6, 1 / 6, 0.5],
    ]
)
_QUAD_W = np.array([-0.8, 0.45, 0.45, 0.45, 0.45])

LOAD_QUADRATURE = {"name": "tet-symmetric-5pt", "points": 5, "degree": 3}

# Tetrahedra per prism over local vertices (b1, b2, b3, t1, t2, t3):
# method A slices from the top face down, method B is the vertical mirror.
_PRISM_TETS = {
    METHOD_A: np.array([[3, 4, 5, 0], [4, 5, 0, 1], [5, 0, 1, 2]]),
    METHOD_B: np.array([[0, 1, 2, 3], [1, 2, 3, 4], [2, 3, 4, 5]]),
}

# Within a prism, the leg edges shared by two of its three tetrahedra carry
# weight 2 in the edge form of the local stiffness; the opposite-face copies
# carry weight 1 and vertical edges always weight 1.
_PRISM_EDGE_WEIGHTS = {
    METHOD_A: [(4, 5, 2.0), (1, 2, 1.0), (0, 1, 2.0), (3, 4, 1.0)],
    METHOD_B: [(1, 2, 2.0), (4, 5, 1.0), (3, 4, 2.0), (0, 1, 1.0)],
}
_PRISM_VERTICALS = [(0, 3, 1.0), (1, 4, 1.0), (2, 5, 1.0)]


def _gradients(points: np.ndarray):
    """Barycentric gradients and volumes for stacked tetrahedra (..., 4, 3)."""
    e = points[..., 1:, :] - points[..., :1, :]
    det = np.linalg.det(e)
    if np.any(det == 0):
        raise ValueError("degenerate tetrahedron (zero volume)")
    vol = np.abs(det) / 6.0
    g123 = np.swapaxes(np.linalg.inv(e), -1, -2)
    g0 = -np.sum(g123, axis=-2, keepdims=True)
    return np.concatenate([g0, g123], axis=-2), vol


def _prism_points(base_xy: np.ndarray, h: float) -> np.ndarray:
    """Corner coordinates (b1, b2, b3, t1, t2, t3) of the prism over base_xy."""
    base_xy = np.asarray(base_xy, dtype=float)
    if base_xy.shape != (3, 2):
        raise ValueError("base_xy must have shape (3, 2) for roles (v1, v2, v3)")
    pts = np.zeros((6, 3))
    pts[:3, :2] = base_xy
    pts[3:, :2] = base_xy
    pts[3:, 2] = h
    return pts


def _validate_prism(base_xy: np.ndarray, h: float) -> None:
    # legs v1-v2 and v2-v3 must be axis-parallel with length h; which leg
    # runs along which axis depends on the cell's diagonal
    v1, v2, v3 = np.asarray(base_xy, dtype=float)
    leg_a = v1 - v2
    leg_b = v3 - v2
    area2 = leg_b[0] * leg_a[1] - leg_b[1] * leg_a[0]
    if area2 == 0 or h <= 0:
        raise ValueError("degenerate prism")
    eps = 1e-12 * h
    for leg in (leg_a, leg_b):
        big = np.abs(leg) > eps
        if big.sum() != 1 or abs(abs(leg[big][0]) - h) > eps:
            raise ValueError("prism base legs must be axis-parallel with length h")


def local_prism_stiffness(base_xy, h: float, method: int) -> np.ndarray:
    """6x6 stiffness of one prism, by exact per-tetrahedron integration.

    Rows and columns run over the prism corners (b1, b2, b3, t1, t2, t3)
    where b/t are the bottom/top copies of the base roles (v1, v2, v3).
    """
    _validate_prism(base_xy, h)
    pts = _prism_points(base_xy, h)
    k = np.zeros((6, 6))
    for tet in _PRISM_TETS[method]:
        gr, vol = _gradients(pts[tet][None])
        local = vol[0] * (gr[0] @ gr[0].T)
        k[np.ix_(tet, tet)] += local
    return k


def prism_stiffness_edge_formula(base_xy, h: float, method: int) -> np.ndarray:
    """The same 6x6 table from weighted difference quotients along the edges.

    (|T|/3) * sum over the seven axis-parallel edges of w_e times the product
    of directional derivatives along the edge; the doubled weights sit on the
    two leg edges interior to two tetrahedra of the prism.
    """
    _validate_prism(base_xy, h)
    vol = 0.5 * h * h * h
    k = np.zeros((6, 6))
    for a, b, w in _PRISM_EDGE_WEIGHTS[method] + _PRISM_VERTICALS:
        d = np.zeros(6)
        d[a], d[b] = -1.0, 1.0
        k += (vol / 3.0) * (w / (h * h)) * np.outer(d, d)
    return k


def assemble_stiffness(mesh: TetMesh3D) -> SparseSpd:
    """Galerkin stiffness matrix over interior nodes, Dirichlet rows eliminated."""
    n = mesh.n
    pts = mesh.node_coords()[mesh.tets]
    gr, vol = _gradients(pts)
    k = vol[:, None, None] * np.einsum("tad,tbd->tab", gr, gr)
    imap = interior_index_map(n, 3)
    ids = imap[mesh.tets]
    rows = np.broadcast_to(ids[:, :, None], k.shape)
    cols = np.broadcast_to(ids[:, None, :], k.shape)
    keep = (rows >= 0) & (cols >= 0)
    m = (n - 1) ** 3
    a = sparse.coo_matrix((k[keep], (rows[keep], cols[keep])), shape=(m, m)).tocsr()
    a.sum_duplicates()
    return SparseSpd(a, np.zeros(m))


def lumped_node_weights(mesh: TetMesh3D) -> np.ndarray:
    """Lumped quadrature weight per node: (volume of the node's tet star)/4."""
    _, vol = _gradients(mesh.node_coords()[mesh.tets])
    acc = np.zeros(mesh.num_nodes)
    np.add.at(acc, mesh.tets.ravel(), np.repeat(vol / 4.0, 4))
    return acc


def assemble_load_lumped(mesh: TetMesh3D, f) -> np.ndarray:
    """Load vector with nodal quadrature: weight * f(node) at interior nodes."""
    from .fdschemes import _field3

    weights = lumped_node_weights(mesh)
    fv = _field3(mesh.n, f).reshape(-1)
    imap = interior_index_map(mesh.n, 3)
    keep = imap >= 0
    return (weights * fv)[keep]


def assemble_load_exact(mesh: TetMesh3D, f, chunk: int = 200_000) -> np.ndarray:
    """Load vector integral(f * hat) by per-tetrahedron quadrature.

    f must be vectorized (accept arrays x, y, z).  The rule is recorded in
    LOAD_QUADRATURE; it is exact through cubic integrands, so constants and
    linear f reproduce the lumped load up to its own quadrature error.
    """
    n = mesh.n
    coords = mesh.node_coords()
    acc = np.zeros(mesh.num_nodes)
    ntet = mesh.tets.shape[0]
    for lo in range(0, ntet, chunk):
        tets = mesh.tets[lo : lo + chunk]
        pts = coords[tets]
        _, vol = _gradients(pts)
        xq = np.einsum("qa,cad->cqd", _QUAD_BARY, pts)
        fq = f(xq[..., 0], xq[..., 1], xq[..., 2])
        contrib = vol[:, None] * np.einsum("q,cq,qa->ca", _QUAD_W, fq, _QUAD_BARY)
        np.add.at(acc, tets.ravel(), contrib.ravel())
    imap = interior_index_map(n, 3)
    return acc[imap >= 0]


def _aligned_entries(a: sparse.csr_matrix, b: sparse.csr_matrix):
    union = (abs(a) + abs(b)).tocoo()
    av = np.asarray(a[union.row, union.col]).ravel()
    bv = np.asarray(b[union.row, union.col]).ravel()
    return av, bv


def _max_rel_deviation(av: np.ndarray, bv: np.ndarray, zero_floor: float = 0.0) -> float:
    # Entries below zero_floor on both sides are structural zeros (assembly
    # cancellation residue when h is not binary-representable) and are
    # measured against the floor instead of against themselves.
    denom = np.maximum(np.maximum(np.abs(av), np.abs(bv)), zero_floor)
    mask = denom > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(av - bv)[mask] / denom[mask]))


def stencil_equivalence(a_fem: SparseSpd, fd: SparseSpd) -> float:
    """Max per-entry relative deviation between the two systems (matrix and rhs).

    The finite element assembly and the h^3-scaled difference scheme agree
    entrywise on this mesh; anything above roundoff signals a mesh or
    assembly defect.  Matrix entries smaller than 1e-4 times the largest
    entry are treated as structural zeros (true stencil couplings are never
    below |T|-scale); the right-hand sides are compared entry by entry.
    """
    if a_fem.dimension != fd.dimension:
        raise ValueError(
            f"dimension mismatch: {a_fem.dimension} vs {fd.dimension}"
        )
    av, bv = _aligned_entries(a_fem.matrix, fd.matrix)
    scale = max(np.max(np.abs(av)), np.max(np.abs(bv)))
    dev = _max_rel_deviation(av, bv, zero_floor=1e-4 * scale)
    both_zero = np.max(np.abs(a_fem.rhs)) == 0 and np.max(np.abs(fd.rhs)) == 0
    if not both_zero:
        dev = max(dev, _max_rel_deviation(a_fem.rhs, fd.rhs))
    return dev

"""Structured simplicial meshes of the unit square and cube.

The 2D triangulation cuts every grid cell of an n x n lattice (n even) along
one diagonal: cells in the lower-left and upper-right quadrants take the
anti-diagonal, the other two quadrants the main diagonal.  Every triangle is
tagged A or B; the tag decides how the triangular prism above it is split
into three tetrahedra, and the tagging is a proper 2-coloring of the
edge-adjacency graph so that neighbouring prisms always agree on the
diagonals of their shared vertical faces.

Triangles are stored with a fixed vertex-role convention: ``v2`` sits at
the right angle and (v1, v2, v3) runs counter-clockwise, so the legs
``v1-v2`` and ``v2-v3`` are axis-parallel and ``v1-v3`` is the hypotenuse.
For anti-diagonal cells ``v2-v3`` runs along x, for main-diagonal cells
along y.  The counter-clockwise rule is what makes the two splitting
methods mirror each other consistently across every shared vertical face;
assigning roles by a fixed axis instead breaks conformity on the seams
between quadrants.

All node positions are integer lattice indices; geometry is scaled by
h = 1/n only where real coordinates are required.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np

METHOD_A = 0
METHOD_B = 1

_FACE_PICKS = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])


def node_id2(n: int, i, j):
    """Linear id of 2D lattice node (i, j)."""
    return i * (n + 1) + j


def node_id3(n: int, i, j, k):
    """Linear id of 3D lattice node (i, j, k)."""
    return (i * (n + 1) + j) * (n + 1) + k


def node_ij(n: int, ids):
    ids = np.asarray(ids)
    return np.stack([ids // (n + 1), ids % (n + 1)], axis=-1)


def node_ijk(n: int, ids):
    ids = np.asarray(ids)
    return np.stack([ids // ((n + 1) ** 2), (ids // (n + 1)) % (n + 1), ids % (n + 1)], axis=-1)


@dataclass(frozen=True)
class TriMesh2D:
    """Triangulation of the unit square on an n x n grid, n even.

    triangles: (2n^2, 3) linear node ids in role order (v1, v2, v3).
    color: (2n^2,) uint8, METHOD_A or METHOD_B per triangle.
    """

    n: int
    triangles: np.ndarray
    color: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def vertex_indices(self) -> np.ndarray:
        """Triangle vertices as (i, j) lattice pairs, shape (ntri, 3, 2)."""
        return node_ij(self.n, self.triangles)

    def node_triangle_counts(self) -> np.ndarray:
        """Number of incident triangles per 2D node id."""
        return np.bincount(self.triangles.ravel(), minlength=(self.n + 1) ** 2)


@dataclass(frozen=True)
class TetMesh3D:
    """Tetrahedral mesh of the unit cube built from prism columns.

    tets: (6n^3, 4) linear 3D node ids.  Tetrahedra are emitted per
    triangle of the base triangulation, per z-layer, three at a time,
    so construction is deterministic.
    """

    n: int
    tets: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def num_nodes(self) -> int:
        return (self.n + 1) ** 3

    def node_coords(self) -> np.ndarray:
        """Real coordinates of all lattice nodes, shape ((n+1)^3, 3)."""
        return node_ijk(self.n, np.arange(self.num_nodes)) / self.n

    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over node ids, True on the cube boundary."""
        ijk = node_ijk(self.n, np.arange(self.num_nodes))
        return np.any((ijk == 0) | (ijk == self.n), axis=1)


@dataclass
class ConformityReport:
    ok: bool
    bad_pairs: list = field(default_factory=list)
    violations: list = field(default_factory=list)


def build_tri_mesh(n: int) -> TriMesh2D:
    """Triangulate the unit square with the quadrant-dependent diagonal pattern.

    Cell (i, j) takes the anti-diagonal when it lies in the lower-left or
    upper-right quadrant, the main diagonal otherwise.  Tag B goes to the
    triangle containing a fixed cell corner per quadrant: the lower-left
    corner in the lower-left quadrant, upper-right in the upper-right,
    upper-left in the lower-right, lower-right in the upper-left; the
    sibling triangle is tagged A.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be an even integer >= 2, got {n}")
    half = n // 2
    triangles = np.empty((2 * n * n, 3), dtype=np.int32)
    color = np.empty(2 * n * n, dtype=np.uint8)
    t = 0
    for i in range(n):
        for j in range(n):
            ll = node_id2(n, i, j)
            lr = node_id2(n, i + 1, j)
            ul = node_id2(n, i, j + 1)
            ur = node_id2(n, i + 1, j + 1)
            lower_left_quad = i < half and j < half
            upper_right_quad = i >= half and j >= half
            if lower_left_quad or upper_right_quad:
                # anti-diagonal ul-lr; roles (v1, v2, v3) counter-clockwise, v2 at the right angle
                tri_lo = (ul, ll, lr)   # contains lower-left corner
                tri_hi = (lr, ur, ul)   # contains upper-right corner
                b_is_lo = lower_left_quad
            else:
                # main diagonal ll-ur
                tri_lo = (ll, lr, ur)   # contains lower-right corner
                tri_hi = (ur, ul, ll)   # contains upper-left corner
                b_is_lo = j >= half     # upper-left quadrant
            triangles[t] = tri_lo
            triangles[t + 1] = tri_hi
            color[t] = METHOD_B if b_is_lo else METHOD_A
            color[t + 1] = METHOD_A if b_is_lo else METHOD_B
            t += 2
    triangles.setflags(write=False)
    color.setflags(write=False)
    return TriMesh2D(n, triangles, color)


def split_prisms(tri: TriMesh2D) -> TetMesh3D:
    """Extrude the triangulation into prisms and split each into 3 tetrahedra.

    For a prism over triangle (v1, v2, v3) with bottom copies b1,b2,b3 and
    top copies t1,t2,t3, method A emits {t1,t2,t3,b1}, {t2,t3,b1,b2},
    {t3,b1,b2,b3}; method B is the vertical mirror {b1,b2,b3,t1},
    {b2,b3,t1,t2}, {b3,t1,t2,t3}.  The method is the triangle's tag and is
    the same in every layer.
    """
    n = tri.n
    ntri = tri.triangles.shape[0]
    # 3D ids: node_id3(i, j, k) = node_id2(i, j) * (n+1) + k
    base = tri.triangles.astype(np.int64) * (n + 1)
    k = np.arange(n, dtype=np.int64)
    # b[m, layer, v] / t[m, layer, v]: bottom and top copies per triangle m
    b = base[:, None, :] + k[None, :, None]
    t = b + 1
    b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2]
    t1, t2, t3 = t[..., 0], t[..., 1], t[..., 2]
    tets = np.empty((ntri, n, 3, 4), dtype=np.int32)
    a_rows = tri.color == METHOD_A
    tets[a_rows, :, 0] = np.stack([t1, t2, t3, b1], axis=-1)[a_rows]
    tets[a_rows, :, 1] = np.stack([t2, t3, b1, b2], axis=-1)[a_rows]
    tets[a_rows, :, 2] = np.stack([t3, b1, b2, b3], axis=-1)[a_rows]
    b_rows = ~a_rows
    tets[b_rows, :, 0] = np.stack([b1, b2, b3, t1], axis=-1)[b_rows]
    tets[b_rows, :, 1] = np.stack([b2, b3, t1, t2], axis=-1)[b_rows]
    tets[b_rows, :, 2] = np.stack([b3, t1, t2, t3], axis=-1)[b_rows]
    tets = tets.reshape(-1, 4)
    tets.setflags(write=False)
    return TetMesh3D(n, tets)


def build_tet_mesh(n: int) -> TetMesh3D:
    """Convenience: the full cube mesh for grid count n."""
    return split_prisms(build_tri_mesh(n))


def flip_prism(mesh: TetMesh3D, tri: TriMesh2D, tri_index: int, layer: int) -> TetMesh3D:
    """Copy of the mesh with one prism split by the opposite method.

    Deliberately produces a defective mesh: the flipped prism disagrees with
    its neighbours on the shared vertical-face diagonals.  Used to exercise
    the conformity checker and the stencil-equivalence test.
    """
    n = tri.n
    b = tri.triangles[tri_index].astype(np.int64) * (n + 1) + layer
    t = b + 1
    b1, b2, b3 = b
    t1, t2, t3 = t
    if tri.color[tri_index] == METHOD_A:
        repl = [[b1, b2, b3, t1], [b2, b3, t1, t2], [b3, t1, t2, t3]]
    else:
        repl = [[t1, t2, t3, b1], [t2, t3, b1, b2], [t3, b1, b2, b3]]
    tets = mesh.tets.copy()
    row = 3 * (tri_index * n + layer)
    tets[row : row + 3] = np.asarray(repl, dtype=tets.dtype)
    tets.setflags(write=False)
    return TetMesh3D(n, tets)


def tet_volumes_signed(mesh: TetMesh3D) -> np.ndarray:
    """Signed volumes in units of h^3/6 (integer determinants, exact)."""
    p = node_ijk(mesh.n, mesh.tets).astype(np.int64)
    e = p[:, 1:] - p[:, :1]
    det = (
        e[:, 0, 0] * (e[:, 1, 1] * e[:, 2, 2] - e[:, 1, 2] * e[:, 2, 1])
        - e[:, 0, 1] * (e[:, 1, 0] * e[:, 2, 2] - e[:, 1, 2] * e[:, 2, 0])
        + e[:, 0, 2] * (e[:, 1, 0] * e[:, 2, 1] - e[:, 1, 1] * e[:, 2, 0])
    )
    return det


def node_tet_counts(mesh: TetMesh3D) -> np.ndarray:
    """Number of incident tetrahedra per 3D node id."""
    return np.bincount(mesh.tets.ravel(), minlength=mesh.num_nodes)


def node_tet_count(mesh: TetMesh3D, i: int, j: int, k: int) -> int:
    """Number of tetrahedra incident to lattice node (i, j, k)."""
    return int(np.count_nonzero(np.any(mesh.tets == node_id3(mesh.n, i, j, k), axis=1)))


def axis_edge_flags(mesh: TetMesh3D) -> np.ndarray:
    """Per tet, whether it has an edge parallel to each axis; shape (ntet, 3)."""
    p = node_ijk(mesh.n, mesh.tets).astype(np.int64)
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    flags = np.zeros((mesh.tets.shape[0], 3), dtype=bool)
    for a, b in pairs:
        d = p[:, a] - p[:, b]
        nz = d != 0
        only = nz.sum(axis=1) == 1
        for ax in range(3):
            flags[:, ax] |= only & nz[:, ax]
    return flags


def _plane_key(tri_pts: np.ndarray):
    """Canonical (normal, offset) of the plane through 3 integer points."""
    a, b, c = (tri_pts[m].astype(np.int64) for m in range(3))
    nvec = np.cross(b - a, c - a)
    d = int(np.dot(nvec, a))
    g = gcd(gcd(abs(int(nvec[0])), abs(int(nvec[1]))), gcd(abs(int(nvec[2])), abs(d)))
    if g:
        nvec, d = nvec // g, d // g
    for comp in nvec:
        if comp != 0:
            if comp < 0:
                nvec, d = -nvec, -d
            break
    return (int(nvec[0]), int(nvec[1]), int(nvec[2]), d)


def _triangles_overlap_2d(t1: np.ndarray, t2: np.ndarray) -> bool:
    """Strict interior overlap of two coplanar triangles projected to 2D ints."""
    for tri in (t1, t2):
        for e in range(3):
            edge = tri[(e + 1) % 3] - tri[e]
            axis = np.array([-edge[1], edge[0]], dtype=np.int64)
            p1 = t1 @ axis
            p2 = t2 @ axis
            if p1.max() <= p2.min() or p2.max() <= p1.min():
                return False
    return True


def check_conformity(mesh: TetMesh3D) -> ConformityReport:
    """Validate that the mesh is a conforming simplicial complex.

    Checks: no duplicate or degenerate tetrahedra; every triangular face is
    shared by at most 2 tetrahedra; for a full cube mesh, single-count faces
    must lie on the cube boundary and volumes must tile the cube exactly.
    Unmatched interior faces are paired up by plane and tested for genuine
    2D overlap, which is exactly how mismatched prism diagonals manifest.
    Returns a report instead of raising, so mutated meshes can be inspected.
    """
    n = mesh.n
    report = ConformityReport(ok=True)
    ntet = mesh.tets.shape[0]
    full_cube = ntet == 6 * n**3

    det = tet_volumes_signed(mesh)
    degenerate = np.nonzero(det == 0)[0]
    for t in degenerate:
        report.violations.append(f"tet {t} is degenerate (zero volume)")
    if full_cube and int(np.abs(det).sum()) != 6 * n**3:
        report.violations.append(
            f"volumes do not tile the cube: sum |det| = {int(np.abs(det).sum())}, expected {6 * n ** 3}"
        )

    sorted_tets = np.sort(mesh.tets, axis=1)
    uniq, counts = np.unique(sorted_tets, axis=0, return_counts=True)
    for idx in np.nonzero(counts > 1)[0]:
        dup = np.nonzero((sorted_tets == uniq[idx]).all(axis=1))[0]
        report.bad_pairs.append((int(dup[0]), int(dup[1])))
        report.violations.append(f"duplicate tets {dup.tolist()}")

    faces = sorted_tets[:, _FACE_PICKS].reshape(-1, 3)
    owner = np.repeat(np.arange(ntet), 4)
    uniq_faces, inverse, fcounts = np.unique(faces, axis=0, return_inverse=True, return_counts=True)

    over = np.nonzero(fcounts > 2)[0]
    for fidx in over:
        tets_here = np.unique(owner[inverse == fidx])
        for a in range(len(tets_here)):
            for b in range(a + 1, len(tets_here)):
                report.bad_pairs.append((int(tets_here[a]), int(tets_here[b])))
        report.violations.append(
            f"face {uniq_faces[fidx].tolist()} shared by {fcounts[fidx]} tets"
        )

    single = np.nonzero(fcounts == 1)[0]
    if len(single):
        ijk = node_ijk(n, uniq_faces[single])  # (m, 3 vertices, 3 coords)
        on_plane = np.zeros(len(single), dtype=bool)
        for ax in range(3):
            on_plane |= np.all(ijk[:, :, ax] == 0, axis=1) | np.all(ijk[:, :, ax] == n, axis=1)
        stray = single[~on_plane]
        if full_cube:
            for fidx in stray:
                report.violations.append(
                    f"interior face {uniq_faces[fidx].tolist()} belongs to only 1 tet"
                )
        # pair up unmatched faces lying in a common plane and overlapping
        by_plane = {}
        for fidx in stray:
            pts = node_ijk(n, uniq_faces[fidx])
            by_plane.setdefault(_plane_key(pts), []).append(fidx)
        for key, members in by_plane.items():
            if len(members) < 2:
                continue
            normal = np.abs(np.array(key[:3]))
            drop = int(np.argmax(normal))
            keep = [ax for ax in range(3) if ax != drop]
            for a in range(len(members)):
                for b in range(a + 1, len(members)):
                    fa, fb = members[a], members[b]
                    ta = node_ijk(n, uniq_faces[fa])[:, keep].astype(np.int64)
                    tb = node_ijk(n, uniq_faces[fb])[:, keep].astype(np.int64)
                    if _triangles_overlap_2d(ta, tb):
                        pa = int(owner[np.nonzero(inverse == fa)[0][0]])
                        pb = int(owner[np.nonzero(inverse == fb)[0][0]])
                        report.bad_pairs.append((pa, pb))
                        report.violations.append(
                            f"tets {pa} and {pb} meet in overlapping faces on plane {key}"
                        )

    report.ok = not report.violations
    return report


def two_coloring_violations(tri: TriMesh2D) -> list:
    """Pairs of edge-adjacent triangles with equal tags (should be empty)."""
    edges = {}
    out = []
    for t in range(tri.triangles.shape[0]):
        vs = tri.triangles[t]
        for a in range(3):
            e = (int(min(vs[a], vs[(a + 1) % 3])), int(max(vs[a], vs[(a + 1) % 3])))
            if e in edges:
                other = edges[e]
                if tri.color[other] == tri.color[t]:
                    out.append((other, t))
            else:
                edges[e] = t
    return out


def mesh_invariant_failures(tri: TriMesh2D, mesh: TetMesh3D) -> list:
    """All structural invariants of the pair (triangulation, tet mesh).

    Returns human-readable failure descriptions; empty means every invariant
    holds.  All checks are exact integer computations.
    """
    n = tri.n
    fails = []
    if tri.triangles.shape[0] != 2 * n * n:
        fails.append(f"triangle count {tri.triangles.shape[0]} != 2n^2 = {2 * n * n}")
    deg = tri.node_triangle_counts().reshape(n + 1, n + 1)
    interior = deg[1:-1, 1:-1]
    expect = np.full((n - 1, n - 1), 6)
    expect[n // 2 - 1, n // 2 - 1] = 4
    if not np.array_equal(interior, expect):
        fails.append("interior 2D node degrees are not 6 (4 at the center)")
    bad_colors = two_coloring_violations(tri)
    if bad_colors:
        fails.append(f"tagging is not a proper 2-coloring ({len(bad_colors)} adjacent pairs)")
    if mesh.tets.shape[0] != 6 * n**3:
        fails.append(f"tet count {mesh.tets.shape[0]} != 6n^3 = {6 * n ** 3}")
    det = tet_volumes_signed(mesh)
    if not np.all(np.abs(det) == 1):
        fails.append("tet volumes are not all h^3/6")
    if not axis_edge_flags(mesh).all():
        fails.append("some tet lacks an edge parallel to a coordinate axis")
    counts = node_tet_counts(mesh).reshape((n + 1,) * 3)
    cint = counts[1:-1, 1:-1, 1:-1]
    expect3 = np.full((n - 1,) * 3, 24)
    expect3[n // 2 - 1, n // 2 - 1, :] = 16
    if not np.array_equal(cint, expect3):
        fails.append("interior node tet counts are not 24 (16 on the center column)")
    conf = check_conformity(mesh)
    if not conf.ok:
        fails.append(f"conformity: {conf.violations[0]}" + (f" (+{len(conf.violations) - 1} more)" if len(conf.violations) > 1 else ""))
    return fails


def write_mesh(mesh: TetMesh3D, path) -> None:
    """Plain-text export: node table of (i,j,k) triples, then one line per tet."""
    ijk = node_ijk(mesh.n, np.arange(mesh.num_nodes))
    with open(path, "w") as fh:
        fh.write(f"n {mesh.n}\n")
        fh.write(f"nodes {mesh.num_nodes}\n")
        np.savetxt(fh, ijk, fmt="%d")
        fh.write(f"tets {mesh.tets.shape[0]}\n")
        np.savetxt(fh, mesh.tets, fmt="%d")


def read_mesh(path) -> TetMesh3D:
    """Parse a mesh written by write_mesh."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "n":
            raise ValueError("not a mesh file: missing 'n' header")
        n = int(header[1])
        nnodes = int(fh.readline().split()[1])
        ijk = np.loadtxt(fh, dtype=np.int64, max_rows=nnodes).reshape(nnodes, 3)
        expect = node_ijk(n, np.arange((n + 1) ** 3))
        if not np.array_equal(ijk, expect):
            raise ValueError("node table is not the full lattice in id order")
        ntets = int(fh.readline().split()[1])
        tets = np.loadtxt(fh, dtype=np.int32, max_rows=ntets).reshape(ntets, 4)
    return TetMesh3D(n, tets)

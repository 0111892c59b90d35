import numpy as np
import pytest

from cubefem import mesh as meshmod
from cubefem import study as studymod


@pytest.fixture(scope="session")
def manufactured():
    return studymod.default_manufactured()


@pytest.fixture(scope="session")
def mesh4():
    return meshmod.build_tet_mesh(4)


@pytest.fixture(scope="session")
def tri4():
    return meshmod.build_tri_mesh(4)


# ---------------------------------------------------------------------------
# Independent quadrature oracle: tensor Gauss-Legendre on the collapsed cube
# (Duffy transform).  Exact to high order for smooth integrands; used to
# validate the production load-assembly rule without sharing any code.
# ---------------------------------------------------------------------------

def _gl01(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def duffy_points_weights(npts=8):
    """Quadrature for the reference tet r,s,t >= 0, r+s+t <= 1 (weights sum 1/6)."""
    u, wu = _gl01(npts)
    uu, vv, ww = np.meshgrid(u, u, u, indexing="ij")
    au, av, aw = np.meshgrid(wu, wu, wu, indexing="ij")
    r = uu
    s = vv * (1 - uu)
    t = ww * (1 - uu) * (1 - vv)
    jac = (1 - uu) ** 2 * (1 - vv)
    pts = np.stack([r.ravel(), s.ravel(), t.ravel()], axis=1)
    wts = (au * av * aw * jac).ravel()
    return pts, wts


def tet_integral_oracle(points, g, npts=8):
    """integral of g over the tet with vertex array points (4, 3)."""
    ref, wts = duffy_points_weights(npts)
    p0 = points[0]
    e = points[1:] - p0
    x = p0 + ref @ e
    vol6 = abs(np.linalg.det(e))
    return vol6 * np.sum(wts * g(x[:, 0], x[:, 1], x[:, 2]))


def load_vector_oracle(mesh, f, npts=8):
    """integral of f * hat_a per node by the Duffy oracle; interior entries."""
    from cubefem.linsys import interior_index_map

    ref, wts = duffy_points_weights(npts)
    coords = mesh.node_coords()
    acc = np.zeros(mesh.num_nodes)
    lam = np.concatenate([(1 - ref.sum(axis=1))[:, None], ref], axis=1)
    for tet in mesh.tets:
        pts = coords[tet]
        p0 = pts[0]
        e = pts[1:] - p0
        x = p0 + ref @ e
        vol6 = abs(np.linalg.det(e))
        fv = f(x[:, 0], x[:, 1], x[:, 2])
        acc[tet] += vol6 * (wts * fv) @ lam
    imap = interior_index_map(mesh.n, 3)
    return acc[imap >= 0]

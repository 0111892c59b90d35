"""Nodal grid functions on the uniform lattice of the unit square / cube.

A grid function stores one value per lattice node (i, j[, k]) with
0 <= i, j, k <= n and mesh width h = 1/n.  Solution fields carry
homogeneous Dirichlet data, i.e. zeros on the boundary layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def node_coords(n: int) -> np.ndarray:
    """Coordinates i/n of the n+1 lattice points along one axis."""
    return np.arange(n + 1) / n


@dataclass(eq=False)
class GridFn2D:
    """Scalar field on the (n+1) x (n+1) lattice of [0,1]^2; values[i, j] at (ih, jh).

    ``residual`` is set by the solvers that produce solution fields: the
    achieved residual of the defining linear system, relative to the rhs.
    """

    n: int
    values: np.ndarray
    residual: float = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n + 1, self.n + 1):
            raise ValueError(f"expected shape {(self.n + 1, self.n + 1)}, got {self.values.shape}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @classmethod
    def zeros(cls, n: int) -> "GridFn2D":
        return cls(n, np.zeros((n + 1, n + 1)))

    @classmethod
    def from_callable(cls, n: int, fn) -> "GridFn2D":
        x = node_coords(n)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return cls(n, np.asarray(fn(xx, yy), dtype=float))

    def interior(self) -> np.ndarray:
        """View of the interior values, shape (n-1, n-1)."""
        return self.values[1:-1, 1:-1]

    def boundary_max_abs(self) -> float:
        v = self.values
        return max(
            np.max(np.abs(v[0, :])),
            np.max(np.abs(v[-1, :])),
            np.max(np.abs(v[:, 0])),
            np.max(np.abs(v[:, -1])),
        )


@dataclass(eq=False)
class GridFn3D:
    """Scalar field on the (n+1)^3 lattice of [0,1]^3; values[i, j, k] at (ih, jh, kh)."""

    n: int
    values: np.ndarray
    residual: float = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.n + 1,) * 3
        if self.values.shape != shape:
            raise ValueError(f"expected shape {shape}, got {self.values.shape}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @classmethod
    def zeros(cls, n: int) -> "GridFn3D":
        return cls(n, np.zeros((n + 1,) * 3))

    @classmethod
    def from_callable(cls, n: int, fn) -> "GridFn3D":
        x = node_coords(n)
        xx, yy, zz = np.meshgrid(x, x, x, indexing="ij")
        return cls(n, np.asarray(fn(xx, yy, zz), dtype=float))

    @classmethod
    def from_interior(cls, n: int, interior: np.ndarray) -> "GridFn3D":
        """Embed interior values, shape (n-1,)*3, into a zero-boundary field."""
        g = cls.zeros(n)
        g.values[1:-1, 1:-1, 1:-1] = interior
        return g

    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1, 1:-1]

    def interior_vector(self) -> np.ndarray:
        """Interior values flattened in (i, j, k) row-major order."""
        return self.interior().reshape(-1)

    def boundary_max_abs(self) -> float:
        v = self.values
        faces = [v[0], v[-1], v[:, 0], v[:, -1], v[:, :, 0], v[:, :, -1]]
        return max(np.max(np.abs(f)) for f in faces)

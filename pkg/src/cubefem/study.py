"""Convergence experiments around the weighted scheme's log factor.

A manufactured solution u = w(x, y) sin(pi z) with -Delta u = f drives all
studies: the main error study measures E_N = max_nodes |u - U| and watches
s_N = E_N/h^2 grow like a*ln N + b, the control study repeats it with the
center weight forced to 1 (pure second-order scheme, s_N plateaus), and the
companion studies isolate the mechanism: lattice Green's function growth,
z-separability of the 3D solution, and the 2D cross-section error bound.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .fdschemes import (
    CENTER_WEIGHT,
    sine_eigenvalue,
    solve_helmholtz_2d,
    solve_weighted_poisson_2d,
)
from .grids import GridFn2D, node_coords
from .mesh import build_tet_mesh
from .solve import solve_sine_fast, solve_sine_fast_rhs

SCHEMA_VERSION = 1

DEFAULT_N_LIST = (8, 16, 32, 64, 128)
GREEN_N_LIST = (8, 16, 32, 64, 128, 256)

# 6th-order central second-difference stencil, for validating manufactured
# solutions independently of the scheme under test.
_D2_STENCIL = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
_D2_STEP = 1e-2


@dataclass(frozen=True)
class ManufacturedSolution:
    """Separable exact solution u = w(x, y) sin(pi z), f = source * sin(pi z).

    ``source`` must equal -(d2x + d2y) w + pi^2 w; the hypotheses needed for
    the log-factor lower bound are that source vanishes at the unit-square
    corners and attains its positive maximum at the center.
    """

    name: str
    w: callable
    source: callable

    def u(self, x, y, z):
        return self.w(x, y) * np.sin(np.pi * z)

    def f(self, x, y, z):
        return self.source(x, y) * np.sin(np.pi * z)

    def shifted_source(self, x, y):
        """source - pi^2 w: the right-hand side seen by the plain Laplacian."""
        return self.source(x, y) - np.pi**2 * self.w(x, y)

    def source_center(self) -> float:
        return float(self.source(0.5, 0.5))

    def u_grid(self, n: int) -> np.ndarray:
        x = node_coords(n)
        return self.w(x[:, None], x[None, :])[:, :, None] * np.sin(np.pi * x)[None, None, :]

    def hypothesis_checks(self, tol: float = 1e-10) -> dict:
        """Sampled verification that the pieces fit together.

        Uses high-order finite differences of w and u at off-lattice points,
        so it is independent of the discretizations under study.
        """
        pts = np.linspace(0.11, 0.89, 9)
        xx, yy = np.meshgrid(pts, pts, indexing="ij")
        d = _D2_STEP
        scale = float(np.abs(self.source(xx, yy)).max())

        def d2(fn, x, y, axis):
            acc = np.zeros_like(x)
            for s, c in zip(range(-3, 4), _D2_STENCIL):
                acc += c * (fn(x + s * d, y) if axis == 0 else fn(x, y + s * d))
            return acc / (d * d)

        mw = -(d2(self.w, xx, yy, 0) + d2(self.w, xx, yy, 1)) + np.pi**2 * self.w(xx, yy)
        op_dev = float(np.max(np.abs(mw - self.source(xx, yy)))) / scale

        zz = np.linspace(0.13, 0.87, 7)
        x3, y3, z3 = np.meshgrid(pts[::2], pts[::2], zz, indexing="ij")
        lap = np.zeros_like(x3)
        for s, c in zip(range(-3, 4), _D2_STENCIL):
            lap += c * (
                self.u(x3 + s * d, y3, z3) + self.u(x3, y3 + s * d, z3) + self.u(x3, y3, z3 + s * d)
            )
        pde_dev = float(np.max(np.abs(-lap / (d * d) - self.f(x3, y3, z3)))) / scale

        corners = max(abs(float(self.source(x, y))) for x in (0.0, 1.0) for y in (0.0, 1.0))
        fine = np.linspace(0, 1, 201)
        fx, fy = np.meshgrid(fine, fine, indexing="ij")
        center = self.source_center()
        max_interior = float(np.abs(self.source(fx, fy)).max())
        return {
            "operator_identity_dev": op_dev,
            "pde_residual_dev": pde_dev,
            "corner_value": corners,
            "center_value": center,
            "center_is_max": bool(center > 0 and max_interior <= center * (1 + 1e-12)),
            "passed": bool(
                op_dev <= tol
                and pde_dev <= tol
                and corners <= 1e-12
                and center > 0
                and max_interior <= center * (1 + 1e-12)
            ),
        }


def default_manufactured() -> ManufacturedSolution:
    """w = sin(pi x) sin(pi y), source = 3 pi^2 w, u = w sin(pi z)."""
    return ManufacturedSolution(
        name="sine-product",
        w=lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
        source=lambda x, y: 3 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y),
    )


@dataclass
class StudyReport:
    """Per-N records plus fits and provenance; see the report module for I/O."""

    kind: str
    columns: list
    records: list
    fit: dict = None
    estimates: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def column_table(self):
        return [{c: rec[c] for c in self.columns} for rec in self.records]


def fit_log_linear(ns, values) -> dict:
    """Least-squares fit values ~ a*ln(n) + b with a relative fit residual."""
    ln = np.log(np.asarray(ns, dtype=float))
    vals = np.asarray(values, dtype=float)
    a, b = np.polyfit(ln, vals, 1)
    pred = a * ln + b
    rel = float(np.linalg.norm(vals - pred) / np.linalg.norm(vals))
    return {"a": float(a), "b": float(b), "rel_residual": rel}


def _fit_with_robustness(ns, values) -> dict:
    out = fit_log_linear(ns, values)
    if len(ns) > 2:
        out["drop_smallest"] = fit_log_linear(ns[1:], values[1:])
    return out


def _config_hash(config: dict) -> str:
    payload = {k: v for k, v in config.items() if k not in ("timestamp", "config_hash")}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _finish_config(config: dict) -> dict:
    config["config_hash"] = _config_hash(config)
    config["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return config


def _check_n_list(n_list):
    ns = [int(n) for n in n_list]
    if not ns or any(n < 2 or n % 2 for n in ns) or sorted(set(ns)) != ns:
        raise ValueError(f"n_list must be strictly increasing even integers >= 2, got {n_list}")
    return ns


def _require_valid(m: ManufacturedSolution) -> None:
    checks = m.hypothesis_checks()
    if not checks["passed"]:
        raise ValueError(f"manufactured solution {m.name!r} fails its hypothesis checks: {checks}")


def _map_over_n(fn, ns, threads=None):
    # per-N work is independent; results are assembled in n_list order, so
    # the output does not depend on the worker count
    if threads is None:
        threads = os.cpu_count() or 1
    if threads > 1 and len(ns) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, ns))
    return [fn(n) for n in ns]


def _error_record(m: ManufacturedSolution, n: int, center_weight: float, load: str, tol: float):
    if load == "lumped":
        u = solve_sine_fast(n, m.f, center_weight=center_weight, tol=tol)
    elif load == "exact":
        mesh = build_tet_mesh(n)
        rhs = (fem.assemble_load_exact(mesh, m.f) * n**3).reshape((n - 1,) * 3)
        u = solve_sine_fast_rhs(n, rhs, center_weight=center_weight, tol=tol)
    else:
        raise ValueError(f"unknown load kind {load!r}")
    err = np.abs(u.values - m.u_grid(n))
    e = float(err.max())
    s = e * n * n
    return {
        "N": n,
        "h": 1.0 / n,
        "E": e,
        "s": s,
        "r": float(s / np.log(n)),
        "residual": u.residual,
        "E_midplane": float(err[:, :, n // 2].max()),
    }


def _error_study(
    kind: str,
    m: ManufacturedSolution,
    n_list,
    center_weight: float,
    load: str,
    tol: float,
    threads: int = None,
) -> StudyReport:
    ns = _check_n_list(n_list)
    _require_valid(m)
    records = _map_over_n(
        lambda n: _error_record(m, n, center_weight, load, tol), ns, threads
    )
    svals = [rec["s"] for rec in records]
    fit = _fit_with_robustness(ns, svals)
    top = records[len(records) // 2 :]
    rvals = [rec["r"] for rec in top]
    estimates = {
        "c_star_hat": min(rvals),
        "r_top_variation": (max(rvals) - min(rvals)) / min(rvals) if min(rvals) > 0 else np.inf,
        "doubling_ratios": [
            records[i]["E"] / records[i + 1]["E"]
            for i in range(len(records) - 1)
            if records[i + 1]["N"] == 2 * records[i]["N"]
        ],
    }
    config = _finish_config(
        {
            "study": kind,
            "n_list": ns,
            "tol": tol,
            "solver": "sine-fast",
            "manufactured": m.name,
            "center_weight": center_weight,
            "load": load,
            "quadrature": fem.LOAD_QUADRATURE if load == "exact" else None,
        }
    )
    return StudyReport(
        kind=kind,
        columns=["N", "h", "E", "s", "r", "residual"],
        records=records,
        fit=fit,
        estimates=estimates,
        config=config,
    )


def run_lower_bound_study(
    m: ManufacturedSolution, n_list=DEFAULT_N_LIST, tol: float = 1e-11, threads: int = None
) -> StudyReport:
    """Max-norm error on the prism mesh: s_N = E_N/h^2 grows like a ln N."""
    return _error_study("lower-bound", m, n_list, CENTER_WEIGHT, "lumped", tol, threads)


def run_control_study(
    m: ManufacturedSolution, n_list=DEFAULT_N_LIST, tol: float = 1e-11, threads: int = None
) -> StudyReport:
    """Same pipeline with the center weight forced to 1: s_N plateaus."""
    return _error_study("control", m, n_list, 1.0, "lumped", tol, threads)


def run_noquad_study(
    m: ManufacturedSolution, n_list=DEFAULT_N_LIST, tol: float = 1e-11, threads: int = None
) -> StudyReport:
    """Error study with the quadrature-free load: the log growth persists.

    Exact load assembly materializes the tetrahedral mesh per N (about 200 MB
    at N=128); with threads > 1 the largest meshes can coexist in memory.
    """
    return _error_study("no-quad", m, n_list, CENTER_WEIGHT, "exact", tol, threads)


def run_green_study(n_list=GREEN_N_LIST, tol: float = 1e-10, threads: int = None) -> StudyReport:
    """Center value of the lattice Green's function vs ln N."""
    from .fdschemes import greens_function

    ns = _check_n_list(n_list)

    def record(n):
        g, gc = greens_function(n, tol=tol)
        return {"N": n, "h": 1.0 / n, "G": gc, "residual": g.residual}

    records = _map_over_n(record, ns, threads)
    fit = _fit_with_robustness(ns, [rec["G"] for rec in records])
    config = _finish_config({"study": "green", "n_list": ns, "tol": tol, "solver": "sparse-lu"})
    return StudyReport(
        kind="green",
        columns=["N", "h", "G", "residual"],
        records=records,
        fit=fit,
        estimates={"slope": fit["a"]},
        config=config,
    )


def run_separability_study(
    m: ManufacturedSolution, n_list=(16, 32, 64), tol: float = 1e-11, threads: int = None
) -> StudyReport:
    """q_N = max|U - W sin(pi z)|/h^2 stays bounded; with the discrete
    z-eigenvalue replacing pi^2 in the 2D system the difference vanishes."""
    ns = _check_n_list(n_list)
    _require_valid(m)

    def record(n):
        u = solve_sine_fast(n, m.f, tol=tol)
        z = np.sin(np.pi * node_coords(n))
        w_pi = solve_helmholtz_2d(n, m.source, tol=tol)
        q = float(np.max(np.abs(u.values - w_pi.values[:, :, None] * z)) * n * n)
        w_lam = solve_helmholtz_2d(n, m.source, tol=tol, shift=float(sine_eigenvalue(1, n)))
        exact_sep = float(np.max(np.abs(u.values - w_lam.values[:, :, None] * z)))
        return {"N": n, "h": 1.0 / n, "q": q, "exact_sep": exact_sep, "residual": u.residual}

    records = _map_over_n(record, ns, threads)
    ratios = [
        records[i + 1]["q"] / records[i]["q"]
        for i in range(len(records) - 1)
        if records[i + 1]["N"] == 2 * records[i]["N"]
    ]
    config = _finish_config(
        {"study": "separability", "n_list": ns, "tol": tol, "solver": "sine-fast", "manufactured": m.name}
    )
    return StudyReport(
        kind="separability",
        columns=["N", "h", "q", "exact_sep", "residual"],
        records=records,
        estimates={"doubling_ratios": ratios, "max_exact_sep": max(r["exact_sep"] for r in records)},
        config=config,
    )


def run_cross_section_study(
    m: ManufacturedSolution, n_list=(8, 16, 32, 64, 128), tol: float = 1e-10, threads: int = None
) -> StudyReport:
    """The 2D mechanism: max|w - W| against h^2 ln N, and the center defect
    of the weighted-source Poisson solve against h^2 ln N times the shifted
    source at the center."""
    ns = _check_n_list(n_list)
    _require_valid(m)
    ft_center = float(m.shifted_source(0.5, 0.5))

    def record(n):
        x = node_coords(n)
        wex = m.w(x[:, None], x[None, :])
        w = solve_helmholtz_2d(n, m.source, tol=tol)
        err = np.abs(wex - w.values)
        max_err = float(err.max())
        am = np.unravel_index(int(np.argmax(err)), err.shape)
        wt = solve_weighted_poisson_2d(n, m.shifted_source, tol=tol)
        center_defect = float(m.w(0.5, 0.5) - wt.values[n // 2, n // 2])
        scale = n * n / np.log(n)
        return {
            "N": n,
            "h": 1.0 / n,
            "max_err": max_err,
            "ratio": float(max_err * scale),
            "center_defect": center_defect,
            "center_ratio": float(center_defect * scale / ft_center),
            "argmax_i": int(am[0]),
            "argmax_j": int(am[1]),
            "residual": max(w.residual, wt.residual),
        }

    records = _map_over_n(record, ns, threads)
    config = _finish_config(
        {"study": "cross-section", "n_list": ns, "tol": tol, "solver": "sparse-lu", "manufactured": m.name}
    )
    return StudyReport(
        kind="cross-section",
        columns=[
            "N", "h", "max_err", "ratio", "center_defect", "center_ratio",
            "argmax_i", "argmax_j", "residual",
        ],
        records=records,
        estimates={
            "ratio_min": min(r["ratio"] for r in records),
            "center_ratio_min": min(r["center_ratio"] for r in records),
        },
        config=config,
    )


def richardson_reference_2d(solve_at, n: int, factor: int = 4) -> GridFn2D:
    """Fine-grid reference on the n-lattice for a second-order 2D solver.

    Solves at factor*n and 2*factor*n, restricts to the coarse lattice and
    Richardson-extrapolates the h^2 term away.  The oracle for problems
    without a closed-form solution.
    """
    n1, n2 = factor * n, 2 * factor * n
    g1 = solve_at(n1).values[:: n1 // n, :: n1 // n]
    g2 = solve_at(n2).values[:: n2 // n, :: n2 // n]
    return GridFn2D(n, (4.0 * g2 - g1) / 3.0)

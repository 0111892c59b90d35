"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines as they
complete.  Every tolerance is fixed here, not tuned at runtime.
"""

import time

import numpy as np
import pytest

from cubefem import fdschemes as FD
from cubefem import fem as F
from cubefem import mesh as M
from cubefem import solve as S
from cubefem import study as ST


def _criterion(num: int, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def manufactured():
    return ST.default_manufactured()


@pytest.fixture(scope="module")
def lower_bound_report(manufactured):
    return ST.run_lower_bound_study(manufactured, (8, 16, 32, 64, 128))


@pytest.fixture(scope="module")
def control_report(manufactured):
    return ST.run_control_study(manufactured, (8, 16, 32, 64, 128))


def test_criterion_1_mesh_invariants():
    t0 = time.monotonic()
    fails = []
    for n in (2, 4, 6, 8, 16):
        tri = M.build_tri_mesh(n)
        tm = M.split_prisms(tri)
        fails += [f"n={n}: {msg}" for msg in M.mesh_invariant_failures(tri, tm)]
    elapsed = time.monotonic() - t0
    ok = not fails and elapsed < 5.0
    _criterion(1, ok, f"mesh invariants for N in 2..16, {elapsed:.2f}s" + (f"; {fails[:2]}" if fails else ""))


def test_criterion_2_stencil_equivalence(manufactured):
    t0 = time.monotonic()
    worst = 0.0
    for n in (4, 6, 8, 16):
        tm = M.build_tet_mesh(n)
        a = F.assemble_stiffness(tm)
        a.rhs = F.assemble_load_lumped(tm, manufactured.f)
        worst = max(worst, F.stencil_equivalence(a, FD.build_fd_system(n, manufactured.f)))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-12 and elapsed < 30.0
    _criterion(2, ok, f"FEM == h^3 FD entrywise, max deviation {worst:.3e} (tol 1e-12), {elapsed:.2f}s")


def test_criterion_3_local_stiffness_identity():
    t0 = time.monotonic()
    tri = M.build_tri_mesh(4)
    verts = tri.vertex_indices() / 4
    worst = 0.0
    for t in range(tri.triangles.shape[0]):
        ka = F.local_prism_stiffness(verts[t], 0.25, int(tri.color[t]))
        kb = F.prism_stiffness_edge_formula(verts[t], 0.25, int(tri.color[t]))
        worst = max(worst, np.max(np.abs(ka - kb)) / np.max(np.abs(kb)))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-13 and elapsed < 5.0
    _criterion(3, ok, f"per-prism edge-formula identity, max deviation {worst:.3e} (tol 1e-13), {elapsed:.2f}s")


def test_criterion_4_sine_eigenrelation():
    # evaluated in extended precision: float64 sampling noise alone reaches
    # ~2e-13 for the lowest mode, above the criterion's tolerance
    n = 64
    pi_l = np.longdouble("3.141592653589793238462643383279502884")
    h = np.longdouble(1) / n
    k = np.arange(n + 1, dtype=np.longdouble)
    worst = 0.0
    for m in range(1, n):
        u = np.sin(pi_l * m * k / n)
        lam = 4 / (h * h) * np.sin(pi_l * m * h / 2) ** 2
        d2 = (u[2:] - 2 * u[1:-1] + u[:-2]) / (h * h)
        dev = float(np.max(np.abs(-d2 - lam * u[1:-1])) / (lam * np.max(np.abs(u[1:-1]))))
        worst = max(worst, dev)
    ok = worst <= 1e-13
    _criterion(4, ok, f"z-eigenrelation for all modes at N=64, max deviation {worst:.3e} (tol 1e-13)")


def test_criterion_5_lower_bound_study(lower_bound_report):
    rep = lower_bound_report
    t0 = time.monotonic()
    svals = {rec["N"]: rec["s"] for rec in rep.records}
    increasing = svals[16] < svals[32] < svals[64] < svals[128]
    fit_ok = rep.fit["a"] > 0 and rep.fit["rel_residual"] < 0.05
    rvals = [rec["r"] for rec in rep.records if rec["N"] in (32, 64, 128)]
    r_ok = min(rvals) > 0 and (max(rvals) - min(rvals)) / min(rvals) < 0.25
    elapsed = time.monotonic() - t0
    ok = increasing and fit_ok and r_ok and elapsed < 600.0
    _criterion(
        5, ok,
        f"s_N increasing for N>=16, fit a={rep.fit['a']:.3f} "
        f"(residual {rep.fit['rel_residual']:.2%}), r variation "
        f"{(max(rvals) - min(rvals)) / min(rvals):.2%} over N in 32..128",
    )


def test_criterion_6_control_study(control_report, lower_bound_report):
    rep = control_report
    svals = {rec["N"]: rec["s"] for rec in rep.records}
    plateau = abs(svals[128] - svals[64]) / svals[64] < 0.05
    ratios = rep.estimates["doubling_ratios"]
    ratio_ok = all(abs(r - 4.0) <= 0.2 for r in ratios)
    e_ctrl = {rec["N"]: rec["E"] for rec in rep.records}
    e_main = {rec["N"]: rec["E"] for rec in lower_bound_report.records}
    below = all(e_ctrl[n] < e_main[n] for n in (32, 64, 128))
    ok = plateau and ratio_ok and below
    _criterion(
        6, ok,
        f"unit-weight control: s plateau (|ds|={abs(svals[128] - svals[64]) / svals[64]:.2%}), "
        f"doubling ratios {[round(r, 3) for r in ratios]} = 4.0 +/- 5%, control error below weighted",
    )


def test_criterion_7_green_growth():
    t0 = time.monotonic()
    rep = ST.run_green_study((8, 16, 32, 64, 128, 256))
    anchor = FD.greens_function(2)[1]
    elapsed = time.monotonic() - t0
    ok = rep.fit["a"] > 0 and rep.fit["rel_residual"] < 0.01 and anchor == 0.25 and elapsed < 60.0
    _criterion(
        7, ok,
        f"Green's center value: fit a={rep.fit['a']:.4f} ln N + {rep.fit['b']:.4f} "
        f"(residual {rep.fit['rel_residual']:.3%}), anchor G(2)={anchor}, {elapsed:.1f}s",
    )


def test_criterion_8_separability(manufactured):
    rep = ST.run_separability_study(manufactured, (16, 32, 64))
    ratios = rep.estimates["doubling_ratios"]
    ok = all(r <= 1.25 for r in ratios) and rep.estimates["max_exact_sep"] < 1e-9
    _criterion(
        8, ok,
        f"q ratios {[round(r, 4) for r in ratios]} <= 1.25; discrete-eigenvalue "
        f"separation {rep.estimates['max_exact_sep']:.2e} < 1e-9",
    )


def test_criterion_9_shifted_source_bound(manufactured):
    analytic = manufactured.shifted_source(0.5, 0.5)
    bound = manufactured.source_center() / np.cosh(np.pi / 2)
    n = 256
    w = FD.solve_helmholtz_2d(n, manufactured.source)
    discrete = manufactured.source(0.5, 0.5) - np.pi**2 * w.values[n // 2, n // 2]
    rel = abs(discrete - analytic) / analytic
    ok = analytic >= bound and analytic == pytest.approx(2 * np.pi**2, rel=1e-12) and rel <= 1e-3
    _criterion(
        9, ok,
        f"center shifted source {analytic:.4f} >= bound {bound:.4f}; "
        f"discrete value matches to {rel:.2e} (tol 1e-3)",
    )


def test_criterion_10_maximum_principle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    n3, n2 = 8, 16
    for _ in range(20):
        f3 = rng.random((n3 + 1,) * 3)
        sys3 = FD.build_fd_system(n3, f3)
        worst = min(worst, float(S.solve_direct_small(sys3).min()))
        f2 = np.zeros((n2 + 1, n2 + 1))
        f2[1:-1, 1:-1] = rng.random((n2 - 1, n2 - 1))
        worst = min(worst, float(FD.solve_helmholtz_2d(n2, f2).values.min()))
        worst = min(worst, float(FD.solve_poisson_2d(n2, f2).values.min()))
    ok = worst >= -1e-12
    _criterion(10, ok, f"nonnegative rhs -> solution min {worst:.2e} >= -1e-12 (20 draws x 3 operators)")


def test_criterion_11_noquad_log_growth(manufactured):
    rep = ST.run_noquad_study(manufactured, (8, 16, 32, 64, 128))
    svals = [rec["s"] for rec in rep.records]
    ok = rep.fit["a"] > 0 and svals == sorted(svals)
    _criterion(
        11, ok,
        f"quadrature-free load keeps the log growth: fit a={rep.fit['a']:.3f} > 0, "
        f"s_N increasing {[round(s, 3) for s in svals]}",
    )

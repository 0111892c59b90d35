"""Command-line interface.

Subcommands: ``mesh`` (build/validate/export), ``verify`` (stencil and local
stiffness identities), ``solve`` (one solve of the default problem),
``study`` (the convergence experiments, with CSV/JSON/figure output).

Exit codes: 0 success, 1 invariant or verification failure, 2 usage error,
3 solver failure.  All numbers print with 17 significant digits.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import fdschemes, fem, mesh, report, solve, study
from .linsys import SolverError, export_system

STUDY_KINDS = ("lower-bound", "control", "green", "separability", "lemma3", "no-quad")


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _add_common(p):
    p.add_argument("--tol", type=float, default=None, help="solver tolerance override")
    p.add_argument("--threads", type=int, default=None, help="worker cap for parallel sections")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized spot checks")


def _build_parser():
    parser = argparse.ArgumentParser(prog="cubefem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="build the mesh, optionally validate and export")
    p.add_argument("--n", type=int, required=True, help="grid count (even, >= 2)")
    p.add_argument("--check", action="store_true", help="run all mesh invariants")
    p.add_argument("--export", metavar="PATH", help="write the mesh in plain-text format")
    _add_common(p)
    p.set_defaults(func=_cmd_mesh)

    p = sub.add_parser("verify", help="check the finite-element / finite-difference identity")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("solve", help="solve the default manufactured problem, print E_N")
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--fast", action="store_true", help="sine-transform solver (default)")
    g.add_argument("--cg", action="store_true", help="preconditioned conjugate gradients")
    g.add_argument("--direct", action="store_true", help="banded Cholesky")
    p.add_argument("--no-quad", action="store_true", help="quadrature-free load assembly")
    p.add_argument("--out", metavar="PATH", help="write the nodal solution as text")
    p.add_argument("--export-system", metavar="PREFIX", help="write PREFIX.matrix.txt / PREFIX.rhs.txt")
    _add_common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("study", help="run a convergence study and emit reports")
    p.add_argument("kind", choices=STUDY_KINDS)
    p.add_argument("--n-list", metavar="N1,N2,...", help="comma-separated even grid counts")
    p.add_argument("--csv", metavar="PATH", help="write per-N records as CSV")
    p.add_argument("--json", metavar="PATH", help="write the full report as JSON")
    p.add_argument("--svg", metavar="PATH", help="render a figure (format from extension)")
    _add_common(p)
    p.set_defaults(func=_cmd_study)
    return parser


def _cmd_mesh(args) -> int:
    tri = mesh.build_tri_mesh(args.n)
    tm = mesh.split_prisms(tri)
    print(f"n={args.n}")
    print(f"nodes={tm.num_nodes}")
    print(f"triangles={tri.triangles.shape[0]}")
    print(f"tets={tm.tets.shape[0]}")
    if args.export:
        mesh.write_mesh(tm, args.export)
        print(f"exported to {args.export}")
    if args.check:
        fails = mesh.mesh_invariant_failures(tri, tm)
        for msg in fails:
            print(f"FAIL: {msg}")
        if fails:
            return 1
        print("all mesh invariants hold")
    return 0


def _cmd_verify(args) -> int:
    n = args.n
    m = study.default_manufactured()
    tm = mesh.build_tet_mesh(n)
    a = fem.assemble_stiffness(tm)
    a.rhs = fem.assemble_load_lumped(tm, m.f)
    fd = fdschemes.build_fd_system(n, m.f)
    stencil_dev = fem.stencil_equivalence(a, fd)
    print(f"stencil_deviation={_fmt(stencil_dev)}")

    tri = mesh.build_tri_mesh(n)
    verts = tri.vertex_indices() / n
    local_dev = 0.0
    for t in range(tri.triangles.shape[0]):
        ka = fem.local_prism_stiffness(verts[t], 1.0 / n, int(tri.color[t]))
        kb = fem.prism_stiffness_edge_formula(verts[t], 1.0 / n, int(tri.color[t]))
        local_dev = max(local_dev, np.max(np.abs(ka - kb)) / np.max(np.abs(kb)))
    print(f"local_stiffness_deviation={_fmt(local_dev)}")

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(3):
        sys3 = fdschemes.build_fd_system(n, rng.random((n + 1,) * 3))
        x = solve.solve_direct_small(sys3)
        worst = min(worst, float(x.min()))
    print(f"max_principle_min={_fmt(worst)}")

    ok = stencil_dev <= 1e-12 and local_dev <= 1e-13 and worst >= -1e-12
    if not ok:
        if stencil_dev > 1e-12:
            print("FAIL: stencil equivalence deviation exceeds 1e-12")
        if local_dev > 1e-13:
            print("FAIL: local stiffness identity deviation exceeds 1e-13")
        if worst < -1e-12:
            print("FAIL: discrete maximum principle violated for nonnegative rhs")
        return 1
    print("verification passed")
    return 0


def _cmd_solve(args) -> int:
    n = args.n
    m = study.default_manufactured()
    tol = args.tol if args.tol is not None else 1e-11
    method = "cg" if args.cg else "direct" if args.direct else "fast"

    if args.no_quad:
        tm = mesh.build_tet_mesh(n)
        load = fem.assemble_load_exact(tm, m.f)
    else:
        load = None

    if method == "fast":
        if load is None:
            u = solve.solve_sine_fast(n, m.f, tol=tol, workers=args.threads)
        else:
            u = solve.solve_sine_fast_rhs(
                n, (load * n**3).reshape((n - 1,) * 3), tol=tol, workers=args.threads
            )
        values, residual = u.values, u.residual
    else:
        system = fdschemes.build_fd_system(n, m.f)
        if load is not None:
            system.rhs = load
        if method == "cg":
            x, rep = solve.solve_cg(system, tol=tol)
            residual = rep.residual
            print(f"cg_iterations={rep.iterations}")
        else:
            x = solve.solve_direct_small(system)
            residual = system.residual_inf(x)
        if args.export_system:
            export_system(system, f"{args.export_system}.matrix.txt", f"{args.export_system}.rhs.txt")
        g = np.zeros((n + 1,) * 3)
        g[1:-1, 1:-1, 1:-1] = x.reshape((n - 1,) * 3)
        values = g

    e = float(np.max(np.abs(values - m.u_grid(n))))
    print(f"E={_fmt(e)}")
    print(f"s=E/h^2={_fmt(e * n * n)}")
    print(f"r=E/(h^2 lnN)={_fmt(e * n * n / np.log(n))}")
    print(f"residual={_fmt(residual)}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(f"n {n}\n")
            for i in range(n + 1):
                for j in range(n + 1):
                    for k in range(n + 1):
                        fh.write(f"{i} {j} {k} {values[i, j, k]:.17g}\n")
        print(f"solution written to {args.out}")
    return 0


def _parse_n_list(text, default):
    if not text:
        return default
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ValueError(f"bad --n-list {text!r}: {exc}") from exc


def _cmd_study(args) -> int:
    m = study.default_manufactured()
    threads = args.threads
    kind = args.kind
    if kind == "green":
        tol = args.tol if args.tol is not None else 1e-10
        rep = study.run_green_study(_parse_n_list(args.n_list, study.GREEN_N_LIST), tol, threads)
    elif kind == "separability":
        tol = args.tol if args.tol is not None else 1e-11
        rep = study.run_separability_study(m, _parse_n_list(args.n_list, (16, 32, 64)), tol, threads)
    elif kind == "lemma3":
        tol = args.tol if args.tol is not None else 1e-10
        rep = study.run_cross_section_study(m, _parse_n_list(args.n_list, study.DEFAULT_N_LIST), tol, threads)
    else:
        tol = args.tol if args.tol is not None else 1e-11
        ns = _parse_n_list(args.n_list, study.DEFAULT_N_LIST)
        runner = {
            "lower-bound": study.run_lower_bound_study,
            "control": study.run_control_study,
            "no-quad": study.run_noquad_study,
        }[kind]
        rep = runner(m, ns, tol, threads)

    print("  ".join(rep.columns))
    for rec in rep.records:
        print("  ".join(_fmt(rec[c]) if c != "N" else str(rec[c]) for c in rep.columns))
    if rep.fit:
        print(
            f"fit: a={_fmt(rep.fit['a'])} b={_fmt(rep.fit['b'])} "
            f"rel_residual={_fmt(rep.fit['rel_residual'])}"
        )
    for key, val in rep.estimates.items():
        if isinstance(val, list):
            print(f"{key}: " + ", ".join(_fmt(v) for v in val))
        else:
            print(f"{key}={_fmt(val)}")
    if args.csv:
        report.write_csv(rep, args.csv)
    if args.json:
        report.write_json(rep, args.json)
    if args.svg:
        report.write_figure(rep, args.svg)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

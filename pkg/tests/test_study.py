import numpy as np
import pytest

from cubefem import fdschemes as FD
from cubefem import fem as F
from cubefem import mesh as M
from cubefem import report as R
from cubefem import solve as S
from cubefem import study as ST


class TestManufactured:
    def test_hypothesis_checks_pass(self, manufactured):
        checks = manufactured.hypothesis_checks(tol=1e-10)
        assert checks["passed"], checks

    def test_operator_at_center(self, manufactured):
        assert manufactured.source_center() == pytest.approx(3 * np.pi**2, rel=1e-14)

    def test_shifted_source_values(self, manufactured):
        # source - pi^2 w = 2 pi^2 sin sin; center value 2 pi^2
        c = manufactured.shifted_source(0.5, 0.5)
        assert c == pytest.approx(2 * np.pi**2, rel=1e-14)

    def test_center_bound_against_cosh(self, manufactured):
        bound = manufactured.source_center() / np.cosh(np.pi / 2)
        assert manufactured.shifted_source(0.5, 0.5) >= bound
        assert bound == pytest.approx(11.800202119979634, rel=1e-12)

    def test_broken_manufactured_detected(self):
        broken = ST.ManufacturedSolution(
            name="bad",
            w=lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
            source=lambda x, y: 2.5 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y),
        )
        assert not broken.hypothesis_checks()["passed"]
        # studies refuse to run on it
        with pytest.raises(ValueError):
            ST.run_lower_bound_study(broken, (8, 16))


@pytest.fixture(scope="module")
def rep(manufactured):
    return ST.run_lower_bound_study(manufactured, (8, 16, 32))


@pytest.fixture(scope="module")
def io_rep(manufactured):
    return ST.run_lower_bound_study(manufactured, (8, 16))


class TestLowerBoundStudy:
    def test_record_fields(self, rep):
        assert rep.columns == ["N", "h", "E", "s", "r", "residual"]
        assert [r["N"] for r in rep.records] == [8, 16, 32]
        for rec in rep.records:
            assert rec["residual"] <= 1e-11
            assert rec["E"] > 0

    def test_s_increasing(self, rep):
        svals = [r["s"] for r in rep.records]
        assert svals == sorted(svals)

    def test_fit_positive_slope(self, rep):
        assert rep.fit["a"] > 0
        assert rep.fit["rel_residual"] < 0.05
        assert rep.fit["drop_smallest"]["a"] > 0

    def test_error_attained_on_midplane(self, rep):
        # single z-mode source: the max error sits where sin(pi z) = 1
        for rec in rep.records:
            assert rec["E_midplane"] == pytest.approx(rec["E"], rel=1e-12)

    def test_deterministic(self, manufactured, rep):
        again = ST.run_lower_bound_study(manufactured, (8, 16, 32))
        assert again.records == rep.records
        assert again.fit == rep.fit
        assert again.config["config_hash"] == rep.config["config_hash"]

    def test_tolerance_insensitive(self, manufactured, rep):
        tight = ST.run_lower_bound_study(manufactured, (8, 16, 32), tol=1e-13)
        for a, b in zip(rep.records, tight.records):
            assert abs(a["E"] - b["E"]) <= 0.01 * b["E"]

    def test_thread_count_independent(self, manufactured, rep):
        threaded = ST.run_lower_bound_study(manufactured, (8, 16, 32), threads=3)
        assert threaded.records == rep.records

    def test_fem_path_matches_fd_path(self, manufactured, rep):
        # solving the assembled finite element system reproduces E_N
        n = 8
        tm = M.build_tet_mesh(n)
        sys_fem = F.assemble_stiffness(tm)
        sys_fem.rhs = F.assemble_load_lumped(tm, manufactured.f)
        x = S.solve_direct_small(sys_fem)
        vals = np.zeros((n + 1,) * 3)
        vals[1:-1, 1:-1, 1:-1] = x.reshape((n - 1,) * 3)
        e_fem = np.max(np.abs(vals - manufactured.u_grid(n)))
        assert e_fem == pytest.approx(rep.records[0]["E"], rel=1e-9)

    def test_rejects_bad_n_list(self, manufactured):
        with pytest.raises(ValueError):
            ST.run_lower_bound_study(manufactured, (8, 7))
        with pytest.raises(ValueError):
            ST.run_lower_bound_study(manufactured, (16, 8))


class TestControlStudy:
    def test_plateau_and_ratio(self, manufactured):
        rep = ST.run_control_study(manufactured, (8, 16, 32))
        svals = [r["s"] for r in rep.records]
        assert abs(svals[-1] - svals[-2]) / svals[-2] < 0.05
        for ratio in rep.estimates["doubling_ratios"]:
            assert ratio == pytest.approx(4.0, rel=0.05)
        # the plateau sits at the pure-scheme constant pi^2/12
        assert svals[-1] == pytest.approx(np.pi**2 / 12, rel=0.01)

    def test_control_error_below_weighted(self, manufactured):
        ctrl = ST.run_control_study(manufactured, (16, 32))
        main = ST.run_lower_bound_study(manufactured, (16, 32))
        for c, m in zip(ctrl.records, main.records):
            assert c["E"] < m["E"]


class TestNoQuadStudy:
    def test_log_growth_persists(self, manufactured):
        rep = ST.run_noquad_study(manufactured, (8, 16, 32))
        assert rep.fit["a"] > 0
        svals = [r["s"] for r in rep.records]
        assert svals == sorted(svals)
        assert rep.config["quadrature"]["degree"] == 3


class TestGreenStudy:
    def test_fit_and_anchor(self):
        rep = ST.run_green_study((8, 16, 32, 64))
        assert rep.fit["a"] > 0
        assert rep.fit["rel_residual"] < 0.01
        # slope close to the continuum fundamental-solution rate 1/(2 pi)
        assert rep.fit["a"] == pytest.approx(1 / (2 * np.pi), rel=0.15)
        assert FD.greens_function(2)[1] == 0.25


class TestSeparabilityStudy:
    def test_bounded_ratios_and_exact_variant(self, manufactured):
        rep = ST.run_separability_study(manufactured, (8, 16, 32))
        for ratio in rep.estimates["doubling_ratios"]:
            assert ratio <= 1.25
        assert rep.estimates["max_exact_sep"] <= 1e-9
        assert ST.run_separability_study(manufactured, (2, 4)).records[0]["N"] == 2


class TestCrossSectionStudy:
    def test_ratios(self, manufactured):
        rep = ST.run_cross_section_study(manufactured, (8, 16, 32))
        for rec in rep.records:
            assert 0.9 <= rec["ratio"] <= 1.2
            assert rec["center_ratio"] > 0
            # the maximizing node sits on the center column
            assert rec["argmax_i"] == rec["N"] // 2
            assert rec["argmax_j"] == rec["N"] // 2
        ratios = [rec["center_ratio"] for rec in rep.records]
        assert max(ratios) - min(ratios) <= 0.2 * min(ratios)


class TestRichardsonOracle:
    def test_against_analytic(self):
        src = lambda x, y: 2 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y)
        ref = ST.richardson_reference_2d(lambda n: FD.solve_poisson_2d(n, src), 8)
        x = np.arange(9) / 8
        exact = np.sin(np.pi * x)[:, None] * np.sin(np.pi * x)[None, :]
        raw = FD.solve_poisson_2d(8, src)
        ref_err = np.max(np.abs(ref.values - exact))
        raw_err = np.max(np.abs(raw.values - exact))
        assert ref_err <= raw_err / 100
        assert ref_err <= 1e-5


class TestReportIO:
    def test_csv_roundtrip(self, tmp_path, io_rep):
        path = tmp_path / "r.csv"
        R.write_csv(io_rep, path)
        cols, recs = R.read_csv(path)
        assert cols == io_rep.columns
        assert recs == io_rep.column_table()

    def test_json_roundtrip(self, tmp_path, io_rep):
        path = tmp_path / "r.json"
        R.write_json(io_rep, path)
        back = R.read_json(path)
        assert back.kind == io_rep.kind
        assert back.records == io_rep.records
        assert back.fit == io_rep.fit
        assert back.estimates == io_rep.estimates
        assert back.config == io_rep.config

    def test_csv_roundtrip_cross_section(self, tmp_path, manufactured):
        rep = ST.run_cross_section_study(manufactured, (8, 16))
        path = tmp_path / "c.csv"
        R.write_csv(rep, path)
        cols, recs = R.read_csv(path)
        assert recs == rep.column_table()

    def test_figure_rendered(self, tmp_path, io_rep):
        path = tmp_path / "r.svg"
        R.write_figure(io_rep, path)
        head = path.read_text()[:200]
        assert "<svg" in head or "svg" in head

    def test_schema_version_guard(self, tmp_path, io_rep):
        path = tmp_path / "r.json"
        R.write_json(io_rep, path)
        text = path.read_text().replace('"schema_version": 1', '"schema_version": 99')
        path.write_text(text)
        with pytest.raises(ValueError):
            R.read_json(path)

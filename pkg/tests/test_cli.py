import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from periodic_transport import io
from periodic_transport.cli import (
    EXIT_DIVERGED,
    EXIT_FAIL,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    UsageError,
    main,
    read_config_file,
    resolve_config,
    sweep,
)

cells = st.one_of(
    st.floats(allow_nan=False),
    st.integers(-(10**12), 10**12),
    st.sampled_from(["PASS", "FAIL", "ERROR:ValueError", None, True, False]),
)


@pytest.fixture
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _lines(path):
    return path.read_text().splitlines()


class TestIo:
    def test_seventeen_digits(self):
        assert io.format_value(0.1) == "0.10000000000000001"
        assert io.format_value(1 / 3) == "0.33333333333333331"
        assert io.format_value(math.inf) == "inf"
        assert io.format_value(None) == "none"

    @given(st.lists(st.tuples(cells, cells, cells), max_size=20), st.sampled_from(["csv", "json"]))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, tmp_path_factory, rows, fmt):
        path = tmp_path_factory.mktemp("rt") / f"t.{fmt}"
        config = {"kappa": 0.1, "n_modes": 32, "kappas": [0.2, 0.30000000000000004], "out": None}
        summary = {"verdict": "PASS", "min_margin": -1.2345678901234567e-300}
        io.write_table(path, fmt, ("a", "b", "c"), rows, config, summary)
        back = io.read_table(path)
        assert back["header"] == ("a", "b", "c")
        assert back["rows"] == [tuple(r) for r in rows]
        assert back["config"] == config
        assert back["summary"] == summary

    def test_digest_ignores_key_order(self):
        assert io.config_digest({"a": 1, "b": 0.5}) == io.config_digest({"b": 0.5, "a": 1})
        assert io.config_digest({"a": 1}) != io.config_digest({"a": 2})

    def test_header_carries_config_and_hash(self, tmp_path):
        path = tmp_path / "x.csv"
        cfg = {"delta": 1.0}
        io.write_csv(path, io.TRAJECTORY_HEADER, [(0.0, 1, 1.0)], cfg)
        lines = _lines(path)
        assert json.loads(lines[0][len("# config: "):]) == cfg
        assert lines[1] == f"# config_sha256: {io.config_digest(cfg)}"
        assert lines[2] == "t,n,w"


class TestConfig:
    def test_file_then_flags(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("# comment\nkappa = 0.3\nn-modes=16\nt_end=0.2\n\n")
        cfg = resolve_config(["simulate", "--config", str(cfg_file), "--kappa", "0.1"])
        assert (cfg.kappa, cfg.n_modes, cfg.t_end) == (0.1, 16, 0.2)

    def test_unknown_key_named(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("kappa=0.1\nwobble=2\n")
        with pytest.raises(UsageError, match="wobble"):
            read_config_file(cfg_file)

    def test_unknown_key_exit_code(self, in_tmp, capsys):
        (in_tmp / "run.cfg").write_text("wobble=2\n")
        assert main(["simulate", "--config", "run.cfg"]) == EXIT_USAGE
        assert "wobble" in capsys.readouterr().err

    def test_bad_flag(self):
        assert main(["simulate", "--no-such-flag"]) == EXIT_USAGE
        assert main(["launch"]) == EXIT_USAGE

    def test_bad_value(self, tmp_path):
        (tmp_path / "c.cfg").write_text("n_modes=many\n")
        with pytest.raises(UsageError, match="n_modes"):
            read_config_file(tmp_path / "c.cfg")

    def test_invalid_params_are_usage_errors(self, in_tmp):
        assert main(["simulate", "--alpha", "3"]) == EXIT_USAGE
        assert main(["simulate", "--data", "power", "--p", "4"]) == EXIT_USAGE

    def test_sweep_axis_parsing(self, tmp_path):
        (tmp_path / "c.cfg").write_text("kappas=0.1,0.2\nalphas=\n")
        vals = read_config_file(tmp_path / "c.cfg")
        assert vals["kappas"] == (0.1, 0.2) and vals["alphas"] == ()


class TestCommands:
    def test_simulate_then_verify(self, in_tmp):
        assert main(["simulate", "--delta", "1", "--kappa", "0", "--n-modes", "32", "--t-end", "0.4", "--out", "traj.csv"]) == EXIT_OK
        table = io.read_table("traj.csv")
        assert table["header"] == ("t", "n", "w")
        assert len(table["rows"]) == 41 * 32
        assert table["rows"][0] == (0, 1, 1)
        assert main(["verify-bounds", "--input", "traj.csv", "--out", "bounds.csv"]) == EXIT_OK
        rep = io.read_table("bounds.csv")
        assert rep["header"] == ("t", "n", "value", "bound", "margin")
        assert rep["summary"]["verdict"] == "PASS"

    def test_stride(self, in_tmp):
        main(["simulate", "--t-end", "0.1", "--stride", "3", "--out", "s.csv", "--n-modes", "4"])
        ts = sorted({r[0] for r in io.read_table("s.csv")["rows"]})
        assert ts == pytest.approx([0, 0.03, 0.06, 0.09, 0.1], abs=1e-15)

    def test_json_output(self, in_tmp):
        assert main(["simulate", "--t-end", "0.05", "--format", "json", "--out", "s.json", "--n-modes", "4"]) == EXIT_OK
        doc = json.loads((in_tmp / "s.json").read_text())
        assert doc["columns"] == ["t", "n", "w"]
        assert doc["config_sha256"] == io.config_digest(doc["config"])

    def test_verify_fails_on_violated_hypothesis(self, in_tmp):
        assert main(["verify-bounds", "--data", "power", "--p", "6", "--t-end", "0.1"]) == EXIT_FAIL

    def test_divergence_exit(self, in_tmp):
        assert main(["simulate", "--t-end", "3", "--guard", "1e6", "--out", "d.csv"]) == EXIT_DIVERGED
        table = io.read_table("d.csv")
        assert table["summary"]["status"] == "diverged"
        assert 0 < table["summary"]["t_diverged"] < 3

    def test_wrong_case_for_modes(self, in_tmp):
        assert main(["simulate", "--case-a", "0"]) == EXIT_USAGE

    def test_simulate_pde_fields(self, in_tmp):
        assert main(["simulate-pde", "--case-a", "0", "--t-end", "0.05", "--n-modes", "8", "--out", "f.csv"]) == EXIT_OK
        table = io.read_table("f.csv")
        assert table["header"] == ("t", "x", "u")
        assert len(table["rows"]) == 6 * 32

    def test_blowup_fit(self, in_tmp):
        assert main(["blowup-fit", "--t-end", "0.45", "--out", "fit.csv"]) == EXIT_OK
        summary = io.read_table("fit.csv")["summary"]
        assert summary["check"] == "PASS" and summary["T_fit"] <= 0.5 * 1.15

    def test_inequalities(self, in_tmp):
        assert main(["inequalities", "--kappa", "0.3", "--alpha", "0.5", "--t-end", "1", "--out", "i.csv"]) == EXIT_OK
        rows = io.read_table("i.csv")["rows"]
        assert all(r[2] is True for r in rows)

    def test_compare(self, in_tmp, capsys):
        code = main(["compare", "--t-end", "0.3", "--grid-points", "256", "--out", "c.csv"])
        assert code == EXIT_OK
        assert "max_rel_diff" in capsys.readouterr().out
        assert io.read_table("c.csv")["summary"]["max_rel_diff"] < 1e-6

    def test_compare_fail_exit(self, in_tmp):
        # a loose step-error target leaves the two solvers apart by about 6e-5
        assert main(["compare", "--t-end", "0.3", "--tol", "1e-2", "--dt", "0.1", "--out", "c.csv"]) == EXIT_FAIL

    def test_compare_survives_coarse_grid(self, in_tmp):
        # the compared modes never see the ones a coarse grid drops
        assert main(["compare", "--t-end", "0.3", "--grid-points", "64", "--out", "c.csv"]) == EXIT_OK


class TestSweep:
    def test_empty_grid(self, in_tmp):
        assert main(["sweep", "--kappas", "", "--out", "s.csv"]) == EXIT_OK
        table = io.read_table("s.csv")
        assert table["header"] == ("kappa", "alpha", "delta", "T_fit", "bound", "pass")
        assert table["rows"] == []

    def test_subcritical_rows_pass(self):
        ks = tuple(np.round(np.arange(0.1, 0.441, 0.04), 2))
        rows = sweep(RunConfig(command="sweep", kappas=ks, t_end=0.4, n_modes=32))
        assert [r[0] for r in rows] == sorted(ks)
        for k, _, _, t_fit, bound, status in rows:
            assert status == "PASS"
            assert bound == pytest.approx(1 / k) and t_fit <= bound * 1.15

    def test_supercritical_rows_informational(self):
        rows = sweep(RunConfig(command="sweep", kappas=(0.6, 1.0), t_end=0.4))
        assert all(r[5] == "INFO" for r in rows)

    def test_order_and_partial_failure(self):
        rows = sweep(RunConfig(command="sweep", kappas=(0.3, 0.1), alphas=(3.0, 1.0), t_end=0.2))
        assert [(r[0], r[1]) for r in rows] == [(0.1, 1.0), (0.1, 3.0), (0.3, 1.0), (0.3, 3.0)]
        assert rows[1][5].startswith("ERROR") and rows[1][3] is None
        assert rows[0][5] == "PASS"

    def test_failed_rows_set_exit(self, in_tmp):
        assert main(["sweep", "--kappas", "0.1", "--alphas", "1,3", "--t-end", "0.2", "--out", "s.csv"]) == EXIT_FAIL

    def test_parallel_matches_serial(self, in_tmp):
        args = ["sweep", "--kappas", "0.2,0.1", "--alphas", "1,0.5", "--t-end", "0.2"]
        main(args + ["--out", "serial.csv"])
        main(args + ["--jobs", "2", "--out", "parallel.csv"])
        # the echoed configs differ in jobs and out; everything below them must match
        serial = _lines(in_tmp / "serial.csv")[2:]
        parallel = _lines(in_tmp / "parallel.csv")[2:]
        assert serial == parallel and len(serial) == 2 + 1 + 4

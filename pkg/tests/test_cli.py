"""Tests for the command-line front door: forward, verify, reconstruct."""

import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sonarkit.cli import (
    CONFIG_ENV_VAR,
    EXIT_DOMAIN,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY_FAIL,
    CliError,
    RunConfig,
    load_config,
    load_sonar_table,
    parse_grid,
    run,
)
from sonarkit.quadrature import DEFAULT_SPEC

P2_TEXT = """\
dim 2
kind gaussian
center 0.0 1.0
width 0.25
amplitude 1.0
cutoff 1.0
"""

P3_TEXT = """\
dim 3
kind polybump
center 0.0 0.0 1.0
radius 0.6
amplitude 1.0
power 3
"""


@pytest.fixture
def p2_file(tmp_path):
    path = tmp_path / "p2.txt"
    path.write_text(P2_TEXT)
    return str(path)


@pytest.fixture
def p3_file(tmp_path):
    path = tmp_path / "p3.txt"
    path.write_text(P3_TEXT)
    return str(path)


class TestParseGrid:
    def test_inclusive_endpoints(self):
        grid = parse_grid("0.5:2.5:5")
        assert_allclose(grid, [0.5, 1.0, 1.5, 2.0, 2.5])

    def test_single_point(self):
        assert_allclose(parse_grid("1.5:1.5:1"), [1.5])

    def test_single_point_needs_equal_ends(self):
        with pytest.raises(CliError) as info:
            parse_grid("1.0:2.0:1")
        assert info.value.code == EXIT_USAGE

    def test_malformed_token(self):
        for token in ("1:2", "a:b:3", "0:1:0", None):
            with pytest.raises(CliError) as info:
                parse_grid(token)
            assert info.value.code == EXIT_USAGE


class TestConfigFile:
    def test_parses_comments_and_dashes(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text(
            "# a comment\n"
            "\n"
            "limit-base 16.0  # trailing\n"
            "heights 0.5:1.5:3\n"
        )
        values = load_config(str(path))
        assert values == {"limit_base": "16.0", "heights": "0.5:1.5:3"}

    def test_missing_file(self):
        with pytest.raises(CliError) as info:
            load_config("/nonexistent/run.conf")
        assert info.value.code == EXIT_USAGE

    def test_bad_line(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("orphan-key\n")
        with pytest.raises(CliError) as info:
            load_config(str(path))
        assert info.value.code == EXIT_USAGE
        assert ":1:" in str(info.value)

    def test_flags_beat_file_values(self):
        class Args:
            heights = "0:1:2"

        config = RunConfig(Args(), {"heights": "5:6:2", "offsets": "1:2:2"})
        assert config.value("heights") == "0:1:2"
        assert config.value("offsets") == "1:2:2"
        assert config.value("absent", default="d") == "d"

    def test_spec_overrides(self):
        class Args:
            panels = 4

        config = RunConfig(Args(), {"limit_base": "32.0"})
        spec = config.spec()
        assert spec.panels == 4
        assert spec.limit_base == 32.0
        assert spec.nodes_per_panel == DEFAULT_SPEC.nodes_per_panel


class TestForward:
    def test_sonar_grid_shape(self, tmp_path, monkeypatch, p2_file):
        monkeypatch.chdir(tmp_path)
        code = run(
            [
                "forward",
                "--transform",
                "sonar",
                "--phantom",
                p2_file,
                "--centers=-1:1:32",
                "--radii",
                "0.1:2:32",
                "--output",
                "sonar.txt",
            ]
        )
        assert code == EXIT_OK
        lines = (tmp_path / "sonar.txt").read_text().strip().split("\n")
        rows = [l for l in lines if not l.startswith("#")]
        assert len(rows) == 1024
        assert lines[0] == "# transform sonar"

    def test_radon_h_values(self, tmp_path, monkeypatch, p2_file):
        monkeypatch.chdir(tmp_path)
        code = run(
            [
                "forward",
                "--transform",
                "radon-h",
                "--phantom",
                p2_file,
                "--heights",
                "1:1:1",
                "--output",
                "rh.txt",
            ]
        )
        assert code == EXIT_OK
        row = (tmp_path / "rh.txt").read_text().strip().split("\n")[-1]
        height, value = (float(v) for v in row.split())
        assert height == 1.0
        # the profile peaks at the bump height with value near width*sqrt(pi)
        assert value == pytest.approx(0.4431, abs=1e-3)

    def test_unknown_transform_exits_usage(self, p2_file):
        with pytest.raises(SystemExit) as info:
            run(["forward", "--transform", "warp", "--phantom", p2_file])
        assert info.value.code == EXIT_USAGE

    def test_zero_radius_is_domain_error(self, tmp_path, monkeypatch, p2_file, capsys):
        monkeypatch.chdir(tmp_path)
        code = run(
            [
                "forward",
                "--transform",
                "sonar",
                "--phantom",
                p2_file,
                "--centers=-1:1:4",
                "--radii",
                "0:2:5",
            ]
        )
        assert code == EXIT_DOMAIN
        assert "positive" in capsys.readouterr().err

    def test_missing_grid_flag(self, tmp_path, monkeypatch, p2_file, capsys):
        monkeypatch.chdir(tmp_path)
        code = run(["forward", "--transform", "sonar", "--phantom", p2_file])
        assert code == EXIT_USAGE

    def test_missing_phantom_flag(self, capsys):
        code = run(["forward", "--transform", "radon-h", "--heights", "1:1:1"])
        assert code == EXIT_USAGE
        assert "--phantom" in capsys.readouterr().err

    def test_unparseable_phantom(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("dim 2\nkind gaussian\ncenter 0.0 1.0\n")
        code = run(
            ["forward", "--transform", "radon-h", "--phantom", str(bad),
             "--heights", "1:1:1"]
        )
        assert code == EXIT_USAGE
        err = capsys.readouterr().err
        assert "bad.txt" in err and "missing fields" in err

    def test_three_dimensional_sonar_needs_two_center_axes(
        self, tmp_path, monkeypatch, p3_file
    ):
        monkeypatch.chdir(tmp_path)
        code = run(
            [
                "forward",
                "--transform",
                "sonar",
                "--phantom",
                p3_file,
                "--centers=-1:1:3",
                "--radii",
                "0.5:1:2",
            ]
        )
        assert code == EXIT_USAGE

    def test_cylinder_needs_3d_phantom(self, tmp_path, monkeypatch, p2_file):
        monkeypatch.chdir(tmp_path)
        code = run(
            [
                "forward",
                "--transform",
                "cylinder",
                "--phantom",
                p2_file,
                "--offsets",
                "0:0:1",
                "--radii",
                "0.5:1:2",
            ]
        )
        assert code == EXIT_USAGE

    def test_reruns_are_byte_identical(self, tmp_path, monkeypatch, p2_file):
        monkeypatch.chdir(tmp_path)
        argv = [
            "forward", "--transform", "radon-h", "--phantom", p2_file,
            "--heights", "0.5:1.5:4",
        ]
        assert run(argv + ["--output", "a.txt"]) == EXIT_OK
        assert run(argv + ["--output", "b.txt"]) == EXIT_OK
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_no_temp_files_left_behind(self, tmp_path, monkeypatch, p2_file):
        monkeypatch.chdir(tmp_path)
        run(
            ["forward", "--transform", "radon-h", "--phantom", p2_file,
             "--heights", "1:1:1", "--output", "out.txt"]
        )
        leftovers = [n for n in os.listdir(tmp_path) if n.startswith(".tmp-")]
        assert leftovers == []


class TestConfigPlumbing:
    def test_config_file_supplies_flags(self, tmp_path, monkeypatch, p2_file):
        monkeypatch.chdir(tmp_path)
        conf = tmp_path / "run.conf"
        conf.write_text("heights 1:1:1\noutput from_conf.txt\n")
        code = run(
            ["--config", str(conf), "forward", "--transform", "radon-h",
             "--phantom", p2_file]
        )
        assert code == EXIT_OK
        assert (tmp_path / "from_conf.txt").exists()

    def test_environment_variable_configures(self, tmp_path, monkeypatch, p2_file):
        monkeypatch.chdir(tmp_path)
        conf = tmp_path / "env.conf"
        conf.write_text("heights 1:1:1\n")
        monkeypatch.setenv(CONFIG_ENV_VAR, str(conf))
        code = run(
            ["forward", "--transform", "radon-h", "--phantom", p2_file,
             "--output", "env.txt"]
        )
        assert code == EXIT_OK
        assert (tmp_path / "env.txt").exists()


class TestVerify:
    def test_empty_suites(self, capsys):
        assert run(["verify"]) == EXIT_USAGE
        assert "no suites" in capsys.readouterr().err

    def test_unknown_suite(self, capsys):
        assert run(["verify", "--suites", "john,warp"]) == EXIT_USAGE
        assert "warp" in capsys.readouterr().err

    def test_fast_suites_pass(self, tmp_path, capsys):
        code = run(
            ["verify", "--suites", "john,semigroup,inverse",
             "--out-dir", str(tmp_path)]
        )
        assert code == EXIT_OK
        for suite in ("john", "semigroup", "inverse"):
            report = (tmp_path / f"{suite}.report.txt").read_text()
            assert report.startswith(f"identity {suite}")
            assert report.strip().endswith("result pass")
        lines = capsys.readouterr().out.strip().split("\n")
        assert len(lines) == 3
        assert all(": pass (max_rel_err " in line for line in lines)

    def test_unattainable_tolerance_fails_but_reports(self, tmp_path, capsys):
        code = run(
            ["verify", "--suites", "inverse", "--tolerance", "1e-12",
             "--out-dir", str(tmp_path)]
        )
        assert code == EXIT_VERIFY_FAIL
        report = (tmp_path / "inverse.report.txt").read_text()
        assert report.strip().endswith("result fail")

    def test_3d_phantom_rejected_for_2d_suites(self, tmp_path, p3_file, capsys):
        code = run(
            ["verify", "--suites", "vertical", "--phantom", p3_file,
             "--out-dir", str(tmp_path)]
        )
        assert code == EXIT_DOMAIN

    def test_2d_phantom_rejected_for_cylinder(self, tmp_path, p2_file):
        code = run(
            ["verify", "--suites", "cylinder", "--phantom", p2_file,
             "--out-dir", str(tmp_path)]
        )
        assert code == EXIT_DOMAIN

    def test_report_files_are_deterministic(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert (
                run(["verify", "--suites", "john", "--out-dir", str(out)])
                == EXIT_OK
            )
        assert (a / "john.report.txt").read_bytes() == (
            b / "john.report.txt"
        ).read_bytes()


class TestReconstruct:
    def test_missing_input(self, capsys):
        assert run(["reconstruct"]) == EXIT_USAGE
        assert "--phantom or --sonar-table" in capsys.readouterr().err

    def test_3d_phantom_rejected(self, p3_file, capsys):
        assert run(["reconstruct", "--phantom", p3_file]) == EXIT_USAGE
        assert "two-dimensional" in capsys.readouterr().err

    def test_bad_window_token(self, p2_file):
        code = run(
            ["reconstruct", "--phantom", p2_file, "--window", "0:1:0.1"]
        )
        assert code == EXIT_USAGE

    def test_phantom_round_trip(self, tmp_path, monkeypatch, p2_file, capsys):
        monkeypatch.chdir(tmp_path)
        code = run(
            [
                "reconstruct",
                "--phantom",
                p2_file,
                "--resolution",
                "24",
                "--angles",
                "12",
                "--offsets",
                "48",
                "--out-prefix",
                "rec",
            ]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("rel_l2_error ")
        pgm = (tmp_path / "rec.pgm").read_bytes()
        assert pgm.startswith(b"P5\n")
        assert b"24 24\n65535\n" in pgm
        summary = (tmp_path / "rec.summary.txt").read_text()
        assert "rel_l2_error" in summary
        rel = float(
            [l for l in summary.split("\n") if l.startswith("rel_l2_error")][0]
            .split()[1]
        )
        assert rel < 0.2
        dump = (tmp_path / "rec.txt").read_text().strip().split("\n")
        assert dump[0] == "resolution 24 24"
        assert len(dump) == 2 + 24 * 24

    def test_table_round_trip_warns_and_reconstructs(
        self, tmp_path, monkeypatch, p2_file, capsys
    ):
        monkeypatch.chdir(tmp_path)
        assert (
            run(
                [
                    "forward",
                    "--transform",
                    "sonar",
                    "--phantom",
                    p2_file,
                    "--centers=-3:3:41",
                    "--radii",
                    "0.05:4:40",
                    "--output",
                    "table.txt",
                ]
            )
            == EXIT_OK
        )
        code = run(
            [
                "reconstruct",
                "--sonar-table",
                "table.txt",
                "--resolution",
                "16",
                "--angles",
                "8",
                "--offsets",
                "48",
                "--out-prefix",
                "trec",
            ]
        )
        assert code == EXIT_OK
        err = capsys.readouterr().err
        assert "clamped" in err
        summary = (tmp_path / "trec.summary.txt").read_text()
        assert "L2 norm" in summary

    def test_window_beyond_coverage_warns(self, tmp_path, monkeypatch, p2_file, capsys):
        monkeypatch.chdir(tmp_path)
        run(
            [
                "forward",
                "--transform",
                "sonar",
                "--phantom",
                p2_file,
                "--centers=-3:3:21",
                "--radii",
                "0.05:4:20",
                "--output",
                "table.txt",
            ]
        )
        code = run(
            [
                "reconstruct",
                "--sonar-table",
                "table.txt",
                "--window=-9:9:0.1:5",
                "--resolution",
                "8",
                "--angles",
                "8",
                "--offsets",
                "32",
                "--out-prefix",
                "wrec",
            ]
        )
        assert code == EXIT_OK
        assert "coverage" in capsys.readouterr().err


class TestSonarTableLoading:
    def test_round_trips_values(self, tmp_path):
        c = np.linspace(-1.0, 1.0, 5)
        r = np.linspace(0.5, 1.5, 4)
        rows = []
        for ci in c:
            for ri in r:
                rows.append(f"{ci} {ri} {np.cos(ci) * ri}")
        path = tmp_path / "t.txt"
        path.write_text("# header\n" + "\n".join(rows) + "\n")
        data = load_sonar_table(str(path))
        assert data.dimension == 2
        got = data(np.array([0.0]), np.array([1.0]))
        assert got[0] == pytest.approx(1.0, abs=1e-6)

    def test_partial_grid_rejected(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text("0 1 0.5\n0 2 0.25\n1 1 0.5\n")
        with pytest.raises(CliError) as info:
            load_sonar_table(str(path))
        assert info.value.code == EXIT_USAGE

    def test_malformed_row_rejected(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text("0 1\n")
        with pytest.raises(CliError) as info:
            load_sonar_table(str(path))
        assert ":1:" in str(info.value)

    def test_all_zero_table_rejected(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text("0 1 0\n0 2 0\n1 1 0\n1 2 0\n")
        with pytest.raises(CliError) as info:
            load_sonar_table(str(path))
        assert info.value.code == EXIT_USAGE

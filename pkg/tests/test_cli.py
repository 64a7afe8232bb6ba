"""End-to-end tests for the command-line interface and scenario files."""

import os

import numpy as np
import pytest

from dads.cli import (
    EXIT_CHECK_FAILED,
    EXIT_DIVERGENCE,
    EXIT_MAJORANT,
    EXIT_OK,
    EXIT_PARSE,
    ScenarioError,
    load_scenario,
    main,
    parse_scenario_text,
)
from dads.simulate import TrajectoryLog

SCEN = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def scen(name):
    return os.path.join(SCEN, name)


class TestScenarioParsing:
    def test_load_benchmark_scenario(self):
        s = load_scenario(scen("fig1_dads.scenario"))
        assert s.get("system", "name") == "wingrock"
        assert s.getfloat("controller", "gamma") == 20.0
        assert s.getvector("sim", "x0") == [1.0, -0.5, -18.0]
        assert s.getint("sim", "log_stride") == 100

    def test_missing_file(self):
        with pytest.raises(ScenarioError):
            load_scenario("/nonexistent/file.scenario")

    def test_malformed_text(self):
        with pytest.raises(ScenarioError):
            parse_scenario_text("this is [not\nvalid ini ==")

    def test_round_trip(self):
        s = load_scenario(scen("fig4_sigma04.scenario"))
        back = parse_scenario_text(s.serialize())
        assert back.sections == s.sections

    def test_defaults(self):
        s = parse_scenario_text("[system]\nname = wingrock\n")
        assert s.getfloat("controller", "c", 0.5) == 0.5
        assert s.getvector("sim", "x0", [0.0]) == [0.0]


class TestSimulateCommand:
    def test_sigma_scenario_ok(self, tmp_path, capsys):
        code = main(["simulate", scen("fig1_sigma04.scenario"),
                     "--t-end", "0.5", "--out", str(tmp_path)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "sup|Y| tail" in out
        csv_path = tmp_path / "fig1_sigma04.csv"
        assert csv_path.exists()

    def test_dads_scenario_csv_contents(self, tmp_path):
        code = main(["simulate", scen("fig1_dads.scenario"),
                     "--t-end", "0.2", "--out", str(tmp_path)])
        assert code == EXIT_OK
        log = TrajectoryLog.from_csv(str(tmp_path / "fig1_dads.csv"))
        # output norm restricted to (x1, x2): |(1, -0.5)|
        assert log.Ynorm[0] == pytest.approx(1.1180339887498949, rel=1e-12)
        assert log.ctrl_names == ("z",)
        assert log.ctrl[0, 0] == pytest.approx(-2.302585092994046, rel=1e-12)

    def test_missing_scenario_is_parse_error(self, tmp_path):
        assert main(["simulate", "/no/such/file", "--out", str(tmp_path)]) == EXIT_PARSE

    def test_bad_controller_params_parse_error(self, tmp_path):
        bad = tmp_path / "bad.scenario"
        bad.write_text(
            "[system]\nname = wingrock\n[controller]\ntype = dads-wingrock\nc = 0.1\n"
        )
        assert main(["simulate", str(bad), "--out", str(tmp_path)]) == EXIT_PARSE

    def test_stiff_explicit_integration_diverges(self, tmp_path):
        stiff = tmp_path / "stiff.scenario"
        stiff.write_text(
            "[system]\nname = wingrock\n"
            "[controller]\ntype = dads-wingrock\n"
            "[sim]\ndt = 1e-4\nt_end = 1.0\nmethod = rk4\n"
            "x0 = 1.0, -0.5, -18.0\nctrl0 = -2.302585092994046\n"
            "[parameter]\nvalue = 20, 20, 2, 1\n"
        )
        assert main(["simulate", str(stiff), "--out", str(tmp_path)]) == EXIT_DIVERGENCE


class TestVerifyCommand:
    def test_dissipation_check_ok(self, tmp_path, capsys):
        code = main(["verify", scen("ineq34.scenario"), "--out", str(tmp_path)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "PASS" in out
        assert (tmp_path / "ineq34.checks.csv").exists()

    def test_corrupted_controller_fails_check(self, tmp_path):
        bad = tmp_path / "corrupt.scenario"
        bad.write_text(
            "[system]\nname = wingrock\n"
            "[controller]\ntype = dads-wingrock\n"
            "[checks]\nnames = dissipation-dads\nn_samples = 200\n"
            "corrupt_controller = true\n"
        )
        assert main(["verify", str(bad), "--out", str(tmp_path)]) == EXIT_CHECK_FAILED

    def test_unknown_check_is_parse_error(self, tmp_path):
        bad = tmp_path / "unknown.scenario"
        bad.write_text(
            "[system]\nname = wingrock\n[checks]\nnames = no-such-check\n"
        )
        assert main(["verify", str(bad), "--out", str(tmp_path)]) == EXIT_PARSE

    def test_no_checks_is_parse_error(self, tmp_path):
        bad = tmp_path / "empty.scenario"
        bad.write_text("[system]\nname = wingrock\n")
        assert main(["verify", str(bad), "--out", str(tmp_path)]) == EXIT_PARSE


class TestSynthesizeCommand:
    def test_wingrock_synthesis_ok(self, tmp_path, capsys):
        code = main(["synthesize", scen("synth_wingrock.scenario"),
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "stage 3" in out
        assert (tmp_path / "synth_wingrock.report.txt").exists()

    def test_undersized_majorant_exits_4(self, tmp_path):
        bad = tmp_path / "badmaj.scenario"
        bad.write_text(
            "[system]\nname = wingrock\n"
            "[synthesis]\nb = 1.0\na = 2.0\nc = 0.5\ngamma = 20\neps = 0.01\n"
            "override_base_r = 0.001\n"
        )
        assert main(["synthesize", str(bad), "--out", str(tmp_path)]) == EXIT_MAJORANT


class TestCompareCommand:
    def test_needs_two_scenarios(self):
        assert main(["compare", scen("fig1_dads.scenario")]) == EXIT_PARSE

    def test_two_sigma_scenarios(self, tmp_path, capsys):
        code = main([
            "compare", scen("fig1_sigma0.scenario"), scen("fig1_sigma04.scenario"),
            "--t-end", "0.5", "--out", str(tmp_path),
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "sigma-mod(0)" in out
        assert "sigma-mod(0.4)" in out
        assert (tmp_path / "compare.txt").exists()

    def test_horizon_mismatch_is_parse_error(self, tmp_path):
        a = tmp_path / "a.scenario"
        b = tmp_path / "b.scenario"
        def text(t_end):
            return (
                "[system]\nname = wingrock\n"
                "[controller]\ntype = sigma-mod\n"
                f"[sim]\ndt = 1e-3\nt_end = {t_end}\nmethod = rk4\nlog_stride = 10\n"
                "x0 = 1.0, -0.5, -18.0\n"
                "[parameter]\nvalue = 20, 20, 2, 1\n"
            )

        a.write_text(text(0.2))
        b.write_text(text(0.4))
        assert main(["compare", str(a), str(b)]) == EXIT_PARSE


class TestArgumentParsing:
    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_PARSE

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0

"""Integration tests for the elastic_lab command-line front end."""

import json

import numpy as np
import pytest

from src import elastic_lab
from src.acceptance import CriterionResult
from src.elastic_lab import HANDLERS, build_parser, main, overrides_from_args
from src.errors import StabilityError


@pytest.fixture
def out_dir(tmp_path, clean_lab_env):
    return tmp_path / "out"


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"scan": {"samples": 2000}}))
    return path


class TestParser:
    """Test suite for argument parsing."""

    def test_overrides_from_flags(self, tmp_path):
        """Test that only given flags become overrides."""
        args = build_parser().parse_args(["eig-sweep", "--a", "0.5", "--theta", "0.9", "--out", str(tmp_path), "--seed", "3"])
        assert overrides_from_args(args) == {
            "params": {"a": 0.5, "theta": 0.9},
            "output": {"directory": str(tmp_path)},
            "seed": 3,
        }

    def test_no_flags_no_overrides(self):
        """Test that a bare command gives no overrides."""
        assert overrides_from_args(build_parser().parse_args(["simulate"])) == {}

    def test_unknown_command(self):
        """Test that an unknown command is a configuration error."""
        with pytest.raises(ValueError):
            build_parser().parse_args(["plot-everything"])

    def test_every_command_has_a_handler(self):
        """Test that the command list and handler table agree."""
        assert set(elastic_lab.COMMANDS) == set(HANDLERS)


class TestMainExitCodes:
    """Test suite for main() exit codes."""

    def test_missing_command(self, clean_lab_env):
        """Test that no command exits with 1."""
        assert main([]) == 1

    def test_invalid_params(self, out_dir):
        """Test that b < a exits with 1 before any pipeline runs."""
        assert main(["eig-sweep", "--a", "3", "--b", "2", "--out", str(out_dir)]) == 1
        assert not (out_dir / "eig_sweep.csv").exists()

    def test_failed_verdict(self, out_dir, mocker):
        """Test that a failing handler verdict exits with 2."""
        mocker.patch.dict(HANDLERS, {"gevrey-check": lambda config, renderer, svg: "fail"})
        assert main(["gevrey-check", "--out", str(out_dir)]) == 2
        assert (out_dir / "index.html").exists()

    def test_stability_error(self, out_dir, mocker):
        """Test that a StabilityError exits with 2."""
        handler = mocker.Mock(side_effect=StabilityError("positive real part"))
        mocker.patch.dict(HANDLERS, {"stability-scan": handler})
        assert main(["stability-scan", "--out", str(out_dir)]) == 2

    def test_keyboard_interrupt(self, out_dir, mocker):
        """Test that an interrupt exits with 130."""
        mocker.patch.dict(HANDLERS, {"simulate": mocker.Mock(side_effect=KeyboardInterrupt)})
        assert main(["simulate", "--out", str(out_dir)]) == 130

    def test_unexpected_error(self, out_dir, mocker):
        """Test that any other exception exits with 1."""
        mocker.patch.dict(HANDLERS, {"simulate": mocker.Mock(side_effect=RuntimeError("boom"))})
        assert main(["simulate", "--out", str(out_dir)]) == 1


class TestCommands:
    """Test suite for the fast subcommands end to end."""

    def test_eig_sweep(self, out_dir, small_config):
        """Test the sweep CSV header, row count and JSON verdict."""
        assert main(["eig-sweep", "--config", str(small_config), "--out", str(out_dir)]) == 0
        lines = (out_dir / "eig_sweep.csv").read_text().splitlines()
        assert lines[0] == "r,re_l1,im_l1,re_l2,im_l2,re_l3,im_l3,re_l4,im_l4,res_order_pred"
        assert len(lines) == 41
        report = json.loads((out_dir / "eig_sweep.json").read_text())
        assert report["verdict"] == "pass"
        assert report["version"] == elastic_lab.__version__
        assert (out_dir / "config.schema.json").exists()
        assert (out_dir / "index.html").exists()

    def test_stability_scan(self, out_dir, small_config):
        """Test the gap minimum for the balanced parameter set."""
        assert main(["stability-scan", "--config", str(small_config), "--out", str(out_dir)]) == 0
        report = json.loads((out_dir / "stability_scan.json").read_text())
        assert report["min_real_part"] == pytest.approx(0.0316, rel=0.02)
        assert report["argmin_r"] == pytest.approx(0.1, rel=0.05)
        assert report["config"]["params"]["rho"] == 0.25

    def test_flags_reach_the_config(self, out_dir, small_config):
        """Test that --rho and --theta change the embedded config."""
        args = ["stability-scan", "--config", str(small_config), "--rho", "0.2", "--theta", "0.7", "--out", str(out_dir)]
        assert main(args) == 0
        report = json.loads((out_dir / "stability_scan.json").read_text())
        assert report["config"]["params"]["theta"] == 0.7

    def test_pointwise_fit(self, out_dir):
        """Test that the pointwise constants are reported."""
        assert main(["pointwise-fit", "--out", str(out_dir)]) == 0
        report = json.loads((out_dir / "pointwise_fit.json").read_text())
        assert 0 < report["C"] <= report["max_constant"]
        assert report["c"] > 0

    def test_simulate(self, tmp_path, out_dir):
        """Test the norm series and snapshots of a small lattice run."""
        config = tmp_path / "simulate.json"
        config.write_text(json.dumps({"grid": {"n": 128, "L": 40.0}, "study": {"times": [0.0, 1.0, 10.0]}}))
        assert main(["simulate", "--config", str(config), "--out", str(out_dir)]) == 0
        lines = (out_dir / "simulate.csv").read_text().splitlines()
        assert lines[0] == "t,norm_s0,norm_s1,zero_mode_displacement"
        assert len(lines) == 4
        norms = [float(line.split(",")[1]) for line in lines[1:]]
        assert norms[0] >= norms[1] >= norms[2]
        assert (out_dir / "snapshot.bin").exists()
        assert (out_dir / "snapshot.csv").exists()

    def test_simulate_reports_mean_displacement(self, tmp_path, out_dir):
        """Test that u0 data keeps its mean displacement in the zero-mode column."""
        config = tmp_path / "simulate.json"
        config.write_text(json.dumps({
            "grid": {"n": 128, "L": 40.0},
            "data": {"target": "u0"},
            "study": {"times": [0.0, 10.0]},
        }))
        assert main(["simulate", "--config", str(config), "--out", str(out_dir)]) == 0
        lines = (out_dir / "simulate.csv").read_text().splitlines()[1:]
        for line in lines:
            assert float(line.split(",")[3]) == pytest.approx(2.0 * np.pi, rel=1e-10)

    def test_gevrey_check(self, out_dir):
        """Test that theta < 1 gives a bounded indicator."""
        assert main(["gevrey-check", "--out", str(out_dir)]) == 0
        report = json.loads((out_dir / "gevrey_check.json").read_text())
        assert report["expectation"] == "bounded"
        assert report["indicator"] <= 2.0

    @pytest.mark.parametrize("command", ["eig-sweep", "stability-scan"])
    def test_reruns_are_byte_identical(self, out_dir, small_config, command):
        """Test that the same config and seed reproduce every CSV and JSON byte."""
        args = [command, "--config", str(small_config), "--seed", "42", "--out", str(out_dir)]

        def snapshot():
            return {p.name: p.read_bytes() for p in out_dir.iterdir() if p.suffix in (".csv", ".json")}

        assert main(args) == 0
        first = snapshot()
        for path in out_dir.iterdir():
            path.unlink()
        assert main(args) == 0
        second = snapshot()
        assert first
        assert sorted(first) == sorted(second)
        for name, content in first.items():
            assert second[name] == content, name

    def test_environment_output_dir(self, tmp_path, clean_lab_env, small_config):
        """Test that ELASTIC_LAB_OUTPUT_DIR is honoured without --out."""
        clean_lab_env.setenv("ELASTIC_LAB_OUTPUT_DIR", str(tmp_path / "env-out"))
        assert main(["eig-sweep", "--config", str(small_config)]) == 0
        assert (tmp_path / "env-out" / "eig_sweep.csv").exists()


class TestVerifyAll:
    """Test suite for verify-all with a stubbed acceptance run."""

    def _results(self, passed_last=True):
        return [
            CriterionResult(name="factorization", passed=True, details={"draws": 100}, elapsed=0.5),
            CriterionResult(name="gevrey", passed=passed_last, details={}, elapsed=1.0),
        ]

    def test_summary_written(self, out_dir, mocker, capsys):
        """Test the per-criterion reports, summary and printed table."""
        mocker.patch("src.elastic_lab.run_acceptance", return_value=self._results())
        assert main(["verify-all", "--out", str(out_dir)]) == 0
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["criteria"] == [
            {"criterion": "factorization", "verdict": "pass"},
            {"criterion": "gevrey", "verdict": "pass"},
        ]
        assert (out_dir / "acceptance_factorization.json").exists()
        output = capsys.readouterr().out
        assert "criterion" in output and "PASS" in output

    def test_failure_exits_two(self, out_dir, mocker):
        """Test that one failed criterion exits with 2 and still writes the summary."""
        mocker.patch("src.elastic_lab.run_acceptance", return_value=self._results(passed_last=False))
        assert main(["verify-all", "--out", str(out_dir)]) == 2
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["criteria"][1]["verdict"] == "fail"
        assert "verdict-fail" in (out_dir / "index.html").read_text()

    def test_seed_passed_through(self, out_dir, mocker):
        """Test that --seed reaches the acceptance run."""
        run = mocker.patch("src.elastic_lab.run_acceptance", return_value=self._results())
        main(["verify-all", "--seed", "7", "--out", str(out_dir)])
        assert run.call_args.kwargs["seed"] == 7

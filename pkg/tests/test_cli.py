"""Test command line interface."""

import csv
import json

import pytest
from typer.testing import CliRunner

from osc_qft.cli import app
from osc_qft.config import ScenarioConfig
from osc_qft.runner import ScenarioRunner

SCENARIO = """\
seed = 7
log_level = "WARNING"

[device]
omega_a_mhz = 2000.0
omega_b_mhz = 2500.0

[protocol]
n = 2
backend = "ideal"
initial = { "00" = [1.0, 0.0], "11" = [1.0, 0.0] }

[phase]
theta_turns = 0.25
trials = 100
"""

runner = CliRunner()


@pytest.fixture
def scenario(tmp_path, clean_env):
    path = tmp_path / "scenario.toml"
    path.write_text(SCENARIO, encoding="utf-8")
    return path


@pytest.fixture
def out(tmp_path):
    return tmp_path / "runs"


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


def manifest(run_dir):
    return json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))


def read_rows(path):
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


class TestCommands:
    """Test every subcommand end to end on the ideal backend."""

    def test_transfer(self, scenario, out):
        """Test artifacts and the target fidelity of the ideal transfer."""
        result = invoke("transfer", "--config", scenario, "--mode", "ideal", "--out", out)
        assert result.exit_code == 0, result.output
        run_dir = out / "transfer-seed7"
        record = manifest(run_dir)
        assert record["reports"]["target_fidelity"] == pytest.approx(1.0)
        assert set(record["outputs"]) >= {
            "config.json",
            "manifest.json",
            "populations.csv",
            "steps.csv",
            "transfer.json",
        }
        assert [row["k"] for row in read_rows(run_dir / "steps.csv")] == ["1", "0"]

    def test_transfer_is_reproducible(self, scenario, out):
        """Test a repeated run gets a new directory with identical data."""
        for _ in range(2):
            assert invoke("transfer", "--config", scenario, "--out", out).exit_code == 0
        first = (out / "transfer-seed7" / "populations.csv").read_text(encoding="utf-8")
        second = (out / "transfer-seed7-1" / "populations.csv").read_text(encoding="utf-8")
        assert first == second

    def test_seed_override(self, scenario, out):
        """Test --seed names the run directory."""
        assert invoke("transfer", "--config", scenario, "--seed", 11, "--out", out).exit_code == 0
        assert (out / "transfer-seed11").is_dir()

    def test_qft(self, scenario, out):
        """Test the post-selected transform matches the DFT of the register state."""
        result = invoke("qft", "--config", scenario, "--out", out)
        assert result.exit_code == 0, result.output
        run_dir = out / "qft-seed7"
        reports = manifest(run_dir)["reports"]
        assert reports["oracle_fidelity"] == pytest.approx(1.0)
        assert reports["success_probability"] == pytest.approx(0.25)
        assert len(read_rows(run_dir / "qft_amplitudes.csv")) == 4
        summary = json.loads((run_dir / "qft.json").read_text(encoding="utf-8"))
        assert summary["result"]["tau_2_us"] == pytest.approx(5.0)

    def test_qft_physical_disentangle(self, scenario, out):
        """Test the reverse transfer and qubit X readout route."""
        text = scenario.read_text(encoding="utf-8").replace(
            'backend = "ideal"', 'backend = "ideal"\ndisentangle = "physical"'
        )
        scenario.write_text(text, encoding="utf-8")
        result = invoke("qft", "--config", scenario, "--out", out)
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "qft-seed7" / "qft.json").read_text(encoding="utf-8"))
        assert summary["result"]["oracle_fidelity"] == pytest.approx(1.0)
        assert summary["result"]["vacuum_population"] == pytest.approx(1.0)

    def test_phase(self, scenario, out):
        """Test theta/2pi = 1/4 on two bits reads photon number 1."""
        result = invoke("phase", "--config", scenario, "--out", out)
        assert result.exit_code == 0, result.output
        run_dir = out / "phase-seed7"
        assert manifest(run_dir)["reports"]["outcome"] == 1
        rows = read_rows(run_dir / "phase_distribution.csv")
        assert float(rows[1]["probability"]) == pytest.approx(1.0)
        assert sum(int(r["counts"]) for r in rows) == 100

    def test_errors(self, scenario, out):
        """Test the analytic sweeps and the coherence budget."""
        result = invoke("errors", "--config", scenario, "--out", out)
        assert result.exit_code == 0, result.output
        run_dir = out / "errors-seed7"
        jitter = read_rows(run_dir / "jitter_sweep.csv")
        assert len(jitter) == 5
        assert all(float(r["analytic"]) <= 1 for r in jitter)
        assert all(r["relative_error"] == "" for r in jitter)
        energy = read_rows(run_dir / "energy_sweep.csv")
        assert all(r["relative_error"] != "" for r in energy)
        assert len(energy) == 5
        budget = read_rows(run_dir / "coherence_budget.csv")
        assert budget[-1]["n"] == "10"
        assert budget[-1]["feasible"] == "true"
        assert not (run_dir / "mc_jitter.csv").exists()

    def test_resources(self, scenario, out):
        """Test the operation-count table."""
        result = invoke("resources", "--config", scenario, "--n-max", 3, "--out", out)
        assert result.exit_code == 0, result.output
        text = (out / "resources-seed7" / "resources.csv").read_text(encoding="utf-8")
        assert text.splitlines() == [
            "n,conventional_ops,recycling_ops,oscillator_ops",
            "1,4,4,6",
            "2,9,10,11",
            "3,15,16,16",
        ]

    def test_wigner(self, scenario, out):
        """Test three normalized snapshots are written."""
        result = invoke("wigner", "--config", scenario, "--out", out)
        assert result.exit_code == 0, result.output
        run_dir = out / "wigner-seed7"
        for integral in manifest(run_dir)["reports"]["integrals"]:
            assert integral == pytest.approx(1.0, abs=1e-2)
        assert all((run_dir / f"wigner_{i}.csv").exists() for i in range(3))

    def test_version(self):
        """Test version output."""
        result = invoke("version")
        assert result.exit_code == 0
        assert "0.1.0" in result.output

    def test_config(self, scenario):
        """Test the resolved configuration panel."""
        result = invoke("config", "--config", scenario)
        assert result.exit_code == 0
        assert "Configuration" in result.output
        assert "Backend: ideal" in result.output


class TestFailures:
    """Test error reporting and exit codes."""

    def test_invalid_config(self, tmp_path, out, clean_env):
        """Test a negative coupling exits with the configuration code."""
        path = tmp_path / "bad.toml"
        path.write_text("[device]\ncoupling_mhz = -5.0\n", encoding="utf-8")
        result = invoke("transfer", "--config", path, "--out", out)
        assert result.exit_code == 2
        assert "device.coupling_mhz" in result.output
        assert not out.exists()

    def test_missing_config(self, tmp_path, clean_env):
        """Test a missing file."""
        result = invoke("config", "--config", tmp_path / "absent.toml")
        assert result.exit_code == 2

    def test_wrong_kerr_sign(self, scenario, out):
        """Test a positive chi with the forward transform and no winding."""
        text = scenario.read_text(encoding="utf-8") + "\n[kerr]\nchi_khz = 50.0\n"
        scenario.write_text(text, encoding="utf-8")
        result = invoke("qft", "--config", scenario, "--out", out)
        assert result.exit_code == 4
        assert "winding" in result.output

    def test_unexpected_error_is_wrapped(self, scenario, out, mocker):
        """Test a foreign exception surfaces as a simulator error."""
        mocker.patch.object(ScenarioRunner, "plan", side_effect=RuntimeError("boom"))
        result = invoke("transfer", "--config", scenario, "--out", out)
        assert result.exit_code == 1
        assert "transfer failed: boom" in result.output


def test_runner_direct(scenario, tmp_path):
    """Test the runner API without the command line."""
    config = ScenarioConfig.load(scenario)
    record = ScenarioRunner(config, tmp_path / "direct").resources(2)
    assert record.command == "resources"
    assert record.reports == {"n_max": 2}
    assert "resources.csv" in record.outputs
    assert record.versions["osc_qft"] == "0.1.0"

"""Test artifact writers."""

import json

import numpy as np
import pytest

from osc_qft.artifacts import relative_outputs, run_directory, write_csv, write_json, write_sweep
from osc_qft.models import SweepRow


def test_write_csv(tmp_path):
    """Test cell formatting."""
    path = write_csv(
        tmp_path / "table.csv",
        ["k", "value", "flag", "missing", "scalar"],
        [[1, 0.1, True, None, np.float64(0.25)], [2, 1e-12, False, "x", np.int64(7)]],
    )
    assert path.read_text(encoding="utf-8") == (
        "k,value,flag,missing,scalar\n1,0.1,true,,0.25\n2,1e-12,false,x,7\n"
    )


def test_write_csv_row_length(tmp_path):
    """Test a short row is rejected."""
    with pytest.raises(ValueError):
        write_csv(tmp_path / "bad.csv", ["a", "b"], [[1]])


def test_write_csv_creates_parent(tmp_path):
    """Test missing directories are created."""
    path = write_csv(tmp_path / "nested" / "out.csv", ["a"], [])
    assert path.read_text(encoding="utf-8") == "a\n"


def test_write_sweep(tmp_path):
    """Test the sweep columns, the relative error and trailing extras."""
    rows = [
        SweepRow(parameter=0.01, analytic=2e-4, simulated=2.5e-4, alternate=1e-4),
        SweepRow(parameter=0.02, analytic=8e-4),
    ]
    path = write_sweep(tmp_path / "sweep.csv", rows, ["repetitions"], [(4,), (4,)])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "parameter,analytic,simulated,relative_error,alternate,repetitions"
    assert float(lines[1].split(",")[3]) == pytest.approx(0.25)
    assert lines[2] == "0.02,0.0008,,,,4"


def test_write_sweep_extras_length(tmp_path):
    """Test extras must match the sweep rows."""
    with pytest.raises(ValueError):
        write_sweep(tmp_path / "bad.csv", [SweepRow(parameter=0.1, analytic=1.0)], ["x"], [])


def test_write_json(tmp_path):
    """Test sorted keys and trailing newline."""
    path = write_json(tmp_path / "out.json", {"b": np.float64(1.5), "a": [np.int64(2), (3, 4)]})
    text = path.read_text(encoding="utf-8")
    assert text.endswith("}\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [2, [3, 4]], "b": 1.5}


def test_write_json_models(tmp_path):
    """Test pydantic records are dumped in JSON mode."""
    row = SweepRow(parameter=0.01, analytic=0.99)
    path = write_json(tmp_path / "row.json", {"rows": [row]})
    assert json.loads(path.read_text(encoding="utf-8"))["rows"][0]["analytic"] == 0.99


def test_run_directory(tmp_path):
    """Test a second run with the same seed gets a suffix."""
    first = run_directory(tmp_path, "qft", 3)
    second = run_directory(tmp_path, "qft", 3)
    assert first.name == "qft-seed3"
    assert second.name == "qft-seed3-1"
    assert first.is_dir() and second.is_dir()


def test_relative_outputs(tmp_path):
    """Test sorted paths relative to the run directory."""
    paths = [tmp_path / "b.csv", tmp_path / "a.json"]
    assert relative_outputs(tmp_path, paths) == ["a.json", "b.csv"]

import json

import pytest

from deh_sim import __version__
from deh_sim.exceptions import OutputError
from deh_sim.models import ResultTable, RunConfig
from deh_sim.output import emit, format_float, render_csv, render_json
from deh_sim.services import SimulationRouter


@pytest.fixture
def table():
    return ResultTable(
        columns=["t", "value", "flag"],
        rows=[[0.0, 0.1, True], [1.0, float("nan"), False]],
        config={"amp": 0.05, "jobs": 4, "out": "x.csv", "command": "simulate"},
        notes=["two rows"],
    )


def test_format_float():
    assert format_float(0.1, 12) == "1.00000000000e-01"
    assert format_float(-2.5, 3) == "-2.50e+00"
    assert format_float(float("nan"), 12) == "nan"


def test_csv_layout(table):
    lines = render_csv(table, 12).splitlines()
    assert lines[0] == '# amp: 0.05'
    assert lines[1] == '# command: "simulate"'
    assert lines[2] == f'# version: "{__version__}"'
    assert lines[3] == "# note: two rows"
    assert lines[4] == "t,value,flag"
    assert lines[5] == "0.00000000000e+00,1.00000000000e-01,1"
    assert lines[6] == "1.00000000000e+00,nan,0"
    assert not any("jobs" in line or "x.csv" in line for line in lines)


def test_json_layout(table):
    document = json.loads(render_json(table, 12))
    assert document["columns"] == ["t", "value", "flag"]
    assert document["rows"][1] == [1.0, None, False]
    assert document["config"]["version"] == __version__
    assert "jobs" not in document["config"]
    assert document["notes"] == ["two rows"]


def test_emit_writes_file(tmp_path, table):
    path = tmp_path / "result.csv"
    text = emit(table, "csv", str(path))
    assert path.read_text(encoding="utf-8") == text


def test_identical_runs_give_identical_bytes(tmp_path):
    cfg = RunConfig(command="simulate", amp=0.2, phase=0.3)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    emit(SimulationRouter().route(cfg), "csv", str(first))
    emit(SimulationRouter().route(cfg), "csv", str(second))
    assert first.read_bytes() == second.read_bytes()


def test_unwritable_path_leaves_nothing_behind(tmp_path, table):
    with pytest.raises(OutputError) as excinfo:
        emit(table, "csv", str(tmp_path / "missing" / "result.csv"))
    assert excinfo.value.exit_code == 4
    assert list(tmp_path.iterdir()) == []


def test_unknown_format(table):
    with pytest.raises(OutputError):
        emit(table, "xml")

import csv
import io
import json
import math

import pytest
from pydantic import ValidationError

from app.core.schemas import FigureData, GoldenCheck, OptimizerConfig, RunReport, round_floats, round_significant
from app.utils.file_manager import (
    figure_to_csv,
    figure_to_json,
    resolve_output_path,
    save_figure,
    save_report,
)


def sample_figure():
    return FigureData(
        figure="fig2-r1",
        columns=["entropy", "bell_max"],
        rows=[[0.0, 4.5], [0.5, 4.812345678901234], [1.0, 5.117342]],
        inputs={"resolution": 2},
    )


def test_round_significant():
    assert round_significant(1.0 / 3.0, 4) == 0.3333
    assert round_significant(123456.789, 3) == 123000.0
    assert round_significant(0.0) == 0.0
    assert math.isnan(round_significant(math.nan))
    assert round_significant(math.inf) == math.inf


def test_round_floats_nested():
    payload = {"a": 1.0 / 3.0, "b": [2.0 / 3.0, (1.0 / 7.0,)], "c": True, "d": 3}
    rounded = round_floats(payload, 3)
    assert rounded == {"a": 0.333, "b": [0.667, [0.143]], "c": True, "d": 3}


def test_report_violated_must_match_values():
    RunReport(command="quantum", d=3, results={"quantum_value": 5.0}, classical_bounds=(-4.5, 4.5), violated=True)
    with pytest.raises(ValidationError):
        RunReport(command="quantum", d=3, results={"quantum_value": 5.0}, classical_bounds=(-4.5, 4.5), violated=False)
    with pytest.raises(ValidationError):
        RunReport(command="quantum", d=7, results={"quantum_value": 2.6}, classical_bounds=(-8.2, 12.8), violated=True)


def test_report_json_roundtrip():
    report = RunReport(
        command="quantum",
        d=5,
        results={"quantum_value": 25.0 * (1.0 + math.sqrt(5.0)) / 8.0},
        classical_bounds=(-6.25, 8.75),
        violated=True,
        timing_ms=12,
    )
    parsed = json.loads(report.to_json())
    assert parsed["schema_version"] == report.schema_version
    assert parsed["results"]["quantum_value"] == pytest.approx(10.1127124297, abs=1e-9)
    assert parsed["classical_bounds"] == [-6.25, 8.75]
    assert parsed["violated"] is True
    assert json.loads(report.to_json(digits=4))["results"]["quantum_value"] == 10.11


def test_optimizer_config_is_frozen():
    cfg = OptimizerConfig(restarts=3)
    with pytest.raises(ValidationError):
        cfg.restarts = 4
    assert cfg.model_copy(update={"seed": 1}).seed == 1


def test_golden_check_tolerance_non_negative():
    with pytest.raises(ValidationError):
        GoldenCheck(name="x", expected=1.0, actual=1.0, tolerance=-1.0, passed=True)


def test_figure_row_width():
    with pytest.raises(ValidationError):
        FigureData(figure="fig1", columns=["c0sq", "c1sq", "c2sq", "bell_max"], rows=[[1.0, 0.0, 0.0]])
    with pytest.raises(ValidationError):
        FigureData(figure="fig3", columns=["x"], rows=[[1.0]])


def test_csv_matches_json():
    figure = sample_figure()
    text = figure_to_csv(figure)
    assert "\r" not in text
    lines = text.split("\n")
    assert lines[0] == "entropy,bell_max"
    assert lines[-1] == ""
    reader = list(csv.reader(io.StringIO(text)))
    csv_rows = [[float(v) for v in row] for row in reader[1:]]
    json_rows = json.loads(figure_to_json(figure))["rows"]
    assert csv_rows == json_rows
    assert len(csv_rows) == 3


def test_resolve_output_path(output_dir, tmp_path):
    assert resolve_output_path("fig1.json") == output_dir / "fig1.json"
    nested = tmp_path / "other" / "x.csv"
    assert resolve_output_path(nested) == nested


def test_save_figure_and_report(output_dir):
    path = save_figure(sample_figure(), "fig2-r1.csv", "csv")
    assert path.parent == output_dir
    assert path.read_bytes().startswith(b"entropy,bell_max\n")

    report = RunReport(command="classical", d=3, results={"min": -4.5, "max": 4.5}, classical_bounds=(-4.5, 4.5))
    saved = save_report(report, "classical.json")
    assert json.loads(saved.read_text(encoding="utf-8"))["results"] == {"min": -4.5, "max": 4.5}

    with pytest.raises(ValueError):
        save_figure(sample_figure(), "fig.xml", "xml")


def test_save_into_unwritable_location(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    with pytest.raises(OSError):
        save_figure(sample_figure(), blocker / "fig.json")

import json
import math

import pytest

from app.config.settings import reload_settings, settings
from app.jobs import run_bell
from app.services import verification_service


def run(capsys, *argv):
    code = run_bell.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classical_brute_qutrit(capsys):
    code, out, _ = run(capsys, "classical", "--d", "3", "--method", "brute")
    assert code == 0
    report = json.loads(out)
    assert report["command"] == "classical"
    assert report["results"]["min"] == -4.5 and report["results"]["max"] == 4.5
    assert report["results"]["assignments_scanned"] == 243
    assert report["violated"] is False


def test_classical_brute_refuses_large_d(capsys):
    code, out, err = run(capsys, "classical", "--d", "7", "--method", "brute")
    assert code == 2
    assert out == ""
    assert "analytic" in err



def test_env_file_reloads_settings(capsys, tmp_path):
    env_file = tmp_path / "bell.env"
    env_file.write_text("BRUTE_FORCE_MAX_D=3\n", encoding="utf-8")
    try:
        code, out, err = run(capsys, "--env-file", str(env_file), "classical", "--d", "5", "--method", "brute")
        assert code == 2
        assert out == ""
        assert "d <= 3" in err
    finally:
        reload_settings()
    assert settings.brute_force_max_d == 5

def test_classical_analytic_d17(capsys):
    code, out, _ = run(capsys, "classical", "--d", "17")
    assert code == 0
    results = json.loads(out)["results"]
    assert results["max"] == 32.9375
    assert results["max_exact"] == "527/16"


def test_quantum_qutrit(capsys):
    code, out, _ = run(capsys, "quantum", "--d", "3")
    assert code == 0
    report = json.loads(out)
    assert report["violated"] is True
    assert abs(report["results"]["quantum_value"] - 3.0 * math.sqrt(3.0) * math.cos(math.pi / 18.0)) <= 1e-10
    assert report["results"]["ratio"] == pytest.approx(1.137, abs=5e-4)
    assert "closed_form" not in report["results"]


def test_quantum_d5_reports_all_paths(capsys):
    code, out, _ = run(capsys, "quantum", "--d", "5")
    assert code == 0
    results = json.loads(out)["results"]
    assert results["closed_form"] == pytest.approx(results["quantum_value"], abs=1e-8)
    assert results["gauss_sum"] == pytest.approx(results["quantum_value"], abs=1e-8)
    assert abs(results["printed_xi_real"]) <= 5.0 + 1e-9


def test_quantum_without_violation_still_succeeds(capsys):
    code, out, _ = run(capsys, "quantum", "--d", "13")
    assert code == 0
    assert json.loads(out)["violated"] is False


@pytest.mark.parametrize("d", ["4", "1", "0"])
def test_unsupported_dimension(capsys, d):
    code, out, _ = run(capsys, "quantum", "--d", d)
    assert code == 2
    assert out == ""


def test_bad_usage_exits_2(capsys):
    assert run(capsys, "quantum")[0] == 2
    assert run(capsys, "classical", "--d", "3", "--method", "guess")[0] == 2


def test_noise_threshold(capsys):
    code, out, _ = run(capsys, "noise", "--d", "5")
    assert code == 0
    results = json.loads(out)["results"]
    assert results["p_min"] == pytest.approx(0.8653, abs=1e-4)
    assert results["agreement"] <= 1e-9


def test_noise_without_violation(capsys):
    code, out, err = run(capsys, "noise", "--d", "13")
    assert code == 3
    assert out == ""
    assert "threshold undefined" in err


def test_report_out_file(capsys, output_dir):
    code, out, _ = run(capsys, "classical", "--d", "5", "--out", "classical_d5.json")
    assert code == 0
    saved = json.loads((output_dir / "classical_d5.json").read_text(encoding="utf-8"))
    assert saved == json.loads(out)


def test_figure_csv(capsys, output_dir):
    code, out, _ = run(
        capsys, "figure", "fig2-r1", "--resolution", "3", "--restarts", "2", "--format", "csv", "--out", "r1.csv"
    )
    assert code == 0
    report = json.loads(out)
    assert report["results"]["rows"] == 4
    lines = (output_dir / "r1.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "entropy,bell_max"
    assert len(lines) == 5


def test_figure_io_failure(capsys, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("file")
    code, out, err = run(
        capsys, "figure", "fig2-r1", "--resolution", "3", "--restarts", "1", "--out", str(blocker / "r1.json")
    )
    assert code == 4
    assert out == ""
    assert "I/O error" in err


@pytest.fixture
def small_table(monkeypatch):
    full = verification_service.golden_table
    keep = {"analytic_bounds.d17.max", "expectation.d3", "mub.d3"}
    monkeypatch.setattr(verification_service, "golden_table", lambda: [e for e in full() if e.name in keep])


def test_verify_passes(capsys, small_table):
    code, out, err = run(capsys, "verify")
    assert code == 0
    results = json.loads(out)["results"]
    assert results["total"] == 3 and results["failed"] == 0
    assert "3/3 passed" in err


def test_verify_with_perturbed_expectation(capsys, small_table):
    code, out, err = run(capsys, "verify", "--expect", "expectation.d3=5.2")
    assert code == 1
    results = json.loads(out)["results"]
    assert results["failed"] == 1
    assert "FAIL" in err


def test_verify_unknown_check(capsys, small_table):
    code, out, _ = run(capsys, "verify", "--expect", "no.such.check=1.0")
    assert code == 2
    assert out == ""


def test_verify_malformed_override(capsys, small_table):
    assert run(capsys, "verify", "--expect", "expectation.d3")[0] == 2

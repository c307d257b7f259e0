import math

import pytest

from app.config.settings import reload_settings, settings
from app.services import verification_service
from app.services.verification_service import GoldenEntry, run_golden_checks, summarize


FAST = ["analytic_bounds.d17.max", "expectation.d2", "expectation.d3", "ratio.d3", "mub.d5", "perfect_correlation.d7", "maximal_marginal.d5"]


def test_subset_passes():
    checks = run_golden_checks(only=FAST)
    assert [c.name for c in checks] == [e.name for e in verification_service.golden_table() if e.name in FAST]
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]
    assert summarize(checks) == {"total": len(FAST), "passed": len(FAST), "failed": 0}


def test_override_makes_check_fail():
    checks = run_golden_checks(overrides={"expectation.d3": 5.0}, only=["expectation.d3"])
    assert len(checks) == 1
    assert not checks[0].passed
    assert checks[0].expected == 5.0


def test_unknown_names_raise():
    with pytest.raises(KeyError):
        run_golden_checks(overrides={"expectation.d4": 1.0})
    with pytest.raises(KeyError):
        run_golden_checks(only=["nope"])


def test_table_names_are_unique():
    names = [e.name for e in verification_service.golden_table()]
    assert len(names) == len(set(names))


def test_domain_error_counts_as_failure(monkeypatch):
    def broken():
        return verification_service.quantum_service.expectation_closed_form(3)

    monkeypatch.setattr(
        verification_service, "golden_table", lambda: [GoldenEntry("closed_form.d3", 5.0, 1e-9, broken)]
    )
    (check,) = run_golden_checks()
    assert not check.passed
    assert math.isnan(check.actual)


def test_below_relation():
    entry = GoldenEntry("bound", 1.0, 0.0, lambda: 0.5, "below")
    assert verification_service._evaluate(entry, 1.0).passed
    assert not verification_service._evaluate(entry, 0.4).passed


def test_settings_reload_from_env(monkeypatch):
    monkeypatch.setenv("BRUTE_FORCE_MAX_D", "3")
    try:
        assert reload_settings().brute_force_max_d == 3
    finally:
        monkeypatch.delenv("BRUTE_FORCE_MAX_D")
        reload_settings()
    assert settings.brute_force_max_d == 5


@pytest.mark.slow
def test_full_golden_table():
    checks = run_golden_checks()
    failed = [c for c in checks if not c.passed]
    assert not failed, failed

#!/usr/bin/env python3
import pytest

import verify
from params import ModelParams, ParameterError
from verify import CHECKS, PROFILE_ENV, breached, run_suites, tolerances_dict, tolerances_for

CORE_CHECKS = ["tridiagonal", "dagger", "eigenbasis", "multiplicity", "biorthogonality", "recursion", "band",
               "spectrum", "dual", "axioms", "recurrence", "qdiff", "orthogonality"]


def _statuses(findings):
    return {f["status"] for f in findings}


def test_default_tolerances(monkeypatch):
    monkeypatch.delenv(PROFILE_ENV, raising=False)
    tol = tolerances_for()
    assert tol.tridiagonal == 1e-10
    assert tol.aw_non_leonard == 1e-3


def test_profiles_scale_both_ways(monkeypatch):
    monkeypatch.delenv(PROFILE_ENV, raising=False)
    strict = tolerances_for("strict")
    loose = tolerances_for("loose")
    assert strict.tridiagonal == pytest.approx(1e-11)
    assert loose.tridiagonal == pytest.approx(1e-8)
    # lower bounds tighten the other way
    assert strict.aw_non_leonard == pytest.approx(1e-2)
    assert loose.aw_non_leonard == pytest.approx(1e-5)


def test_profile_from_environment(monkeypatch):
    monkeypatch.setenv(PROFILE_ENV, "loose")
    assert tolerances_for().recursion == pytest.approx(1e-7)
    assert tolerances_for("default").recursion == pytest.approx(1e-9)


def test_overrides():
    tol = tolerances_for("default", {"recurrence": 0.5})
    assert tol.recurrence == 0.5
    assert tolerances_dict(tol)["recurrence"] == 0.5
    with pytest.raises(ValueError):
        tolerances_for("default", {"nonsense": 1.0})
    with pytest.raises(ValueError):
        tolerances_for("paranoid")


def test_core_checks_pass(make_params):
    findings = run_suites(make_params(3), CORE_CHECKS, tolerances_for("default"))
    failed = [f for f in findings if f["status"] in ("fail", "error")]
    assert not failed, failed
    assert not breached(findings)
    assert {f["check"] for f in findings} == set(CORE_CHECKS)


def test_ratio_needs_three_factors(make_params):
    findings = run_suites(make_params(2), ["ratio"], tolerances_for("default"))
    assert _statuses(findings) == {"skipped"}
    findings = run_suites(make_params(4), ["ratio"], tolerances_for("default"))
    assert _statuses(findings) == {"pass"}


def test_fixed_size_checks_run_at_their_own_size():
    params = ModelParams(N=3, alpha=1.3j, alpha_star=2.1j, phi=0.95j, theta=0.4)
    findings = run_suites(params, ["closed_form", "aw", "roots"], tolerances_for("default"))
    assert {f["N"] for f in findings if f["check"] == "closed_form"} == {2}
    assert {f["N"] for f in findings if f["check"] == "aw"} == {1, 2}
    assert {f["N"] for f in findings if f["check"] == "roots"} == {1, 2}
    assert not breached(findings), findings


def test_sweep_covers_every_size(make_params):
    findings = run_suites(make_params(3), ["tridiagonal"], tolerances_for("default"), sweep=True)
    assert sorted({f["N"] for f in findings}) == [1, 2, 3]


def test_orthogonality_and_dagger_skip_outside_imaginary_regime(make_complex_params):
    findings = run_suites(make_complex_params(2), ["orthogonality", "dagger"], tolerances_for("default"))
    assert _statuses(findings) == {"skipped"}


def test_tight_override_is_a_breach(make_params):
    findings = run_suites(make_params(2), ["tridiagonal"], tolerances_for("default", {"tridiagonal": 0.0}))
    assert breached(findings) == any(f["value"] > 0 for f in findings)


def test_raising_check_is_reported(monkeypatch, make_params):
    def boom(params, tol, gen):
        raise RuntimeError("boom")

    monkeypatch.setitem(verify.CHECKS, "tridiagonal", (boom, None))
    findings = run_suites(make_params(1), ["tridiagonal"], tolerances_for("default"))
    assert findings[0]["status"] == "error"
    assert "boom" in findings[0]["detail"]
    assert breached(findings)


def test_unknown_check(make_params):
    with pytest.raises(ValueError):
        run_suites(make_params(1), ["nonsense"])


def test_invalid_params_raise():
    with pytest.raises(ParameterError):
        run_suites(ModelParams(N=2, alpha=0, alpha_star=0.7j, phi=0.3j), ["tridiagonal"])


def test_every_check_is_registered():
    assert len(CHECKS) == 17

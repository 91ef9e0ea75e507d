"""Tests for the verification suites."""

import math

import pytest

from genbound import potential
from genbound.errors import ConfigError
from genbound.ghost import HullPoint
from genbound.potential import PotentialResult
from genbound.scenarios import builtin_config, scenario_from_config
from genbound.verification import SUITES, CheckResult, convexity_checks, lemma7_checks, lemma10_checks, run_suite


def scenario(instance="binary", algorithm="gibbs:1"):
    return scenario_from_config(builtin_config(instance, algorithm))


class TestCheckResult:
    def test_pass_rule(self):
        assert CheckResult("s", "i", "", -1e-9, 1e-8).passed
        assert not CheckResult("s", "i", "", -1e-7, 1e-8).passed

    def test_nan_fails(self):
        assert not CheckResult("s", "i", "", math.nan, 1.0).passed

    def test_as_dict(self):
        data = CheckResult("ghost", "binary", "n=3", 0.0, 1e-10).as_dict()
        assert data["passed"] is True
        assert data["suite"] == "ghost"


class TestSuites:
    def test_names(self):
        assert SUITES == ("thm2", "lemma3", "lemma6", "lemma7", "lemma10", "convexity", "ghost", "ftrl", "dv")

    def test_unknown(self):
        with pytest.raises(ConfigError):
            run_suite("lemma99")

    def test_ghost_on_one_scenario(self):
        results = run_suite("ghost", scenarios=[scenario("skewed", "gibbs:2")])
        assert len(results) == 9
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_ftrl_on_one_scenario(self):
        results = run_suite("ftrl", scenarios=[scenario()])
        assert len(results) == 2 * 4 * 4
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_ftrl_flags_a_solver_that_misses_the_face(self, monkeypatch):
        def last_vertex(family, spec, f, tol=None, **kwargs):
            corner = HullPoint.vertex(family.n, family.n)
            return PotentialResult(0.0, corner, (corner,), 0, 0.0, True)

        monkeypatch.setattr(potential, "phi_eval", last_vertex)
        results = run_suite("ftrl", scenarios=[scenario("skewed", "gibbs:2")])
        failed = {r.parameters.split()[-1] for r in results if not r.passed}
        assert {"pairing", "decomposition"} <= failed

    def test_thm2_covers_the_family_size(self):
        results = run_suite("thm2", scenarios=[scenario()])
        assert len(results) == 2 * 26 + 2 * 4
        family = [r for r in results if r.parameters.startswith("n=3")]
        assert {r.parameters.split()[-1] for r in family} == {"eta=-2", "eta=-0.5", "eta=0.5", "eta=2"}
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_dv_on_constant(self):
        results = run_suite("dv", scenarios=[scenario("binary", "constant")])
        assert all(r.passed for r in results), [r for r in results if not r.passed]
        assert {r.parameters.split()[0] for r in results} == {"n=1", "n=2", "n=3"}

    def test_order_does_not_depend_on_threads(self):
        scenarios = [scenario(), scenario("binary", "erm:0.2")]
        one = run_suite("ghost", scenarios=scenarios, threads=1)
        two = run_suite("ghost", scenarios=scenarios, threads=2)
        assert [r.as_dict() for r in one] == [r.as_dict() for r in two]


class TestGlobalSuites:
    def test_lemma7(self):
        results = lemma7_checks()
        assert results
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_lemma10(self):
        results = lemma10_checks()
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_convexity(self):
        results = convexity_checks(trials=100)
        assert len(results) == 26
        assert all(r.passed for r in results), [r for r in results if not r.passed]

"""Tests for sweep rate tables and shape checks."""

import math

import pytest

from genbound.bounds import BoundReport
from genbound.utils.analysis import decay_flags, is_decreasing, rate_factor, rate_table, shape_within_band


def report(n, bound, divergence="kl", gen=-0.1, **diagnostics):
    return BoundReport("s", n, divergence, gen, 0.1, 0.25, bound, diagnostics=diagnostics)


class TestRateFactor:
    def test_default_is_root_n(self):
        assert rate_factor(report(16, 1.0)) == pytest.approx(0.25)

    def test_diagnostics_win(self):
        assert rate_factor(report(8, 1.0, rate_factor=0.5)) == 0.5
        assert rate_factor(report(8, 1.0, step_norm=0.3)) == 0.3


class TestRateTable:
    def test_sorted_by_divergence_then_n(self):
        rows = rate_table([report(4, 0.5, "kl"), report(1, 1.0, "chi2"), report(1, 1.0, "kl")])
        assert [(r["divergence"], r["n"]) for r in rows] == [("chi2", 1), ("kl", 1), ("kl", 4)]
        assert rows[2]["bound_over_rate"] == pytest.approx(1.0)
        assert rows[2]["log_n"] == pytest.approx(math.log(4))

    def test_log_columns_of_degenerate_values(self):
        (row,) = rate_table([report(2, math.inf, gen=0.0)])
        assert math.isnan(row["log_bound"])
        assert math.isnan(row["log_abs_gen"])

    def test_monte_carlo_columns(self):
        (row,) = rate_table([report(4, 0.5, mc_gen=-0.4, mc_stderr=0.01)])
        assert row["mc_gen"] == -0.4
        assert row["mc_ci"] == pytest.approx(0.03)


class TestShape:
    def test_is_decreasing(self):
        assert is_decreasing([3.0, 2.0, 2.0, 1.0])
        assert not is_decreasing([1.0, 1.5])
        assert is_decreasing([1.0, 1.05], tol=0.1)
        assert is_decreasing([])

    def test_decay_flags(self):
        rows = rate_table([report(1, 1.0, "kl"), report(2, 0.7, "kl"), report(1, 1.0, "chi2"), report(2, 1.2, "chi2")])
        assert decay_flags(rows) == {"chi2": False, "kl": True}

    def test_band(self):
        steady = rate_table([report(n, n**-0.5) for n in (1, 4, 16)])
        assert shape_within_band(steady)
        drifting = rate_table([report(1, 1.0), report(4, 1.5)])
        assert not shape_within_band(drifting)
        assert shape_within_band(drifting, band=4.0)

"""Analysis utilities - rate tables for sweeps, decay and shape checks."""

import math

SHAPE_BAND = 2.0


def _log(value: float) -> float:
    if value > 0 and math.isfinite(value):
        return math.log(value)
    return math.nan


def rate_factor(report) -> float:
    """The sample-size factor the bound scales with: n^{−1/p}, √(Σ η_t²) for SGD, else n^{−1/2}."""
    diagnostics = report.diagnostics
    if "rate_factor" in diagnostics:
        return float(diagnostics["rate_factor"])
    if "step_norm" in diagnostics:
        return float(diagnostics["step_norm"])
    return report.n**-0.5


def rate_table(reports) -> list[dict]:
    """One row per report with log-log columns; no slopes are fitted."""
    rows = []
    for report in sorted(reports, key=lambda r: (r.divergence, r.n)):
        factor = rate_factor(report)
        row = {
            "divergence": report.divergence,
            "n": report.n,
            "gen_true": report.gen_true,
            "bound": report.bound,
            "rate_factor": factor,
            "bound_over_rate": report.bound / factor if factor > 0 else math.nan,
            "log_n": math.log(report.n),
            "log_bound": _log(report.bound),
            "log_abs_gen": _log(abs(report.gen_true)),
        }
        if "mc_gen" in report.diagnostics:
            row["mc_gen"] = report.diagnostics["mc_gen"]
            row["mc_ci"] = 3.0 * report.diagnostics["mc_stderr"]
        rows.append(row)
    return rows


def by_divergence(rows: list[dict]) -> dict[str, list[dict]]:
    groups = {}
    for row in rows:
        groups.setdefault(row["divergence"], []).append(row)
    return groups


def is_decreasing(values, tol: float = 0.0) -> bool:
    """True when every value is at most its predecessor (plus tol)."""
    values = list(values)
    return all(b <= a + tol for a, b in zip(values, values[1:]))


def decay_flags(rows: list[dict]) -> dict[str, bool]:
    """Per divergence: is the bound column nonincreasing in n?"""
    return {name: is_decreasing(r["bound"] for r in group) for name, group in by_divergence(rows).items()}


def shape_within_band(rows: list[dict], band: float = SHAPE_BAND) -> bool:
    """bound/rate never exceeds ``band`` times its value at the smallest n."""
    for group in by_divergence(rows).values():
        first = group[0]["bound_over_rate"]
        if any(r["bound_over_rate"] > band * first for r in group[1:]):
            return False
    return True

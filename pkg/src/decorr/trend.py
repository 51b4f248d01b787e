"""Direction-of-travel verdicts for values computed along a shrinking-noise grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

DIAMETER_PROXY = {"tv": 0.99, "kl": 5.0, "kl_rev": 5.0, "w2": 5.0}


@dataclass(frozen=True)
class CScalingRow:
    c: float
    eps: tuple[float, ...]
    values: tuple[float, ...]
    errors: tuple[float, ...]
    verdict: str  # "to_diameter", "to_zero", "wrong_direction", "inconclusive", "critical"


@dataclass(frozen=True)
class AbruptnessReport:
    metric: str
    rows: tuple[CScalingRow, ...]
    passed: bool
    inconclusive: bool
    notes: tuple[str, ...] = field(default=())


def validate_eps_grid(eps_grid, floor=1e-8, minimum=2):
    eps = [float(e) for e in eps_grid]
    if len(eps) < minimum:
        raise ValueError(f"need at least {minimum} noise levels, got {len(eps)}")
    if any(not (0 < e < 1) for e in eps):
        raise ValueError("noise levels must lie in (0, 1)")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("noise levels must be strictly decreasing")
    if eps[-1] < floor:
        raise ValueError(f"smallest noise level {eps[-1]:g} is below the floor {floor:g}")
    return eps


def trend_verdict(c, values, errors, metric):
    """Classify the travel of ``values`` (ordered by decreasing eps) for window scale ``c``.

    Below ``c = 1`` the values must head to the metric's diameter, above it to
    zero. Only the last two points decide the direction; a flat TV at 1 (or at
    0) within the error bounds counts as monotone.
    """
    if math.isclose(c, 1.0):
        return "critical"
    v1, v2 = values[-2], values[-1]
    slack = errors[-1] + errors[-2] + 1e-12
    if c < 1:
        if metric == "tv" and v2 >= 1 - slack and v1 >= 1 - slack:
            return "to_diameter"
        if v2 > v1 or (math.isinf(v2) and math.isinf(v1)):
            return "to_diameter"
        return "inconclusive" if v2 >= v1 - slack else "wrong_direction"
    if v2 <= slack and v1 <= slack:
        return "to_zero"
    if v2 < v1:
        return "to_zero"
    return "inconclusive" if v2 <= v1 + slack else "wrong_direction"


def summarize(metric, rows):
    decisive = [row for row in rows if row.verdict != "critical"]
    inconclusive = any(row.verdict == "inconclusive" for row in decisive)
    passed = bool(decisive) and all(row.verdict in ("to_diameter", "to_zero") for row in decisive)
    return AbruptnessReport(metric, tuple(rows), passed, inconclusive)

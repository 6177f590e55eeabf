"""The five parameter conditions accumulated for the hard-instance construction.

Each condition carries a numeric slack: positive (or zero for the one
non-strict inequality, k >= 1/(1-p)) means satisfied. Compound conditions
report every sub-inequality and take the smallest slack.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .errors import DomainError
from .moments import r_critical


@dataclass(frozen=True)
class SubCheck:
    expression: str
    value: float
    slack: float
    passed: bool


@dataclass(frozen=True)
class ConditionResult:
    id: int
    label: str
    value: float
    slack: float
    passed: bool
    parts: tuple[SubCheck, ...] = field(default=())


@dataclass(frozen=True)
class FeasibilityReport:
    n: int
    alpha: float
    k: float
    p: float
    r: float
    epsilon: float
    conditions: tuple[ConditionResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def failed_ids(self) -> list[int]:
        return [c.id for c in self.conditions if not c.passed]

    def table(self) -> str:
        rows = [f"{'cond':<5}{'value':>14}  {'verdict':<8}{'slack':>14}  expression"]
        for c in self.conditions:
            verdict = "pass" if c.passed else "FAIL"
            rows.append(f"{c.id:<5}{c.value:>14.6g}  {verdict:<8}{c.slack:>14.6g}  {c.label}")
        rows.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(rows)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "alpha": self.alpha, "k": self.k, "p": self.p, "r": self.r, "epsilon": self.epsilon,
            "passed": self.passed,
            "conditions": [
                {
                    "id": c.id, "label": c.label, "value": c.value, "slack": c.slack, "passed": c.passed,
                    "parts": [vars(s) for s in c.parts],
                }
                for c in self.conditions
            ],
        }


def _strict(expr, value, slack) -> SubCheck:
    return SubCheck(expr, value, slack, slack > 0)


def _condition(cid, label, value, parts: Iterable[SubCheck]) -> ConditionResult:
    parts = tuple(parts)
    slack = min(s.slack for s in parts)
    return ConditionResult(cid, label, value, slack, all(s.passed for s in parts), parts)


def _epsilon(n, alpha, p):
    # no validation: a non-positive result simply fails condition 2
    denom = alpha * n * math.log(n) * math.log1p(-p) if n > 0 else 0.0
    return math.log(0.5) / denom if denom else math.nan


def check(n: int, alpha: float, k: float, p: float) -> FeasibilityReport:
    """Evaluate all five conditions at r = r_cr + eps(n, alpha, p)."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    r_cr = r_critical(p)
    eps = _epsilon(n, alpha, p)
    r = r_cr + eps

    kmin = 1 / (1 - p)
    c1 = _condition(1, "alpha > 1/k, 0 < p < 1, k >= 1/(1-p)", kmin, [
        _strict("alpha > 1/k", alpha, alpha - 1 / k),
        _strict("0 < p < 1", p, min(p, 1 - p)),
        SubCheck("k >= 1/(1-p)", k, k - kmin, k - kmin >= 0),
    ])
    eps_ok = math.isfinite(eps)
    c2 = _condition(2, "r = r_cr + eps with eps > 0", eps, [
        _strict("eps > 0", eps, eps if eps_ok else -math.inf),
        _strict("r > r_cr", r, r - r_cr if eps_ok else -math.inf),
    ])
    v3 = 1 + alpha * (1 - r_cr * p * k)
    c3 = _condition(3, "1 + alpha(1 - r_cr p k) < 0 and alpha > 1", v3, [
        _strict("1 + alpha(1 - r_cr p k) < 0", v3, -v3),
        _strict("alpha > 1", alpha, alpha - 1),
    ])
    v4 = 1 - r * k * alpha / 8
    c4 = _condition(4, "1 - r k alpha / 8 < 0", v4, [_strict("1 - r k alpha / 8 < 0", v4, -v4)])
    v5 = 1 + 0.5 * alpha * r * k * math.log1p(-p / 3)
    c5 = _condition(5, "1 + alpha r k ln(1 - p/3) / 2 < 0", v5, [_strict("1 + alpha r k ln(1 - p/3) / 2 < 0", v5, -v5)])
    return FeasibilityReport(n, alpha, k, p, r, eps, (c1, c2, c3, c4, c5))


def find_feasible(k: float, p: float, alpha_grid: Iterable[float], n: int = 100) -> float | None:
    """Smallest alpha on an ascending grid passing every condition, else None."""
    grid = list(alpha_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DomainError("alpha_grid must be ascending")
    for alpha in grid:
        if check(n, alpha, k, p).passed:
            return alpha
    return None

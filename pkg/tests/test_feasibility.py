import math

import pytest

from rblab import feasibility
from rblab.errors import DomainError
from rblab.moments import r_critical


def independent_values(n, alpha, k, p):
    """The five left-hand sides, recomputed from scratch."""
    rcr = 1 / -math.log(1 - p)
    eps = math.log(0.5) / (alpha * n * math.log(n) * math.log(1 - p))
    r = rcr + eps
    return {
        3: 1 + alpha * (1 - rcr * p * k),
        4: 1 - r * k * alpha / 8,
        5: 1 + 0.5 * alpha * r * k * math.log(1 - p / 3),
        "eps": eps,
        "r": r,
    }


def test_accepts_large_alpha_point():
    rep = feasibility.check(100, 3.0, 3, 0.5)
    assert rep.passed and rep.failed_ids() == []
    assert len(rep.conditions) == 5
    # alpha r k against the 1 / -(1/2) ln(5/6) needed by condition 5
    assert 3.0 * rep.r * 3 == pytest.approx(12.99, abs=0.01)
    assert 2 / -math.log(5 / 6) == pytest.approx(10.97, abs=0.01)


def test_rejects_alpha_two_on_condition_five_only():
    rep = feasibility.check(100, 2.0, 3, 0.5)
    assert rep.failed_ids() == [5]
    assert rep.conditions[4].value == pytest.approx(0.21, abs=0.005)


def test_rejects_unit_arity_on_condition_one():
    rep = feasibility.check(100, 3.0, 1, 0.5)
    assert 1 in rep.failed_ids()
    c1 = rep.conditions[0]
    assert [s.passed for s in c1.parts] == [True, True, False]
    assert c1.slack == pytest.approx(-1.0)


@pytest.mark.parametrize("n, alpha, k, p", [(100, 3.0, 3, 0.5), (50, 1.7, 4, 0.3), (1000, 2.2, 2, 0.8), (10, 0.4, 2, 0.6)])
def test_values_match_independent_evaluation(n, alpha, k, p):
    rep = feasibility.check(n, alpha, k, p)
    want = independent_values(n, alpha, k, p)
    assert rep.epsilon == pytest.approx(want["eps"], rel=1e-12)
    assert rep.r == pytest.approx(want["r"], rel=1e-12)
    for cid in (3, 4, 5):
        assert rep.conditions[cid - 1].value == pytest.approx(want[cid], rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 0.9, 1.0, 1.5, 2.5, 2.75, 3.0, 4.0])
@pytest.mark.parametrize("k", [1, 2, 3, 5])
@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_slack_sign_agrees_with_verdict(alpha, k, p):
    rep = feasibility.check(100, alpha, k, p)
    for c in rep.conditions:
        assert c.passed == (c.slack > 0 or (c.id == 1 and c.slack >= 0 and all(s.passed for s in c.parts)))
        for s in c.parts:
            assert s.passed == (s.slack > 0 or (s.expression.startswith("k >=") and s.slack >= 0))
    assert rep.passed == all(c.passed for c in rep.conditions)


def test_condition_three_reports_both_parts():
    rep = feasibility.check(100, 0.9, 3, 0.5)
    c3 = rep.conditions[2]
    assert len(c3.parts) == 2 and not c3.parts[1].passed


def test_tight_arity_boundary_passes():
    # k = 1/(1-p) exactly is allowed
    rep = feasibility.check(100, 3.0, 2, 0.5)
    assert rep.conditions[0].parts[2].passed and rep.conditions[0].parts[2].slack == 0


def test_small_n_does_not_raise():
    for n in (1, 2, 3):
        rep = feasibility.check(n, 3.0, 3, 0.5)
        assert len(rep.conditions) == 5
    assert not feasibility.check(1, 3.0, 3, 0.5).conditions[1].passed


@pytest.mark.parametrize("p", [0.0, 1.0, 2.0])
def test_only_p_is_validated(p):
    with pytest.raises(DomainError):
        feasibility.check(100, 3.0, 3, p)


def test_find_feasible_on_quarter_grid():
    grid = [1.0 + 0.25 * i for i in range(17)]
    first = feasibility.find_feasible(3, 0.5, grid)
    assert 2.5 < first <= 3.25
    assert first == 2.75


def test_find_feasible_below_one_is_none():
    assert feasibility.find_feasible(3, 0.5, [0.2, 0.5, 0.9, 1.0]) is None


def test_find_feasible_needs_ascending_grid():
    with pytest.raises(DomainError):
        feasibility.find_feasible(3, 0.5, [2.0, 1.0])


@pytest.mark.parametrize("k, p", [(3, 0.5), (4, 0.5), (2, 0.8), (5, 0.3)])
def test_upward_closure(k, p):
    grid = [1.0 + 0.02 * i for i in range(300)]
    verdicts = [feasibility.check(100, a, k, p).passed for a in grid]
    if True in verdicts:
        first = verdicts.index(True)
        assert all(verdicts[first:])
    else:
        # condition 3 can never hold when r_cr p k <= 1
        assert r_critical(p) * p * k <= 1


def test_slack_reproducible():
    a = feasibility.check(100, 3.0, 3, 0.5).to_dict()
    b = feasibility.check(100, 3.0, 3, 0.5).to_dict()
    assert a == b


def test_table_has_five_rows():
    text = feasibility.check(100, 3.0, 3, 0.5).table()
    rows = [l for l in text.splitlines() if l[:1].isdigit()]
    assert len(rows) == 5 and text.endswith("overall: pass")

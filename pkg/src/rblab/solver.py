"""Exact search for Model RB instances.

``solve`` is a depth-first backtracking search with forward checking over a
fixed variable order (index order) and ascending values. Domains are int
bitmasks. A constraint is checked at the moment the second-to-last of its
scope variables (in index order) is assigned: its table then prunes the
domain of the last one. Because the order is static, every constraint gets
enforced exactly once along each branch and the last variable's domain is a
complete list of extensions, which makes counting at the leaves a popcount.

``enumerate_oracle`` is the independent check: it evaluates every assignment
with numpy and shares no code with the search.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import Assignment, Constraint, Instance
from .errors import BudgetExceeded, DomainError

DEFAULT_NODE_BUDGET = 10**8
ORACLE_LIMIT = 2**22
BUDGET_ENV = "RBLAB_NODE_BUDGET"


class Mode(str, Enum):
    DECIDE = "decide"
    COUNT_ALL = "count"
    CHECK_UNIQUE = "unique"


class Status(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"


@dataclass(frozen=True)
class SolveResult:
    status: Status
    count: int | None
    witness: Assignment | None
    nodes_expanded: int

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise DomainError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
        if value < 1:
            raise DomainError(f"{BUDGET_ENV} must be positive")
        return value
    return DEFAULT_NODE_BUDGET


def satisfies(constraint: Constraint, assignment: Sequence[int]) -> bool:
    return tuple(assignment[v] for v in constraint.scope) in constraint.permitted


def satisfies_all(constraints: Sequence[Constraint], assignment: Sequence[int]) -> bool:
    return all(satisfies(c, assignment) for c in constraints)


def _compile(n: int, d: int, constraints: Sequence[Constraint]):
    """Per variable, the checks triggered by assigning it.

    Each check is ``(target, others, table)``: ``others`` are the scope
    variables other than the target, in scope order, and ``table`` maps the
    mixed-radix code of their values to an allowed-value mask for the target.
    """
    triggers: list[list] = [[] for _ in range(n)]
    unsat_now = False
    for c in constraints:
        scope = c.scope
        target_pos = max(range(len(scope)), key=lambda j: scope[j])
        target = scope[target_pos]
        others = tuple(v for j, v in enumerate(scope) if j != target_pos)
        table = [0] * (d ** len(others))
        for tup in c.permitted:
            code = 0
            for j, x in enumerate(tup):
                if j != target_pos:
                    code = code * d + x
            table[code] |= 1 << tup[target_pos]
        if not c.permitted:
            unsat_now = True
        triggers[max(others)].append((target, others, table))
    return triggers, unsat_now


def solve_constraints(
    n: int,
    d: int,
    constraints: Sequence[Constraint],
    mode: Mode = Mode.DECIDE,
    budget: int | None = None,
) -> SolveResult:
    """Search over an explicit constraint list (need not form a valid Instance)."""
    mode = Mode(mode)
    if budget is None:
        budget = default_budget()
    triggers, unsat_now = _compile(n, d, constraints)
    if unsat_now:
        return SolveResult(Status.UNSAT, 0 if mode is not Mode.DECIDE else None, None, 0)

    full = (1 << d) - 1
    assign = [0] * n
    state = {"nodes": 0, "count": 0, "witness": None}
    stop_at = {Mode.DECIDE: 1, Mode.CHECK_UNIQUE: 2, Mode.COUNT_ALL: None}[mode]
    last = n - 1

    def search(i: int, domains: list[int]) -> bool:
        # returns True when the search should stop
        state["nodes"] += 1
        if state["nodes"] > budget:
            raise BudgetExceeded(
                f"node budget {budget} exhausted", nodes_expanded=state["nodes"] - 1, partial_count=state["count"]
            )
        dom = domains[i]
        if i == last:
            if state["witness"] is None:
                low = (dom & -dom).bit_length() - 1
                assign[i] = low
                state["witness"] = tuple(assign)
            state["count"] += dom.bit_count()
            return stop_at is not None and state["count"] >= stop_at
        checks = triggers[i]
        while dom:
            low = dom & -dom
            v = low.bit_length() - 1
            dom ^= low
            assign[i] = v
            if checks:
                new = domains.copy()
                ok = True
                for target, others, table in checks:
                    code = 0
                    for w in others:
                        code = code * d + assign[w]
                    mask = new[target] & table[code]
                    if not mask:
                        ok = False
                        break
                    new[target] = mask
                if not ok:
                    continue
            else:
                new = domains
            if search(i + 1, new):
                return True
        return False

    search(0, [full] * n)
    count = state["count"]
    if stop_at is not None:
        count = min(count, stop_at)
    sat = state["count"] > 0
    return SolveResult(
        Status.SAT if sat else Status.UNSAT,
        None if mode is Mode.DECIDE else count,
        state["witness"] if sat else None,
        state["nodes"],
    )


def solve(instance: Instance, mode: Mode = Mode.DECIDE, budget: int | None = None) -> SolveResult:
    """Decide, count, or check uniqueness of the solutions of ``instance``.

    Raises BudgetExceeded rather than returning an unproven answer.
    """
    return solve_constraints(instance.n, instance.d, instance.constraints, mode, budget)


def count_solutions(instance: Instance, budget: int | None = None) -> int:
    return solve(instance, Mode.COUNT_ALL, budget).count


# -- brute force ------------------------------------------------------------


def _check_oracle_size(n: int, d: int) -> None:
    if d**n > ORACLE_LIMIT:
        raise DomainError(f"d^n = {d}^{n} exceeds the enumeration limit {ORACLE_LIMIT}")


def _assignment_chunks(n: int, d: int, chunk: int = 1 << 16):
    total = d**n
    weights = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield (codes[:, None] // weights[None, :]) % d


def _tables(d: int, constraints: Sequence[Constraint]):
    out = []
    for c in constraints:
        k = len(c.scope)
        flat = np.zeros(d**k, dtype=bool)
        for tup in c.permitted:
            code = 0
            for x in tup:
                code = code * d + x
            flat[code] = True
        weights = d ** np.arange(k - 1, -1, -1, dtype=np.int64)
        out.append((np.array(c.scope), weights, flat))
    return out


def _sat_matrix(block: np.ndarray, tables) -> np.ndarray:
    """Boolean matrix [assignment, constraint]."""
    cols = [flat[block[:, scope] @ weights] for scope, weights, flat in tables]
    if not cols:
        return np.ones((block.shape[0], 0), dtype=bool)
    return np.stack(cols, axis=1)


def enumerate_oracle(instance: Instance) -> SolveResult:
    """Count solutions by checking every one of the d^n assignments."""
    n, d = instance.n, instance.d
    _check_oracle_size(n, d)
    tables = _tables(d, instance.constraints)
    count = 0
    witness = None
    for block in _assignment_chunks(n, d):
        ok = _sat_matrix(block, tables).all(axis=1)
        hits = int(ok.sum())
        if hits and witness is None:
            witness = tuple(int(x) for x in block[np.argmax(ok)])
        count += hits
    return SolveResult(Status.SAT if count else Status.UNSAT, count, witness, d**n)


def all_solutions(instance: Instance) -> np.ndarray:
    """Every solution as rows of an (count, n) array, lexicographic order."""
    n, d = instance.n, instance.d
    _check_oracle_size(n, d)
    tables = _tables(d, instance.constraints)
    parts = [block[_sat_matrix(block, tables).all(axis=1)] for block in _assignment_chunks(n, d)]
    return np.concatenate(parts) if parts else np.zeros((0, n), dtype=np.int64)


def count_near_misses_oracle(instance: Instance, u: int) -> int:
    """Assignments violating constraint ``u`` and satisfying all others."""
    n, d = instance.n, instance.d
    _check_oracle_size(n, d)
    tables = _tables(d, instance.constraints)
    total = 0
    for block in _assignment_chunks(n, d):
        mat = _sat_matrix(block, tables)
        others = np.delete(mat, u, axis=1).all(axis=1)
        total += int((others & ~mat[:, u]).sum())
    return total


def find_near_miss(instance: Instance, u: int, budget: int | None = None) -> Assignment | None:
    """An assignment that satisfies every constraint except ``u`` and violates
    ``u``; None when no such assignment exists."""
    if not 0 <= u < instance.m:
        raise DomainError(f"constraint index {u} outside [0, {instance.m})")
    c = instance.constraints[u]
    complement = Constraint(c.scope, frozenset(c.forbidden(instance.d)))
    if not complement.permitted:
        return None
    cs = list(instance.constraints)
    cs[u] = complement
    res = solve_constraints(instance.n, instance.d, cs, Mode.DECIDE, budget)
    return res.witness


def self_unsatisfiable(instance: Instance) -> list[bool]:
    """Per constraint: does some assignment violate it while satisfying all others?"""
    n, d = instance.n, instance.d
    _check_oracle_size(n, d)
    tables = _tables(d, instance.constraints)
    found = np.zeros(instance.m, dtype=bool)
    for block in _assignment_chunks(n, d):
        mat = _sat_matrix(block, tables)
        violated = (~mat).sum(axis=1)
        single = mat[violated == 1]
        if single.size:
            found |= (~single).any(axis=0)
    return found.tolist()

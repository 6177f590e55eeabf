"""Log-encoding of Model RB instances into CNF, DIMACS I/O, and a tiny DPLL.

CSP variable i with domain size d gets b = ceil(log2 d) boolean variables,
numbered ``i*b + j + 1`` for bit j (bit 0 is least significant). Each
forbidden tuple of a constraint becomes one clause ruling out its bit
pattern. When d is not a power of two, one clause per variable and per
unused code c in [d, 2^b) rules that code out.

Clause order: constraints in index order, forbidden tuples in lexicographic
order, then code-exclusion clauses by variable and code.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .core import Assignment, Instance
from .errors import BudgetExceeded, InvalidModel, ParseError, SizeError

DEFAULT_CLAUSE_BUDGET = 10**7
DEFAULT_DPLL_BUDGET = 10**7


def bits_per_value(d: int) -> int:
    return max(1, (d - 1).bit_length())


@dataclass
class Cnf:
    num_vars: int
    clauses: list[list[int]]
    var_map: dict[tuple[int, int], int] = field(default_factory=dict)
    domain_size: int | None = None

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)


def _value_literals(var_bits: Sequence[int], value: int) -> list[int]:
    """Literals that are all false exactly when the variable holds ``value``."""
    return [-v if (value >> j) & 1 else v for j, v in enumerate(var_bits)]


def encode(instance: Instance, clause_budget: int = DEFAULT_CLAUSE_BUDGET) -> Cnf:
    n, d = instance.n, instance.d
    b = bits_per_value(d)
    var_map = {(i, j): i * b + j + 1 for i in range(n) for j in range(b)}
    bits = [[var_map[i, j] for j in range(b)] for i in range(n)]
    forbidden_total = sum(d**c.arity - len(c.permitted) for c in instance.constraints)
    exclusions = n * ((1 << b) - d)
    if forbidden_total + exclusions > clause_budget:
        raise SizeError(f"encoding needs {forbidden_total + exclusions} clauses, budget is {clause_budget}")
    clauses = []
    for c in instance.constraints:
        for tup in c.forbidden(d):
            clause = []
            for var, value in zip(c.scope, tup):
                clause.extend(_value_literals(bits[var], value))
            clauses.append(clause)
    for i in range(n):
        for code in range(d, 1 << b):
            clauses.append(_value_literals(bits[i], code))
    return Cnf(n * b, clauses, var_map, d)


def decode(cnf: Cnf, model: Sequence[bool]) -> Assignment:
    """Read CSP values out of a boolean model (``model[v-1]`` is variable v)."""
    if len(model) < cnf.num_vars:
        raise InvalidModel(f"model assigns {len(model)} variables, formula has {cnf.num_vars}")
    n = 1 + max((i for i, _ in cnf.var_map), default=-1)
    values = [0] * n
    for (i, j), v in cnf.var_map.items():
        if model[v - 1]:
            values[i] |= 1 << j
    if cnf.domain_size is not None:
        for i, x in enumerate(values):
            if x >= cnf.domain_size:
                raise InvalidModel(f"variable {i + 1} decodes to code {x}, domain size is {cnf.domain_size}")
    return tuple(values)


def encode_assignment(cnf: Cnf, assignment: Sequence[int]) -> list[bool]:
    model = [False] * cnf.num_vars
    for (i, j), v in cnf.var_map.items():
        model[v - 1] = bool((assignment[i] >> j) & 1)
    return model


def model_satisfies(cnf: Cnf, model: Sequence[bool]) -> bool:
    return all(any(model[abs(l) - 1] == (l > 0) for l in clause) for clause in cnf.clauses)


# -- DPLL ---------------------------------------------------------------------


@dataclass(frozen=True)
class SatResult:
    sat: bool
    model: tuple[bool, ...] | None
    nodes: int


def dpll_sat(cnf: Cnf, budget: int = DEFAULT_DPLL_BUDGET) -> SatResult:
    """Unit propagation plus chronological branching on the lowest unassigned
    variable, false first. Deterministic; returns the first model found."""
    nv = cnf.num_vars
    clauses = [list(dict.fromkeys(c)) for c in cnf.clauses]
    if any(not c for c in clauses):
        return SatResult(False, None, 0)
    occurs: list[list[int]] = [[] for _ in range(nv + 1)]
    for ci, c in enumerate(clauses):
        for lit in c:
            occurs[abs(lit)].append(ci)
    value: list[int | None] = [None] * (nv + 1)
    trail: list[int] = []
    nodes = 0

    def lit_val(lit):
        v = value[abs(lit)]
        if v is None:
            return None
        return v if lit > 0 else not v

    def assign(lit):
        value[abs(lit)] = lit > 0
        trail.append(abs(lit))

    def propagate(queue) -> bool:
        # queue holds literals just made true
        while queue:
            lit = queue.pop()
            for ci in occurs[abs(lit)]:
                unassigned = None
                n_unassigned = 0
                satisfied = False
                for l2 in clauses[ci]:
                    lv = lit_val(l2)
                    if lv is True:
                        satisfied = True
                        break
                    if lv is None:
                        n_unassigned += 1
                        unassigned = l2
                if satisfied:
                    continue
                if n_unassigned == 0:
                    return False
                if n_unassigned == 1:
                    assign(unassigned)
                    queue.append(unassigned)
        return True

    def undo(mark):
        while len(trail) > mark:
            value[trail.pop()] = None

    units = []
    for c in clauses:
        if len(c) == 1:
            lv = lit_val(c[0])
            if lv is False:
                return SatResult(False, None, 0)
            if lv is None:
                assign(c[0])
                units.append(c[0])
    if not propagate(units):
        return SatResult(False, None, 0)

    def search() -> bool:
        nonlocal nodes
        var = next((v for v in range(1, nv + 1) if value[v] is None), None)
        if var is None:
            return True
        for lit in (-var, var):
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded(f"DPLL node budget {budget} exhausted", nodes_expanded=nodes - 1)
            mark = len(trail)
            assign(lit)
            if propagate([lit]) and search():
                return True
            undo(mark)
        return False

    if search():
        return SatResult(True, tuple(bool(value[v]) for v in range(1, nv + 1)), nodes)
    return SatResult(False, None, nodes)


# -- DIMACS -------------------------------------------------------------------


def write_dimacs(cnf: Cnf, sink) -> None:
    """Write DIMACS CNF to a path or text stream. Comment lines record the
    domain size and, per CSP variable, its bit variables from bit 0 up."""
    out = io.StringIO()
    if cnf.domain_size is not None:
        out.write(f"c rblab domain {cnf.domain_size}\n")
    by_var: dict[int, list[tuple[int, int]]] = {}
    for (i, j), v in sorted(cnf.var_map.items()):
        by_var.setdefault(i, []).append((j, v))
    for i, bits in by_var.items():
        out.write(f"c rblab var {i + 1} " + " ".join(str(v) for _, v in sorted(bits)) + "\n")
    out.write(f"p cnf {cnf.num_vars} {len(cnf.clauses)}\n")
    for clause in cnf.clauses:
        out.write(" ".join(str(l) for l in clause) + " 0\n")
    text = out.getvalue()
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text)
    else:
        sink.write(text)


def read_dimacs(source) -> Cnf:
    """Parse DIMACS CNF from a path or a text stream."""
    if hasattr(source, "read"):
        return parse_dimacs(source.read())
    return parse_dimacs(Path(source).read_text())


def parse_dimacs(text: str) -> Cnf:
    header = None
    clauses: list[list[int]] = []
    current: list[int] = []
    var_map: dict[tuple[int, int], int] = {}
    domain = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) >= 3 and parts[1] == "rblab":
                try:
                    if parts[2] == "domain":
                        domain = int(parts[3])
                    elif parts[2] == "var":
                        i = int(parts[3]) - 1
                        for j, v in enumerate(parts[4:]):
                            var_map[i, j] = int(v)
                except (IndexError, ValueError):
                    raise ParseError(f"malformed rblab comment: {line!r}", line=lineno) from None
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise ParseError("duplicate problem line", line=lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"bad problem line {line!r}", line=lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ParseError(f"bad problem line {line!r}", line=lineno) from None
            continue
        if header is None:
            raise ParseError("clause before problem line", line=lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", line=lineno) from None
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                if abs(lit) > header[0]:
                    raise ParseError(f"literal {lit} exceeds declared {header[0]} variables", line=lineno)
                current.append(lit)
    if header is None:
        raise ParseError("missing problem line")
    if current:
        raise ParseError("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise ParseError(f"header declares {header[1]} clauses, found {len(clauses)}")
    return Cnf(header[0], clauses, var_map, domain)

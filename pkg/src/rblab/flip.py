"""Tuple-swap mapping that flips satisfiability of binary Model RB instances.

For a constraint with permitted set R and tuples a, b in R whose crosses
(a1, b2) and (b1, a2) are not in R, the swap removes a and b and adds the
crosses. |R| is unchanged, so every instance parameter survives the flip.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .core import Assignment, Constraint, Instance
from .errors import FlipPreconditionViolated, NoFlipPairFound, UnsupportedArity
from .solver import satisfies


class Direction(str, Enum):
    SAT_TO_UNSAT = "sat_to_unsat"
    UNSAT_TO_SAT = "unsat_to_sat"


@dataclass(frozen=True)
class FlipCertificate:
    u: int
    a: tuple[int, int]
    b: tuple[int, int]
    direction: Direction
    witness: Assignment

    def crosses(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.a[0], self.b[1]), (self.b[0], self.a[1])

    def to_dict(self) -> dict:
        # 1-based, like the instance files
        return {
            "u": self.u + 1,
            "a": [x + 1 for x in self.a],
            "b": [x + 1 for x in self.b],
            "direction": self.direction.value,
            "witness": [x + 1 for x in self.witness],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FlipCertificate":
        return cls(
            int(doc["u"]) - 1,
            tuple(int(x) - 1 for x in doc["a"]),
            tuple(int(x) - 1 for x in doc["b"]),
            Direction(doc["direction"]),
            tuple(int(x) - 1 for x in doc["witness"]),
        )


def _require_binary(k: int) -> None:
    if k != 2:
        raise UnsupportedArity(f"tuple-swap flips are defined for k = 2 only, got k = {k}")


def swap_tuples(constraint: Constraint, a: Sequence[int], b: Sequence[int]) -> Constraint:
    """Replace a, b by the cross tuples (a1, b2), (b1, a2)."""
    _require_binary(constraint.arity)
    a, b = tuple(a), tuple(b)
    R = constraint.permitted
    cross1, cross2 = (a[0], b[1]), (b[0], a[1])
    if a == b:
        raise FlipPreconditionViolated("a and b must differ")
    if a not in R:
        raise FlipPreconditionViolated(f"a = {a} is not permitted")
    if b not in R:
        raise FlipPreconditionViolated(f"b = {b} is not permitted")
    if cross1 in R:
        raise FlipPreconditionViolated(f"cross tuple (a1, b2) = {cross1} is already permitted")
    if cross2 in R:
        raise FlipPreconditionViolated(f"cross tuple (b1, a2) = {cross2} is already permitted")
    return Constraint(constraint.scope, (R - {a, b}) | {cross1, cross2})


def flip_sat_to_unsat(instance: Instance, unique_solution: Sequence[int]) -> tuple[Instance, FlipCertificate]:
    """Kill the unique solution: swap out the solution's own tuple on some C_u.

    Scans u = 0, 1, ... and, for each, b in ascending order among permitted
    tuples with b1 != a1, b2 != a2 and both crosses forbidden. Uniqueness is
    the caller's responsibility; the returned instance always rejects
    ``unique_solution``.
    """
    _require_binary(instance.k)
    sigma = tuple(unique_solution)
    for u, c in enumerate(instance.constraints):
        a = (sigma[c.scope[0]], sigma[c.scope[1]])
        R = c.permitted
        if a not in R:
            continue
        for b in c.sorted_tuples():
            if b[0] == a[0] or b[1] == a[1]:
                continue
            if (a[0], b[1]) in R or (b[0], a[1]) in R:
                continue
            flipped = instance.replace_constraint(u, swap_tuples(c, a, b))
            return flipped, FlipCertificate(u, a, b, Direction.SAT_TO_UNSAT, sigma)
    raise NoFlipPairFound("no constraint admits a swap that removes the solution's tuple")


def flip_unsat_to_sat(instance: Instance, u: int, near_miss: Sequence[int]) -> tuple[Instance, FlipCertificate]:
    """Make ``near_miss`` a solution by swapping tuples in C_u.

    With (v1, v2) the near miss's (forbidden) tuple on C_u, pick the first
    a = (v1, a2) and b = (b1, v2) in R, ascending, with (b1, a2) forbidden;
    the swap then adds (a1, b2) = (v1, v2).
    """
    _require_binary(instance.k)
    sigma = tuple(near_miss)
    c = instance.constraints[u]
    R = c.permitted
    v = (sigma[c.scope[0]], sigma[c.scope[1]])
    if v in R:
        raise FlipPreconditionViolated(f"near miss satisfies constraint {u}")
    for i, other in enumerate(instance.constraints):
        if i != u and not satisfies(other, sigma):
            raise FlipPreconditionViolated(f"near miss violates constraint {i} besides {u}")
    tuples = c.sorted_tuples()
    firsts = [t for t in tuples if t[0] == v[0]]
    seconds = [t for t in tuples if t[1] == v[1]]
    for a, b in itertools.product(firsts, seconds):
        if (b[0], a[1]) not in R:
            flipped = instance.replace_constraint(u, swap_tuples(c, a, b))
            return flipped, FlipCertificate(u, a, b, Direction.UNSAT_TO_SAT, sigma)
    raise NoFlipPairFound(f"constraint {u} has no tuple pair covering the near miss {v}")


def verify_certificate(before: Instance, after: Instance, cert: FlipCertificate) -> bool:
    """Re-check a flip from the two instances and the certificate alone."""
    if before.signature() != after.signature() or before.k != 2:
        return False
    for i, (c0, c1) in enumerate(zip(before.constraints, after.constraints)):
        if i != cert.u and c0 != c1:
            return False
    try:
        expected = swap_tuples(before.constraints[cert.u], cert.a, cert.b)
    except FlipPreconditionViolated:
        return False
    if expected != after.constraints[cert.u]:
        return False
    witness_ok = all(satisfies(c, cert.witness) for c in after.constraints)
    if cert.direction is Direction.SAT_TO_UNSAT:
        return not witness_ok
    return witness_ok

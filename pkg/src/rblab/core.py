"""Model RB parameters, instances and seeded generators.

Everything is 0-based in memory. The JSON form (see :mod:`rblab.instance_io`)
is 1-based so that files read like the usual x_1..x_n / values 1..d notation.

Randomness comes from numpy's counter-based Philox bit generator. Each
constraint draws from its own stream keyed by ``(seed, stream, index)``, so
constraint ``i`` does not depend on how many numbers constraint ``j`` consumed
and instances can be built in any order with identical output.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

Tuple_ = tuple[int, ...]
Assignment = tuple[int, ...]

# stream identifiers for stream_rng
_ORIGINAL = 0
_SYM_RELATION = 1
_SYM_CONSTRAINT = 2


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit child seed, used to seed per-trial instances in experiments."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class Variant(str, Enum):
    ORIGINAL = "original"
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class RBParams:
    """Model RB parameter tuple plus the integer quantities derived from it.

    ``d``, ``m`` and ``t`` are filled in by :func:`derive_params`; constructing
    RBParams directly validates and derives as well.
    """

    n: int
    alpha: float
    k: int
    p: float
    r: float
    seed: int = 0
    d: int = field(init=False)
    m: int = field(init=False)
    t: int = field(init=False)

    def __post_init__(self):
        _check_params(self.n, self.alpha, self.k, self.p, self.r, self.seed)
        d, m, t = _derive(self.n, self.alpha, self.k, self.p, self.r)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "t", t)

    @property
    def num_tuples(self) -> int:
        return self.d**self.k

    def with_seed(self, seed: int) -> "RBParams":
        return RBParams(self.n, self.alpha, self.k, self.p, self.r, seed)


def _check_params(n, alpha, k, p, r, seed):
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    if not (alpha > 0) or not math.isfinite(alpha):
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise DomainError(f"k must be an integer >= 2, got {k!r}")
    if k > n:
        raise DomainError(f"k must not exceed n (k={k}, n={n})")
    if not (0 < p < 1):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if not (r > 0) or not math.isfinite(r):
        raise DomainError(f"r must be > 0, got {r!r}")
    if not isinstance(seed, (int, np.integer)) or not (0 <= seed < 2**64):
        raise DomainError(f"seed must be an integer in [0, 2**64), got {seed!r}")


def _derive(n, alpha, k, p, r):
    # round() is half-to-even
    d = max(2, round(n**alpha))
    m = max(1, round(r * n * math.log(d)))
    total = d**k
    t = min(max(round((1 - p) * total), 1), total - 1)
    return d, m, t


def derive_params(n: int, alpha: float, k: int, p: float, r: float, seed: int = 0) -> RBParams:
    return RBParams(n, alpha, k, p, r, seed)


@dataclass(frozen=True)
class Constraint:
    """A scope of distinct variables and the set of permitted value tuples."""

    scope: Tuple_
    permitted: frozenset

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        object.__setattr__(self, "scope", scope)
        if not isinstance(self.permitted, frozenset):
            object.__setattr__(self, "permitted", frozenset(tuple(int(x) for x in t) for t in self.permitted))
        if len(set(scope)) != len(scope):
            raise DomainError(f"scope has repeated variables: {scope}")
        k = len(scope)
        for tup in self.permitted:
            if len(tup) != k:
                raise DomainError(f"permitted tuple {tup} does not have arity {k}")

    @property
    def arity(self) -> int:
        return len(self.scope)

    def sorted_tuples(self) -> list[Tuple_]:
        return sorted(self.permitted)

    def check_domain(self, n: int, d: int) -> None:
        for v in self.scope:
            if not 0 <= v < n:
                raise DomainError(f"scope variable {v} outside [0, {n})")
        for tup in self.permitted:
            if any(not 0 <= x < d for x in tup):
                raise DomainError(f"permitted tuple {tup} has a value outside [0, {d})")

    def forbidden(self, d: int) -> list[Tuple_]:
        """Complement of the permitted set in lexicographic order."""
        return [t for t in itertools.product(range(d), repeat=self.arity) if t not in self.permitted]


@dataclass(frozen=True)
class Instance:
    params: RBParams
    constraints: tuple[Constraint, ...]
    variant: Variant = Variant.ORIGINAL
    actual_tightness: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "variant", Variant(self.variant))
        pr = self.params
        if len(self.constraints) != pr.m:
            raise DomainError(f"expected {pr.m} constraints, got {len(self.constraints)}")
        for c in self.constraints:
            if c.arity != pr.k:
                raise DomainError(f"constraint arity {c.arity} != k={pr.k}")
            c.check_domain(pr.n, pr.d)
        if self.variant is Variant.ORIGINAL:
            for i, c in enumerate(self.constraints):
                if len(c.permitted) != pr.t:
                    raise DomainError(f"constraint {i} has {len(c.permitted)} permitted tuples, expected t={pr.t}")
        if math.isnan(self.actual_tightness):
            object.__setattr__(self, "actual_tightness", self._measured_tightness())

    def _measured_tightness(self) -> float:
        # fraction of forbidden tuples, averaged over constraints
        total = self.params.num_tuples
        return 1.0 - sum(len(c.permitted) for c in self.constraints) / (total * len(self.constraints))

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def m(self) -> int:
        return self.params.m

    def replace_constraint(self, index: int, constraint: Constraint) -> "Instance":
        cs = list(self.constraints)
        cs[index] = constraint
        return Instance(self.params, tuple(cs), self.variant)

    def without_constraint(self, index: int) -> tuple[Constraint, ...]:
        return self.constraints[:index] + self.constraints[index + 1:]

    def signature(self) -> tuple:
        """(n, d, k, m, permitted sizes): the quantities a flip must preserve."""
        return (self.n, self.d, self.k, self.m, tuple(len(c.permitted) for c in self.constraints))


def check_assignment(assignment: Sequence[int], n: int, d: int) -> Assignment:
    a = tuple(int(v) for v in assignment)
    if len(a) != n:
        raise DomainError(f"assignment has length {len(a)}, expected {n}")
    if any(not 0 <= v < d for v in a):
        raise DomainError(f"assignment values must lie in [0, {d})")
    return a


def _decode_tuple(code: int, d: int, k: int) -> Tuple_:
    # most significant coordinate first, so code order is lexicographic order
    out = [0] * k
    for j in range(k - 1, -1, -1):
        code, out[j] = divmod(code, d)
    return tuple(out)


def _sample_constraint(rng: np.random.Generator, n: int, d: int, k: int, t: int) -> Constraint:
    scope = tuple(int(v) for v in rng.choice(n, size=k, replace=False))
    codes = rng.choice(d**k, size=t, replace=False)
    return Constraint(scope, frozenset(_decode_tuple(int(c), d, k) for c in codes))


def generate_original(params: RBParams) -> Instance:
    """Original Model RB: every constraint independently picks k distinct
    variables and t distinct permitted tuples, uniformly at random."""
    cs = tuple(
        _sample_constraint(stream_rng(params.seed, _ORIGINAL, i), params.n, params.d, params.k, params.t)
        for i in range(params.m)
    )
    return Instance(params, cs, Variant.ORIGINAL)


# -- symmetric variant ------------------------------------------------------


@dataclass(frozen=True)
class SymmetricRelation:
    k: int
    d: int
    tuples: frozenset
    target_size: int

    @property
    def size(self) -> int:
        return len(self.tuples)

    def is_closed(self) -> bool:
        return all(perm in self.tuples for t in self.tuples for perm in itertools.permutations(t))


def _orbits(d: int, k: int) -> list[list[Tuple_]]:
    return [sorted(set(itertools.permutations(ms))) for ms in itertools.combinations_with_replacement(range(d), k)]


def generate_symmetric_relation(d: int, k: int, target_size: int, seed: int = 0) -> SymmetricRelation:
    """Random permutation-closed relation whose size is as close to
    ``target_size`` as orbit granularity allows.

    Orbits are visited in the order a uniform tuple sampler would first hit
    them (the key of an orbit of size s is the minimum of s uniforms). Each
    orbit is added when it still fits; a leftover gap is closed by one extra
    orbit only when that lands nearer the target.
    """
    if d < 1 or k < 1:
        raise DomainError("d and k must be positive")
    total = d**k
    if not 1 <= target_size <= total - 1:
        raise DomainError(f"target_size must lie in [1, {total - 1}], got {target_size}")
    orbits = _orbits(d, k)
    rng = stream_rng(seed, _SYM_RELATION)
    u = rng.random(len(orbits))
    sizes = np.array([len(o) for o in orbits], dtype=float)
    keys = 1.0 - (1.0 - u) ** (1.0 / sizes)
    chosen: set = set()
    unused = []
    for idx in np.argsort(keys, kind="stable"):
        orb = orbits[idx]
        if len(chosen) + len(orb) <= target_size:
            chosen.update(orb)
        else:
            unused.append(orb)
        if len(chosen) == target_size:
            break
    gap = target_size - len(chosen)
    if gap > 0 and unused:
        smallest = min(unused, key=len)
        if len(smallest) - gap < gap or not chosen:
            chosen.update(smallest)
    return SymmetricRelation(k, d, frozenset(chosen), target_size)


def map_relation(tuples: Iterable[Tuple_], bijections: Sequence[Sequence[int]]) -> frozenset:
    """Apply ``bijections[j]`` to coordinate j of every tuple; coordinates past
    ``len(bijections)`` are left unchanged."""
    out = set()
    for t in tuples:
        out.add(tuple(bijections[j][x] if j < len(bijections) else x for j, x in enumerate(t)))
    return frozenset(out)


def _check_permutation(bijection: Sequence[int], d: int | None = None) -> list[int]:
    g = [int(x) for x in bijection]
    if sorted(g) != list(range(len(g))) or (d is not None and len(g) != d):
        raise DomainError(f"not a permutation of [0, {d if d is not None else len(g)}): {list(bijection)}")
    return g


def instantiate_symmetric(params: RBParams, rstar: SymmetricRelation) -> Instance:
    """Symmetric Model RB: each constraint's permitted set is the image of
    ``rstar`` under k-1 independent random bijections of the first k-1
    coordinates."""
    if rstar.d != params.d or rstar.k != params.k:
        raise DomainError(f"relation has (d={rstar.d}, k={rstar.k}), params need (d={params.d}, k={params.k})")
    cs = []
    for i in range(params.m):
        rng = stream_rng(params.seed, _SYM_CONSTRAINT, i)
        scope = tuple(int(v) for v in rng.choice(params.n, size=params.k, replace=False))
        maps = [rng.permutation(params.d).tolist() for _ in range(params.k - 1)]
        cs.append(Constraint(scope, map_relation(rstar.tuples, maps)))
    size = rstar.size
    return Instance(params, tuple(cs), Variant.SYMMETRIC, 1.0 - size / params.num_tuples)


def generate_symmetric(params: RBParams) -> Instance:
    """Draw R* with target size t, then instantiate every constraint from it."""
    rstar = generate_symmetric_relation(params.d, params.k, params.t, seed=derive_seed(params.seed, _SYM_RELATION))
    return instantiate_symmetric(params, rstar)


def remap_first_coordinates(constraint: Constraint, bijection: Sequence[int]) -> Constraint:
    """Relabel the first coordinate of every permitted tuple by ``bijection``."""
    g = _check_permutation(bijection)
    for t in constraint.permitted:
        if t[0] >= len(g):
            raise DomainError(f"tuple {t} has first value outside the bijection's domain")
    return Constraint(constraint.scope, map_relation(constraint.permitted, [g]))

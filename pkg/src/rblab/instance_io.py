"""JSON instance files.

Field order is fixed: n, alpha, k, p, r, seed, d, m, variant, constraints.
Scopes and tuples are written 1-based; permitted tuples are sorted. One
constraint per line, so diffs and line diagnostics stay readable.
"""
from __future__ import annotations

import json
from pathlib import Path

from .core import Constraint, Instance, RBParams, Variant
from .errors import DomainError, InstanceFormatError

HEADER_FIELDS = ("n", "alpha", "k", "p", "r", "seed", "d", "m", "variant")


def _num(x):
    return json.dumps(x)


def dumps(instance: Instance) -> str:
    pr = instance.params
    head = {
        "n": pr.n, "alpha": pr.alpha, "k": pr.k, "p": pr.p, "r": pr.r, "seed": pr.seed,
        "d": pr.d, "m": pr.m, "variant": instance.variant.value,
    }
    lines = ["{"]
    for key in HEADER_FIELDS:
        lines.append(f' "{key}": {_num(head[key])},')
    lines.append(' "constraints": [')
    body = []
    for c in instance.constraints:
        scope = [v + 1 for v in c.scope]
        perm = [[x + 1 for x in t] for t in c.sorted_tuples()]
        body.append(f'  {{"scope": {json.dumps(scope)}, "permitted": {json.dumps(perm)}}}')
    lines.append(",\n".join(body))
    lines.append(" ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def save(instance: Instance, path) -> None:
    Path(path).write_text(dumps(instance))


def _line_of_constraint(text: str, index: int) -> int | None:
    # canonical layout: constraint i sits on its own line after '"constraints": ['
    lines = text.splitlines()
    for lineno, line in enumerate(lines, start=1):
        if line.strip().startswith('"constraints"'):
            target = lineno + 1 + index
            return target if target <= len(lines) else None
    return None


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be an object")
    missing = [f for f in HEADER_FIELDS + ("constraints",) if f not in doc]
    if missing:
        raise InstanceFormatError(f"missing field(s): {', '.join(missing)}")
    extra = sorted(set(doc) - set(HEADER_FIELDS) - {"constraints"})
    if extra:
        raise InstanceFormatError(f"unknown field(s): {', '.join(extra)}")
    try:
        params = RBParams(doc["n"], float(doc["alpha"]), doc["k"], float(doc["p"]), float(doc["r"]), doc["seed"])
    except (DomainError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"parameters: {exc}") from None
    for key in ("d", "m"):
        if doc[key] != getattr(params, key):
            raise InstanceFormatError(f"field {key!r}: stored {doc[key]!r} but parameters derive {getattr(params, key)}")
    try:
        variant = Variant(doc["variant"])
    except ValueError:
        raise InstanceFormatError(f"field 'variant': unknown value {doc['variant']!r}") from None
    raw = doc["constraints"]
    if not isinstance(raw, list):
        raise InstanceFormatError("field 'constraints' must be a list")
    if len(raw) != params.m:
        raise InstanceFormatError(f"field 'constraints': expected {params.m} entries, got {len(raw)}")
    cs = []
    for i, entry in enumerate(raw):
        where = f"constraints[{i}]"
        line = _line_of_constraint(text, i)
        try:
            c = _parse_constraint(entry, params, where)
        except InstanceFormatError as exc:
            raise InstanceFormatError(str(exc), line=line) from None
        cs.append(c)
    if variant is Variant.SYMMETRIC and len({len(c.permitted) for c in cs}) > 1:
        raise InstanceFormatError("symmetric instance has permitted sets of differing sizes")
    try:
        return Instance(params, tuple(cs), variant)
    except DomainError as exc:
        raise InstanceFormatError(str(exc)) from None


def _parse_constraint(entry, params: RBParams, where: str) -> Constraint:
    if not isinstance(entry, dict) or set(entry) != {"scope", "permitted"}:
        raise InstanceFormatError(f"{where}: expected an object with keys 'scope' and 'permitted'")
    scope = entry["scope"]
    if not isinstance(scope, list) or len(scope) != params.k:
        raise InstanceFormatError(f"{where}.scope: expected {params.k} variables")
    for v in scope:
        if not isinstance(v, int) or not 1 <= v <= params.n:
            raise InstanceFormatError(f"{where}.scope: variable {v!r} outside 1..{params.n}")
    if len(set(scope)) != len(scope):
        raise InstanceFormatError(f"{where}.scope: repeated variable")
    tuples = set()
    for j, t in enumerate(entry["permitted"]):
        if not isinstance(t, list) or len(t) != params.k:
            raise InstanceFormatError(f"{where}.permitted[{j}]: expected a {params.k}-tuple")
        for x in t:
            if not isinstance(x, int) or not 1 <= x <= params.d:
                raise InstanceFormatError(f"{where}.permitted[{j}]: value {x!r} outside 1..{params.d}")
        tup = tuple(x - 1 for x in t)
        if tup in tuples:
            raise InstanceFormatError(f"{where}.permitted[{j}]: duplicate tuple {t}")
        tuples.add(tup)
    if not 1 <= len(tuples) <= params.num_tuples:
        raise InstanceFormatError(f"{where}.permitted: size {len(tuples)} out of range")
    return Constraint(tuple(v - 1 for v in scope), frozenset(tuples))


def load(path) -> Instance:
    return loads(Path(path).read_text())


def assignment_to_json(assignment) -> list[int]:
    return [v + 1 for v in assignment]


def assignment_from_json(values) -> tuple[int, ...]:
    return tuple(int(v) - 1 for v in values)

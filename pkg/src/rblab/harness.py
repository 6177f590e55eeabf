"""Seeded desk-scale experiments: threshold sweeps, flips in both directions,
and coverage by self-unsatisfiable constraints.

Every trial builds its instance from ``derive_seed(seed, <stream>, <key>...)``
so a record depends only on the argument list. With ``jobs > 1`` trials run
in a process pool and are merged in trial order, which gives the same output
as a serial run.
"""
from __future__ import annotations

import csv
import io
import json
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import feasibility, moments, solver
from .core import RBParams, Variant, derive_seed, generate_original, generate_symmetric
from .errors import BudgetExceeded, DomainError, NoFlipPairFound
from .flip import flip_sat_to_unsat, flip_unsat_to_sat, verify_certificate
from .moments import ModelPoint, calibrate_r

# first spawn-key component, one per experiment kind
_SWEEP, _FLIP_SU, _FLIP_US, _COVERAGE = 10, 11, 12, 13
DEFAULT_SAMPLE_FACTOR = 100


def _float_key(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def _run(fn: Callable, tasks: Sequence, jobs: int) -> list:
    if jobs < 1:
        raise DomainError(f"jobs must be >= 1, got {jobs}")
    if jobs == 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def _make(params: RBParams, variant: Variant):
    return generate_symmetric(params) if Variant(variant) is Variant.SYMMETRIC else generate_original(params)


def violated_conditions(n: int, alpha: float, k: int, p: float) -> list[int]:
    """Which of the five asymptotic parameter conditions a run breaks."""
    return feasibility.check(n, alpha, k, p).failed_ids()


# -- sweep --------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    r: float
    n: int
    d: int
    trials: int
    sat_count: int
    pr_sat: float
    mean_solution_count: float
    se: float
    mean_nodes: float
    budget_exceeded: int = 0


def _sweep_trial(task):
    params, variant, count, budget = task
    inst = _make(params, variant)
    mode = solver.Mode.COUNT_ALL if count else solver.Mode.DECIDE
    try:
        res = solver.solve(inst, mode, budget)
    except BudgetExceeded as exc:
        return None, None, exc.nodes_expanded
    return res.sat, res.count, res.nodes_expanded


def sweep(
    n: int,
    alpha: float,
    k: int,
    p: float,
    r_values: Iterable[float],
    trials: int,
    seed: int,
    jobs: int = 1,
    count: bool = True,
    variant: Variant = Variant.ORIGINAL,
    budget: int | None = None,
) -> list[SweepRecord]:
    """Pr[SAT] per density. Instance seeds are keyed by (seed, r, trial), so a
    given r gives the same record whatever grid it sits in.

    Trials that hit the node budget are counted in ``budget_exceeded`` and
    left out of ``trials`` and every statistic.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    r_values = [float(r) for r in r_values]
    tasks = []
    for r in r_values:
        base = RBParams(n, alpha, k, p, r)
        tasks += [(base.with_seed(derive_seed(seed, _SWEEP, _float_key(r), t)), variant, count, budget)
                  for t in range(trials)]
    results = _run(_sweep_trial, tasks, jobs)
    records = []
    for ci, r in enumerate(r_values):
        cell = results[ci * trials:(ci + 1) * trials]
        done = [c for c in cell if c[0] is not None]
        over = len(cell) - len(done)
        num = len(done)
        sat = sum(1 for c in done if c[0])
        pr = sat / num if num else math.nan
        se = math.sqrt(pr * (1 - pr) / num) if num else math.nan
        mean_count = sum(c[1] for c in done) / num if count and num else math.nan
        mean_nodes = sum(c[2] for c in cell) / len(cell)
        d = RBParams(n, alpha, k, p, r).d
        records.append(SweepRecord(r, n, d, num, sat, pr, mean_count, se, mean_nodes, over))
    return records


def crossing_point(records: Sequence[SweepRecord], level: float = 0.5) -> float | None:
    """First r where pr_sat drops through ``level``, linearly interpolated."""
    for a, b in zip(records, records[1:]):
        if a.pr_sat >= level > b.pr_sat:
            return a.r + (a.pr_sat - level) * (b.r - a.r) / (a.pr_sat - b.pr_sat)
    return None


# -- flips ----------------------------------------------------------------------


@dataclass
class FlipReport:
    direction: str
    attempted: int
    flip_found: int
    kill_confirmed: int
    unsat_after_flip: int
    sat_after_flip: int
    residual_new_solution_rate: float
    union_bound_value: float
    samples_drawn: int = 0
    exhausted: bool = False
    union_bound_literal: float = math.nan
    union_bound_integer_m: float = math.nan
    near_miss_rate_c0: float = math.nan
    params_preserved: int = 0
    violated_conditions: list = field(default_factory=list)
    details: list = field(default_factory=list)

    def csv_row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("details", "violated_conditions")}

    def to_dict(self) -> dict:
        return asdict(self)


def _flip_params(n, alpha, k, p, r):
    if r is None:
        r, _ = calibrate_r(n, alpha, p)
    return RBParams(n, alpha, k, p, r)


def _sat_to_unsat_trial(task):
    params, budget = task
    inst = generate_original(params)
    res = solver.solve(inst, solver.Mode.CHECK_UNIQUE, budget)
    if res.count != 1:
        return None
    sigma = res.witness
    try:
        after, cert = flip_sat_to_unsat(inst, sigma)
    except NoFlipPairFound:
        return {"seed": params.seed, "flip_found": False}
    post = solver.solve(after, solver.Mode.DECIDE, budget)
    return {
        "seed": params.seed,
        "flip_found": True,
        "kill_confirmed": not solver.satisfies_all(after.constraints, sigma) and verify_certificate(inst, after, cert),
        "post_sat": post.sat,
        "params_preserved": _same_shape(inst, after),
        "certificate": cert.to_dict(),
    }


def _same_shape(a, b) -> bool:
    return a.signature() == b.signature() and [len(c.permitted) for c in a.constraints] == [
        len(c.permitted) for c in b.constraints
    ]


def _collect(fn, make_task, needed: int, max_samples: int, jobs: int, accept):
    """Draw samples in index order until ``needed`` are accepted. Batches run
    in parallel but results are scanned in order, so the outcome matches a
    serial run exactly."""
    kept, drawn, hits = [], 0, 0
    batch = max(needed, 8 * jobs)
    while hits < needed and drawn < max_samples:
        stop = min(drawn + batch, max_samples)
        for out in _run(fn, [make_task(i) for i in range(drawn, stop)], jobs):
            drawn += 1
            if out is not None:
                kept.append(out)
                hits += bool(accept(out))
                if hits >= needed:
                    break
        batch *= 2
    return kept, drawn


def _bounds(n, alpha, k, p, params):
    cal = ModelPoint.calibrated(n, alpha, k, p)
    value = moments.flip_residual_bound(cal)
    literal = cal.d * (1 - p) * value
    return value, literal, moments.flip_residual_bound(params)


def flip_experiment_sat_to_unsat(
    n: int,
    alpha: float,
    k: int = 2,
    p: float = 0.5,
    trials: int = 50,
    seed: int = 0,
    max_samples: int | None = None,
    jobs: int = 1,
    r: float | None = None,
    budget: int | None = None,
) -> FlipReport:
    """Collect ``trials`` unique-solution instances by rejection sampling,
    flip each to kill its solution, and re-solve.

    ``union_bound_value`` is the residual bound at the real-valued calibrated
    point, where it equals (1-p)^-1/d^2; ``union_bound_integer_m`` evaluates the
    same bound at the rounded m actually sampled.
    """
    params = _flip_params(n, alpha, k, p, r)
    if params.k != 2:
        raise DomainError("flip experiments need k = 2")
    max_samples = max_samples or DEFAULT_SAMPLE_FACTOR * trials

    def task(i):
        return params.with_seed(derive_seed(seed, _FLIP_SU, i)), budget

    kept, drawn = _collect(_sat_to_unsat_trial, task, trials, max_samples, jobs, lambda o: True)
    found = [o for o in kept if o["flip_found"]]
    unsat_after = sum(not o["post_sat"] for o in found)
    sat_after = len(found) - unsat_after
    value, literal, integer_m = _bounds(n, alpha, k, p, params)
    return FlipReport(
        direction="sat_to_unsat",
        attempted=len(kept),
        flip_found=len(found),
        kill_confirmed=sum(o["kill_confirmed"] for o in found),
        unsat_after_flip=unsat_after,
        sat_after_flip=sat_after,
        residual_new_solution_rate=sat_after / len(found) if found else math.nan,
        union_bound_value=value,
        samples_drawn=drawn,
        exhausted=len(kept) < trials,
        union_bound_literal=literal,
        union_bound_integer_m=integer_m,
        params_preserved=sum(o["params_preserved"] for o in found),
        violated_conditions=violated_conditions(n, alpha, k, p),
        details=kept,
    )


def _unsat_to_sat_trial(task):
    params, budget = task
    inst = generate_original(params)
    if solver.solve(inst, solver.Mode.DECIDE, budget).sat:
        return None
    out = {"seed": params.seed, "flip_found": False, "near_miss_c0": False}
    for u in range(inst.m):
        near = solver.find_near_miss(inst, u, budget)
        if u == 0:
            out["near_miss_c0"] = near is not None
        if near is None:
            continue
        try:
            after, cert = flip_unsat_to_sat(inst, u, near)
        except NoFlipPairFound:
            continue
        witness_ok = solver.satisfies_all(after.constraints, near)
        out.update(
            flip_found=True,
            kill_confirmed=witness_ok and verify_certificate(inst, after, cert),
            post_sat=witness_ok and solver.solve(after, solver.Mode.DECIDE, budget).sat,
            params_preserved=_same_shape(inst, after),
            certificate=cert.to_dict(),
        )
        break
    return out


def flip_experiment_unsat_to_sat(
    n: int,
    alpha: float,
    k: int = 2,
    p: float = 0.5,
    trials: int = 50,
    seed: int = 0,
    max_samples: int | None = None,
    jobs: int = 1,
    r: float | None = None,
    budget: int | None = None,
) -> FlipReport:
    """Sample UNSAT instances until ``trials`` of them admit a near miss and a
    tuple pair on some constraint (scanned in index order), then flip.

    ``attempted`` counts every UNSAT instance examined; ``near_miss_rate_c0`` is
    the share of those where constraint 0 has a near miss, to set beside p/3.
    """
    params = _flip_params(n, alpha, k, p, r)
    if params.k != 2:
        raise DomainError("flip experiments need k = 2")
    max_samples = max_samples or DEFAULT_SAMPLE_FACTOR * trials

    def task(i):
        return params.with_seed(derive_seed(seed, _FLIP_US, i)), budget

    kept, drawn = _collect(_unsat_to_sat_trial, task, trials, max_samples, jobs, lambda o: o["flip_found"])
    found = [o for o in kept if o["flip_found"]]
    sat_after = sum(o["post_sat"] for o in found)
    value, literal, integer_m = _bounds(n, alpha, k, p, params)
    return FlipReport(
        direction="unsat_to_sat",
        attempted=len(kept),
        flip_found=len(found),
        kill_confirmed=sum(o["kill_confirmed"] for o in found),
        unsat_after_flip=len(found) - sat_after,
        sat_after_flip=sat_after,
        residual_new_solution_rate=math.nan,
        union_bound_value=value,
        samples_drawn=drawn,
        exhausted=len(found) < trials,
        union_bound_literal=literal,
        union_bound_integer_m=integer_m,
        near_miss_rate_c0=sum(o["near_miss_c0"] for o in kept) / len(kept) if kept else math.nan,
        params_preserved=sum(o["params_preserved"] for o in found),
        violated_conditions=violated_conditions(n, alpha, k, p),
        details=kept,
    )


# -- coverage -------------------------------------------------------------------


@dataclass(frozen=True)
class CoverageReport:
    n: int
    d: int
    m: int
    r: float
    instances: int
    samples_drawn: int
    fully_covered: int
    coverage_fraction: float
    mean_covered_variables: float
    isolated_variables: int
    union_bound: float
    bound_complement: float
    violated_conditions: list = field(default_factory=list)

    def csv_row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "violated_conditions"}

    def to_dict(self) -> dict:
        return asdict(self)


def _coverage_trial(task):
    params, budget = task
    inst = generate_original(params)
    if solver.solve(inst, solver.Mode.DECIDE, budget).sat:
        return None
    flags = solver.self_unsatisfiable(inst)
    covered, touched = set(), set()
    for c, hit in zip(inst.constraints, flags):
        touched.update(c.scope)
        if hit:
            covered.update(c.scope)
    return len(covered), inst.n - len(touched)


def coverage_experiment(
    n: int,
    alpha: float,
    k: int,
    p: float,
    trials: int,
    seed: int,
    r: float | None = None,
    max_samples: int | None = None,
    jobs: int = 1,
    budget: int | None = None,
) -> CoverageReport:
    """Share of UNSAT instances in which every variable lies in some
    self-unsatisfiable constraint, next to 1 - coverage_union_bound."""
    params = _flip_params(n, alpha, k, p, r)
    max_samples = max_samples or DEFAULT_SAMPLE_FACTOR * trials

    def task(i):
        return params.with_seed(derive_seed(seed, _COVERAGE, i)), budget

    kept, drawn = _collect(_coverage_trial, task, trials, max_samples, jobs, lambda o: True)
    full = sum(1 for covered, _ in kept if covered == n)
    bound = moments.coverage_union_bound(params)
    return CoverageReport(
        n=n, d=params.d, m=params.m, r=params.r,
        instances=len(kept),
        samples_drawn=drawn,
        fully_covered=full,
        coverage_fraction=full / len(kept) if kept else math.nan,
        mean_covered_variables=sum(c for c, _ in kept) / len(kept) if kept else math.nan,
        isolated_variables=sum(iso for _, iso in kept),
        union_bound=bound,
        bound_complement=1 - bound,
        violated_conditions=violated_conditions(n, alpha, k, p),
    )


# -- output ---------------------------------------------------------------------


def _rows(records) -> list[dict]:
    out = []
    for rec in records:
        out.append(rec.csv_row() if hasattr(rec, "csv_row") else asdict(rec))
    return out


def write_csv(records, sink) -> None:
    """One record per row, header first, columns in field order."""
    if not isinstance(records, (list, tuple)):
        records = [records]
    rows = _rows(records)
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    _emit(buf.getvalue(), sink)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def write_json(summary, sink) -> None:
    """Summary as JSON; non-finite floats become null."""
    if hasattr(summary, "to_dict"):
        summary = summary.to_dict()
    elif isinstance(summary, (list, tuple)):
        summary = [asdict(s) if hasattr(s, "__dataclass_fields__") else s for s in summary]
    _emit(json.dumps(_jsonable(summary), indent=2, sort_keys=False) + "\n", sink)


def _emit(text: str, sink) -> None:
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text)
    else:
        sink.write(text)

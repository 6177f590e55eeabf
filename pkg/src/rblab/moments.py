"""Closed-form moment quantities for Model RB and Monte Carlo estimators.

Every analytic function accepts either an :class:`~rblab.core.RBParams`
(integer d and m, as in a generated instance) or a :class:`ModelPoint`, which
allows real-valued d = n**alpha and m = r*n*ln(d) for identity checks.
Products of huge and tiny factors are formed in log space.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import RBParams, derive_seed, generate_original
from .errors import DomainError
from . import solver

SECOND_MOMENT_MAX_N = 200
EXACT_BINOM_MAX_N = 64


@dataclass(frozen=True)
class ModelPoint:
    """Parameters as plain numbers; d and m may be real."""

    n: int
    d: float
    k: int
    p: float
    m: float
    r: float

    @property
    def alpha(self) -> float:
        return math.log(self.d) / math.log(self.n)

    @classmethod
    def from_params(cls, params: RBParams) -> "ModelPoint":
        return cls(params.n, float(params.d), params.k, params.p, float(params.m), params.r)

    @classmethod
    def continuous(cls, n: int, alpha: float, k: int, p: float, r: float) -> "ModelPoint":
        d = n**alpha
        return cls(n, d, k, p, r * n * math.log(d), r)

    @classmethod
    def calibrated(cls, n: int, alpha: float, k: int, p: float) -> "ModelPoint":
        r, _ = calibrate_r(n, alpha, p)
        return cls.continuous(n, alpha, k, p, r)


def as_point(x) -> ModelPoint:
    if isinstance(x, ModelPoint):
        return x
    if isinstance(x, RBParams):
        return ModelPoint.from_params(x)
    raise TypeError(f"expected RBParams or ModelPoint, got {type(x).__name__}")


def _check_p(p):
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")


def r_critical(p: float) -> float:
    _check_p(p)
    return 1.0 / -math.log1p(-p)


def log_expected_solutions(x) -> float:
    pt = as_point(x)
    return pt.n * math.log(pt.d) + pt.m * math.log1p(-pt.p)


def expected_solutions(x) -> float:
    """E[X] = d^n (1-p)^m."""
    return math.exp(log_expected_solutions(x))


def sat_upper_bound(x) -> float:
    """Markov: Pr[SAT] <= min(1, E[X])."""
    return min(1.0, expected_solutions(x))


def calibrate_r(n: int, alpha: float, p: float) -> tuple[float, float]:
    """Density r = r_cr + eps putting d^n (1-p)^m at 1/2 for d = n**alpha and
    real m = r n ln d. Returns ``(r, eps)``."""
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise DomainError(f"n must be an integer >= 3, got {n!r}")
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    _check_p(p)
    eps = math.log(0.5) / (alpha * n * math.log(n) * math.log1p(-p))
    return r_critical(p) + eps, eps


def log_binom(n: int, s: int) -> float:
    if s < 0 or s > n:
        return -math.inf
    if n <= EXACT_BINOM_MAX_N:
        return math.log(math.comb(n, s))
    return float(gammaln(n + 1) - gammaln(s + 1) - gammaln(n - s + 1))


def binom_ratio(S: int, n: int, k: int) -> tuple[float, float]:
    """``(C(S,k)/C(n,k), (S/n)**k)``: the probability that a random k-scope
    lies inside a fixed S-set, and its large-n approximation."""
    if not 0 <= S <= n or not 0 <= k <= n:
        raise DomainError(f"need 0 <= S <= n and k <= n, got S={S}, n={n}, k={k}")
    if S < k:
        exact = 0.0
    elif n <= EXACT_BINOM_MAX_N:
        exact = math.comb(S, k) / math.comb(n, k)
    else:
        exact = math.exp(log_binom(S, k) - log_binom(n, k))
    return exact, (S / n) ** k


def _overlap_probs(pt: ModelPoint) -> np.ndarray:
    return np.array([binom_ratio(S, pt.n, pt.k)[0] for S in range(pt.n + 1)])


def pair_probability(x, tuple_sampling: str = "without_replacement") -> float:
    """Probability that two *different* tuples are both permitted.

    ``without_replacement`` matches the generator (t distinct tuples out of
    d^k); ``independent`` is (1-p)^2, the value for independently included
    tuples, which the without-replacement value approaches as d^k grows.
    """
    pt = as_point(x)
    if tuple_sampling == "independent":
        return (1 - pt.p) ** 2
    if tuple_sampling == "without_replacement":
        total = pt.d**pt.k
        t = (1 - pt.p) * total
        return (t / total) * (t - 1) / (total - 1)
    raise DomainError(f"unknown tuple_sampling {tuple_sampling!r}")


def second_moment_log_terms(x, tuple_sampling: str = "without_replacement") -> np.ndarray:
    """log of the S-th summand of E[X^2], S = 0..n (S = number of variables
    on which an ordered pair of assignments agrees)."""
    pt = as_point(x)
    if pt.n > SECOND_MOMENT_MAX_N:
        raise DomainError(f"second moment summation limited to n <= {SECOND_MOMENT_MAX_N}")
    q = _overlap_probs(pt)
    both = q * (1 - pt.p) + (1 - q) * pair_probability(pt, tuple_sampling)
    S = np.arange(pt.n + 1)
    log_pairs = pt.n * math.log(pt.d) + np.array([log_binom(pt.n, s) for s in S])
    log_pairs = log_pairs + (pt.n - S) * math.log(pt.d - 1)
    return log_pairs + pt.m * np.log(both)


def second_moment_exact(x, tuple_sampling: str = "without_replacement") -> float:
    """E[X^2] by the full overlap summation.

    With the default sampling model this is exact for instances produced by
    :func:`~rblab.core.generate_original` whenever (1-p) d^k is an integer.
    """
    return float(np.exp(logsumexp(second_moment_log_terms(x, tuple_sampling))))


def f_terms(x) -> np.ndarray:
    """F(S) for S = 0..n, using s^k for the overlap probability:

    F(S) = C(n,S) (1-1/d)^(n-S) (1/d)^S [1 + p/(1-p) s^k]^m
    """
    pt = as_point(x)
    S = np.arange(pt.n + 1)
    s = S / pt.n
    log_f = (
        np.array([log_binom(pt.n, int(v)) for v in S])
        + (pt.n - S) * math.log1p(-1 / pt.d)
        - S * math.log(pt.d)
        + pt.m * np.log1p(pt.p / (1 - pt.p) * s**pt.k)
    )
    return np.exp(log_f)


def second_moment_factored(x) -> float:
    """E[X]^2 * sum F(S), dropping the (1 + O(1/n)) factor."""
    return expected_solutions(x) ** 2 * float(f_terms(x).sum())


def sat_lower_bound_asymptotic() -> float:
    """Limit of E[X]^2 / E[X^2] under E[X] = 1/2 when only F(0) -> 1 and
    F(n) -> 2 survive: 1/(1+2)."""
    return 1.0 / 3.0


def sat_lower_bound_finite(x, tuple_sampling: str = "without_replacement") -> float:
    """Cauchy-Schwarz bound E[X]^2 / E[X^2] at finite size."""
    log_ratio = 2 * log_expected_solutions(x) - logsumexp(second_moment_log_terms(x, tuple_sampling))
    return math.exp(log_ratio)


def unique_solution_lower_bound_asymptotic() -> float:
    """From Pr[SAT] >= 1/3 and Pr[X>=2] <= 1/2 - Pr[X=1]: Pr[X=1] >= 1/6."""
    return 1.0 / 6.0


def expected_near_miss(x) -> float:
    """E[N] = d^n (1-p)^(m-1) p for a fixed constraint."""
    pt = as_point(x)
    if pt.m < 1:
        raise DomainError("need at least one constraint")
    return math.exp(pt.n * math.log(pt.d) + (pt.m - 1) * math.log1p(-pt.p) + math.log(pt.p))


def near_miss_second_moment_ratio(x) -> float:
    """sum_S [p q + p^2 (1-q)] / [(1-p) q + (1-p)^2 (1-q)], q = C(S,k)/C(n,k)."""
    pt = as_point(x)
    q = _overlap_probs(pt)
    p = pt.p
    num = p * q + p**2 * (1 - q)
    den = (1 - p) * q + (1 - p) ** 2 * (1 - q)
    return float((num / den).sum())


def near_miss_lower_bound_asymptotic(p: float) -> float:
    _check_p(p)
    return p / 3.0


def degree_tail_bound(x, delta: float = 0.5) -> tuple[float, float]:
    """Chernoff lower tail for the degree of a fixed variable.

    Mean degree is r k ln d; returns ``((1-delta) r k ln d, exp(-delta^2/2 r k ln d))``.
    """
    pt = as_point(x)
    if not 0 <= delta < 1:
        raise DomainError(f"delta must lie in [0, 1), got {delta!r}")
    mean = pt.r * pt.k * math.log(pt.d)
    return (1 - delta) * mean, math.exp(-0.5 * delta**2 * mean)


def coverage_union_bound(x) -> float:
    """n (1 - p/3)^(r k ln d / 2): bound on Pr[some variable lies in no
    self-unsatisfiable constraint]."""
    pt = as_point(x)
    return pt.n * math.exp(0.5 * pt.r * pt.k * math.log(pt.d) * math.log1p(-pt.p / 3))


def coverage_exponent(alpha: float, r: float, k: int, p: float) -> float:
    """E with coverage_union_bound == n**E when d = n**alpha."""
    return 1 + 0.5 * alpha * r * k * math.log1p(-p / 3)


def flip_residual_bound(x) -> float:
    """Union bound on a flip creating a new solution: two added tuples, d^(n-2)
    completions each, m-1 untouched constraints. Equals (1-p)^-1/d^2 when
    E[X] = 1/2."""
    pt = as_point(x)
    return 2 * math.exp((pt.n - 2) * math.log(pt.d) + (pt.m - 1) * math.log1p(-pt.p))


@dataclass(frozen=True)
class MomentReport:
    n: int
    d: float
    k: int
    p: float
    m: float
    r: float
    r_cr: float
    e_x: float
    e_x2: float
    e_x2_independent: float
    e_x2_factored: float
    f_terms: list
    e_n: float
    near_miss_ratio: float
    sat_upper_bound: float
    sat_lower_bound_finite: float
    sat_lower_bound_asymptotic: float
    unique_lower_bound_asymptotic: float
    near_miss_lower_bound_asymptotic: float
    degree_threshold: float
    degree_tail_bound: float
    coverage_union_bound: float
    flip_residual_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def moment_report(x) -> MomentReport:
    pt = as_point(x)
    small = pt.n <= SECOND_MOMENT_MAX_N
    nan = float("nan")
    threshold, tail = degree_tail_bound(pt)
    return MomentReport(
        n=pt.n, d=pt.d, k=pt.k, p=pt.p, m=pt.m, r=pt.r,
        r_cr=r_critical(pt.p),
        e_x=expected_solutions(pt),
        e_x2=second_moment_exact(pt) if small else nan,
        e_x2_independent=second_moment_exact(pt, "independent") if small else nan,
        e_x2_factored=second_moment_factored(pt),
        f_terms=f_terms(pt).tolist(),
        e_n=expected_near_miss(pt),
        near_miss_ratio=near_miss_second_moment_ratio(pt),
        sat_upper_bound=sat_upper_bound(pt),
        sat_lower_bound_finite=sat_lower_bound_finite(pt) if small else nan,
        sat_lower_bound_asymptotic=sat_lower_bound_asymptotic(),
        unique_lower_bound_asymptotic=unique_solution_lower_bound_asymptotic(),
        near_miss_lower_bound_asymptotic=near_miss_lower_bound_asymptotic(pt.p),
        degree_threshold=threshold,
        degree_tail_bound=tail,
        coverage_union_bound=coverage_union_bound(pt),
        flip_residual_bound=flip_residual_bound(pt),
    )


# -- Monte Carlo --------------------------------------------------------------


@dataclass(frozen=True)
class McEstimate:
    mean: float
    standard_error: float
    trials: int
    seed: int

    @classmethod
    def from_samples(cls, samples, seed: int) -> "McEstimate":
        a = np.asarray(samples, dtype=float)
        if a.size < 2:
            raise DomainError("need at least two trials")
        return cls(float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size)), int(a.size), seed)

    def z_score(self, value: float) -> float:
        if self.standard_error == 0:
            return 0.0 if self.mean == value else math.inf
        return (self.mean - value) / self.standard_error


def sample_solution_counts(params: RBParams, trials: int, seed: int) -> np.ndarray:
    """Exact solution counts of ``trials`` independent Original instances;
    trial i uses instance seed ``derive_seed(seed, i)``."""
    return np.array(
        [solver.count_solutions(generate_original(params.with_seed(derive_seed(seed, i)))) for i in range(trials)],
        dtype=np.int64,
    )


def mc_solution_moments(params: RBParams, trials: int, seed: int) -> tuple[McEstimate, McEstimate]:
    """Monte Carlo estimates of (E[X], E[X^2])."""
    xs = sample_solution_counts(params, trials, seed).astype(float)
    return McEstimate.from_samples(xs, seed), McEstimate.from_samples(xs**2, seed)


def mc_near_miss(params: RBParams, trials: int, seed: int, u: int = 0) -> McEstimate:
    """Monte Carlo estimate of E[N] for constraint ``u`` (brute force, small n)."""
    counts = [
        solver.count_near_misses_oracle(generate_original(params.with_seed(derive_seed(seed, i))), u)
        for i in range(trials)
    ]
    return McEstimate.from_samples(counts, seed)

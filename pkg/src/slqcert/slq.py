"""End-to-end stochastic Lanczos quadrature: sphere sampling, per-sample
tridiagonalization and quadrature, averaging, a priori planning,
concentration tails, probabilistic CESM bracketing, and the added-node
variant for spectra with heavy clusters.

Randomness comes from counter-based Philox streams: sample i always draws
from ``Philox(key=seed).jumped(i)``, so serial and thread-parallel runs
produce bitwise-identical reports and any sample can be regenerated in
isolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .distribution import StepDistribution, average
from .lanczos import LanczosOptions, TridiagonalMatrix, lanczos
from .operators import SymmetricOperator, spectral_interval
from .quadrature import (
    QuadratureRule,
    apost_ks_bound,
    apost_wasserstein_bound,
    envelopes,
    gaussian_quadrature,
)

__all__ = [
    "SlqPlan",
    "SlqReport",
    "BetaLaw",
    "sample_unit_sphere",
    "plan",
    "run",
    "run_with_added_node",
    "pointwise_tail",
    "ks_tail",
    "tail_accuracy",
    "beta_law",
    "bracket_cesm",
]


@dataclass(frozen=True)
class SlqPlan:
    """Run parameters: number of samples, Lanczos steps, and (when the run
    was planned from an accuracy target) the target t and failure
    probability eta."""

    n_v: int
    k: int
    t: Optional[float] = None
    eta: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_v < 1:
            raise ValueError("n_v must be at least 1")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.t is not None and not self.t > 0:
            raise ValueError("t must be positive")
        if self.eta is not None and not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")

    def to_json_dict(self) -> dict:
        return {
            "n_v": self.n_v,
            "k": self.k,
            "t": self.t,
            "eta": self.eta,
            "seed": self.seed,
        }


def plan(n: int, t: float, eta: float, seed: int = 0) -> SlqPlan:
    """Choose (n_v, k) so the averaged quadrature output lands within
    Wasserstein distance t * (spectral width) with probability >= 1 - eta.

    The sufficient conditions are strict inequalities
    n_v > 4 ln(2 n / eta) / ((n + 2) t^2) and k > 12 / t + 1/2, realized
    as floor(bound) + 1.  k is capped at n, where the recurrence recovers
    the sampled CDF exactly and the quadrature error vanishes.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not t > 0:
        raise ValueError("t must be positive")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    nv_bound = 4.0 * math.log(2.0 * n / eta) / ((n + 2) * t * t)
    k_bound = 12.0 / t + 0.5
    n_v = int(math.floor(nv_bound)) + 1
    k = min(int(math.floor(k_bound)) + 1, n)
    return SlqPlan(n_v=n_v, k=max(k, 1), t=t, eta=eta, seed=seed)


def sample_unit_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere: normalized standard normals
    (redrawn on the measure-zero all-zeros event)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    while True:
        x = rng.standard_normal(n)
        norm = np.linalg.norm(x)
        if norm > 0:
            return x / norm


def pointwise_tail(n: int, n_v: int, t: float) -> float:
    """Failure probability bound for the averaged sampled CDF at a single
    point: min(1, 2 exp(-n_v (n+2) t^2))."""
    return min(1.0, 2.0 * math.exp(-n_v * (n + 2) * t * t))


def ks_tail(n: int, n_v: int, t: float) -> float:
    """Uniform (KS) failure probability bound: the pointwise tail union-
    bounded over the n spectral breakpoints."""
    return min(1.0, 2.0 * n * math.exp(-n_v * (n + 2) * t * t))


def tail_accuracy(n: int, n_v: int, eta: float, uniform: bool = False) -> float:
    """Smallest t whose (clamped) tail bound is at most eta.

    Inverts ``pointwise_tail`` (or ``ks_tail`` with uniform=True).  At
    eta >= 1 the requirement is vacuous and t = 0.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    factor = 2.0 * n if uniform else 2.0
    arg = factor / eta
    if arg <= 1.0:
        return 0.0
    return math.sqrt(math.log(arg) / (n_v * (n + 2)))


@dataclass(frozen=True)
class BetaLaw:
    """Distribution of the sampled CDF's value at a fixed point when m of
    the n eigenvalues lie at or below it: Beta(m/2, (n-m)/2), which is
    sub-Gaussian with variance proxy 1/(2n+4).  The endpoints m = 0 and
    m = n degenerate to point masses at 0 and 1."""

    alpha: float
    beta: float
    sub_gaussian_sigma2: float
    point_mass: Optional[float] = None


def beta_law(n: int, m: int) -> BetaLaw:
    if not 0 <= m <= n or n < 1:
        raise ValueError(f"need 0 <= m <= n with n >= 1, got m={m}, n={n}")
    sigma2 = 1.0 / (2.0 * n + 4.0)
    if m == 0:
        return BetaLaw(0.0, n / 2.0, sigma2, point_mass=0.0)
    if m == n:
        return BetaLaw(n / 2.0, 0.0, sigma2, point_mass=1.0)
    return BetaLaw(m / 2.0, (n - m) / 2.0, sigma2)


@dataclass(frozen=True)
class SlqReport:
    """Complete record of one run: averaged estimate, per-sample rules and
    tridiagonals, the spectral interval used for bound padding, and all
    bound values.  Bitwise reproducible from the plan's seed."""

    plan: SlqPlan
    n: int
    interval: tuple
    estimate: StepDistribution
    rules: tuple
    tridiagonals: tuple
    completed_steps: tuple
    apost_ks: float
    apost_wasserstein: float
    apriori_wasserstein: Optional[float] = None
    added_node: Optional[tuple] = None

    @property
    def seed(self) -> int:
        return self.plan.seed

    @property
    def interval_width(self) -> float:
        return self.interval[1] - self.interval[0]

    def with_interval(self, a: float, b: float) -> "SlqReport":
        """Same run, re-padded on [a, b]: the interval-dependent bounds are
        recomputed (and re-validated against the quadrature nodes)."""
        apost_w = apost_wasserstein_bound(self.rules, a, b)
        apriori = self.plan.t * (b - a) if self.plan.t is not None else None
        return replace(
            self,
            interval=(float(a), float(b)),
            apost_wasserstein=apost_w,
            apriori_wasserstein=apriori,
        )

    def to_json_dict(self) -> dict:
        return {
            "plan": self.plan.to_json_dict(),
            "seed": self.plan.seed,
            "n": self.n,
            "interval": [self.interval[0], self.interval[1]],
            "interval_width": self.interval_width,
            "apriori_wasserstein": self.apriori_wasserstein,
            "apost_ks": self.apost_ks,
            "apost_wasserstein": self.apost_wasserstein,
            "completed_steps": list(self.completed_steps),
            "added_node": (
                None
                if self.added_node is None
                else {"y": self.added_node[0], "z": self.added_node[1]}
            ),
            "samples": [
                {
                    "alphas": T.alpha.tolist(),
                    "betas": T.beta.tolist(),
                    "nodes": rule.nodes.tolist(),
                    "weights": rule.weights.tolist(),
                }
                for T, rule in zip(self.tridiagonals, self.rules)
            ],
            "estimate": self.estimate.to_json_dict(),
        }


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(index))


def _run_samples(op, plan_, make_vector, reorthogonalize, breakdown_tolerance, max_workers):
    opts = LanczosOptions(
        k=plan_.k,
        reorthogonalize=reorthogonalize,
        breakdown_tolerance=breakdown_tolerance,
    )

    def one(index):
        v = make_vector(_sample_rng(plan_.seed, index))
        T, completed = lanczos(op, v, opts)
        return T, completed, gaussian_quadrature(T)

    if max_workers is not None and max_workers > 1 and plan_.n_v > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(one, range(plan_.n_v)))
    else:
        results = [one(i) for i in range(plan_.n_v)]
    tridiagonals = tuple(r[0] for r in results)
    completed = tuple(r[1] for r in results)
    rules = tuple(r[2] for r in results)
    return tridiagonals, completed, rules


def _resolve_interval(op, rules, endpoints):
    node_lo = min(rule.nodes[0] for rule in rules)
    node_hi = max(rule.nodes[-1] for rule in rules)
    if endpoints is not None:
        return float(endpoints[0]), float(endpoints[1])
    lo, hi, _ = spectral_interval(op)
    # Ritz estimates approach the spectrum from inside; the observed nodes
    # are Ritz values too, so take the union to keep the padding valid
    return min(lo, node_lo), max(hi, node_hi)


def _assemble(plan_, n, op, rules, tridiagonals, completed, endpoints, added_node=None):
    a, b = _resolve_interval(op, rules, endpoints)
    estimate = average([rule.to_distribution() for rule in rules])
    apost_ks = apost_ks_bound(rules)
    apost_w = apost_wasserstein_bound(rules, a, b)
    apriori = plan_.t * (b - a) if plan_.t is not None else None
    return SlqReport(
        plan=plan_,
        n=n,
        interval=(a, b),
        estimate=estimate,
        rules=rules,
        tridiagonals=tridiagonals,
        completed_steps=completed,
        apost_ks=apost_ks,
        apost_wasserstein=apost_w,
        apriori_wasserstein=apriori,
        added_node=added_node,
    )


def run(
    op: SymmetricOperator,
    plan_: SlqPlan,
    *,
    reorthogonalize: bool = True,
    endpoints=None,
    breakdown_tolerance: float = 1e-12,
    max_workers: Optional[int] = None,
) -> SlqReport:
    """Run SLQ: n_v independent sphere samples, each tridiagonalized for k
    steps and turned into a quadrature rule; rules are averaged and the a
    posteriori bounds evaluated on the spectral interval (estimated via a
    dedicated Ritz run unless ``endpoints`` is supplied).

    Samples are independent and may execute concurrently (``max_workers``);
    aggregation is in sample-index order, so results do not depend on
    scheduling.
    """
    if plan_.k > op.n:
        raise ValueError(f"plan.k={plan_.k} exceeds operator dimension {op.n}")
    tridiagonals, completed, rules = _run_samples(
        op, plan_, lambda rng: sample_unit_sphere(op.n, rng),
        reorthogonalize, breakdown_tolerance, max_workers,
    )
    return _assemble(plan_, op.n, op, rules, tridiagonals, completed, endpoints)


class _AugmentedOperator(SymmetricOperator):
    """diag(A, y): the wrapped operator with one extra eigenvalue at y."""

    def __init__(self, op, y):
        self._op = op
        self._y = float(y)

    @property
    def n(self):
        return self._op.n + 1

    def _matvec(self, v):
        out = np.empty(self.n)
        out[:-1] = self._op.apply(v[:-1])
        out[-1] = self._y * v[-1]
        return out


def run_with_added_node(
    op: SymmetricOperator,
    plan_: SlqPlan,
    y: float,
    z: float,
    a: Optional[float] = None,
    b: Optional[float] = None,
    *,
    reorthogonalize: bool = True,
    breakdown_tolerance: float = 1e-12,
    max_workers: Optional[int] = None,
) -> SlqReport:
    """SLQ on the augmented operator diag(A, y) probed with vectors
    (sqrt(1-z^2) * v, z), which plants a quadrature node of weight about
    z^2 near y while keeping the probes unit norm.

    The returned report's estimate and bounds describe the augmented
    problem; ``bracket_cesm`` removes the planted mass (subtracting
    z^2 * 1[y <= x]) when bracketing the original spectrum.  Larger z
    places the node sooner but costs bound quality.
    """
    if not 0 < z < 1:
        raise ValueError("z must lie strictly between 0 and 1")
    if plan_.k > op.n + 1:
        raise ValueError(f"plan.k={plan_.k} exceeds augmented dimension {op.n + 1}")
    scale = math.sqrt(1.0 - z * z)

    def make_vector(rng):
        v = sample_unit_sphere(op.n, rng)
        return np.concatenate((scale * v, [z]))

    aug = _AugmentedOperator(op, y)
    tridiagonals, completed, rules = _run_samples(
        aug, plan_, make_vector, reorthogonalize, breakdown_tolerance, max_workers
    )
    endpoints = None
    if a is not None or b is not None:
        if a is None or b is None:
            raise ValueError("supply both endpoints or neither")
        endpoints = (min(a, y), max(b, y))
    else:
        lo, hi, _ = spectral_interval(op)
        node_lo = min(rule.nodes[0] for rule in rules)
        node_hi = max(rule.nodes[-1] for rule in rules)
        endpoints = (min(lo, y, node_lo), max(hi, y, node_hi))
    return _assemble(
        plan_, op.n, aug, rules, tridiagonals, completed, endpoints, added_node=(y, z)
    )


def bracket_cesm(report: SlqReport, eta: float, uniform: bool = False):
    """Probabilistic bracket for the true spectral CDF.

    Returns a function x -> (lower, upper) built from the averaged
    envelope pair widened by the accuracy t at which the concentration
    tail equals eta; each x individually holds with probability >= 1 - eta
    (pointwise).  With uniform=True the KS tail is inverted instead and
    the bracket holds uniformly over x.  For added-node reports the
    planted mass z^2 * 1[y <= x] is subtracted from both envelopes.
    """
    a, b = report.interval
    pairs = [envelopes(rule, a, b) for rule in report.rules]
    avg_lower = average([p.lower for p in pairs])
    avg_upper = average([p.upper for p in pairs])
    t = tail_accuracy(report.n, report.plan.n_v, eta, uniform=uniform)
    added = report.added_node

    def bracket(x):
        lo = avg_lower.evaluate(x)
        hi = avg_upper.evaluate(x)
        if added is not None:
            y, z = added
            corr = z * z * (np.asarray(x) >= y)
            lo = lo - corr
            hi = hi - corr
        lo = np.clip(lo - t, 0.0, 1.0)
        hi = np.clip(hi + t, 0.0, 1.0)
        if np.isscalar(x):
            return float(lo), float(hi)
        return lo, hi

    return bracket

"""Synthetic spectrum generators and the matching lower-bound machinery.

Hard instances are diagonal operators: matvecs cost O(n) and the exact
spectral CDF is free, which is all the adversarial arguments need.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distribution import StepDistribution, exact_cesm, wasserstein
from .operators import DiagonalOperator
from .slq import SlqPlan, run

__all__ = [
    "SpectrumSpec",
    "parse_spectrum_spec",
    "generate",
    "uniform_hard_instance",
    "min_wasserstein_to_uniform",
    "wasserstein_to_uniform",
    "check_min_wasserstein",
    "verify_lower_bound",
]


@dataclass(frozen=True)
class SpectrumSpec:
    """Recipe for a synthetic spectrum.

    kinds:
      uniform      n evenly spaced eigenvalues on [a, b], endpoints inclusive
      clustered    per-cluster (center, width, count); width 0 repeats exactly
      isolated-top n-1 uniform random on [a, b] plus one at ``top``
      custom       explicit eigenvalue list
    """

    kind: str
    n: int = 0
    interval: tuple = (0.0, 1.0)
    centers: Sequence[float] = field(default_factory=tuple)
    widths: Sequence[float] = field(default_factory=tuple)
    counts: Sequence[int] = field(default_factory=tuple)
    top: Optional[float] = None
    values: Sequence[float] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("uniform", "clustered", "isolated-top", "custom"):
            raise ValueError(f"unknown spectrum kind '{self.kind}'")
        if self.kind in ("uniform", "isolated-top") and self.n < 1:
            raise ValueError("n must be at least 1")
        if self.kind == "isolated-top" and self.top is None:
            raise ValueError("isolated-top needs a top eigenvalue")
        if self.kind == "clustered":
            if not (len(self.centers) == len(self.widths) == len(self.counts)):
                raise ValueError("centers, widths, counts must have equal length")
            if len(self.centers) == 0:
                raise ValueError("clustered needs at least one cluster")
            if any(c < 1 for c in self.counts):
                raise ValueError("cluster counts must be positive")
        if self.kind == "custom" and len(self.values) == 0:
            raise ValueError("custom needs explicit eigenvalues")
        a, b = self.interval
        if self.kind in ("uniform", "isolated-top") and not a <= b:
            raise ValueError(f"interval [{a}, {b}] is empty")


def parse_spectrum_spec(text: str) -> SpectrumSpec:
    """Parse a shorthand string or a JSON object.

    shorthand:
      uniform:N:a:b
      clustered:c,w,n[;c,w,n...]
      isolated-top:N:a:b:top
      custom:v1,v2,...
    """
    text = text.strip()
    if text.startswith("{"):
        obj = json.loads(text)
        obj = dict(obj)
        if "interval" in obj:
            obj["interval"] = tuple(obj["interval"])
        return SpectrumSpec(**obj)
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    try:
        if kind == "uniform":
            n, a, b = rest.split(":")
            return SpectrumSpec(kind="uniform", n=int(n), interval=(float(a), float(b)))
        if kind == "clustered":
            centers, widths, counts = [], [], []
            for part in rest.split(";"):
                c, w, cnt = part.split(",")
                centers.append(float(c))
                widths.append(float(w))
                counts.append(int(cnt))
            return SpectrumSpec(
                kind="clustered",
                n=sum(counts),
                centers=tuple(centers),
                widths=tuple(widths),
                counts=tuple(counts),
            )
        if kind == "isolated-top":
            n, a, b, top = rest.split(":")
            return SpectrumSpec(
                kind="isolated-top", n=int(n), interval=(float(a), float(b)), top=float(top)
            )
        if kind == "custom":
            vals = tuple(float(v) for v in rest.split(","))
            return SpectrumSpec(kind="custom", n=len(vals), values=vals)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ValueError) and "spectrum" in str(exc):
            raise
        raise ValueError(f"malformed spectrum spec '{text}'") from exc
    raise ValueError(f"unknown spectrum kind '{kind}'")


def generate(spec: SpectrumSpec, rng: Optional[np.random.Generator] = None) -> DiagonalOperator:
    """Materialize the spectrum as a diagonal operator (exact CESM known).

    Deterministic given the generator state; kinds without randomness
    ignore ``rng``.
    """
    a, b = spec.interval
    if spec.kind == "uniform":
        return DiagonalOperator(np.linspace(a, b, spec.n))
    if spec.kind == "custom":
        return DiagonalOperator(np.asarray(spec.values, dtype=np.float64))
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=0))
    if spec.kind == "clustered":
        parts = []
        for c, w, cnt in zip(spec.centers, spec.widths, spec.counts):
            if w == 0:
                parts.append(np.full(cnt, float(c)))
            else:
                parts.append(c + w * (rng.random(cnt) - 0.5))
        return DiagonalOperator(np.concatenate(parts))
    # isolated-top
    bulk = a + (b - a) * rng.random(spec.n - 1) if spec.n > 1 else np.empty(0)
    return DiagonalOperator(np.concatenate((bulk, [spec.top])))


def uniform_hard_instance(t: float) -> DiagonalOperator:
    """Adversarial spectrum for accuracy target t: n = ceil(1/(4t))
    eigenvalues 1/(2n) + j/n, j = 0..n-1, evenly filling [0, 1] so the
    CESM is within 1/(4n) of the uniform CDF."""
    if not 0 < t < 1:
        raise ValueError("t must lie strictly between 0 and 1")
    n = math.ceil(1.0 / (4.0 * t))
    j = np.arange(n)
    return DiagonalOperator(1.0 / (2.0 * n) + j / n)


def min_wasserstein_to_uniform(K: int) -> float:
    """Proved lower bound 1/(4K) on the Wasserstein distance between the
    uniform CDF on [0, 1] and any step CDF with K jumps."""
    if K < 1:
        raise ValueError("K must be at least 1")
    return 1.0 / (4.0 * K)


def wasserstein_to_uniform(f: StepDistribution) -> float:
    """Exact Wasserstein distance between a probability step CDF supported
    in [0, 1] and the uniform CDF on [0, 1]."""
    lo, hi = f.support()
    if lo < 0.0 or hi > 1.0:
        raise ValueError("distribution must be supported in [0, 1]")
    if not f.is_probability:
        raise ValueError("need a probability distribution")
    xs = np.unique(np.concatenate(([0.0], f.locations, [1.0])))
    total = 0.0
    for u, v in zip(xs[:-1], xs[1:]):
        c = f.evaluate(u)  # constant value of f on [u, v)
        if c <= u:
            total += ((v - c) ** 2 - (u - c) ** 2) / 2.0
        elif c >= v:
            total += ((c - u) ** 2 - (c - v) ** 2) / 2.0
        else:
            total += ((c - u) ** 2 + (v - c) ** 2) / 2.0
    return float(total)


def check_min_wasserstein(f: StepDistribution):
    """Measure d_W(f, uniform CDF) and compare against the 1/(4K) lower
    bound for f's jump count.  Returns (measured, bound, satisfied)."""
    measured = wasserstein_to_uniform(f)
    bound = min_wasserstein_to_uniform(f.locations.size)
    return measured, bound, measured >= bound


def verify_lower_bound(t: float, n_v: int, k: int, seed: int = 0):
    """Run SLQ on the hard instance for target t with a matvec budget
    n_v * k below 1/(8t) and measure the Wasserstein error against the
    exact CESM; the error exceeds t surely.

    Returns (measured, threshold=t, violated).  Raises if the budget
    does not satisfy the precondition n_v * k < 1/(8t).
    """
    if n_v < 1 or k < 1:
        raise ValueError("n_v and k must be at least 1")
    budget = n_v * k
    limit = 1.0 / (8.0 * t)
    if not budget < limit:
        raise ValueError(
            f"matvec budget n_v*k = {budget} is not below 1/(8t) = {limit}; "
            "the lower-bound statement does not apply"
        )
    op = uniform_hard_instance(t)
    if k > op.n:
        raise ValueError(f"k={k} exceeds the hard instance dimension {op.n}")
    report = run(op, SlqPlan(n_v=n_v, k=k, seed=seed))
    measured = wasserstein(exact_cesm(op.eigenvalues), report.estimate)
    return measured, t, measured <= t

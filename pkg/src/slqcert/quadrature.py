"""Gaussian quadrature rules from Lanczos tridiagonals, envelope
distributions, and a posteriori distance bounds.

The k-step tridiagonal T of the recurrence started at v yields the
degree-k Gaussian quadrature rule of the weighted spectral CDF: nodes
are the eigenvalues of T, weights the squared first eigenvector
components.  The rule matches the source's moments through degree 2k-1,
which pins any distribution sharing those moments between two
node-shifted envelopes; the envelope gaps give computable, sure upper
bounds on Kolmogorov-Smirnov and Wasserstein error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distribution import StepDistribution
from .lanczos import TridiagonalMatrix
from .tridiag import eig_first_row

__all__ = [
    "QuadratureRule",
    "EnvelopePair",
    "gaussian_quadrature",
    "envelopes",
    "apost_ks_bound",
    "apost_wasserstein_bound",
    "stagnation_level",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes (ascending) and nonnegative weights summing to 1."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.atleast_1d(np.asarray(self.nodes, dtype=np.float64))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        if nodes.shape != weights.shape or nodes.ndim != 1 or nodes.size < 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal, positive length")
        # roundoff can deliver unsorted nodes; sort carrying weights
        order = np.argsort(nodes, kind="stable")
        nodes = nodes[order]
        weights = weights[order]
        if weights.min() < 0:
            raise ValueError(f"negative quadrature weight {weights.min()}")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def k(self) -> int:
        return self.nodes.size

    @property
    def max_weight(self) -> float:
        return float(self.weights.max())

    def to_distribution(self) -> StepDistribution:
        return StepDistribution(self.nodes, self.weights)


@dataclass(frozen=True)
class EnvelopePair:
    """Step CDFs with lower(x) <= mu(x) <= upper(x) on the spectral
    interval, for every mu sharing the rule's moments through 2k-1."""

    lower: StepDistribution
    upper: StepDistribution


def gaussian_quadrature(T: TridiagonalMatrix) -> QuadratureRule:
    """Degree-k Gaussian quadrature rule encoded by the tridiagonal T."""
    eig = eig_first_row(T)
    return QuadratureRule(eig.theta, eig.d)


def envelopes(rule: QuadratureRule, a: float, b: float) -> EnvelopePair:
    """Shift-by-one-node sandwich around any CDF matching the rule's moments.

    The lower envelope moves each weight one node up (the trailing weight
    conceptually to +infinity, realized at the interval endpoint b); the
    upper envelope moves each weight one node down (the leading weight
    conceptually to -infinity, realized at a).  Valid for x in [a, b]
    whenever a and b enclose the source distribution's support.
    """
    th = rule.nodes
    d = rule.weights
    if a > th[0] or b < th[-1]:
        raise ValueError(
            f"interval [{a}, {b}] does not enclose the quadrature nodes "
            f"[{th[0]}, {th[-1]}]"
        )
    lower = StepDistribution(np.append(th[1:], b), d)
    upper = StepDistribution(np.append(a, th[:-1]), d)
    return EnvelopePair(lower=lower, upper=upper)


def _check_endpoints(rules, a, b):
    for rule in rules:
        if a > rule.nodes[0] or b < rule.nodes[-1]:
            raise ValueError(
                f"endpoints [{a}, {b}] do not enclose the nodes of every rule; "
                "the bound would be invalid"
            )


def apost_ks_bound(rules) -> float:
    """Mean over samples of the largest quadrature weight: a sure upper
    bound on the KS distance between the averaged source CDFs and the
    averaged rules."""
    rules = list(rules)
    if not rules:
        raise ValueError("need at least one quadrature rule")
    return float(np.mean([r.max_weight for r in rules]))


def apost_wasserstein_bound(rules, a: float, b: float) -> float:
    """Mean over samples of sum_j max(d_j, d_{j+1}) * (theta_{j+1} - theta_j)
    with the node list padded by theta_0 = a, theta_{k+1} = b and zero
    weights at both ends: a sure upper bound on the Wasserstein distance
    between the averaged source CDFs and the averaged rules, provided
    [a, b] encloses the spectrum."""
    rules = list(rules)
    if not rules:
        raise ValueError("need at least one quadrature rule")
    _check_endpoints(rules, a, b)
    totals = []
    for rule in rules:
        th = np.concatenate(([a], rule.nodes, [b]))
        d = np.concatenate(([0.0], rule.weights, [0.0]))
        totals.append(np.sum(np.maximum(d[:-1], d[1:]) * np.diff(th)))
    return float(np.mean(totals))


def stagnation_level(cesm: StepDistribution, gap) -> float:
    """Predicted plateau of the a posteriori Wasserstein bound across a
    spectral gap (c, d): (F(d^-) - F(c)) * (d - c).

    Diagnostic only; matches the observed plateau when the quadrature
    places a single node inside the gap.
    """
    c, d = gap
    if not c < d:
        raise ValueError(f"need c < d, got ({c}, {d})")
    return float((cesm.evaluate_left(d) - cesm.evaluate(c)) * (d - c))

"""Shared independent oracles for the test suite.

These deliberately avoid the library's own fast paths: distances come
from brute-force grids, weighted CDFs from dense eigendecompositions,
tridiagonal eigensystems from dense numpy solvers.
"""

import numpy as np
import pytest

from slqcert.distribution import StepDistribution


def rng_for(seed):
    return np.random.Generator(np.random.Philox(key=seed))


@pytest.fixture
def rng():
    return rng_for(12345)


def random_step_cdf(rng, jumps, lo=0.0, hi=1.0):
    """Random probability step CDF with the given number of jumps."""
    x = lo + (hi - lo) * np.sort(rng.random(jumps))
    w = rng.random(jumps) + 0.05
    return StepDistribution(x, w / w.sum())


def random_symmetric(rng, n, scale=1.0):
    M = rng.standard_normal((n, n))
    return scale * (M + M.T) / 2.0


def dense_weighted_cesm_values(A, v, xs):
    """Projector oracle: v^T 1[A <= x] v evaluated on a grid, via a dense
    eigendecomposition."""
    lam, U = np.linalg.eigh(A)
    w = (U.T @ v) ** 2
    return np.array([w[lam <= x].sum() for x in np.atleast_1d(xs)])


def dense_weighted_cesm(A, v):
    """Projector oracle as a StepDistribution."""
    lam, U = np.linalg.eigh(A)
    return StepDistribution(lam, (U.T @ v) ** 2)


def grid_wasserstein(f, g, lo, hi, points=10**6):
    """Left-endpoint Riemann sum of |F - G| on a uniform grid."""
    xs = np.linspace(lo, hi, points, endpoint=False)
    return float(np.mean(np.abs(f.evaluate(xs) - g.evaluate(xs))) * (hi - lo))


def grid_ks(f, g, lo, hi, points=10**6):
    """Supremum of |F - G| over a uniform grid."""
    xs = np.linspace(lo, hi, points)
    return float(np.max(np.abs(f.evaluate(xs) - g.evaluate(xs))))

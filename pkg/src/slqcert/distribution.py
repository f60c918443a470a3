"""Exact algebra on right-continuous piecewise-constant distribution
functions (step CDFs): evaluation, averaging, moments, and exact
Wasserstein / Kolmogorov-Smirnov distances.

A StepDistribution stores jump locations and masses, never cumulative
sums; cumulative sums are derived on demand so that averaging stays a
plain merge of mass lists.  Evaluation follows the closed-at-threshold
convention: F(x) sums the masses at locations <= x.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StepDistribution",
    "exact_cesm",
    "weighted_cesm",
    "average",
    "wasserstein",
    "kolmogorov_smirnov",
    "moment",
    "spectral_sum",
]

_PROBABILITY_TOL = 1e-10
_PROJECTION_SUM_TOL = 1e-8
_NEGATIVE_WEIGHT_TOL = 1e-10
_EQUAL_MASS_RTOL = 1e-8


@dataclass(frozen=True)
class StepDistribution:
    """Weakly increasing, right-continuous step function given by sorted
    jump locations and nonnegative jump masses.

    Exactly coincident jump locations are merged at construction;
    numerically close but distinct locations are kept distinct.
    """

    locations: np.ndarray
    masses: np.ndarray
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.locations, dtype=np.float64))
        w = np.atleast_1d(np.asarray(self.masses, dtype=np.float64))
        if x.shape != w.shape or x.ndim != 1:
            raise ValueError("locations and masses must be 1-d arrays of equal length")
        if x.size == 0:
            raise ValueError("a step distribution needs at least one jump")
        if not np.isfinite(x).all() or not np.isfinite(w).all():
            raise ValueError("locations and masses must be finite")
        if w.min() < 0:
            raise ValueError(f"negative mass {w.min()}")
        order = np.argsort(x, kind="stable")
        x = x[order]
        w = w[order]
        # merge exact ties, drop zero-mass atoms
        keep = np.ones(x.size, dtype=bool)
        keep[1:] = x[1:] != x[:-1]
        if not keep.all():
            idx = np.cumsum(keep) - 1
            merged = np.zeros(int(idx[-1]) + 1)
            np.add.at(merged, idx, w)
            x = x[keep]
            w = merged
        nz = w > 0
        if nz.any() and not nz.all():
            x = x[nz]
            w = w[nz]
        elif not nz.any():
            x = x[:1]
            w = w[:1]
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "masses", w)
        cum = np.cumsum(w)
        cum.setflags(write=False)
        object.__setattr__(self, "_cumulative", cum)

    @property
    def total_mass(self) -> float:
        return float(self._cumulative[-1])

    @property
    def is_probability(self) -> bool:
        return abs(self.total_mass - 1.0) <= _PROBABILITY_TOL

    def evaluate(self, x):
        """F(x) = sum of masses at locations <= x (right-continuous)."""
        idx = np.searchsorted(self.locations, x, side="right")
        padded = np.concatenate(([0.0], self._cumulative))
        out = padded[idx]
        return float(out) if np.isscalar(x) else out

    def evaluate_left(self, x):
        """Left limit F(x^-) = sum of masses at locations < x."""
        idx = np.searchsorted(self.locations, x, side="left")
        padded = np.concatenate(([0.0], self._cumulative))
        out = padded[idx]
        return float(out) if np.isscalar(x) else out

    def __call__(self, x):
        return self.evaluate(x)

    def shifted(self, c: float) -> "StepDistribution":
        return StepDistribution(self.locations + c, self.masses)

    def scaled(self, s: float) -> "StepDistribution":
        if s == 0:
            raise ValueError("scale factor must be nonzero")
        return StepDistribution(self.locations * s, self.masses)

    def support(self):
        return float(self.locations[0]), float(self.locations[-1])

    def to_json_dict(self) -> dict:
        return {"locations": self.locations.tolist(), "masses": self.masses.tolist()}

    @classmethod
    def from_json_dict(cls, obj) -> "StepDistribution":
        return cls(np.asarray(obj["locations"]), np.asarray(obj["masses"]))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    def write_csv(self, fh) -> None:
        """Rows of (jump location, cumulative value just after the jump)."""
        fh.write("x,cesm\n")
        for x, c in zip(self.locations, self._cumulative):
            fh.write(f"{float(x)!r},{float(c)!r}\n")


def exact_cesm(eigenvalues) -> StepDistribution:
    """Cumulative spectral distribution of the given eigenvalue list:
    mass 1/n at each value, duplicates merged by summing."""
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=np.float64))
    if lam.size == 0:
        raise ValueError("need at least one eigenvalue")
    return StepDistribution(lam, np.full(lam.size, 1.0 / lam.size))


def weighted_cesm(eigenvalues, squared_projections) -> StepDistribution:
    """Step CDF with mass (v^T u_i)^2 at eigenvalue lambda_i.

    Projections must be nonnegative up to roundoff and sum to 1 within 1e-8.
    """
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=np.float64))
    w = np.atleast_1d(np.asarray(squared_projections, dtype=np.float64))
    if lam.shape != w.shape:
        raise ValueError("eigenvalues and projections must have equal length")
    if w.min() < -_NEGATIVE_WEIGHT_TOL:
        raise ValueError(f"negative projection weight {w.min()}")
    w = np.maximum(w, 0.0)
    total = w.sum()
    if abs(total - 1.0) > _PROJECTION_SUM_TOL:
        raise ValueError(f"projection weights sum to {total}, expected 1")
    return StepDistribution(lam, w)


def average(distributions) -> StepDistribution:
    """Sample average: merged jump set with masses scaled by 1/len."""
    fs = list(distributions)
    if not fs:
        raise ValueError("cannot average an empty list of distributions")
    m0 = fs[0].total_mass
    for f in fs[1:]:
        if abs(f.total_mass - m0) > _EQUAL_MASS_RTOL * max(1.0, abs(m0)):
            raise ValueError(
                f"total masses differ: {f.total_mass} vs {m0}"
            )
    nv = len(fs)
    locs = np.concatenate([f.locations for f in fs])
    masses = np.concatenate([f.masses for f in fs]) / nv
    return StepDistribution(locs, masses)


def _merged_breakpoints(f: StepDistribution, g: StepDistribution):
    return np.union1d(f.locations, g.locations)


def wasserstein(f: StepDistribution, g: StepDistribution) -> float:
    """Exact integral of |F - G| over the merged breakpoint partition.

    The integrand is constant between consecutive breakpoints and zero
    outside their union (equal total masses required, otherwise the
    integral diverges).
    """
    if abs(f.total_mass - g.total_mass) > _EQUAL_MASS_RTOL * max(1.0, abs(f.total_mass)):
        raise ValueError(
            f"total masses differ ({f.total_mass} vs {g.total_mass}); "
            "the Wasserstein integral diverges"
        )
    xs = _merged_breakpoints(f, g)
    if xs.size < 2:
        return 0.0
    diff = np.abs(f.evaluate(xs[:-1]) - g.evaluate(xs[:-1]))
    return float(np.sum(diff * np.diff(xs)))


def kolmogorov_smirnov(f: StepDistribution, g: StepDistribution) -> float:
    """Exact sup |F - G|: checked at every merged breakpoint and at its
    left limit (the sup of a piecewise-constant difference lives there)."""
    xs = _merged_breakpoints(f, g)
    at = np.abs(f.evaluate(xs) - g.evaluate(xs)).max()
    before = np.abs(f.evaluate_left(xs) - g.evaluate_left(xs)).max()
    return float(max(at, before))


def moment(f: StepDistribution, m: int) -> float:
    """m-th raw moment: sum of w_j * x_j^m."""
    if m < 0:
        raise ValueError("moment degree must be nonnegative")
    return float(np.sum(f.masses * f.locations ** m))


def spectral_sum(f: StepDistribution, func, n: int) -> float:
    """tr(func[A]) for an operator with spectral distribution f:
    n * sum of w_j * func(x_j)."""
    if not f.is_probability:
        raise ValueError("spectral_sum expects a probability distribution")
    vals = np.array([func(x) for x in f.locations], dtype=np.float64)
    return float(n * np.sum(f.masses * vals))

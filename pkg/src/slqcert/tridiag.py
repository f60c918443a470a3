"""Symmetric tridiagonal eigensolver returning eigenvalues and squared
first eigenvector components.

Implicit-shift QL with Wilkinson shifts, following the classic EISPACK
imtql2 / Numerical Recipes tqli organization, except that instead of
accumulating the full eigenvector matrix we rotate a single row vector
initialized to e_1.  That row ends up as the first row of the eigenvector
matrix, so its squared entries are exactly the quadrature weights needed
downstream, and the total cost stays O(k^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lanczos import TridiagonalMatrix

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

__all__ = ["EigenFirstRow", "eig_first_row"]

_EPS = float(np.finfo(np.float64).eps)

# magnitude below which a negative squared weight is treated as roundoff
_WEIGHT_CLAMP = 1e-14


class ConvergenceError(RuntimeError):
    """QL iteration failed to isolate an eigenvalue."""


@dataclass(frozen=True)
class EigenFirstRow:
    """Eigenvalues (ascending) and squared first components of the
    corresponding unit eigenvectors; the latter are nonnegative and sum to 1."""

    theta: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        d = np.asarray(self.d, dtype=np.float64)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "d", d)
        theta.setflags(write=False)
        d.setflags(write=False)


@njit(cache=True)
def _ql_first_row(d, e, z, max_sweeps):  # pragma: no cover - exercised via wrapper
    """In-place implicit QL on diagonal d / off-diagonal e, rotating the
    row vector z along.  e[-1] is workspace.  Returns 0 on success, else
    1 + index of the eigenvalue that failed to converge."""
    n = d.shape[0]
    for l in range(n):
        sweeps = 0
        while True:
            # locate a negligible off-diagonal element (split point)
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return l + 1
            # Wilkinson shift from the leading 2x2
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            denom = g + (r if g >= 0.0 else -r)
            g = d[m] - d[l] + e[l] / denom
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                # rotate columns i, i+1 of the first eigenvector row
                f = z[i + 1]
                z[i + 1] = s * z[i] + c * f
                z[i] = c * z[i] - s * f
            if not underflow:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    return 0


def eig_first_row(T: TridiagonalMatrix, max_sweeps: int = 30) -> EigenFirstRow:
    """All eigenvalues of T plus squared first components of its unit
    eigenvectors, via first-row-only implicit-shift QL.

    Raises ConvergenceError if some eigenvalue needs more than max_sweeps
    QL sweeps (at most max_sweeps * k sweeps in total).
    """
    k = T.k
    d = T.alpha.astype(np.float64).copy()
    e = np.zeros(k)
    e[: k - 1] = T.beta
    z = np.zeros(k)
    z[0] = 1.0

    if k > 1:
        fail = _ql_first_row(d, e, z, max_sweeps)
        if fail:
            raise ConvergenceError(
                f"QL sweep limit ({max_sweeps}) exceeded while isolating "
                f"eigenvalue {fail - 1} of a {k}x{k} tridiagonal matrix"
            )

    order = np.argsort(d, kind="stable")
    theta = d[order]
    w = z[order] ** 2

    # squares are nonnegative by construction; the clamp guards alternative
    # weight sources and genuine solver bugs
    neg = w < 0
    if neg.any():
        worst = w[neg].min()
        if worst < -_WEIGHT_CLAMP:
            raise ConvergenceError(f"eigenvector weight {worst} below roundoff clamp")
        w = np.where(neg, 0.0, w)
        w = w / w.sum()
    return EigenFirstRow(theta, w)

"""k-step Lanczos tridiagonalization with optional full reorthogonalization.

The recurrence orthogonalizes A*q_i against the two previous basis vectors,
producing the symmetric tridiagonal matrix T whose entries encode the
orthogonal-polynomial recurrence of the weighted spectral distribution
attached to the starting vector.  Without reorthogonalization storage is
O(n); with it the full basis is kept and every new vector is re-projected
against all previous ones (twice), which keeps the basis orthogonal to
near machine precision at O(n*k) storage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TridiagonalMatrix",
    "LanczosOptions",
    "lanczos",
    "krylov_basis_orthogonality",
]


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix: diagonal ``alpha``, off-diagonal ``beta``.

    ``beta`` has one entry fewer than ``alpha`` and is nonnegative (each
    entry is the norm of a Lanczos residual).
    """

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=np.float64)) if np.size(self.beta) else np.empty(0)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if alpha.ndim != 1 or beta.ndim != 1:
            raise ValueError("alpha and beta must be one-dimensional")
        if alpha.size < 1:
            raise ValueError("tridiagonal matrix needs at least one diagonal entry")
        if beta.size != alpha.size - 1:
            raise ValueError(
                f"off-diagonal length {beta.size} does not match diagonal length {alpha.size}"
            )
        if beta.size and beta.min() < 0:
            raise ValueError("off-diagonal entries must be nonnegative")
        alpha.setflags(write=False)
        beta.setflags(write=False)

    @property
    def k(self) -> int:
        return self.alpha.size

    def to_dense(self) -> np.ndarray:
        T = np.diag(self.alpha)
        if self.beta.size:
            T += np.diag(self.beta, 1) + np.diag(self.beta, -1)
        return T

    def leading_block(self, k: int) -> "TridiagonalMatrix":
        """Upper-left k-by-k block (the shorter recurrence's matrix)."""
        if not 1 <= k <= self.k:
            raise ValueError(f"block size {k} out of range 1..{self.k}")
        return TridiagonalMatrix(self.alpha[:k].copy(), self.beta[: k - 1].copy())


@dataclass(frozen=True)
class LanczosOptions:
    """Iteration controls.

    breakdown_tolerance is relative to a running norm proxy
    max|alpha| + 2*max|beta|; when the residual norm falls below it the
    Krylov space is (numerically) invariant and the iteration stops early.
    """

    k: int
    reorthogonalize: bool = False
    breakdown_tolerance: float = 1e-12

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.breakdown_tolerance <= 0:
            raise ValueError("breakdown_tolerance must be positive")


def _lanczos_core(op, v, k, reorthogonalize, breakdown_tolerance, keep_basis):
    """Shared recurrence. Returns (alpha, beta, completed, basis-or-None)."""
    n = op.n
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (n,):
        raise ValueError(f"starting vector has shape {v.shape}, expected ({n},)")
    if k > n:
        raise ValueError(f"k={k} exceeds operator dimension n={n}")
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        raise ValueError("starting vector must be nonzero")

    store = reorthogonalize or keep_basis
    Q = np.empty((k, n)) if store else None
    alpha = np.empty(k)
    beta = np.empty(k - 1 if k > 1 else 0)

    q = v / vnorm
    q_prev = None
    beta_prev = 0.0
    completed = k
    for i in range(k):
        if store:
            Q[i] = q
        w = op.apply(q)
        if q_prev is not None:
            w = w - beta_prev * q_prev
        a = float(w @ q)
        w = w - a * q
        alpha[i] = a
        if reorthogonalize:
            # classical Gram-Schmidt against the whole basis, repeated once
            basis = Q[: i + 1]
            for _ in range(2):
                w -= basis.T @ (basis @ w)
        if i == k - 1:
            break
        b = float(np.linalg.norm(w))
        scale = np.abs(alpha[: i + 1]).max() + 2.0 * max(
            beta[:i].max() if i else 0.0, b
        )
        if b <= breakdown_tolerance * scale:
            completed = i + 1  # happy breakdown: invariant subspace found
            break
        beta[i] = b
        q_prev = q
        q = w / b
        beta_prev = b

    alpha = alpha[:completed]
    beta = beta[: completed - 1]
    return alpha, beta, completed, (Q[:completed] if store else None)


def lanczos(op, v, opts: LanczosOptions):
    """Run the Lanczos recurrence for opts.k steps on operator ``op``.

    Parameters
    ----------
    op : operator with attributes ``n`` and ``apply(vector) -> vector``
    v : length-n starting vector, nonzero
    opts : LanczosOptions

    Returns
    -------
    (TridiagonalMatrix, completed_steps) : the tridiagonal of the completed
    steps.  completed_steps < opts.k exactly when a happy breakdown occurred;
    the returned matrix is then exact for the invariant subspace found.
    """
    alpha, beta, completed, _ = _lanczos_core(
        op, v, opts.k, opts.reorthogonalize, opts.breakdown_tolerance, keep_basis=False
    )
    return TridiagonalMatrix(alpha, beta), completed


def krylov_basis_orthogonality(op, v, opts: LanczosOptions) -> float:
    """Worst-case |<q_i, q_j>|, i != j, over the computed Lanczos basis.

    Diagnostic for loss of orthogonality; near machine precision with
    reorthogonalization, potentially large without it once Ritz values
    converge.
    """
    _, _, completed, Q = _lanczos_core(
        op, v, opts.k, opts.reorthogonalize, opts.breakdown_tolerance, keep_basis=True
    )
    G = Q @ Q.T
    np.fill_diagonal(G, 0.0)
    return float(np.abs(G).max()) if completed > 1 else 0.0

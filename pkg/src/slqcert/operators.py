"""Matrix-free symmetric operators: dense, CSR-sparse, and diagonal
backends plus Matrix Market ingestion.

Every downstream algorithm touches the matrix only through ``apply``
(the map v -> A v), so anything exposing ``n`` and ``apply`` works as an
operator.  Instances are immutable after construction and safe to share
across threads for concurrent read-only applies.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SymmetricOperator",
    "DenseOperator",
    "CsrOperator",
    "DiagonalOperator",
    "DimensionMismatchError",
    "MatrixMarketError",
    "load_matrix_market",
    "write_matrix_market",
    "spectral_interval",
]

_SYMMETRY_RTOL = 1e-10
_MM_ASYMMETRY_TOL = 1e-12

# fixed Philox key for the dedicated extreme-Ritz run; any constant works,
# it only has to be the same in every process
_RITZ_STREAM_KEY = 0x5EED_0F_51C7_2A11


class DimensionMismatchError(ValueError):
    pass


class MatrixMarketError(ValueError):
    """Parse or validation failure; carries a 1-based line number when known."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class SymmetricOperator(ABC):
    """Abstract n-by-n symmetric operator exposing only v -> A v."""

    @property
    @abstractmethod
    def n(self) -> int:
        """Operator dimension."""

    @abstractmethod
    def _matvec(self, v: np.ndarray) -> np.ndarray:
        ...

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise DimensionMismatchError(
                f"vector has shape {v.shape}, operator dimension is {self.n}"
            )
        return self._matvec(v)

    def __call__(self, v) -> np.ndarray:
        return self.apply(v)


def _check_symmetric_dense(M, rtol, what):
    scale = max(1.0, float(np.abs(M).max()) if M.size else 0.0)
    gap = float(np.abs(M - M.T).max()) if M.size else 0.0
    if gap > rtol * scale:
        raise ValueError(f"{what} is not symmetric: max |M - M^T| = {gap:g}")


class DenseOperator(SymmetricOperator):
    """Operator backed by an explicit n-by-n array (validated symmetric)."""

    def __init__(self, matrix):
        M = np.array(matrix, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {M.shape}")
        _check_symmetric_dense(M, _SYMMETRY_RTOL, "dense operator matrix")
        M.setflags(write=False)
        self.matrix = M

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def _matvec(self, v):
        return self.matrix @ v


class CsrOperator(SymmetricOperator):
    """Operator backed by CSR storage with both triangles materialized.

    Column indices are strictly increasing within each row and the stored
    matrix must equal its transpose.
    """

    def __init__(self, matrix):
        M = sp.csr_array(matrix, dtype=np.float64)
        if M.shape[0] != M.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {M.shape}")
        M.sum_duplicates()
        M.sort_indices()
        gap = abs(M - M.T)
        gap = float(gap.max()) if gap.nnz else 0.0
        scale = max(1.0, float(abs(M).max()) if M.nnz else 0.0)
        if gap > _SYMMETRY_RTOL * scale:
            raise ValueError(f"CSR operator is not symmetric: max |M - M^T| = {gap:g}")
        for arr in (M.data, M.indices, M.indptr):
            arr.setflags(write=False)
        self.matrix = M

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_offsets(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def column_indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def values(self) -> np.ndarray:
        return self.matrix.data

    def _matvec(self, v):
        return self.matrix @ v

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


class DiagonalOperator(SymmetricOperator):
    """Diagonal operator; its exact spectrum is the stored entries."""

    def __init__(self, eigenvalues):
        d = np.atleast_1d(np.asarray(eigenvalues, dtype=np.float64))
        if d.ndim != 1 or d.size < 1:
            raise ValueError("need a nonempty 1-d list of diagonal entries")
        d = d.copy()
        d.setflags(write=False)
        self.eigenvalues = d

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def _matvec(self, v):
        return self.eigenvalues * v


def _parse_mm_header(line, path):
    parts = line.strip().split()
    if len(parts) < 5 or parts[0] != "%%MatrixMarket":
        raise MatrixMarketError(
            "expected header '%%MatrixMarket matrix coordinate real symmetric|general'",
            path, 1,
        )
    obj, fmt, field, symmetry = (p.lower() for p in parts[1:5])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported object/format '{obj} {fmt}'", path, 1)
    if field not in ("real", "integer"):
        raise MatrixMarketError(f"unsupported field '{field}' (need real entries)", path, 1)
    if symmetry not in ("symmetric", "general"):
        raise MatrixMarketError(f"unsupported symmetry '{symmetry}'", path, 1)
    return symmetry


def load_matrix_market(path) -> CsrOperator:
    """Load a real coordinate Matrix Market file as a CsrOperator.

    Symmetric files have their off-diagonal entries mirrored so both
    triangles are materialized; general files are validated to be symmetric
    to within 1e-12 (relative).  Duplicate entries are summed, following
    the usual coordinate-format convention.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError("empty file", path, 1)
    symmetry = _parse_mm_header(lines[0], path)

    lineno = 1
    size_line = None
    for lineno in range(2, len(lines) + 1):
        stripped = lines[lineno - 1].strip()
        if stripped and not stripped.startswith("%"):
            size_line = stripped
            break
    if size_line is None:
        raise MatrixMarketError("missing size line", path, lineno)

    parts = size_line.split()
    if len(parts) != 3:
        raise MatrixMarketError(f"malformed size line '{size_line}'", path, lineno)
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError:
        raise MatrixMarketError(f"malformed size line '{size_line}'", path, lineno) from None
    if nrows != ncols:
        raise MatrixMarketError(f"matrix is {nrows}x{ncols}, not square", path, lineno)
    if nrows < 1:
        raise MatrixMarketError("matrix dimension must be positive", path, lineno)

    rows, cols, vals, entry_lines = [], [], [], []
    count = 0
    for entry_lineno in range(lineno + 1, len(lines) + 1):
        stripped = lines[entry_lineno - 1].strip()
        if not stripped or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"malformed entry '{stripped}'", path, entry_lineno)
        try:
            i = int(parts[0])
            j = int(parts[1])
            v = float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"malformed entry '{stripped}'", path, entry_lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(
                f"entry ({i}, {j}) outside {nrows}x{ncols} matrix", path, entry_lineno
            )
        count += 1
        if count > nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", path, entry_lineno)
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        entry_lines.append(entry_lineno)
        if symmetry == "symmetric" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
            entry_lines.append(entry_lineno)
    if count < nnz:
        raise MatrixMarketError(
            f"declared {nnz} entries but found only {count}", path, len(lines)
        )

    M = sp.coo_array((vals, (rows, cols)), shape=(nrows, ncols)).tocsr()
    if symmetry == "general":
        gap = abs(M - M.T)
        worst = float(gap.max()) if gap.nnz else 0.0
        scale = max(1.0, float(abs(M).max()) if M.nnz else 0.0)
        if worst > _MM_ASYMMETRY_TOL * scale:
            gap = gap.tocoo()
            at = int(np.argmax(gap.data))
            i, j = int(gap.row[at]) , int(gap.col[at])
            culprit = next(
                (ln for r, c, ln in zip(rows, cols, entry_lines) if (r, c) in ((i, j), (j, i))),
                None,
            )
            raise MatrixMarketError(
                f"general matrix is asymmetric at ({i + 1}, {j + 1}): |gap| = {worst:g}",
                path, culprit,
            )
    return CsrOperator(M)


def write_matrix_market(path, op_or_matrix) -> None:
    """Write a symmetric coordinate Matrix Market file (lower triangle)."""
    if isinstance(op_or_matrix, DiagonalOperator):
        M = sp.diags_array(op_or_matrix.eigenvalues).tocoo()
    elif isinstance(op_or_matrix, CsrOperator):
        M = op_or_matrix.matrix.tocoo()
    elif isinstance(op_or_matrix, DenseOperator):
        M = sp.coo_array(op_or_matrix.matrix)
    else:
        M = sp.coo_array(np.asarray(op_or_matrix, dtype=np.float64))
    keep = M.row >= M.col
    rows, cols, vals = M.row[keep], M.col[keep], M.data[keep]
    order = np.lexsort((rows, cols))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{M.shape[0]} {M.shape[1]} {len(vals)}\n")
        for at in order:
            fh.write(f"{rows[at] + 1} {cols[at] + 1} {float(vals[at])!r}\n")


def spectral_interval(op, k: int = 50):
    """Estimate (lambda_min, lambda_max) of ``op``.

    Diagonal operators (and 1x1 operators) give exact, certified values.
    Otherwise the extreme Ritz values of a dedicated k-step Lanczos run
    (k capped at n) are returned, flagged uncertified: they approach the
    extreme eigenvalues rapidly but from the inside, so consumers needing
    a sure enclosure should widen them.
    """
    from .lanczos import LanczosOptions, lanczos
    from .tridiag import eig_first_row

    if isinstance(op, DiagonalOperator):
        d = op.eigenvalues
        return float(d.min()), float(d.max()), True
    rng = np.random.Generator(np.random.Philox(key=_RITZ_STREAM_KEY))
    v = rng.standard_normal(op.n)
    steps = min(k, op.n)
    T, _ = lanczos(op, v, LanczosOptions(k=steps, reorthogonalize=True))
    theta = eig_first_row(T).theta
    certified = op.n == 1
    return float(theta[0]), float(theta[-1]), certified

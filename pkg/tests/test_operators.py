import numpy as np
import pytest

from slqcert.operators import (
    CsrOperator,
    DenseOperator,
    DiagonalOperator,
    DimensionMismatchError,
    MatrixMarketError,
    load_matrix_market,
    spectral_interval,
    write_matrix_market,
)

from conftest import random_symmetric, rng_for


def test_diagonal_apply():
    op = DiagonalOperator([2.0, 3.0])
    assert np.array_equal(op.apply([1.0, 1.0]), [2.0, 3.0])


def test_apply_zero_vector_is_zero(rng):
    for op in (
        DiagonalOperator(rng.standard_normal(6)),
        DenseOperator(random_symmetric(rng, 6)),
        CsrOperator(random_symmetric(rng, 6)),
    ):
        assert np.array_equal(op.apply(np.zeros(6)), np.zeros(6))


def test_csr_apply_matches_dense_column(rng):
    M = random_symmetric(rng, 5)
    M[np.abs(M) < 0.4] = 0.0
    M = (M + M.T) / 2.0
    op = CsrOperator(M)
    e1 = np.zeros(5)
    e1[0] = 1.0
    np.testing.assert_allclose(op.apply(e1), M[:, 0], atol=1e-15)


def test_apply_dimension_mismatch():
    op = DiagonalOperator([1.0, 2.0])
    with pytest.raises(DimensionMismatchError):
        op.apply([1.0, 2.0, 3.0])


def test_apply_deterministic_bitwise(rng):
    op = DenseOperator(random_symmetric(rng, 16))
    v = rng.standard_normal(16)
    first = op.apply(v)
    assert np.array_equal(first, op.apply(v))


def test_backends_agree(rng):
    M = random_symmetric(rng, 8)
    d = rng.standard_normal(8)
    dense = DenseOperator(M)
    csr = CsrOperator(M)
    v = rng.standard_normal(8)
    np.testing.assert_allclose(dense.apply(v), csr.apply(v), atol=1e-14)
    np.testing.assert_allclose(
        DiagonalOperator(d).apply(v), DenseOperator(np.diag(d)).apply(v), atol=1e-14
    )


def test_symmetry_invariant_random_pairs(rng):
    M = random_symmetric(rng, 12)
    ops = [DenseOperator(M), CsrOperator(M), DiagonalOperator(rng.standard_normal(12))]
    for op in ops:
        scale = 12.0  # crude Frobenius-norm proxy for unit-scale test matrices
        for _ in range(100):
            u = rng.standard_normal(12)
            v = rng.standard_normal(12)
            gap = abs(u @ op.apply(v) - op.apply(u) @ v)
            assert gap <= 1e-10 * np.linalg.norm(u) * np.linalg.norm(v) * scale


def test_asymmetric_dense_rejected():
    with pytest.raises(ValueError, match="not symmetric"):
        DenseOperator([[0.0, 1.0], [0.5, 0.0]])


def test_csr_invariants(rng):
    M = random_symmetric(rng, 7)
    op = CsrOperator(M)
    indptr, indices = op.row_offsets, op.column_indices
    assert np.all(np.diff(indptr) >= 0)
    for r in range(7):
        row_cols = indices[indptr[r] : indptr[r + 1]]
        assert np.all(np.diff(row_cols) > 0)


# Matrix Market ingestion


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_mm_diagonal_file(tmp_path):
    path = _write(
        tmp_path,
        "d.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 2.0\n",
    )
    op = load_matrix_market(path)
    np.testing.assert_allclose(op.apply([1.0, 1.0]), [1.0, 2.0], atol=1e-15)


def test_mm_lower_triangle_symmetrized(tmp_path):
    path = _write(
        tmp_path,
        "offdiag.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 1.0\n",
    )
    op = load_matrix_market(path)
    np.testing.assert_allclose(op.apply([1.0, 0.0]), [0.0, 1.0], atol=1e-15)


def test_mm_round_trip(tmp_path, rng):
    M = random_symmetric(rng, 10)
    path = str(tmp_path / "rt.mtx")
    write_matrix_market(path, M)
    op = load_matrix_market(path)
    v = rng.standard_normal(10)
    np.testing.assert_allclose(op.apply(v), M @ v, atol=1e-15)


def test_mm_round_trip_diagonal(tmp_path):
    path = str(tmp_path / "d.mtx")
    op0 = DiagonalOperator([0.0, -1.5, 2.25])
    write_matrix_market(path, op0)
    op = load_matrix_market(path)
    assert op.n == 3
    v = np.array([1.0, 1.0, 1.0])
    np.testing.assert_allclose(op.apply(v), op0.apply(v), atol=0)


def test_mm_bad_header(tmp_path):
    path = _write(tmp_path, "bad.mtx", "%%MatrixMarket matrix array real general\n2 2\n")
    with pytest.raises(MatrixMarketError, match=":1"):
        load_matrix_market(path)


def test_mm_non_square(tmp_path):
    path = _write(
        tmp_path, "ns.mtx", "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n"
    )
    with pytest.raises(MatrixMarketError, match="not square"):
        load_matrix_market(path)


def test_mm_malformed_entry_line_number(tmp_path):
    path = _write(
        tmp_path,
        "mal.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 oops\n",
    )
    with pytest.raises(MatrixMarketError, match=":4"):
        load_matrix_market(path)


def test_mm_asymmetric_general_rejected(tmp_path):
    path = _write(
        tmp_path,
        "asym.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n2 1 0.5\n",
    )
    with pytest.raises(MatrixMarketError, match="asymmetric"):
        load_matrix_market(path)


def test_mm_missing_entries(tmp_path):
    path = _write(
        tmp_path,
        "short.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n",
    )
    with pytest.raises(MatrixMarketError, match="only 1"):
        load_matrix_market(path)


def test_mm_duplicates_summed(tmp_path):
    path = _write(
        tmp_path,
        "dup.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n1 1 2\n1 1 1.0\n1 1 2.5\n",
    )
    op = load_matrix_market(path)
    np.testing.assert_allclose(op.apply([1.0]), [3.5])


# spectral_interval


def test_spectral_interval_diagonal_exact():
    lo, hi, certified = spectral_interval(DiagonalOperator([-1.0, 0.0, 1.0]))
    assert (lo, hi, certified) == (-1.0, 1.0, True)


def test_spectral_interval_one_by_one():
    lo, hi, certified = spectral_interval(DenseOperator([[3.25]]))
    assert (lo, hi, certified) == (3.25, 3.25, True)


def test_spectral_interval_ritz_large_sparse():
    import scipy.sparse as sp

    d = np.linspace(0.0, 1.0, 5000)
    op = CsrOperator(sp.diags_array(d + 1e-30))  # keep explicit entries
    lo, hi, certified = spectral_interval(op, k=50)
    assert not certified
    assert abs(lo - 0.0) <= 1e-3
    assert abs(hi - 1.0) <= 1e-3
    assert lo >= -1e-12 and hi <= 1.0 + 1e-12  # Ritz values sit inside the spectrum

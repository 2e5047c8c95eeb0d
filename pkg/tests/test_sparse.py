import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import read_mm_dense, tridiag
from schwarzdd import SparseMatrix, extract_submatrix, hermitian_transpose_pattern, spmv
from schwarzdd.mmio import MatrixMarketError, load_cache, read_matrix_market, save_cache, write_matrix_market


def write(tmp_path, text, name="a.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_identity_symmetric_header(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n")
    a = read_matrix_market(p)
    assert a.nnz == 3
    assert a.symmetry_hint == "symmetric"
    np.testing.assert_array_equal(a.toarray(), np.eye(3))


def test_symmetric_lower_triangle_expanded(tmp_path):
    text = (
        "%%MatrixMarket matrix coordinate real symmetric\n% lower triangle of tridiag\n4 4 7\n"
        "1 1 2\n2 1 -1\n2 2 2\n3 2 -1\n3 3 2\n4 3 -1\n4 4 2\n"
    )
    a = read_matrix_market(write(tmp_path, text))
    assert a.nnz == 10
    np.testing.assert_array_equal(a.toarray(), read_mm_dense(text))
    np.testing.assert_array_equal(a.toarray(), tridiag(4))


def test_zero_index_reports_line(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1\n0 2 1\n")
    with pytest.raises(MatrixMarketError, match="line 5") as exc:
        read_matrix_market(p)
    assert exc.value.lineno == 5


@pytest.mark.parametrize(
    "text, msg",
    [
        ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n", "declared 2"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 3 1\n", "outside"),
        ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n", "lower triangle"),
        ("%%MatrixMarket vector coordinate real general\n2 2 1\n1 1 1\n", "expected"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n", "parse value"),
    ],
)
def test_malformed_files(tmp_path, text, msg):
    with pytest.raises(MatrixMarketError, match=msg):
        read_matrix_market(write(tmp_path, text))


def test_complex_hermitian_pattern_and_array_formats(tmp_path):
    herm = "%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 2 0\n2 1 1 1\n"
    a = read_matrix_market(write(tmp_path, herm, "h.mtx"))
    np.testing.assert_array_equal(a.toarray(), np.array([[2, 1 - 1j], [1 + 1j, 0]]))
    assert a.symmetry_hint == "hermitian" and a.is_hermitian()

    pat = "%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n"
    np.testing.assert_array_equal(read_matrix_market(write(tmp_path, pat, "p.mtx")).toarray(), [[0, 0, 1], [1, 0, 0]])

    arr = "%%MatrixMarket matrix array integer general\n2 2\n1\n2\n3\n4\n"
    np.testing.assert_array_equal(read_matrix_market(write(tmp_path, arr, "g.mtx")).toarray(), [[1, 3], [2, 4]])

    skew = "%%MatrixMarket matrix array real skew-symmetric\n3 3\n1\n2\n3\n"
    np.testing.assert_array_equal(
        read_matrix_market(write(tmp_path, skew, "s.mtx")).toarray(), [[0, -1, -2], [1, 0, -3], [2, 3, 0]]
    )


def test_canonicalization_sums_duplicates_and_drops_zeros():
    a = SparseMatrix.from_coo([0, 0, 1, 1], [1, 1, 0, 1], [1.0, 2.0, 0.0, 5.0], (2, 2))
    assert a.nnz == 2
    np.testing.assert_array_equal(a.col_indices, [1, 1])
    np.testing.assert_array_equal(a.values, [3.0, 5.0])
    assert not a.values.flags.writeable


def test_invariants_enforced_by_constructor():
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, np.array([0, 2, 2]), np.array([1, 0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, np.array([0, 1, 1]), np.array([0]), np.array([0.0]))


def test_spmv_examples():
    np.testing.assert_array_equal(spmv(SparseMatrix.identity(3), [1, 2, 3]), [1, 2, 3])
    t = SparseMatrix.from_dense(tridiag(4))
    np.testing.assert_array_equal(spmv(t, np.ones(4)), tridiag(4) @ np.ones(4))
    np.testing.assert_array_equal(spmv(t, np.ones(4)), [1, 0, 0, 1])
    ii = SparseMatrix.from_dense(1j * np.eye(2))
    np.testing.assert_array_equal(spmv(ii, np.array([1, 1j])), [1j, -1])
    with pytest.raises(ValueError, match="dimension"):
        spmv(t, np.ones(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 25), st.integers(1, 25), st.floats(0.05, 0.6), st.integers(0, 2**31))
def test_spmv_matches_dense(m, n, density, seed):
    rng = np.random.default_rng(seed)
    d = np.where(rng.random((m, n)) < density, rng.normal(size=(m, n)), 0)
    x = rng.normal(size=n)
    a = SparseMatrix.from_dense(d)
    tol = 4 * np.finfo(float).eps * np.abs(d).sum(axis=1).max(initial=0) * np.abs(x).max() * max(n, 1)
    np.testing.assert_allclose(spmv(a, x), d @ x, rtol=0, atol=tol + 1e-300)


def test_extract_submatrix():
    i4 = SparseMatrix.identity(4)
    np.testing.assert_array_equal(extract_submatrix(i4, [2, 0], [2, 0]), np.eye(2))
    t6 = SparseMatrix.from_dense(tridiag(6))
    np.testing.assert_array_equal(extract_submatrix(t6, range(4), range(4)), tridiag(4))
    np.testing.assert_array_equal(extract_submatrix(t6, [0], [5]), [[0]])
    np.testing.assert_array_equal(extract_submatrix(t6, [3, 1], [0, 1, 2]), tridiag(6)[np.ix_([3, 1], [0, 1, 2])])
    with pytest.raises(IndexError):
        extract_submatrix(t6, [6], [0])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**31))
def test_extract_full_is_exact(n, seed):
    rng = np.random.default_rng(seed)
    d = np.where(rng.random((n, n)) < 0.3, rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), 0)
    a = SparseMatrix.from_dense(d)
    np.testing.assert_array_equal(extract_submatrix(a, range(n), range(n)), d)


def test_hermitian_transpose_pattern():
    t = SparseMatrix.from_dense(tridiag(5))
    np.testing.assert_array_equal(hermitian_transpose_pattern(t).toarray() != 0, tridiag(5) != 0)
    single = SparseMatrix.from_coo([0], [1], [3.0], (2, 2))
    np.testing.assert_array_equal(hermitian_transpose_pattern(single).toarray(), np.ones((2, 2)))
    with pytest.raises(ValueError):
        hermitian_transpose_pattern(SparseMatrix.from_dense(np.ones((2, 3))))


def test_pattern_matches_dense_oracle(rng):
    d = np.where(rng.random((10, 10)) < 0.2, rng.normal(size=(10, 10)), 0)
    want = ((np.abs(d) + np.abs(d.T)) > 0) | np.eye(10, dtype=bool)
    got = hermitian_transpose_pattern(SparseMatrix.from_dense(d)).toarray() != 0
    np.testing.assert_array_equal(got, want)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 15), st.booleans(), st.integers(0, 2**31))
def test_matrix_market_round_trip(tmp_path_factory, n, cplx, seed):
    rng = np.random.default_rng(seed)
    d = np.where(rng.random((n, n)) < 0.4, rng.normal(size=(n, n)), 0)
    if cplx:
        d = d + 1j * np.where(d != 0, rng.normal(size=(n, n)), 0)
    a = SparseMatrix.from_dense(d)
    p = tmp_path_factory.mktemp("mm") / "a.mtx"
    write_matrix_market(p, a)
    b = read_matrix_market(p)
    write_matrix_market(p, b)
    c = read_matrix_market(p)
    for x in (b, c):
        np.testing.assert_array_equal(x.row_offsets, a.row_offsets)
        np.testing.assert_array_equal(x.col_indices, a.col_indices)
        np.testing.assert_array_equal(x.values, a.values)


def test_binary_cache_round_trip(tmp_path, rng):
    d = np.where(rng.random((7, 7)) < 0.4, rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7)), 0)
    a = SparseMatrix.from_dense(d, symmetry_hint="general")
    p = tmp_path / "a.sddc"
    save_cache(p, a)
    assert p.read_bytes()[:8] == b"SDDCSR\x00\x01"
    b = load_cache(p)
    np.testing.assert_array_equal(b.toarray(), d)
    p.write_bytes(b"SDDCSR\x00\x02" + p.read_bytes()[8:])
    with pytest.raises(ValueError, match="version"):
        load_cache(p)

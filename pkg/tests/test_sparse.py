import gzip

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import find_matrix, random_sparse
from sira.errors import DimensionError, MalformedInputError
from sira.sparse import ShiftedOperator, SparseMatrix, mm_load, mm_write, one_norm, spmv


def write(tmp_path, text, name="m.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_coordinate_diagonal(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 2.0\n2 2 3.0\n")
    m = mm_load(p)
    assert m.n == 2
    np.testing.assert_array_equal(m.diagonal(), [2, 3])
    assert m.values.dtype == np.complex128


def test_symmetric_unfolded(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 1\n2 1 5.0\n")
    d = mm_load(p).to_dense()
    assert d[1, 0] == 5 and d[0, 1] == 5
    assert mm_load(p).nnz == 2


def test_skew_and_hermitian(tmp_path):
    skew = write(tmp_path, "%%MatrixMarket matrix coordinate real skew-symmetric\n3 3 1\n3 1 4\n", "s.mtx")
    d = mm_load(skew).to_dense()
    assert d[2, 0] == 4 and d[0, 2] == -4
    herm = write(tmp_path, "%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 1 0\n2 1 1 2\n", "h.mtx")
    d = mm_load(herm).to_dense()
    assert d[1, 0] == 1 + 2j and d[0, 1] == 1 - 2j


def test_array_layout_and_integer(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix array integer general\n2 2\n1\n2\n3\n4\n")
    np.testing.assert_array_equal(mm_load(p).to_dense(), [[1, 3], [2, 4]])
    p = write(tmp_path, "%%MatrixMarket matrix array complex general\n1 1\n1.5 -2\n", "c.mtx")
    assert mm_load(p).to_dense()[0, 0] == 1.5 - 2j


def test_duplicates_summed(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 2 1\n1 2 2.5\n2 1 1\n")
    m = mm_load(p)
    assert m.nnz == 2
    assert m.to_dense()[0, 1] == 3.5


def test_gzip(tmp_path):
    p = tmp_path / "m.mtx.gz"
    with gzip.open(p, "wt") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 7\n")
    assert mm_load(p).to_dense()[0, 0] == 7


@pytest.mark.parametrize(
    "text, line",
    [
        ("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n", 1),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 2\n", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 2\n", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 2\n", 3),
        ("%%MatrixMarket vector coordinate real general\n", 1),
        ("%%MatrixMarket matrix coordinate real general\n2 two 1\n", 2),
    ],
)
def test_malformed_names_line(tmp_path, text, line):
    with pytest.raises(MalformedInputError) as info:
        mm_load(write(tmp_path, text))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_non_square(tmp_path):
    with pytest.raises(DimensionError):
        mm_load(write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n"))


def test_write_roundtrip(tmp_path, rng):
    a = random_sparse(rng, 30)
    mm_write(tmp_path / "a.mtx", a, comment="round trip")
    b = mm_load(tmp_path / "a.mtx")
    np.testing.assert_array_equal(a.to_dense(), b.to_dense())


def test_csr_invariants():
    with pytest.raises(MalformedInputError):
        SparseMatrix(2, [0, 2, 2], [1, 0], [1.0, 2.0])
    with pytest.raises(MalformedInputError):
        SparseMatrix(2, [0, 1, 1], [2], [1.0])
    with pytest.raises(DimensionError):
        SparseMatrix(2, [0, 1], [0], [1.0])
    with pytest.raises(DimensionError):
        SparseMatrix(0, [0], [], [])
    m = SparseMatrix(2, [0, 1, 2], [1, 0], [1.0, 2.0])
    with pytest.raises(ValueError):
        m.values[0] = 3


def test_spmv_trivial():
    x = np.array([1.0, -2.0, 3j])
    np.testing.assert_array_equal(spmv(SparseMatrix.identity(3), x), x)
    np.testing.assert_array_equal(spmv(SparseMatrix.diag([2, 3]), np.ones(2)), [2, 3])
    with pytest.raises(DimensionError):
        spmv(SparseMatrix.identity(3), np.ones(2))


def test_spmv_against_dense(rng):
    a = random_sparse(rng, 50, density=0.2)
    x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    ref = a.to_dense() @ x
    assert np.linalg.norm(spmv(a, x) - ref) <= 1e-13 * np.linalg.norm(ref)
    ref_h = a.to_dense().conj().T @ x
    assert np.linalg.norm(a.rmatvec(x) - ref_h) <= 1e-13 * np.linalg.norm(ref_h)


def test_spmv_bitwise_repeatable(rng):
    a = random_sparse(rng, 80, density=0.3)
    x = rng.standard_normal(80) + 1j * rng.standard_normal(80)
    assert spmv(a, x).tobytes() == spmv(a, x).tobytes()


def test_one_norm(rng):
    assert one_norm(SparseMatrix.identity(4)) == 1
    assert one_norm(SparseMatrix.diag([2, -3])) == 3
    a = random_sparse(rng, 50)
    ref = np.abs(a.to_dense()).sum(axis=0).max()
    assert abs(one_norm(a) - ref) <= 1e-14 * ref
    assert a._one_norm is not None and one_norm(a) == a._one_norm


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 200), seed=st.integers(0, 2**31), re=st.floats(-5, 5), im=st.floats(-5, 5))
def test_shifted_operator_matches_dense(n, seed, re, im):
    rng = np.random.default_rng(seed)
    a = random_sparse(rng, n, density=min(1.0, 5.0 / n))
    sigma = complex(re, im)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    ref = (a.to_dense() - sigma * np.eye(n)) @ x
    got = ShiftedOperator(a, sigma).apply(x)
    np.testing.assert_array_equal(got, spmv(a, x) - sigma * x)
    assert np.linalg.norm(got - ref) <= 1e-13 * max(np.linalg.norm(ref), 1e-300) + 1e-300


def test_sherman5_dimension():
    path = find_matrix("sherman5")
    if path is None:
        pytest.skip("sherman5 not supplied (set SIRA_SHERMAN5 or add tests/data/sherman5.mtx)")
    assert mm_load(path).n == 3312

"""Complex CSR storage, Matrix Market ingestion and matrix-vector kernels."""

from __future__ import annotations

import gzip
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, MalformedInputError


class SparseMatrix:
    """Immutable square complex matrix in CSR form.

    Column indices are strictly increasing within each row, so every
    product is summed in ascending column order and is reproducible
    bit-for-bit.

    Parameters
    ----------
    n : int
        Dimension.
    row_offsets, col_indices, values : array_like
        CSR arrays. ``values`` is promoted to ``complex128``.
    """

    def __init__(self, n, row_offsets, col_indices, values):
        n = int(n)
        row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        values = np.ascontiguousarray(values, dtype=np.complex128)
        if n < 1:
            raise DimensionError(f"dimension must be positive, got {n}")
        if row_offsets.shape != (n + 1,):
            raise DimensionError("row_offsets must have length n + 1")
        if row_offsets[0] != 0 or row_offsets[-1] != len(values):
            raise MalformedInputError("row_offsets must start at 0 and end at nnz")
        if len(col_indices) != len(values):
            raise MalformedInputError("col_indices and values differ in length")
        if np.any(np.diff(row_offsets) < 0):
            raise MalformedInputError("row_offsets must be nondecreasing")
        if len(col_indices) and (col_indices.min() < 0 or col_indices.max() >= n):
            raise MalformedInputError("column index out of range")
        # strictly increasing columns inside each row
        if len(col_indices) > 1:
            step = np.diff(col_indices)
            row_start = np.zeros(len(col_indices), dtype=bool)
            row_start[row_offsets[:-1][row_offsets[:-1] < len(col_indices)]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise MalformedInputError("column indices must be strictly increasing per row")

        for arr in (row_offsets, col_indices, values):
            arr.setflags(write=False)
        self.n = n
        self.row_offsets = row_offsets
        self.col_indices = col_indices
        self.values = values
        self._one_norm = None
        self._csr = sp.csr_matrix((values, col_indices, row_offsets), shape=(n, n))
        self._csr.has_sorted_indices = True
        self._adjoint = None

    @classmethod
    def from_coo(cls, n, rows, cols, vals):
        """Build from coordinate triplets, summing duplicates."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.complex128)
        if len(rows) and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
            raise MalformedInputError("coordinate index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            new = np.ones(len(rows), dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            # sequential sums keep duplicate merging order-deterministic
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        return cls(n, np.cumsum(offsets), cols, vals)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], rows, cols, a[rows, cols])

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        coo = m.tocoo()
        return cls.from_coo(m.shape[0], coo.row, coo.col, coo.data)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls(n, np.arange(n + 1), idx, np.ones(n))

    @classmethod
    def diag(cls, d):
        d = np.asarray(d, dtype=np.complex128)
        return cls.from_coo(len(d), np.arange(len(d)), np.arange(len(d)), d)

    @property
    def nnz(self):
        return len(self.values)

    @property
    def shape(self):
        return (self.n, self.n)

    def diagonal(self):
        return self._csr.diagonal()

    def to_dense(self):
        return self._csr.toarray()

    def to_scipy(self):
        return self._csr.copy()

    def matvec(self, x):
        return spmv(self, x)

    def rmatvec(self, x):
        """Adjoint product ``A^H x``."""
        x = _check_vec(self, x)
        if self._adjoint is None:
            adj = self._csr.conj().T.tocsr()
            adj.sort_indices()
            self._adjoint = adj
        return self._adjoint @ x

    def __matmul__(self, x):
        return spmv(self, x)

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz})"


class ShiftedOperator:
    """The action of ``A - sigma*I`` without materializing it."""

    def __init__(self, matrix: SparseMatrix, shift: complex):
        self.matrix = matrix
        self.shift = complex(shift)

    @property
    def dim(self):
        return self.matrix.n

    def apply(self, x):
        x = np.asarray(x, dtype=np.complex128)
        return spmv(self.matrix, x) - self.shift * x

    __call__ = apply

    def __repr__(self):
        return f"ShiftedOperator({self.matrix!r}, shift={self.shift})"


def _check_vec(m, x):
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (m.n,):
        raise DimensionError(f"vector of shape {x.shape} does not match n={m.n}")
    return x


def spmv(m: SparseMatrix, x) -> np.ndarray:
    """CSR product ``m @ x`` summed row by row in ascending column order."""
    return m._csr @ _check_vec(m, x)


def one_norm(m: SparseMatrix) -> float:
    """Maximum absolute column sum, cached on the matrix."""
    if m._one_norm is None:
        sums = np.zeros(m.n)
        np.add.at(sums, m.col_indices, np.abs(m.values))
        m._one_norm = float(sums.max()) if m.n else 0.0
    return m._one_norm


_FIELDS = {"real", "complex", "integer", "double", "pattern"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="ascii", errors="replace")
    return open(path, "r", encoding="ascii", errors="replace")


def mm_load(path) -> SparseMatrix:
    """Read a Matrix Market file into a fully expanded complex CSR matrix.

    Symmetric, skew-symmetric and Hermitian storage is unfolded, real data
    is promoted to complex and duplicate coordinates are summed. Pattern
    files carry no numeric content and are rejected.
    """
    with _open_text(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MalformedInputError("empty file", line=1)

    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket" or banner[1].lower() != "matrix":
        raise MalformedInputError("missing %%MatrixMarket matrix banner", line=1)
    layout, field, symmetry = (b.lower() for b in banner[2:])
    if layout not in ("coordinate", "array"):
        raise MalformedInputError(f"unknown layout {layout!r}", line=1)
    if field not in _FIELDS:
        raise MalformedInputError(f"unknown field {field!r}", line=1)
    if field == "pattern":
        raise MalformedInputError("pattern matrices have no numeric values", line=1)
    if symmetry not in _SYMMETRIES:
        raise MalformedInputError(f"unknown symmetry {symmetry!r}", line=1)
    if symmetry == "hermitian" and field != "complex":
        raise MalformedInputError("hermitian symmetry requires complex field", line=1)

    lineno = 1
    body = iter(enumerate(lines[1:], start=2))
    size = None
    for lineno, text in body:
        s = text.strip()
        if not s or s.startswith("%"):
            continue
        size = s.split()
        break
    if size is None:
        raise MalformedInputError("missing size line", line=lineno + 1)
    try:
        dims = [int(t) for t in size]
    except ValueError:
        raise MalformedInputError("size line must contain integers", line=lineno) from None
    expect = 3 if layout == "coordinate" else 2
    if len(dims) != expect:
        raise MalformedInputError(f"size line needs {expect} integers", line=lineno)
    nrows, ncols = dims[0], dims[1]
    if nrows != ncols:
        raise DimensionError(f"matrix is {nrows}x{ncols}, not square")
    n = nrows
    if n < 1:
        raise MalformedInputError("dimension must be positive", line=lineno)

    ncomp = 2 if field == "complex" else 1
    entries = []
    for lineno, text in body:
        s = text.strip()
        if not s or s.startswith("%"):
            continue
        entries.append((lineno, s.split()))

    if layout == "coordinate":
        nnz = dims[2]
        if len(entries) != nnz:
            last = entries[-1][0] if entries else lineno
            raise MalformedInputError(f"expected {nnz} entries, found {len(entries)}", line=last)
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.complex128)
        for k, (ln, tok) in enumerate(entries):
            if len(tok) != 2 + ncomp:
                raise MalformedInputError(f"expected {2 + ncomp} fields", line=ln)
            try:
                i, j = int(tok[0]) - 1, int(tok[1]) - 1
                v = float(tok[2]) if ncomp == 1 else complex(float(tok[2]), float(tok[3]))
            except ValueError:
                raise MalformedInputError("unparsable entry", line=ln) from None
            if not (0 <= i < n and 0 <= j < n):
                raise MalformedInputError(f"index ({i + 1}, {j + 1}) out of range", line=ln)
            if symmetry != "general" and j > i:
                raise MalformedInputError("symmetric storage must be lower triangular", line=ln)
            if symmetry == "skew-symmetric" and i == j:
                raise MalformedInputError("skew-symmetric storage has no diagonal", line=ln)
            rows[k], cols[k], vals[k] = i, j, v
    else:
        # column-major; symmetric variants store the lower triangle only
        if symmetry == "general":
            positions = [(i, j) for j in range(n) for i in range(n)]
        elif symmetry == "skew-symmetric":
            positions = [(i, j) for j in range(n) for i in range(j + 1, n)]
        else:
            positions = [(i, j) for j in range(n) for i in range(j, n)]
        if len(entries) != len(positions):
            last = entries[-1][0] if entries else lineno
            raise MalformedInputError(
                f"expected {len(positions)} array values, found {len(entries)}", line=last
            )
        rows = np.array([p[0] for p in positions], dtype=np.int64)
        cols = np.array([p[1] for p in positions], dtype=np.int64)
        vals = np.empty(len(positions), dtype=np.complex128)
        for k, (ln, tok) in enumerate(entries):
            if len(tok) != ncomp:
                raise MalformedInputError(f"expected {ncomp} fields", line=ln)
            try:
                vals[k] = float(tok[0]) if ncomp == 1 else complex(float(tok[0]), float(tok[1]))
            except ValueError:
                raise MalformedInputError("unparsable value", line=ln) from None

    if symmetry != "general":
        off = rows != cols
        mirror = vals[off]
        if symmetry == "skew-symmetric":
            mirror = -mirror
        elif symmetry == "hermitian":
            mirror = np.conj(mirror)
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, mirror]),
        )
    return SparseMatrix.from_coo(n, rows, cols, vals)


def mm_write(path, m: SparseMatrix, comment=None):
    """Write ``m`` as a general complex coordinate Matrix Market file."""
    coo = m._csr.tocoo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate complex general\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{m.n} {m.n} {m.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {float(v.real)!r} {float(v.imag)!r}\n")

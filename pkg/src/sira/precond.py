"""Threshold incomplete LU of ``A - sigma*I`` and the projected JD preconditioner."""

from __future__ import annotations

import numba
import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, NearSingularProjection, ZeroPivotError
from .sparse import SparseMatrix


@numba.njit(cache=True)
def _grow(arr, need):
    if need <= arr.shape[0]:
        return arr
    cap = max(need, 2 * arr.shape[0])
    out = np.empty(cap, dtype=arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@numba.njit(cache=True)
def _ilut_kernel(n, indptr, indices, data, droptol):
    """Row-wise IKJ threshold ILU without pivoting.

    Returns ``status`` (-1 on success, else the failing row) and the CSR
    arrays of the strictly lower ``L`` and of ``U`` (diagonal first per row).
    """
    cap = max(16, 4 * indptr[n])
    l_ptr = np.zeros(n + 1, dtype=np.int64)
    l_idx = np.empty(cap, dtype=np.int64)
    l_val = np.empty(cap, dtype=np.complex128)
    u_ptr = np.zeros(n + 1, dtype=np.int64)
    u_idx = np.empty(cap, dtype=np.int64)
    u_val = np.empty(cap, dtype=np.complex128)

    w = np.zeros(n, dtype=np.complex128)
    marked = np.zeros(n, dtype=np.bool_)
    lower = np.empty(n, dtype=np.int64)
    upper = np.empty(n, dtype=np.int64)
    nl = 0
    nu = 0
    lcount = 0
    ucount = 0

    for i in range(n):
        nl = 0
        nu = 0
        has_diag = False
        rownorm = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            v = data[p]
            w[j] = v
            marked[j] = True
            rownorm += v.real * v.real + v.imag * v.imag
            if j < i:
                lower[nl] = j
                nl += 1
            elif j == i:
                has_diag = True
            else:
                upper[nu] = j
                nu += 1
        if not has_diag:
            w[i] = 0.0
            marked[i] = True
        thresh = droptol * np.sqrt(rownorm)

        while nl > 0:
            # smallest pending lower column
            pos = 0
            for q in range(1, nl):
                if lower[q] < lower[pos]:
                    pos = q
            k = lower[pos]
            nl -= 1
            lower[pos] = lower[nl]

            wk = w[k] / u_val[u_ptr[k]]
            w[k] = 0.0
            marked[k] = False
            if abs(wk) < thresh or wk == 0.0:
                continue
            l_idx = _grow(l_idx, lcount + 1)
            l_val = _grow(l_val, lcount + 1)
            l_idx[lcount] = k
            l_val[lcount] = wk
            lcount += 1
            for p in range(u_ptr[k] + 1, u_ptr[k + 1]):
                j = u_idx[p]
                if not marked[j]:
                    marked[j] = True
                    w[j] = 0.0
                    if j < i:
                        lower[nl] = j
                        nl += 1
                    elif j > i:
                        upper[nu] = j
                        nu += 1
                w[j] -= wk * u_val[p]
        # pops come in ascending order, so the L row is already sorted
        l_ptr[i + 1] = lcount

        diag = w[i]
        w[i] = 0.0
        marked[i] = False
        if diag == 0.0:
            for q in range(nu):
                w[upper[q]] = 0.0
                marked[upper[q]] = False
            return i, l_ptr, l_idx, l_val, u_ptr, u_idx, u_val

        kept = 0
        for q in range(nu):
            j = upper[q]
            if abs(w[j]) >= thresh and w[j] != 0.0:
                upper[kept] = j
                kept += 1
            else:
                w[j] = 0.0
                marked[j] = False
        cols = np.sort(upper[:kept])
        u_idx = _grow(u_idx, ucount + kept + 1)
        u_val = _grow(u_val, ucount + kept + 1)
        u_idx[ucount] = i
        u_val[ucount] = diag
        ucount += 1
        for q in range(kept):
            j = cols[q]
            u_idx[ucount] = j
            u_val[ucount] = w[j]
            ucount += 1
            w[j] = 0.0
            marked[j] = False
        u_ptr[i + 1] = ucount

    return -1, l_ptr, l_idx[:lcount], l_val[:lcount], u_ptr, u_idx[:ucount], u_val[:ucount]


@numba.njit(cache=True)
def _lu_solve_kernel(n, l_ptr, l_idx, l_val, u_ptr, u_idx, u_val, b):
    x = b.copy()
    for i in range(n):
        s = x[i]
        for p in range(l_ptr[i], l_ptr[i + 1]):
            s -= l_val[p] * x[l_idx[p]]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        d = u_ptr[i]
        for p in range(d + 1, u_ptr[i + 1]):
            s -= u_val[p] * x[u_idx[p]]
        x[i] = s / u_val[d]
    return x


class IlutFactors:
    """``M = L U`` with unit lower ``L`` (diagonal implicit) and upper ``U``."""

    def __init__(self, l_factor: SparseMatrix, u_factor: SparseMatrix, droptol, shift):
        self.l_factor = l_factor
        self.u_factor = u_factor
        self.droptol = float(droptol)
        self.shift = complex(shift)
        self.n = u_factor.n
        # U rows start with their diagonal entry
        self._l = (l_factor.row_offsets, l_factor.col_indices, l_factor.values)
        self._u = (u_factor.row_offsets, u_factor.col_indices, u_factor.values)

    @property
    def nnz(self):
        return self.l_factor.nnz + self.u_factor.nnz

    def solve(self, w):
        return precond_solve(self, w)

    __call__ = solve

    def to_dense(self):
        """Dense ``(L, U)`` with the unit diagonal of ``L`` made explicit."""
        l = self.l_factor.to_dense() + np.eye(self.n)
        return l, self.u_factor.to_dense()

    def __repr__(self):
        return f"IlutFactors(n={self.n}, nnz={self.nnz}, droptol={self.droptol:g})"


def ilut_factor(a: SparseMatrix, shift=0.0, droptol=1e-3) -> IlutFactors:
    """Threshold ILU of ``a - shift*I``.

    Multipliers and ``U`` entries below ``droptol`` times the 2-norm of the
    current row of ``a - shift*I`` are dropped; the diagonal of ``U`` is
    always kept. No pivoting and no fill cap.

    Raises
    ------
    ZeroPivotError
        If an exactly zero pivot appears.
    """
    if droptol < 0:
        raise ValueError("droptol must be nonnegative")
    shifted = a.to_scipy()
    if shift != 0:
        shifted = (shifted - complex(shift) * _speye(a.n)).tocsr()
    shifted.sort_indices()
    shifted.sum_duplicates()
    n = a.n
    status, l_ptr, l_idx, l_val, u_ptr, u_idx, u_val = _ilut_kernel(
        n,
        shifted.indptr.astype(np.int64),
        shifted.indices.astype(np.int64),
        shifted.data.astype(np.complex128),
        float(droptol),
    )
    if status >= 0:
        raise ZeroPivotError(int(status))
    l_factor = SparseMatrix(n, l_ptr, l_idx, l_val)
    u_factor = SparseMatrix(n, u_ptr, u_idx, u_val)
    return IlutFactors(l_factor, u_factor, droptol, shift)


def _speye(n):
    return sp.identity(n, dtype=np.complex128, format="csr")


def precond_solve(m: IlutFactors, w) -> np.ndarray:
    """``U^{-1} L^{-1} w`` by forward then back substitution."""
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (m.n,):
        raise DimensionError(f"vector of shape {w.shape} does not match n={m.n}")
    return _lu_solve_kernel(m.n, *m._l, *m._u, w)


class IdentityPreconditioner:
    """``M = I``; useful as a baseline and in tests."""

    def __init__(self, n):
        self.n = n

    def solve(self, w):
        return np.array(w, dtype=np.complex128)

    __call__ = solve


class ProjectedPreconditioner:
    """Inverse of ``(I - y y^H) M (I - y y^H)`` restricted to ``y``-perp.

    ``M^{-1} y`` and ``y^H M^{-1} y`` are computed once at construction,
    i.e. once per outer iteration.
    """

    def __init__(self, base, y, rel_tol=1e-14):
        self.base = base
        self.y = np.asarray(y, dtype=np.complex128)
        self.minv_y = base.solve(self.y)
        self.denom = np.vdot(self.y, self.minv_y)
        scale = np.linalg.norm(self.minv_y)
        if not abs(self.denom) > rel_tol * scale:
            raise NearSingularProjection(
                f"|y^H M^-1 y| = {abs(self.denom):.3e} is negligible against ||M^-1 y|| = {scale:.3e}"
            )

    def solve(self, w):
        return projected_precond_solve(self, w)

    __call__ = solve


def projected_precond_solve(p: ProjectedPreconditioner, w) -> np.ndarray:
    """``M^{-1} w - (y^H M^{-1} w / y^H M^{-1} y) M^{-1} y``."""
    mw = p.base.solve(w)
    return mw - (np.vdot(p.y, mw) / p.denom) * p.minv_y

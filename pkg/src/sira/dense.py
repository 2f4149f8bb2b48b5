"""Small dense complex linear algebra for the projected problem.

Dense matrices are plain ``numpy`` arrays of dtype ``complex128``. Bases are
stored as ``n x m`` arrays whose columns are the basis vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConvergenceError, DimensionError, SubspaceBreakdown

MAX_PROJECTED_DIM = 200
BREAKDOWN_TOL = 1e-14

_ULP = np.finfo(float).eps
_SAFMIN = np.finfo(float).tiny


@dataclass(frozen=True)
class RitzSet:
    """Eigen-decomposition of a projected matrix.

    ``values[ordering[0]]`` is the Ritz value nearest the target.
    """

    values: np.ndarray
    vectors: np.ndarray
    ordering: np.ndarray
    sigma: complex = 0.0

    def __len__(self):
        return len(self.values)

    @property
    def sorted_values(self):
        return self.values[self.ordering]

    @property
    def sorted_vectors(self):
        return self.vectors[:, self.ordering]

    def nearest(self):
        """Return ``(nu, z)`` for the Ritz value closest to the target."""
        k = self.ordering[0]
        return self.values[k], self.vectors[:, k]


def order_by_distance(values, sigma):
    """Permutation sorting ``values`` by ``|value - sigma|``.

    Exact ties fall back to ascending imaginary part, then real part.
    """
    values = np.asarray(values)
    dist = np.abs(values - sigma)
    return np.lexsort((values.real, values.imag, dist))


def _householder(x):
    """Unit ``v`` with ``(I - 2 v v^H) x = alpha e_1``."""
    normx = np.linalg.norm(x)
    v = x.astype(np.complex128, copy=True)
    if normx == 0.0:
        return None
    x0 = x[0]
    phase = x0 / abs(x0) if x0 != 0 else 1.0
    v[0] += phase * normx
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return None
    return v / nv


def hessenberg(a):
    """Unitary reduction ``a = Q T Q^H`` with ``T`` upper Hessenberg."""
    t = np.array(a, dtype=np.complex128)
    m = t.shape[0]
    q = np.eye(m, dtype=np.complex128)
    for k in range(m - 2):
        v = _householder(t[k + 1:, k])
        if v is None:
            continue
        t[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ t[k + 1:, k:])
        t[:, k + 1:] -= 2.0 * np.outer(t[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        t[k + 2:, k] = 0.0
    return t, q


def _givens(x, y):
    """``(c, s, r)`` with ``[[c, s], [-conj(s), c]] @ [x, y] = [r, 0]``."""
    ax = abs(x)
    if y == 0:
        return 1.0, 0.0j, x
    if ax == 0:
        return 0.0, 1.0 + 0.0j, y
    norm = np.hypot(ax, abs(y))
    alpha = x / ax
    return ax / norm, alpha * np.conj(y) / norm, alpha * norm


def _wilkinson_shift(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mu1 = d - b * c / (half + disc) if (half + disc) != 0 else d
    mu2 = d - b * c / (half - disc) if (half - disc) != 0 else d
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def schur(a, max_sweeps_per_dim=30):
    """Complex Schur form ``a = Z T Z^H`` by the shifted QR algorithm.

    Raises
    ------
    ConvergenceError
        If deflation does not complete within ``30*m`` QR sweeps.
    """
    t, z = hessenberg(a)
    m = t.shape[0]
    if m == 1:
        return t, z
    hnorm = np.abs(t).max()
    if hnorm == 0.0:
        return t, z
    budget = max_sweeps_per_dim * m
    sweeps = 0
    ihi = m - 1
    its = 0
    while ihi > 0:
        # locate the top of the active unreduced block
        l = ihi
        while l > 0:
            s = abs(t[l - 1, l - 1]) + abs(t[l, l])
            if s == 0.0:
                s = hnorm
            if abs(t[l, l - 1]) <= _ULP * s or abs(t[l, l - 1]) < _SAFMIN:
                t[l, l - 1] = 0.0
                break
            l -= 1
        if l == ihi:
            ihi -= 1
            its = 0
            continue
        if sweeps >= budget:
            raise ConvergenceError(f"QR iteration failed to deflate within {budget} sweeps")
        sweeps += 1
        its += 1

        if its % 10 == 0:
            mu = t[ihi, ihi] + 0.75 * abs(t[ihi, ihi - 1])
        else:
            mu = _wilkinson_shift(t[ihi - 1, ihi - 1], t[ihi - 1, ihi], t[ihi, ihi - 1], t[ihi, ihi])

        x = t[l, l] - mu
        y = t[l + 1, l]
        for k in range(l, ihi):
            if k > l:
                x, y = t[k, k - 1], t[k + 1, k - 1]
            c, s, r = _givens(x, y)
            g = np.array([[c, s], [-np.conj(s), c]])
            col0 = k - 1 if k > l else l
            t[k:k + 2, col0:] = g @ t[k:k + 2, col0:]
            if k > l:
                t[k, k - 1] = r
                t[k + 1, k - 1] = 0.0
            rmax = min(k + 2, ihi) + 1
            gh = g.conj().T
            t[:rmax, k:k + 2] = t[:rmax, k:k + 2] @ gh
            z[:, k:k + 2] = z[:, k:k + 2] @ gh
    return np.triu(t), z


def _triangular_eigvecs(t):
    """Right eigenvectors of an upper triangular matrix."""
    m = t.shape[0]
    x = np.zeros((m, m), dtype=np.complex128)
    tnorm = np.abs(t).max() if m else 0.0
    smin = max(_ULP * tnorm, _SAFMIN)
    for k in range(m):
        x[k, k] = 1.0
        if k == 0:
            continue
        lhs = t[:k, :k] - t[k, k] * np.eye(k)
        d = np.diagonal(lhs).copy()
        small = np.abs(d) < smin
        if np.any(small):
            lhs = lhs.copy()
            idx = np.flatnonzero(small)
            lhs[idx, idx] = smin
        x[:k, k] = solve_triangular(lhs, -t[:k, k], lower=False)
    return x


def small_eig(h, sigma=0.0, max_dim=MAX_PROJECTED_DIM) -> RitzSet:
    """Eigenpairs of a small, generally non-Hermitian, projected matrix.

    Parameters
    ----------
    h : (m, m) array_like
        Projected matrix.
    sigma : complex
        Target used to order the Ritz values.
    max_dim : int
        Largest accepted ``m``.

    Returns
    -------
    RitzSet
        Values, unit-norm eigenvectors (as columns), and the permutation
        ordering them by distance to ``sigma``.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise DimensionError(f"expected a nonempty square matrix, got shape {h.shape}")
    if h.shape[0] > max_dim:
        raise DimensionError(f"projected dimension {h.shape[0]} exceeds maximum {max_dim}")
    t, z = schur(h)
    values = np.diagonal(t).copy()
    vecs = z @ _triangular_eigvecs(t)
    vecs /= np.linalg.norm(vecs, axis=0)
    return RitzSet(values, vecs, order_by_distance(values, sigma), complex(sigma))


def gram_schmidt(v_basis, u):
    """Project ``u`` off ``span(v_basis)`` by MGS, always reorthogonalizing once.

    Returns the projected vector and the accumulated coefficients
    ``V^H u`` (summed over both passes).
    """
    w = np.array(u, dtype=np.complex128)
    m = 0 if v_basis is None else v_basis.shape[1]
    coeffs = np.zeros(m, dtype=np.complex128)
    if m:
        if v_basis.shape[0] != w.shape[0]:
            raise DimensionError("basis and vector lengths differ")
        for _ in range(2):
            for j in range(m):
                col = v_basis[:, j]
                c = np.vdot(col, w)
                coeffs[j] += c
                w -= c * col
    return w, coeffs


def orthonormalize_against(v_basis, u, breakdown_tol=BREAKDOWN_TOL):
    """Orthonormalize ``u`` against the columns of ``v_basis``.

    Modified Gram-Schmidt with one unconditional reorthogonalization pass.

    Returns
    -------
    v_new : ndarray
        Unit vector along ``(I - V V^H) u``.
    norm_after : float
        ``||(I - V V^H) u||`` before normalization.

    Raises
    ------
    SubspaceBreakdown
        If ``norm_after <= breakdown_tol * ||u||``.
    """
    unorm = np.linalg.norm(u)
    w, _ = gram_schmidt(v_basis, u)
    norm_after = float(np.linalg.norm(w))
    if unorm == 0.0 or norm_after <= breakdown_tol * unorm:
        raise SubspaceBreakdown(
            f"expansion vector lies in the current subspace (residual norm {norm_after:.3e})",
            norm_after=norm_after,
        )
    return w / norm_after, norm_after


def subspace_sine(v_basis, y) -> float:
    """``sin`` of the angle between ``span(v_basis)`` and the vector ``y``."""
    y = np.asarray(y, dtype=np.complex128)
    ynorm = np.linalg.norm(y)
    if ynorm == 0.0:
        raise ValueError("angle to a zero vector is undefined")
    if v_basis is None or v_basis.shape[1] == 0:
        return 1.0
    w = y - v_basis @ (v_basis.conj().T @ y)
    return float(min(1.0, max(0.0, np.linalg.norm(w) / ynorm)))


def vector_sine(a, b) -> float:
    """``sin`` of the angle between two nonzero vectors."""
    a = np.asarray(a, dtype=np.complex128)
    na = np.linalg.norm(a)
    if na == 0.0:
        raise ValueError("angle to a zero vector is undefined")
    return subspace_sine((a / na)[:, None], b)


def rayleigh_update(h, v_basis, a, v_new):
    """Border ``h = V^H A V`` to the projection on ``[V, v_new]``.

    Uses one product with ``A`` and one with ``A^H``.
    """
    v_new = np.asarray(v_new, dtype=np.complex128)
    av = a.matvec(v_new)
    m = 0 if v_basis is None else v_basis.shape[1]
    out = np.empty((m + 1, m + 1), dtype=np.complex128)
    out[m, m] = np.vdot(v_new, av)
    if m:
        h = np.asarray(h)
        if h.shape != (m, m):
            raise DimensionError("projected matrix does not match basis size")
        ahv = a.rmatvec(v_new)
        out[:m, :m] = h
        out[:m, m] = v_basis.conj().T @ av
        out[m, :m] = (v_basis.conj().T @ ahv).conj()
    return out

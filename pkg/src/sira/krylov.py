"""Right-preconditioned restarted GMRES and the JD projected operator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .sparse import ShiftedOperator, SparseMatrix

DEFAULT_RESTART = 30
DEFAULT_MAXIT = 300
_REORTH_RATIO = 1.0 / np.sqrt(2.0)


class LinearOperator:
    """A square linear map given by its action."""

    def __init__(self, dim, apply):
        self.dim = int(dim)
        self._apply = apply

    def apply(self, v):
        return self._apply(v)

    __call__ = apply

    @classmethod
    def from_matrix(cls, a):
        if isinstance(a, SparseMatrix):
            return cls(a.n, a.matvec)
        if isinstance(a, ShiftedOperator):
            return cls(a.dim, a.apply)
        a = np.asarray(a)
        return cls(a.shape[0], lambda v: a @ v)

    @classmethod
    def identity(cls, n):
        return cls(n, lambda v: np.array(v, dtype=np.complex128))


@dataclass
class InnerSolveReport:
    """Outcome of one inner solve.

    ``relres`` is always the true relative residual of ``solution``;
    ``estimate`` is the last GMRES recurrence value for comparison and
    ``estimates`` holds the recurrence values of every cycle.
    """

    solution: np.ndarray
    relres: float
    iterations: int
    converged: bool
    estimate: float = float("nan")
    restarts: int = 0
    estimates: list = field(default_factory=list)


def _identity(v):
    return np.array(v, dtype=np.complex128)


def gmres_right(op, b, m_inv=None, tol=1e-8, restart=DEFAULT_RESTART, maxit=DEFAULT_MAXIT,
                callback=None, project=None) -> InnerSolveReport:
    """Solve ``op(u) = b`` by GMRES(restart) with right preconditioning.

    The iteration starts from zero and works on ``op(m_inv(.))``; the returned
    solution is ``m_inv`` applied to the preconditioned-space iterate.

    Parameters
    ----------
    op : callable or LinearOperator
        Coefficient operator.
    b : ndarray
        Right-hand side, nonzero.
    m_inv : callable, optional
        Action of the preconditioner inverse. Identity if omitted.
    tol : float
        Target for the true relative residual ``||b - op(u)|| / ||b||``.
    restart : int
        Krylov dimension per cycle.
    maxit : int
        Budget of Arnoldi steps (each applies ``op`` once).
    callback : callable, optional
        Called with every new unit Arnoldi basis vector.
    project : callable, optional
        Projector onto the range of ``op``; applied to recomputed residuals and
        new basis vectors so roundoff cannot leak outside that range.

    Returns
    -------
    InnerSolveReport
        ``iterations`` counts Arnoldi steps over all cycles; the true-residual
        checks at cycle ends are not included.
    """
    apply = op.apply if hasattr(op, "apply") else op
    if m_inv is None:
        precond = _identity
    else:
        precond = m_inv.solve if hasattr(m_inv, "solve") else m_inv
    if not 0 < tol <= 1:
        raise ValueError("tol must lie in (0, 1]")
    if restart < 1:
        raise ValueError("restart must be positive")

    b = np.asarray(b, dtype=np.complex128)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        raise ValueError("right-hand side must be nonzero")
    n = b.shape[0]

    x = np.zeros(n, dtype=np.complex128)
    r = b.copy()
    beta = bnorm
    its = 0
    cycles = 0
    estimate = 1.0
    relres = 1.0
    history = []

    while True:
        basis = np.zeros((restart + 1, n), dtype=np.complex128)
        hess = np.zeros((restart + 1, restart), dtype=np.complex128)
        cs = np.zeros(restart)
        sn = np.zeros(restart, dtype=np.complex128)
        g = np.zeros(restart + 1, dtype=np.complex128)
        g[0] = beta
        cycle_est = []
        history.append(cycle_est)
        basis[0] = r / beta
        if callback is not None:
            callback(basis[0])
        k = 0
        for j in range(restart):
            if its >= maxit:
                break
            w = apply(precond(basis[j]))
            its += 1
            wnorm = np.linalg.norm(w)
            for _ in range(2):
                before = np.linalg.norm(w)
                for i in range(j + 1):
                    c = np.vdot(basis[i], w)
                    hess[i, j] += c
                    w = w - c * basis[i]
                after = np.linalg.norm(w)
                if after > _REORTH_RATIO * before:
                    break
            if project is not None:
                w = project(w)
                after = np.linalg.norm(w)
            hess[j + 1, j] = after
            for i in range(j):
                h0, h1 = hess[i, j], hess[i + 1, j]
                hess[i, j] = cs[i] * h0 + sn[i] * h1
                hess[i + 1, j] = -np.conj(sn[i]) * h0 + cs[i] * h1
            h0, h1 = hess[j, j], hess[j + 1, j]
            denom = np.hypot(abs(h0), abs(h1))
            if denom == 0:
                cs[j], sn[j] = 1.0, 0.0
            elif h0 == 0:
                cs[j], sn[j] = 0.0, 1.0
            else:
                cs[j] = abs(h0) / denom
                sn[j] = (h0 / abs(h0)) * np.conj(h1) / denom
            hess[j, j] = cs[j] * h0 + sn[j] * h1
            hess[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            estimate = abs(g[j + 1]) / bnorm
            cycle_est.append(estimate)
            if after <= 1e-14 * wnorm:
                break
            basis[j + 1] = w / after
            if callback is not None:
                callback(basis[j + 1])
            if estimate <= tol:
                break
        cycles += 1
        if k > 0:
            y = solve_triangular(hess[:k, :k], g[:k], lower=False, check_finite=False)
            x = x + precond(basis[:k].T @ y)
        r = b - apply(x)
        if project is not None:
            r = project(r)
        beta = np.linalg.norm(r)
        relres = beta / bnorm
        if relres <= tol:
            return InnerSolveReport(x, relres, its, True, estimate, cycles - 1, history)
        if its >= maxit or beta == 0:
            return InnerSolveReport(x, relres, its, False, estimate, cycles - 1, history)


def orth_projector(y):
    """Action of ``I - y y^H`` for unit ``y``."""
    y = np.asarray(y, dtype=np.complex128)

    def project(v):
        return v - np.vdot(y, v) * y

    return project


def jd_projected_operator(a: SparseMatrix, shift, y) -> LinearOperator:
    """``v -> (I - y y^H)(A - shift I)(I - y y^H) v`` for unit ``y``."""
    shifted = ShiftedOperator(a, shift)
    project = orth_projector(y)

    def apply(v):
        return project(shifted.apply(project(v)))

    return LinearOperator(a.n, apply)

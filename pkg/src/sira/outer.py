"""Outer eigensolvers: inexact/exact SIRA, fixed-target JD and shift-invert Arnoldi.

All methods seek the eigenvalue of ``A`` closest to a target ``sigma``. SIRA
and JD expand a subspace by an approximate inner solve and extract Ritz
pairs of ``A``; SIA runs Arnoldi on ``(A - sigma I)^{-1}`` and maps the Ritz
values back. Each outer iteration is logged to a :class:`ConvergenceRecord`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dense import (
    MAX_PROJECTED_DIM,
    RitzSet,
    gram_schmidt,
    order_by_distance,
    orthonormalize_against,
    rayleigh_update,
    small_eig,
)
from .errors import ConfigError, SubspaceBreakdown
from .krylov import InnerSolveReport, gmres_right, jd_projected_operator, orth_projector
from .precond import ProjectedPreconditioner, ilut_factor
from .sparse import ShiftedOperator, SparseMatrix, one_norm

log = logging.getLogger(__name__)

METHODS = ("SIRA", "JD", "SIRA_exact", "SIA_exact", "SIA_inexact")
EPS_CAP = 0.1
EXACT_INNER_TOL = 1e-14
SIA_FLOOR = 1e-14


@dataclass
class InnerConfig:
    restart: int = 30
    maxit: int = 300
    droptol: float = 1e-3


@dataclass
class OuterConfig:
    """Settings for one solver run.

    ``m_max`` bounds the outer iterations of a cycle (the subspace
    dimension); ``max_restarts`` > 0 turns on restarting with the best Ritz
    vector of the finished cycle.
    """

    sigma: complex = 0.0
    teps: float = 1e-3
    outer_tol_factor: float = 1e-10
    m_max: int = 150
    max_restarts: int = 0
    method: str = "SIRA"
    inner: InnerConfig = field(default_factory=InnerConfig)
    exact_tol: float = EXACT_INNER_TOL
    eps_cap: float = EPS_CAP
    sia_m_budget: int | None = None
    sia_floor: float = SIA_FLOOR
    sia_cap: float = EPS_CAP

    def __post_init__(self):
        self.sigma = complex(self.sigma)
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if not 0.0 < self.teps < 0.5:
            raise ConfigError(f"teps must lie in (0, 0.5), got {self.teps}")
        if self.m_max < 2:
            raise ConfigError("m_max must be at least 2")
        if self.m_max > MAX_PROJECTED_DIM:
            raise ConfigError(f"m_max may not exceed {MAX_PROJECTED_DIM}")
        if self.max_restarts < 0:
            raise ConfigError("max_restarts must be nonnegative")
        if self.outer_tol_factor <= 0:
            raise ConfigError("outer_tol_factor must be positive")
        if self.inner.droptol < 0:
            raise ConfigError("droptol must be nonnegative")
        if self.inner.restart < 1 or self.inner.maxit < 1:
            raise ConfigError("inner restart and maxit must be positive")

    @property
    def label(self):
        if self.method in ("SIRA", "JD"):
            return f"{self.method}({self.teps:g})"
        return {"SIRA_exact": "Exact SIRA", "SIA_exact": "Exact SIA", "SIA_inexact": "Inexact SIA"}[self.method]

    def outer_tol(self, a: SparseMatrix):
        return max(one_norm(a), 1.0) * self.outer_tol_factor


@dataclass
class SubspaceState:
    """Current search space and selected Ritz pair."""

    v_basis: np.ndarray
    h: np.ndarray
    ritz: RitzSet
    nu: complex
    y: np.ndarray
    residual: np.ndarray
    residual_norm: float

    @property
    def dim(self):
        return self.v_basis.shape[1]


@dataclass
class IterationRecord:
    outer_index: int
    cycle: int
    residual_norm: float
    relative_residual: float
    ritz_value: complex
    inner_tol: float = math.nan
    inner_iters: int = 0
    inner_relres: float = math.nan
    inner_converged: bool = True
    eps_capped: bool = False
    t1: float = 0.0
    t2: float = 0.0
    t4: float = 0.0


@dataclass
class ConvergenceRecord:
    """Per-iteration telemetry and run totals.

    Timing buckets: ``t1`` small eigenproblems, ``t2`` orthonormalization and
    projected-matrix updates, ``t3`` preconditioner construction, ``t4``
    inner Krylov solves.
    """

    method: str
    teps: float
    sigma: complex
    tol: float
    a_one_norm: float
    iterations: list = field(default_factory=list)
    t3: float = 0.0
    status: str = "running"
    eigenvalue: complex = complex("nan")
    restarts: int = 0
    cycle_best: list = field(default_factory=list)

    @property
    def i_out(self):
        return len(self.iterations)

    @property
    def i_inn(self):
        return sum(it.inner_iters for it in self.iterations)

    @property
    def i_01(self):
        return sum(1 for it in self.iterations if it.eps_capped)

    @property
    def t1(self):
        return sum(it.t1 for it in self.iterations)

    @property
    def t2(self):
        return sum(it.t2 for it in self.iterations)

    @property
    def t4(self):
        return sum(it.t4 for it in self.iterations)

    @property
    def converged(self):
        return self.status in ("converged", "breakdown")

    @property
    def inner_nonconverged(self):
        return sum(1 for it in self.iterations if not it.inner_converged)


@dataclass
class SolveResult:
    eigenvalue: complex
    eigenvector: np.ndarray
    record: ConvergenceRecord

    @property
    def converged(self):
        return self.record.converged

    @property
    def restarts(self):
        return self.record.restarts

    def __iter__(self):
        yield (self.eigenvalue, self.eigenvector)
        yield self.record


class RestartedResult(SolveResult):
    """Unpacks as ``(eigenpair, record, restart_count)``."""

    def __iter__(self):
        yield (self.eigenvalue, self.eigenvector)
        yield self.record
        yield self.record.restarts


@dataclass
class Candidate:
    """Best Ritz pair seen in a cycle, by residual norm."""

    nu: complex
    y: np.ndarray
    residual_norm: float
    outer_index: int


class RestartPolicy:
    """Tracks the argmin of ``||(A - nu_i I) y_i||`` over one cycle."""

    def __init__(self):
        self.best_candidate = None

    def offer(self, nu, y, residual_norm, outer_index):
        best = self.best_candidate
        if best is None or residual_norm < best.residual_norm:
            self.best_candidate = Candidate(nu, y.copy(), residual_norm, outer_index)


def _inner_tol(teps, ritz: RitzSet, sigma, nu, m, cap=EPS_CAP):
    if m == 1:
        return teps, False
    others = ritz.sorted_values[1:m]
    worst = 0.0
    for nu_i in others:
        gap = abs(nu_i - nu)
        if gap == 0.0:
            worst = math.inf
            break
        worst = max(worst, abs(nu_i - sigma) / gap)
    eps = 2.0 * teps * worst
    if eps >= cap:
        return cap, True
    return eps, False


def compute_inner_tol(teps, ritz: RitzSet, sigma, nu, m, cap=EPS_CAP) -> float:
    """Inner relative-residual tolerance for inexact SIRA and JD.

    ``eps = 2*teps*max_{i>=2} |(nu_i - sigma)/(nu_i - nu)|`` over the Ritz
    values other than the selected ``nu``, capped at ``cap``; for a
    one-dimensional subspace ``eps = teps``. A Ritz value coinciding with
    ``nu`` makes the ratio unbounded, so the cap applies.
    """
    return _inner_tol(teps, ritz, sigma, nu, m, cap)[0]


def inner_tol_capped(teps, ritz, sigma, nu, m, cap=EPS_CAP) -> bool:
    """Whether :func:`compute_inner_tol` returns the cap for these inputs."""
    return _inner_tol(teps, ritz, sigma, nu, m, cap)[1]


def relaxed_sia_tol(outer_tol, m_budget, current_residual_norm, floor=SIA_FLOOR, cap=EPS_CAP):
    """Relaxed inner tolerance for inexact shift-invert Arnoldi.

    Tight while the outer residual is large and loosening in proportion to
    ``1/||r||`` as it converges: ``min(cap, max(floor, tol/(m*||r||)))``.
    ``current_residual_norm=None`` (no iterate yet) gives ``floor``.
    """
    if current_residual_norm is None:
        return floor
    if current_residual_norm <= 0:
        return cap
    return min(cap, max(floor, outer_tol / (m_budget * current_residual_norm)))


def _selected_nu_for_tol(nu, sigma):
    # nu == sigma would make the SIRA coefficient sigma - nu vanish
    if nu == sigma:
        return nu + 1e-13 * (1.0 + abs(sigma))
    return nu


def sira_expand(state: SubspaceState, a: SparseMatrix, sigma, precond, eps, inner=None):
    """Expansion vector from an inexact solve of ``(A - sigma I) u = r``.

    Returns ``(v_new, report)``; raises :class:`SubspaceBreakdown` when the
    solution adds nothing to the subspace.
    """
    inner = inner or InnerConfig()
    if not state.residual_norm > 0:
        raise ValueError("residual is zero; the Ritz pair is already exact")
    op = ShiftedOperator(a, sigma)
    report = gmres_right(op, state.residual, precond, tol=eps, restart=inner.restart, maxit=inner.maxit)
    v_new, _ = orthonormalize_against(state.v_basis, report.solution)
    return v_new, report


def jd_expand(state: SubspaceState, a: SparseMatrix, sigma, precond, eps, inner=None, callback=None):
    """Expansion vector from an inexact solve of the JD correction equation.

    Solves ``(I - yy^H)(A - sigma I)(I - yy^H) u = -r`` with ``u`` orthogonal
    to ``y``, preconditioned by ``M`` restricted to the complement of ``y``.
    """
    inner = inner or InnerConfig()
    if not state.residual_norm > 0:
        raise ValueError("residual is zero; the Ritz pair is already exact")
    proj = ProjectedPreconditioner(precond, state.y)
    op = jd_projected_operator(a, sigma, state.y)
    project = orth_projector(state.y)
    report = gmres_right(op, -project(state.residual), proj, tol=eps, restart=inner.restart,
                         maxit=inner.maxit, callback=callback, project=project)
    v_new, _ = orthonormalize_against(state.v_basis, report.solution)
    return v_new, report


def _build_precond(a, cfg: OuterConfig, record):
    t0 = time.perf_counter()
    precond = ilut_factor(a, cfg.sigma, cfg.inner.droptol)
    record.t3 += time.perf_counter() - t0
    return precond


def _starting_vector(n, start):
    if start is None:
        return np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128)
    v = np.array(start, dtype=np.complex128)
    if v.shape != (n,):
        raise ConfigError("starting vector has the wrong length")
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ConfigError("starting vector is zero")
    return v / nv


def _new_record(a, cfg):
    return ConvergenceRecord(cfg.method, cfg.teps, cfg.sigma, cfg.outer_tol(a), one_norm(a))


def _rr_cycle(a, cfg: OuterConfig, precond, v1, record: ConvergenceRecord, cycle, max_iter, on_state=None):
    """One cycle of SIRA or JD from the unit start vector ``v1``."""
    n = a.n
    tol = record.tol
    scale = max(record.a_one_norm, np.finfo(float).tiny)
    policy = RestartPolicy()
    basis = np.zeros((n, max_iter), dtype=np.complex128, order="F")
    basis[:, 0] = v1
    t0 = time.perf_counter()
    h = rayleigh_update(None, None, a, v1)
    t2_pending = time.perf_counter() - t0
    m = 1
    exact = cfg.method == "SIRA_exact"
    expand = jd_expand if cfg.method == "JD" else sira_expand

    while True:
        v_basis = basis[:, :m]
        t0 = time.perf_counter()
        ritz = small_eig(h, cfg.sigma)
        t1 = time.perf_counter() - t0
        nu, z = ritz.nearest()
        y = v_basis @ z
        y /= np.linalg.norm(y)
        r = a.matvec(y) - nu * y
        rnorm = float(np.linalg.norm(r))
        policy.offer(nu, y, rnorm, record.i_out + 1)
        rec = IterationRecord(record.i_out + 1, cycle, rnorm, rnorm / scale, complex(nu), t1=t1, t2=t2_pending)
        record.iterations.append(rec)
        state = SubspaceState(v_basis, h, ritz, nu, y, r, rnorm)
        if on_state is not None:
            on_state(state)
        log.debug("%s it=%d |r|=%.3e nu=%s", cfg.label, rec.outer_index, rnorm, nu)

        if rnorm <= tol:
            record.status = "converged"
            return policy, y, nu
        if m >= max_iter:
            record.status = "max_iterations"
            return policy, None, None

        if exact:
            eps, capped = cfg.exact_tol, False
        else:
            eps, capped = _inner_tol(cfg.teps, ritz, cfg.sigma, _selected_nu_for_tol(nu, cfg.sigma), m, cfg.eps_cap)
        t0 = time.perf_counter()
        try:
            v_new, report = expand(state, a, cfg.sigma, precond, eps, cfg.inner)
        except SubspaceBreakdown:
            rec.t4 = time.perf_counter() - t0
            record.status = "breakdown"
            return policy, y, nu
        rec.t4 = time.perf_counter() - t0
        rec.inner_tol = eps
        rec.eps_capped = capped
        rec.inner_iters = report.iterations
        rec.inner_relres = report.relres
        rec.inner_converged = report.converged
        if not report.converged:
            log.warning("%s it=%d inner solve stopped at relres %.2e > %.2e",
                        cfg.label, rec.outer_index, report.relres, eps)

        t0 = time.perf_counter()
        h = rayleigh_update(h, v_basis, a, v_new)
        basis[:, m] = v_new
        m += 1
        t2_pending = time.perf_counter() - t0


@dataclass
class ArnoldiState:
    """Arnoldi factorization for ``B = (A - sigma I)^{-1}`` built from inexact solves."""

    basis: np.ndarray
    hess: np.ndarray
    k: int = 1

    @property
    def v_basis(self):
        return self.basis[:, : self.k]


def sia_step(state: ArnoldiState, a: SparseMatrix, sigma, precond, inner_tol, inner=None):
    """Append one Arnoldi vector: solve ``(A - sigma I) u = v_k`` and orthonormalize ``u``.

    Returns the report of the inner solve. ``state`` is extended in place;
    :class:`SubspaceBreakdown` signals an invariant Krylov subspace (the new
    column of ``hess`` is still filled in).
    """
    inner = inner or InnerConfig()
    k = state.k
    report = gmres_right(ShiftedOperator(a, sigma), state.basis[:, k - 1], precond,
                         tol=inner_tol, restart=inner.restart, maxit=inner.maxit)
    w, coeffs = gram_schmidt(state.v_basis, report.solution)
    beta = float(np.linalg.norm(w))
    state.hess[:k, k - 1] = coeffs
    state.hess[k, k - 1] = beta
    unorm = np.linalg.norm(report.solution)
    if beta <= 1e-14 * unorm:
        raise SubspaceBreakdown("Krylov subspace of B is invariant", norm_after=beta)
    state.basis[:, k] = w / beta
    state.k = k + 1
    return report


def sia_ritz(state: ArnoldiState, k, sigma):
    """Ritz pairs of ``B`` from the leading ``k x k`` Hessenberg block.

    Returns a :class:`RitzSet` whose values are the mapped approximations
    ``sigma + 1/theta`` to eigenvalues of ``A``.
    """
    base = small_eig(state.hess[:k, :k], 0.0)
    theta = base.values
    with np.errstate(divide="ignore", invalid="ignore"):
        mapped = np.where(theta != 0, sigma + 1.0 / np.where(theta != 0, theta, 1.0), np.inf + 0j)
    return RitzSet(mapped, base.vectors, order_by_distance(mapped, sigma), complex(sigma))


def _sia_cycle(a, cfg: OuterConfig, precond, v1, record, cycle, max_iter, on_state=None):
    n = a.n
    tol = record.tol
    scale = max(record.a_one_norm, np.finfo(float).tiny)
    policy = RestartPolicy()
    state = ArnoldiState(np.zeros((n, max_iter + 1), dtype=np.complex128, order="F"),
                         np.zeros((max_iter + 1, max_iter), dtype=np.complex128))
    state.basis[:, 0] = v1
    budget = cfg.sia_m_budget or cfg.m_max
    prev_res = None
    exact = cfg.method == "SIA_exact"

    while True:
        k = state.k
        if exact:
            eps = cfg.exact_tol
        else:
            eps = relaxed_sia_tol(tol, budget, prev_res, cfg.sia_floor, cfg.sia_cap)
        t0 = time.perf_counter()
        breakdown = False
        try:
            report = sia_step(state, a, cfg.sigma, precond, eps, cfg.inner)
        except SubspaceBreakdown:
            breakdown = True
            report = None
        t4 = time.perf_counter() - t0
        # the solve at step k enlarges the Hessenberg block to k x k
        t0 = time.perf_counter()
        ritz = sia_ritz(state, k, cfg.sigma)
        t1 = time.perf_counter() - t0
        nu, z = ritz.nearest()
        y = state.basis[:, :k] @ z
        y /= np.linalg.norm(y)
        r = a.matvec(y) - nu * y
        rnorm = float(np.linalg.norm(r)) if np.isfinite(nu) else math.inf
        prev_res = rnorm
        policy.offer(nu, y, rnorm, record.i_out + 1)
        rec = IterationRecord(record.i_out + 1, cycle, rnorm, rnorm / scale, complex(nu), inner_tol=eps, t1=t1, t4=t4)
        if report is not None:
            rec.inner_iters = report.iterations
            rec.inner_relres = report.relres
            rec.inner_converged = report.converged
        record.iterations.append(rec)
        if on_state is not None:
            on_state(state)
        log.debug("%s it=%d |r|=%.3e eps=%.1e", cfg.label, rec.outer_index, rnorm, eps)
        if rnorm <= tol:
            record.status = "converged"
            return policy, y, nu
        if breakdown:
            record.status = "breakdown"
            return policy, y, nu
        if k >= max_iter:
            record.status = "max_iterations"
            return policy, None, None


def _cycle_fn(method):
    return _sia_cycle if method.startswith("SIA") else _rr_cycle


def run_solver(a: SparseMatrix, config: OuterConfig, start=None, precond=None, on_state=None) -> SolveResult:
    """Run one (non-restarted) cycle of the configured method.

    Stops when ``||r|| <= max(||A||_1, 1) * outer_tol_factor`` or after
    ``m_max`` outer iterations. Without convergence the best candidate by
    residual norm is returned with status ``max_iterations``.
    """
    record = _new_record(a, config)
    if precond is None:
        precond = _build_precond(a, config, record)
    v1 = _starting_vector(a.n, start)
    policy, y, nu = _cycle_fn(config.method)(a, config, precond, v1, record, 0, config.m_max, on_state)
    best = policy.best_candidate
    record.cycle_best.append(best.residual_norm)
    if y is None:
        y, nu = best.y, best.nu
    record.eigenvalue = complex(nu)
    return SolveResult(complex(nu), y, record)


def run_restarted(a: SparseMatrix, config: OuterConfig, start=None, precond=None, on_cycle=None) -> RestartedResult:
    """Cycles of at most ``m_max`` outer iterations, each restarted from the best Ritz vector.

    The restart vector is the candidate minimizing ``||(A - nu I) y||`` over
    all outer iterations of the finished cycle.
    """
    record = _new_record(a, config)
    if precond is None:
        precond = _build_precond(a, config, record)
    v1 = _starting_vector(a.n, start)
    cycle_fn = _cycle_fn(config.method)
    for cycle in range(config.max_restarts + 1):
        policy, y, nu = cycle_fn(a, config, precond, v1, record, cycle, config.m_max)
        best = policy.best_candidate
        record.cycle_best.append(best.residual_norm)
        record.restarts = cycle
        if on_cycle is not None:
            on_cycle(cycle, policy)
        if y is not None:
            record.eigenvalue = complex(nu)
            return RestartedResult(complex(nu), y, record)
        v1 = best.y / np.linalg.norm(best.y)
    record.eigenvalue = complex(best.nu)
    return RestartedResult(complex(best.nu), best.y, record)


def solve(a: SparseMatrix, config: OuterConfig, start=None) -> SolveResult:
    """Dispatch to :func:`run_restarted` when restarts are allowed."""
    if config.max_restarts > 0:
        return run_restarted(a, config, start)
    return run_solver(a, config, start)

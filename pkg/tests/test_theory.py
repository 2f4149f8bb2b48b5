from dataclasses import replace

import numpy as np
import pytest

from sira.dense import small_eig, subspace_sine, vector_sine
from sira.theory import (
    AnalysisProbe,
    _improvement,
    build_oracle,
    check_equivalence,
    check_eps_bound,
    check_expansion_identity,
    check_lemma1,
    check_optimal_alpha,
    check_projection_bounds,
    check_residual_sandwich,
    check_sine_product,
    check_tau_bounds,
    check_tau_calibration,
    exact_solution,
    make_probe,
    proj_out,
    random_unitary,
    ritz_nearest,
    run_identity_suite,
    run_inequality_suite,
    sep_continuity,
    sin_sub,
    trajectory_sin_v_xperp,
)


def orth(m):
    q, _ = np.linalg.qr(m)
    return q


def probe_with_basis(probe, v_basis):
    nu, y = ritz_nearest(probe.a_dense, v_basis, probe.sigma)
    return replace(probe, v_basis=v_basis, nu=nu, y=y)


def manual_probe(a, sigma, v_basis, f, eps=1e-3):
    oracle = build_oracle(a, sigma)
    nu, y = ritz_nearest(a, v_basis, sigma)
    return AnalysisProbe(a, sigma, oracle.x, oracle.lam, v_basis, y, nu, f, eps, oracle)


# oracle and probe construction

@pytest.mark.parametrize("seed", range(6))
def test_oracle_invariants(seed):
    p = make_probe(seed, n=60)
    a = p.a_dense
    na = np.linalg.norm(a, 2)
    assert np.linalg.norm(a @ p.x - p.lam * p.x) <= 1e-12 * na
    assert p.oracle.reconstruction_error(a) <= 1e-10
    gaps = np.abs(p.oracle.values - p.lam)
    assert np.sort(gaps)[1] > 1e-8
    assert abs(p.lam - p.sigma) == pytest.approx(np.min(np.abs(p.oracle.values - p.sigma)))
    o = p.oracle
    full = np.column_stack([o.x, o.x_perp])
    assert np.linalg.norm(full.conj().T @ full - np.eye(60)) <= 1e-12
    # B in the (x, X_perp) basis is block upper triangular
    blk = full.conj().T @ o.b @ full
    assert np.linalg.norm(blk[1:, 0]) <= 1e-10 * o.b_norm
    np.testing.assert_allclose(blk[0, 1:], o.c.conj(), atol=1e-10 * o.b_norm)
    np.testing.assert_allclose(blk[1:, 1:], o.l, atol=1e-10 * o.b_norm)


def test_probe_determinism():
    p1, p2 = make_probe(11, n=40), make_probe(11, n=40)
    assert p1.a_dense.tobytes() == p2.a_dense.tobytes()
    assert p1.v_basis.tobytes() == p2.v_basis.tobytes()
    for check in (check_lemma1, check_equivalence, check_eps_bound, check_tau_bounds):
        assert check(p1).residual == check(p2).residual or np.isnan(check(p1).residual)


def test_helpers_agree_with_library(rng):
    # dual route: explicit projector vs the solver's own geometry helpers
    for _ in range(5):
        q = orth(rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4)))
        v = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        assert abs(sin_sub(q, v) - subspace_sine(q, v)) <= 1e-13
    p = make_probe(3, n=40)
    h = p.v_basis.conj().T @ p.a_dense @ p.v_basis
    nu, z = small_eig(h, p.sigma).nearest()
    assert abs(nu - p.nu) <= 1e-10 * np.linalg.norm(h)
    assert vector_sine(p.v_basis @ z, p.y) <= 1e-9


# perturbed expansion angle

def test_angle_identity_f_in_span():
    p = make_probe(5, n=40)
    p = replace(p, f=p.v_basis[:, 0].copy())
    out = check_lemma1(p)
    assert out.details["lhs"] <= 1e-13 and out.details["rhs"] <= 1e-13
    assert out.passed


def test_angle_identity_zero_eps():
    p = replace(make_probe(6, n=40), eps=0.0)
    out = check_lemma1(p)
    assert out.details["teps"] == 0.0 and out.details["lhs"] <= 1e-14


def test_angle_identity_random_probes():
    worst = 0.0
    for seed in range(200):
        p = make_probe(1000 + seed, n=80, m=5, eps=[1e-3, 1e-1][seed % 2])
        for method in ("SIRA", "JD"):
            out = check_lemma1(p, method)
            assert out.admissible
            worst = max(worst, out.residual)
    assert worst <= 1e-10


def test_angle_identity_skips_degenerate():
    p = make_probe(7, n=40, kind="random")
    u = exact_solution(p)
    p = replace(p, v_basis=orth(np.column_stack([u, p.v_basis])))
    assert not check_lemma1(p).admissible


# expansion identity

def test_expansion_identity_x_in_span():
    p = make_probe(8, n=40, kind="random")
    p = probe_with_basis(p, orth(np.column_stack([p.x, p.v_basis[:, 1:]])))
    lhs, rhs, _ = _improvement(p.v_basis, proj_out(p.v_basis, p.f) / np.linalg.norm(proj_out(p.v_basis, p.f)), p.x)
    assert lhs <= 1e-13 and rhs == 0.0


def test_expansion_identity_no_improvement(rng):
    p = make_probe(9, n=40, kind="random")
    x_perp = proj_out(p.v_basis, p.x)
    w = proj_out(np.column_stack([p.v_basis, x_perp / np.linalg.norm(x_perp)]), rng.standard_normal(40) + 0j)
    v = w / np.linalg.norm(w)
    lhs, rhs, step = _improvement(p.v_basis, v, p.x)
    assert step == pytest.approx(1.0, abs=1e-14)
    assert lhs == pytest.approx(sin_sub(p.v_basis, p.x), abs=1e-14)


def test_expansion_identity_random():
    for seed in range(40):
        out = check_expansion_identity(make_probe(2000 + seed, n=100))
        assert out.passed, out


def test_sine_product():
    for seed in range(5):
        out = check_sine_product(seed, n=60)
        assert out.passed and len(out.details["factors"]) == 5


def test_trajectory_reported():
    traj = trajectory_sin_v_xperp(1, n=40, steps=6)
    assert len(traj) == 6 and all(0.0 <= s <= 1.0 for s in traj)


# tau bounds

def test_tau_zero_perturbation():
    p = make_probe(12, n=40)
    out = check_tau_bounds(p, u_tilde=exact_solution(p))
    assert out.details["tau"] == 0.0
    assert out.details["ratio"] == pytest.approx(1.0, abs=1e-12)
    assert out.passed


@pytest.mark.parametrize("seed", range(10))
def test_tau_calibration(seed):
    p = make_probe(3000 + seed, n=60)
    out = check_tau_calibration(p, 0.01, seed=seed)
    assert out.admissible
    assert out.details["tau"] == pytest.approx(0.01, rel=1e-8)
    assert 0.99 <= out.details["ratio"] <= 1.01


def test_tau_skips_large_tau():
    p = replace(make_probe(13, n=40), eps=0.45)
    outs = [check_tau_bounds(replace(p, f=np.roll(p.f, k))) for k in range(5)]
    assert all(o.passed for o in outs)
    assert any(not o.admissible for o in outs) or all(o.details["tau"] < 1 for o in outs)


# eps/teps and residual bounds

def test_eps_bounds_random():
    for seed in range(40):
        p = make_probe(4000 + seed, n=60)
        for method in ("SIRA", "JD"):
            out = check_eps_bound(p, method)
            assert out.passed, (seed, method, out.details)


def test_sin_yx_bound_y_close_to_x(rng):
    p = make_probe(14, n=40)
    p = probe_with_basis(p, (p.x + 1e-9 * p.f)[:, None] / np.linalg.norm(p.x + 1e-9 * p.f))
    out = check_eps_bound(p, "SIRA")
    lhs, rhs = out.details["slack"]["sin_yx"]
    assert out.admissible and lhs <= 1e-8 and out.passed


def test_projection_bounds_random():
    for seed in range(40):
        assert check_projection_bounds(make_probe(5000 + seed, n=60)).passed


def test_sandwich_exact_solution():
    p = make_probe(15, n=40)
    for method in ("SIRA", "JD"):
        out = check_residual_sandwich(p, method, eps=0.0)
        assert out.details["err"] == 0.0 and out.details["relres"] <= 1e-13


def test_sandwich_unitary_shift(rng):
    n = 30
    q = random_unitary(rng, n)
    sigma = 0.3 + 0.1j
    a = sigma * np.eye(n) + q
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    p = manual_probe(a, sigma, orth(rng.standard_normal((n, 3)) + 0j), f / np.linalg.norm(f), eps=1e-2)
    out = check_residual_sandwich(p, "SIRA")
    assert out.details["kappa"] == pytest.approx(1.0, abs=1e-12)
    assert out.details["relres"] == pytest.approx(out.details["err"], rel=1e-10)


def test_sandwich_random():
    for seed in range(40):
        p = make_probe(6000 + seed, n=60)
        for method in ("SIRA", "JD"):
            assert check_residual_sandwich(p, method).passed


# equivalence of the SIRA and JD expansions

def test_equivalence_two_by_two():
    a = np.diag([1.0, 3.0]).astype(complex)
    sigma = 0.5
    y = np.array([0.8, 0.6], dtype=complex)
    p = manual_probe(a, sigma, y[:, None], np.array([1.0, 0.0], dtype=complex))
    out = check_equivalence(p)
    assert out.passed and out.residual <= 1e-14
    # by hand: nu = y^H A y = 0.64 + 1.08, B y = (0.8/0.5, 0.6/2.5)
    assert p.nu == pytest.approx(1.72)
    by = np.array([1.6, 0.24])
    target = by - np.vdot(y, by) * y
    u_s = np.linalg.solve(a - sigma * np.eye(2), a @ y - p.nu * y)
    u_s_perp = u_s - np.vdot(y, u_s) * y
    assert vector_sine(target, u_s_perp) <= 1e-14


def test_equivalence_random():
    for seed in range(60):
        p = make_probe(7000 + seed, n=int(20 + seed % 80))
        out = check_equivalence(p)
        assert out.passed, out.details
        assert out.details["uj_perp"] <= 1e-12
        assert out.details["gamma_err"] <= 1e-10


def test_equivalence_rejects_nu_equal_sigma():
    p = make_probe(16, n=40)
    assert not check_equivalence(replace(p, sigma=p.nu)).admissible


def test_optimal_alpha():
    for seed in range(10):
        assert check_optimal_alpha(make_probe(seed, n=40)).passed


def test_sep_continuity_on_converged_probe():
    hits = 0
    for seed in range(200):
        p = make_probe(8000 + seed, n=40, kind="near")
        out = sep_continuity(p)
        assert out.passed
        if out.admissible:
            hits += 1
    assert hits > 0


# whole suites at small sizes

def test_suites_small():
    ident = run_identity_suite(count=12, seed=3)
    assert ident.ok and ident.probes == 12
    assert sum(ident.admissible.values()) > 0
    ineq = run_inequality_suite(count=12, seed=3)
    assert ineq.ok and ineq.probes == 12
    assert all(isinstance(line, str) for line in ident.lines() + ineq.lines())

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn, random_orthonormal, random_sparse
from sira.dense import (
    gram_schmidt,
    hessenberg,
    order_by_distance,
    orthonormalize_against,
    rayleigh_update,
    schur,
    small_eig,
    subspace_sine,
    vector_sine,
)
from sira.errors import ConvergenceError, DimensionError, SubspaceBreakdown
from sira.sparse import SparseMatrix


def test_small_eig_diagonal():
    r = small_eig(np.diag([5, 1 + 2j]))
    np.testing.assert_allclose(r.values, [5, 1 + 2j])
    np.testing.assert_allclose(np.abs(r.vectors), np.eye(2), atol=1e-15)


def test_small_eig_scalar():
    r = small_eig([[7.0]])
    assert r.values[0] == 7 and r.vectors[0, 0] == 1


def test_small_eig_random_residual_and_trace(rng):
    h = crandn(rng, 30, 30)
    r = small_eig(h, sigma=0.3j)
    hn = np.linalg.norm(h, 2)
    for k in range(30):
        z = r.vectors[:, k]
        assert abs(np.linalg.norm(z) - 1) < 1e-13
        assert np.linalg.norm(h @ z - r.values[k] * z) <= 1e-10 * hn
    assert abs(np.trace(h) - r.values.sum()) <= 1e-10 * abs(np.trace(h))
    d = np.abs(r.sorted_values - 0.3j)
    assert np.all(np.diff(d) >= 0)


def test_small_eig_matches_lapack(rng):
    # independent reference: LAPACK through numpy
    h = crandn(rng, 25, 25)
    ours = np.sort_complex(small_eig(h).values)
    ref = np.sort_complex(np.linalg.eigvals(h))
    for v in ours:
        assert np.min(np.abs(ref - v)) <= 1e-10 * np.linalg.norm(h)


def test_small_eig_real_nonsymmetric(rng):
    h = rng.standard_normal((40, 40))
    r = small_eig(h)
    for k in range(40):
        z = r.vectors[:, k]
        assert np.linalg.norm(h @ z - r.values[k] * z) <= 1e-10 * np.linalg.norm(h, 2)


def test_small_eig_nonnormal_jordan_like():
    h = np.diag(np.ones(9), 1) * 1e3 + np.diag(np.arange(10.0))
    r = small_eig(h)
    np.testing.assert_allclose(np.sort(r.values.real), np.arange(10.0), atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(1, 20))
def test_small_eig_phase_similarity(seed, m):
    rng = np.random.default_rng(seed)
    h = crandn(rng, m, m)
    d = np.exp(2j * np.pi * rng.uniform(size=m))
    a = np.sort_complex(small_eig(h).values)
    b = small_eig(np.diag(d) @ h @ np.diag(d.conj())).values
    for v in b:
        assert np.min(np.abs(a - v)) <= 1e-10 * max(1.0, np.linalg.norm(h))


def test_small_eig_limits():
    with pytest.raises(DimensionError):
        small_eig(np.eye(3), max_dim=2)
    with pytest.raises(DimensionError):
        small_eig(np.ones((2, 3)))
    with pytest.raises(ConvergenceError):
        schur(np.array([[0, 1.0], [1.0, 0]]), max_sweeps_per_dim=0)


def test_hessenberg_similarity(rng):
    a = crandn(rng, 12, 12)
    t, q = hessenberg(a)
    assert np.allclose(np.tril(t, -2), 0)
    np.testing.assert_allclose(q @ t @ q.conj().T, a, atol=1e-12)


def test_schur_factorization(rng):
    a = crandn(rng, 15, 15)
    t, z = schur(a)
    assert np.allclose(np.tril(t, -1), 0)
    np.testing.assert_allclose(z @ t @ z.conj().T, a, atol=1e-11)
    np.testing.assert_allclose(z.conj().T @ z, np.eye(15), atol=1e-12)


def test_tie_ordering_convention():
    vals = np.array([1 + 1j, 1 - 1j, 2.0, 0.0 + 0j])
    order = order_by_distance(vals, 1.0)
    # |v - 1| = 1 for the first, second and last entries: imag ascending, then real
    np.testing.assert_array_equal(order, [1, 3, 2, 0])


def test_orthonormalize_unit_cases():
    e = np.eye(3)
    v, nrm = orthonormalize_against(e[:, :1], e[:, 1])
    np.testing.assert_allclose(v, e[:, 1])
    assert nrm == 1
    with pytest.raises(SubspaceBreakdown):
        orthonormalize_against(e[:, :2], 2 * e[:, 0] - 3j * e[:, 1])
    with pytest.raises(SubspaceBreakdown):
        orthonormalize_against(e[:, :1], np.zeros(3))


def test_orthonormalize_random(rng):
    v = random_orthonormal(rng, 100, 10)
    u = crandn(rng, 100)
    w, nrm = orthonormalize_against(v, u)
    assert np.linalg.norm(v.conj().T @ w) <= 1e-12
    ref = (np.eye(100) - v @ v.conj().T) @ u
    assert abs(nrm - np.linalg.norm(ref)) <= 1e-12 * np.linalg.norm(u)
    assert vector_sine(ref, w) <= 1e-10


def test_gram_schmidt_coefficients(rng):
    v = random_orthonormal(rng, 40, 6)
    u = crandn(rng, 40)
    w, c = gram_schmidt(v, u)
    np.testing.assert_allclose(v @ c + w, u, atol=1e-13)
    np.testing.assert_allclose(c, v.conj().T @ u, atol=1e-13)


def test_orthonormality_drift(rng):
    n = 200
    basis = random_orthonormal(rng, n, 1)
    for m in range(1, 60):
        # nearly dependent candidates stress the reorthogonalization
        u = basis @ crandn(rng, m) + 1e-8 * crandn(rng, n)
        w, _ = orthonormalize_against(basis, u)
        basis = np.column_stack([basis, w])
        gram = basis.conj().T @ basis - np.eye(m + 1)
        assert np.linalg.norm(gram) <= 1e-10 * (m + 1)


def test_subspace_sine_cases():
    e = np.eye(3)
    assert subspace_sine(e[:, :2], np.array([1, 2j, 0])) == 0
    assert subspace_sine(e[:, :1], e[:, 1]) == 1
    assert abs(subspace_sine(e[:, :1], (e[:, 0] + e[:, 1]) / np.sqrt(2)) - 1 / np.sqrt(2)) < 1e-15
    assert subspace_sine(e[:, :0], e[:, 0]) == 1
    with pytest.raises(ValueError):
        subspace_sine(e[:, :1], np.zeros(3))


def test_subspace_sine_monotone(rng):
    v = random_orthonormal(rng, 50, 20)
    y = crandn(rng, 50)
    s = [subspace_sine(v[:, :k], y) for k in range(21)]
    assert all(b <= a + 1e-15 for a, b in zip(s, s[1:]))


def test_rayleigh_update_small_cases(rng):
    a = random_sparse(rng, 10, density=0.5)
    v = random_orthonormal(rng, 10, 1)[:, 0]
    h = rayleigh_update(None, None, a, v)
    assert h.shape == (1, 1)
    assert abs(h[0, 0] - v.conj() @ a.to_dense() @ v) < 1e-13
    eye = SparseMatrix.identity(10)
    q = random_orthonormal(rng, 10, 4)
    h = rayleigh_update(np.eye(3), q[:, :3], eye, q[:, 3])
    np.testing.assert_allclose(h, np.eye(4), atol=1e-14)


def test_rayleigh_update_growing_basis(rng):
    n = 80
    a = random_sparse(rng, n, density=0.1)
    dense = a.to_dense()
    q = random_orthonormal(rng, n, 12)
    h = None
    for m in range(12):
        h = rayleigh_update(h, q[:, :m] if m else None, a, q[:, m])
        ref = q[:, : m + 1].conj().T @ dense @ q[:, : m + 1]
        assert np.linalg.norm(h - ref) <= 1e-12 * np.linalg.norm(ref)
    with pytest.raises(DimensionError):
        rayleigh_update(np.eye(2), q[:, :3], a, q[:, 3])

import os
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from sira.sparse import SparseMatrix

DATA_DIRS = [Path(__file__).parent / "data"]
if os.environ.get("SIRA_MATRIX_DIR"):
    DATA_DIRS.insert(0, Path(os.environ["SIRA_MATRIX_DIR"]))


def find_matrix(name):
    """Path of a user-supplied test matrix, or None."""
    env = os.environ.get(f"SIRA_{name.upper()}")
    if env and Path(env).exists():
        return Path(env)
    for d in DATA_DIRS:
        for suffix in (".mtx", ".mtx.gz"):
            p = d / f"{name}{suffix}"
            if p.exists():
                return p
    return None


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_sparse(rng, n, density=0.1, complex_=True, diag_shift=0.0):
    a = sp.random(n, n, density=density, random_state=rng, format="csr")
    if complex_:
        b = sp.random(n, n, density=density, random_state=rng, format="csr")
        a = a + 1j * b
    if diag_shift:
        a = a + diag_shift * sp.identity(n)
    return SparseMatrix.from_scipy(a.tocsr())


def convection_diffusion(grid, beta):
    """Five-point convection-diffusion operator on a ``grid x grid`` mesh."""
    h = 1.0 / (grid + 1)
    t = sp.diags([-1 - beta * h / 2, 2.0, -1 + beta * h / 2], [-1, 0, 1], shape=(grid, grid))
    eye = sp.identity(grid)
    return SparseMatrix.from_scipy((sp.kron(eye, t) + sp.kron(t, eye)).tocsr())


def random_orthonormal(rng, n, m):
    q, _ = np.linalg.qr(rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)))
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)

import os

import numpy as np
import pytest

from sstepcg.matio import ProblemInstance, build_rhs, from_coo, load_problem

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "matrices")

# Matrices from the reference test set that could not be retrieved in this
# environment; tests needing them skip with this message.
MISSING_NOTE = "matrix file not available (no route to the public collection)"


def matrix_path(name):
    return os.path.join(DATA_DIR, f"{name}.mtx")


def require_matrix(name):
    path = matrix_path(name)
    if not os.path.exists(path):
        pytest.skip(f"{name}: {MISSING_NOTE}")
    return path


def dense_to_sparse(a_dense):
    a_dense = np.asarray(a_dense, dtype=float)
    n = a_dense.shape[0]
    rows, cols = np.nonzero(a_dense)
    return from_coo(n, rows, cols, a_dense[rows, cols])


def problem_from_dense(a_dense, b=None, label="dense"):
    a = dense_to_sparse(a_dense)
    w = np.linalg.eigvalsh(np.asarray(a_dense, dtype=float))
    if b is None:
        b = build_rhs(a.n)
    return ProblemInstance(
        a=a,
        b=np.asarray(b, dtype=float),
        x0=np.zeros(a.n),
        norm_a=float(w[-1]),
        norm_abs_a=float(np.linalg.norm(np.abs(a_dense), 2)),
        kappa_a=float(w[-1] / w[0]),
        label=label,
    )


def random_spd(n, kappa, seed):
    """Dense SPD matrix with prescribed condition number."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = np.geomspace(1.0, kappa, n)
    return (q * eigs) @ q.T


@pytest.fixture(scope="session")
def nos1_problem():
    return load_problem(require_matrix("nos1"), label="nos1")


@pytest.fixture(scope="session")
def bus494_problem():
    return load_problem(require_matrix("494_bus"), label="494bus")


@pytest.fixture()
def identity_mm(tmp_path):
    path = tmp_path / "identity3.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n"
        "3 3 3\n1 1 1.0\n2 2 1.0\n3 3 1.0\n"
    )
    return str(path)

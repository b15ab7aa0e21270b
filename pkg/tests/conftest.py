import sys
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg

sys.path.insert(0, str(Path(__file__).parent))

from oulab import OperatorSpec, kalman_rank


@pytest.fixture
def nilpotent3() -> OperatorSpec:
    """Chain drift of length 3 with full isotropic noise."""
    return OperatorSpec(np.eye(3), np.eye(3, k=1))


@pytest.fixture
def skew2() -> OperatorSpec:
    return OperatorSpec(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@pytest.fixture
def unstable1() -> OperatorSpec:
    return OperatorSpec([[1.0]], [[1.0]])


@pytest.fixture
def kolmogorov2() -> OperatorSpec:
    """Degenerate noise (only the velocity is forced), still hypoelliptic."""
    return OperatorSpec(np.diag([0.0, 1.0]), np.array([[0.0, 1.0], [0.0, 0.0]]))


def random_hypoelliptic(rng: np.random.Generator, n: int, norm_a: float = 2.0,
                        allow_degenerate: bool = True) -> OperatorSpec:
    """Random spec with a bounded drift and a (usually full) noise range."""
    for _ in range(50):
        A = rng.standard_normal((n, n))
        s = np.linalg.norm(A, 2)
        if s > 0:
            A *= rng.uniform(0.3, 1.0) * norm_a / s
        r = n if (not allow_degenerate or rng.random() < 0.7) else max(1, n - 1)
        B = rng.standard_normal((n, r))
        Q = B @ B.T / r
        spec = OperatorSpec(Q, A)
        if kalman_rank(spec).hypoelliptic:
            return spec
    raise RuntimeError("failed to draw a hypoelliptic spec")


def well_conditioned_matrix(rng: np.random.Generator, n: int, cond: float = 25.0) -> np.ndarray:
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return U @ np.diag(np.exp(np.linspace(0.0, np.log(cond), n))) @ V


def _nilp(k):
    return np.eye(k, k=1)


def _rotnil(d, g):
    R = np.array([[0.0, d], [-d, 0.0]])
    return np.kron(np.eye(g), R) + np.kron(np.eye(g, k=1), np.eye(2))


def _purerot(h):
    return np.array([[0.0, h], [-h, 0.0]])


def _stable(sz, rng):
    M = rng.standard_normal((sz, sz)) * 0.4
    w = np.linalg.eigvals(M)
    return M - (np.max(w.real) + rng.uniform(0.3, 1.5)) * np.eye(sz)


def make_taxonomy_matrix(rng: np.random.Generator, n_max: int = 8):
    """Random conjugated block-diagonal matrix with known block multiset.

    Returns (A, expected Counter) where the counter uses the same merging
    the decomposition applies: all stable blocks fuse into one, all simple
    zeros fuse into one.
    """
    blocks, truth = [], []
    n = 0
    target = int(rng.integers(3, n_max + 1))
    while n < target:
        kind = rng.integers(0, 5)
        room = n_max - n
        if kind == 0 and room >= 1:
            sz = int(rng.integers(1, min(2, room) + 1))
            blocks.append(_stable(sz, rng))
            truth.append(("stable", sz))
            n += sz
        elif kind == 1 and room >= 1:
            blocks.append(np.zeros((1, 1)))
            truth.append(("zero", 1))
            n += 1
        elif kind == 2 and room >= 2:
            k = int(rng.integers(2, min(4, room) + 1))
            blocks.append(_nilp(k))
            truth.append(("nilpotent", k))
            n += k
        elif kind == 3 and room >= 4:
            d = float(rng.uniform(0.5, 2.5))
            blocks.append(_rotnil(d, 2))
            truth.append(("rotation-nilpotent", 2))
            n += 4
        elif kind == 4 and room >= 2:
            h = float(rng.uniform(0.5, 3.0))
            blocks.append(_purerot(h))
            truth.append(("pure-rotation",))
            n += 2
    J = scipy.linalg.block_diag(*blocks)
    N = J.shape[0]
    P0 = well_conditioned_matrix(rng, N)
    A = P0 @ J @ np.linalg.inv(P0)

    expected = Counter()
    s_tot = sum(t[1] for t in truth if t[0] == "stable")
    z_tot = sum(1 for t in truth if t[0] == "zero")
    if s_tot:
        expected[("stable", s_tot)] += 1
    if z_tot:
        expected[("zero-simple", z_tot)] += 1
    for t in truth:
        if t[0] == "nilpotent":
            expected[("nilpotent", t[1])] += 1
        elif t[0] == "rotation-nilpotent":
            expected[("rotation-nilpotent", t[1])] += 1
        elif t[0] == "pure-rotation":
            expected[("pure-rotation", 2)] += 1
    return A, expected


def block_multiset(dec) -> Counter:
    out = Counter()
    for b in dec.blocks:
        if b.kind == "nilpotent":
            out[(b.kind, b.k)] += 1
        elif b.kind == "rotation-nilpotent":
            out[(b.kind, b.g)] += 1
        else:
            out[(b.kind, b.size)] += 1
    return out

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from embedbench.errors import NumericalError
from embedbench.graph import make_graph
from embedbench.spectral import (
    PeConfig,
    evolution_operator,
    hermitian_eig,
    laplacian_pe,
    normalized_laplacian,
)
from helpers import path, random_graph, taylor_expm


def test_laplacian_path3():
    lap = normalized_laplacian(path(3))
    r = -1 / np.sqrt(2)
    assert np.allclose(lap, [[1, r, 0], [r, 1, r], [0, r, 1]])


def test_isolated_node_identity_row():
    lap = normalized_laplacian(make_graph(3, [(0, 1)]))
    assert lap[2].tolist() == [0.0, 0.0, 1.0]
    assert np.array_equal(lap, lap.T)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_eig_reconstruction(n, seed):
    lap = normalized_laplacian(random_graph(np.random.default_rng(seed), n, 0.3))
    e = hermitian_eig(lap)
    v, w = e.eigenvectors, e.eigenvalues
    assert np.all(np.diff(w) >= -1e-12)
    assert np.max(np.abs(v @ np.diag(w) @ v.T - lap)) <= 1e-8 * max(1.0, np.abs(lap).max())
    assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-8


def test_eig_rejects_asymmetric():
    with pytest.raises(NumericalError):
        hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_evolution_zero_time_identity():
    lap = normalized_laplacian(path(4))
    assert np.allclose(evolution_operator(lap, 0.0), np.eye(4), atol=1e-12)


def test_evolution_matches_taylor():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.normal(size=(8, 8))
        h = (a + a.T) / 2
        t = float(rng.uniform(0.1, 2.0))
        assert np.max(np.abs(evolution_operator(h, t) - taylor_expm(-1j * t * h))) <= 1e-8


def test_pe_shape_and_padding():
    pe = laplacian_pe(path(4), PeConfig(k=8))
    assert pe.shape == (4, 8)
    assert np.all(pe[:, 3:] == 0)
    pe1 = laplacian_pe(make_graph(1, []), PeConfig(k=8))
    assert pe1.shape == (1, 8) and np.all(pe1 == 0)


def test_pe_sign_convention():
    rng = np.random.default_rng(3)
    for _ in range(20):
        pe = laplacian_pe(random_graph(rng, 12, 0.3), PeConfig(k=8))
        for col in pe.T:
            if np.any(col):
                i = int(np.argmax(np.abs(col) > np.abs(col).max() - 1e-12))
                assert col[i] > 0

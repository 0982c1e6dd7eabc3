import numpy as np
from hypothesis import given, settings, strategies as st

from embedbench.embed.operators import (
    QpeConfig,
    QuopConfig,
    ego_operator,
    qpe_descriptor,
    quop_run,
    select_anchors,
)
from embedbench.graph import make_graph
from embedbench.spectral import normalized_laplacian
from helpers import path, random_graph, star, taylor_expm


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 25), st.integers(0, 2**32 - 1))
def test_quop_rows_are_distributions(n, seed):
    g = random_graph(np.random.default_rng(seed), n, 0.25)
    d = quop_run(g)
    assert d.shape == (n, 32)
    assert np.allclose(d.sum(axis=1), 1.0, atol=1e-10)
    assert np.all(d >= 0)


def test_quop_against_taylor():
    g = star(5)
    cfg = QuopConfig(h=1, q=3)
    for v in range(5):
        h = ego_operator(g, v, cfg)
        ref = np.abs(taylor_expm(-1j * h)[:, 0]) ** 2
        assert np.allclose(quop_run(g, cfg)[v], ref, atol=1e-12)


def test_quop_isolated_node():
    d = quop_run(make_graph(2, []), QuopConfig(q=2))
    assert np.allclose(d, [[1, 0, 0, 0], [1, 0, 0, 0]])


def test_ego_operator_truncates():
    h = ego_operator(star(40), 0, QuopConfig(q=5))
    assert h.shape == (32, 32)
    assert h[0, 1:].sum() == 31


def test_anchor_order():
    g = make_graph(5, [(0, 1), (1, 2), (1, 3), (3, 4), (2, 3)])
    # degrees 1,3,2,3,1
    assert select_anchors(g, 8) == [1, 3, 2, 0, 4]
    assert select_anchors(g, 2) == [1, 3]


def test_qpe_layout_and_values():
    g = path(4)
    cfg = QpeConfig(times=(0.5, 2.0), anchors=3)
    d = qpe_descriptor(g, cfg)
    assert d.shape == (4, cfg.width)
    lap = normalized_laplacian(g)
    anchors = select_anchors(g, 3)
    for ai, a in enumerate(anchors):
        for ti, t in enumerate(cfg.times):
            u = taylor_expm(-1j * t * lap)
            col = 2 * (ai * 2 + ti)
            assert np.allclose(d[:, col], u[:, a].real, atol=1e-10)
            assert np.allclose(d[:, col + 1], u[:, a].imag, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 25), st.integers(0, 2**32 - 1))
def test_qpe_columns_unit_norm(n, seed):
    g = random_graph(np.random.default_rng(seed), n, 0.25)
    cfg = QpeConfig()
    d = qpe_descriptor(g, cfg)
    used = min(n, cfg.anchors) * len(cfg.times)
    for k in range(cfg.anchors * len(cfg.times)):
        norm = np.sqrt(np.sum(d[:, 2 * k] ** 2 + d[:, 2 * k + 1] ** 2))
        assert abs(norm - (1.0 if k < used else 0.0)) <= 1e-8

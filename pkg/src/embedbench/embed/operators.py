"""Operator-evolution descriptors: ego-neighbourhood evolution (QuOp) and
anchored spectral evolution (QPE)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graph import Graph, ego_subgraph
from ..spectral import evolution_operator, hermitian_eig, normalized_laplacian


@dataclass(frozen=True)
class QuopConfig:
    h: int = 1
    q: int = 5


@dataclass(frozen=True)
class QpeConfig:
    times: tuple[float, ...] = (0.5, 1.0, 2.0)
    anchors: int = 8

    def __post_init__(self):
        if not self.times:
            raise ValueError("QpeConfig.times must not be empty")
        if self.anchors < 1:
            raise ValueError("QpeConfig.anchors must be >= 1")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))

    @property
    def width(self) -> int:
        return 2 * self.anchors * len(self.times)


def ego_operator(g: Graph, v: int, cfg: QuopConfig) -> np.ndarray:
    """Ego adjacency in canonical order, padded or cut to 2^q x 2^q."""
    dim = 2**cfg.q
    sub, _ = ego_subgraph(g, v, cfg.h)
    a = sub.adjacency()
    m = min(dim, sub.num_nodes)
    h = np.zeros((dim, dim))
    h[:m, :m] = a[:m, :m]
    return h


def quop_descriptor(g: Graph, v: int, cfg: QuopConfig = QuopConfig()) -> np.ndarray:
    """Basis probabilities of ``exp(-i H_v) e_0`` (length 2^q)."""
    u = evolution_operator(ego_operator(g, v, cfg), 1.0)
    return np.abs(u[:, 0]) ** 2


def quop_run(g: Graph, cfg: QuopConfig = QuopConfig()) -> np.ndarray:
    return np.stack([quop_descriptor(g, v, cfg) for v in range(g.num_nodes)]) if g.num_nodes else np.zeros((0, 2**cfg.q))


def select_anchors(g: Graph, count: int) -> list[int]:
    """Highest-degree nodes first, ties to the lower index."""
    deg = g.degrees()
    order = sorted(range(g.num_nodes), key=lambda v: (-int(deg[v]), v))
    return order[: min(count, g.num_nodes)]


def qpe_descriptor(g: Graph, cfg: QpeConfig = QpeConfig()) -> np.ndarray:
    """Per node: (Re, Im) of ``U(t) e_a`` at that node, anchors outer,
    times inner; missing anchors leave zero columns."""
    n = g.num_nodes
    out = np.zeros((n, cfg.width))
    if n == 0:
        return out
    lap = normalized_laplacian(g)
    eig = hermitian_eig(lap)
    anchors = select_anchors(g, cfg.anchors)
    n_t = len(cfg.times)
    for ti, t in enumerate(cfg.times):
        u = evolution_operator(lap, t, eig)
        for ai, a in enumerate(anchors):
            col = 2 * (ai * n_t + ti)
            out[:, col] = u[:, a].real
            out[:, col + 1] = u[:, a].imag
    return out

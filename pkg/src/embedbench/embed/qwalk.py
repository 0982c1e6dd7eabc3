"""Discrete-time coined quantum walk on the arc (directed-edge) space.

Each undirected edge {x, y} contributes arcs x->y and y->x.  One step is
``S C``: the coin C reflects the amplitudes on each node's outgoing arcs
about a weighted unit vector, and the flip-flop shift S swaps x->y with
y->x.  Amplitudes stay real because the initial state, the coin and the
shift are all real.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..graph import Graph

log = logging.getLogger(__name__)

COINS = ("grover-uniform", "degree-weighted")


@dataclass(frozen=True)
class QWalkConfig:
    steps: int = 32
    w_p: float = 0.5
    w_q: float = 4.0
    coin: str = "degree-weighted"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("QWalkConfig.steps must be >= 1")
        if self.w_p <= 0 or self.w_q <= 0:
            raise ValueError("walk weights must be positive")
        if self.coin not in COINS:
            raise ValueError(f"unknown coin {self.coin!r}; expected one of {COINS}")


@dataclass
class ArcSpace:
    tail: np.ndarray  # arcs sorted by (tail, head)
    head: np.ndarray
    reverse: np.ndarray  # index of the opposite arc
    num_nodes: int

    @property
    def size(self) -> int:
        return int(self.tail.size)


def arc_space(g: Graph) -> ArcSpace:
    e = g.edges
    tail = np.concatenate([e[:, 0], e[:, 1]])
    head = np.concatenate([e[:, 1], e[:, 0]])
    order = np.lexsort((head, tail))
    tail, head = tail[order], head[order]
    key = {(int(a), int(b)): i for i, (a, b) in enumerate(zip(tail, head))}
    reverse = np.array([key[(int(b), int(a))] for a, b in zip(tail, head)], dtype=np.int64)
    return ArcSpace(tail, head, reverse, g.num_nodes)


def coin_weights(g: Graph, arcs: ArcSpace, cfg: QWalkConfig) -> np.ndarray:
    """Unit-norm (per tail node) coin vectors, one entry per arc."""
    if cfg.coin == "grover-uniform":
        alpha = np.ones(arcs.size)
    else:
        deg = g.degrees()
        alpha = np.where(deg[arcs.head] <= deg[arcs.tail], cfg.w_p, cfg.w_q)
    norm = np.bincount(arcs.tail, weights=alpha, minlength=arcs.num_nodes)
    return np.sqrt(alpha / norm[arcs.tail])


def coin_block(weights: np.ndarray) -> np.ndarray:
    """Dense ``2|w><w| - I`` for one node's weight vector."""
    return 2.0 * np.outer(weights, weights) - np.eye(weights.size)


def walk_step(psi: np.ndarray, arcs: ArcSpace, w: np.ndarray) -> np.ndarray:
    overlap = np.bincount(arcs.tail, weights=w * psi, minlength=arcs.num_nodes)
    coined = 2.0 * w * overlap[arcs.tail] - psi
    return coined[arcs.reverse]


def node_probabilities(psi: np.ndarray, arcs: ArcSpace) -> np.ndarray:
    """Probability mass on arcs ending at each node."""
    return np.bincount(arcs.head, weights=psi * psi, minlength=arcs.num_nodes)


def qwalk_run(g: Graph, cfg: QWalkConfig = QWalkConfig(), return_norms: bool = False):
    """Visitation time series, shape (num_nodes, steps).

    Starts from the uniform superposition over all arcs.  With
    ``return_norms`` also returns the state norm after every step.
    """
    out = np.zeros((g.num_nodes, cfg.steps))
    norms = np.zeros(cfg.steps)
    if g.num_edges == 0:
        log.warning("edgeless graph (%d nodes): walk descriptor left at zero", g.num_nodes)
        return (out, norms) if return_norms else out
    arcs = arc_space(g)
    w = coin_weights(g, arcs, cfg)
    psi = np.full(arcs.size, 1.0 / np.sqrt(arcs.size))
    for t in range(cfg.steps):
        psi = walk_step(psi, arcs, w)
        out[:, t] = node_probabilities(psi, arcs)
        norms[t] = np.sqrt(psi @ psi)
    return (out, norms) if return_norms else out

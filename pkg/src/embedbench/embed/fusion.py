"""Projection of descriptors into the shared embedding width."""

from __future__ import annotations

import numpy as np

from ..autodiff import ParamStore, Tensor, concat, linear
from ..gnn import init_linear
from ..rng import SplitMix64
from .baseline import gaussian_matrix

FROZEN = "frozen"
TRAINABLE = "trainable"


def frozen_projection(d_s: int, d: int, seed: int) -> np.ndarray | None:
    """None (identity) when widths match, else a fixed N(0, 1/d_s) matrix (d, d_s)."""
    if d_s == d:
        return None
    return gaussian_matrix(seed, "fixed-proj-descriptor", d, d_s)


def fuse_frozen(s: np.ndarray, proj: np.ndarray | None) -> np.ndarray:
    return s if proj is None else s @ proj.T


def register_fusion(store: ParamStore, d_in: int, d: int, rng: SplitMix64, prefix: str = "embed.fuse") -> None:
    init_linear(store, prefix, d_in, d, rng)


def fuse_trainable(u: Tensor, s: Tensor, store: ParamStore | None, prefix: str = "embed.fuse") -> Tensor:
    """Affine map of ``[u || s]`` to the embedding width."""
    if store is None or f"{prefix}.weight" not in store:
        raise KeyError("trainable fusion requested but its parameters are not registered")
    return linear(concat([u, s]), store[f"{prefix}.weight"], store[f"{prefix}.bias"])


def fuse_project(u, s, mode: str, params: ParamStore | None = None, proj: np.ndarray | None = None):
    """Dispatch on ``mode``: frozen uses ``s`` only, trainable uses ``[u || s]``."""
    if mode == FROZEN:
        return fuse_frozen(s.data if isinstance(s, Tensor) else s, proj)
    if mode == TRAINABLE:
        return fuse_trainable(u if isinstance(u, Tensor) else Tensor(u), s if isinstance(s, Tensor) else Tensor(s), params)
    raise ValueError(f"unknown fusion mode {mode!r}")

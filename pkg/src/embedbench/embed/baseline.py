"""Base node input ``u = (x || pe)`` and the two classical embedders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ParamStore, Tensor, linear, relu
from ..errors import ShapeError
from ..gnn import init_linear
from ..rng import SplitMix64, mix


def concat_base_input(x: np.ndarray, pe: np.ndarray) -> np.ndarray:
    if x.shape[0] != pe.shape[0]:
        raise ShapeError(f"x has {x.shape[0]} rows but pe has {pe.shape[0]}")
    return np.concatenate([x, pe], axis=1)


def gaussian_matrix(seed: int, tag: str, rows: int, cols: int) -> np.ndarray:
    """Seeded i.i.d. N(0, 1/cols) matrix of shape (rows, cols)."""
    rng = SplitMix64(mix(seed, tag))
    return rng.normal(rows * cols, std=1.0 / np.sqrt(cols)).reshape(rows, cols)


@dataclass
class FixedProjection:
    w0: np.ndarray  # (d, d_u)
    seed: int

    @property
    def d(self) -> int:
        return self.w0.shape[0]

    @property
    def d_u(self) -> int:
        return self.w0.shape[1]


def init_fixed_projection(seed: int, d: int, d_u: int) -> FixedProjection:
    return FixedProjection(gaussian_matrix(seed, "fixed-proj", d, d_u), seed)


def fixed_embed(u: np.ndarray, p: FixedProjection) -> np.ndarray:
    if u.ndim != 2 or u.shape[1] != p.d_u:
        raise ShapeError(f"fixed projection expects width {p.d_u}, got {u.shape}")
    return u @ p.w0.T


def register_mlp_embed(store: ParamStore, d_u: int, d: int, rng: SplitMix64, prefix: str = "embed.mlp") -> None:
    """Two affine layers d_u -> d -> d."""
    init_linear(store, f"{prefix}.lin1", d_u, d, rng)
    init_linear(store, f"{prefix}.lin2", d, d, rng)


def mlp_embed_forward(u: Tensor, store: ParamStore, prefix: str = "embed.mlp") -> Tensor:
    """``A2 relu(A1 u + b1) + b2`` per node, on the active tape."""
    h = relu(linear(u, store[f"{prefix}.lin1.weight"], store[f"{prefix}.lin1.bias"]))
    return linear(h, store[f"{prefix}.lin2.weight"], store[f"{prefix}.lin2.bias"])

"""Node embedders: method table and the per-method forward pass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ParamStore, Tensor
from ..rng import SplitMix64, mix
from .baseline import (
    concat_base_input,
    fixed_embed,
    init_fixed_projection,
    mlp_embed_forward,
    register_mlp_embed,
)
from .fusion import FROZEN, TRAINABLE, frozen_projection, fuse_frozen, fuse_trainable, register_fusion
from .operators import QpeConfig, QuopConfig
from .qwalk import QWalkConfig
from .vqc import VqcConfig, init_vqc, vqc_layer

EMBED_DIM = 32


@dataclass(frozen=True)
class EmbedderSpec:
    method: str
    label: str  # row name in reports
    generator: str  # base | vqc | quop | qwalk | qpe
    mode: str  # fixed | mlp | frozen | trainable

    @property
    def trainable(self) -> bool:
        return self.mode in ("mlp", TRAINABLE)


METHODS: dict[str, EmbedderSpec] = {
    s.method: s
    for s in (
        EmbedderSpec("fixed", "Fixed", "base", "fixed"),
        EmbedderSpec("mlp", "MLP", "base", "mlp"),
        EmbedderSpec("angle-vqc", "Angle-VQC", "vqc", TRAINABLE),
        EmbedderSpec("quop", "QuOp", "quop", FROZEN),
        EmbedderSpec("quop-trainable", "QuOp*", "quop", TRAINABLE),
        EmbedderSpec("qwalkvec", "QWalkVec", "qwalk", FROZEN),
        EmbedderSpec("qwalkvec-trainable", "QWalkVec*", "qwalk", TRAINABLE),
        EmbedderSpec("qpe", "QPE", "qpe", FROZEN),
    )
}
METHOD_ORDER = list(METHODS)

# Parameter tensors each method adds on top of the backbone.
EXTRA_PARAM_COUNT = {
    "fixed": 0,
    "mlp": 4,
    "angle-vqc": 3,
    "quop": 0,
    "quop-trainable": 2,
    "qwalkvec": 0,
    "qwalkvec-trainable": 2,
    "qpe": 0,
}


def descriptor_width(generator: str, vqc: VqcConfig, quop: QuopConfig, qwalk: QWalkConfig, qpe: QpeConfig) -> int:
    return {
        "base": 0,
        "vqc": vqc.q,
        "quop": 2**quop.q,
        "qwalk": qwalk.steps,
        "qpe": qpe.width,
    }[generator]


class Embedder:
    """Maps per-node base inputs and cached descriptors to ``Z`` (N, d).

    Frozen methods expose :meth:`precompute`, whose output is constant and
    can be computed once per graph.  Trainable methods run on the tape.
    """

    def __init__(
        self,
        spec: EmbedderSpec,
        store: ParamStore,
        d_u: int,
        d_s: int,
        seed: int,
        vqc: VqcConfig = VqcConfig(),
        d: int = EMBED_DIM,
    ):
        self.spec = spec
        self.store = store
        self.d = d
        self.d_u = d_u
        self.d_s = d_s
        init_rng = SplitMix64(mix(seed, "embed-init", spec.method))
        self.fixed = None
        self.proj = None
        self.vqc = None
        if spec.mode == "fixed":
            self.fixed = init_fixed_projection(seed, d, d_u)
        elif spec.mode == "mlp":
            register_mlp_embed(store, d_u, d, init_rng)
        elif spec.mode == FROZEN:
            self.proj = frozen_projection(d_s, d, seed)
        else:
            if spec.generator == "vqc":
                self.vqc = init_vqc(vqc, d_u, seed)
                store.add("embed.vqc.theta", self.vqc.theta)
            register_fusion(store, d_u + d_s, d, init_rng)

    @property
    def is_constant(self) -> bool:
        return self.spec.mode in ("fixed", FROZEN)

    def precompute(self, u: np.ndarray, s: np.ndarray | None) -> np.ndarray:
        """Constant embedding for frozen modes; the tape-free input for
        the VQC (its encoding angles)."""
        if self.spec.mode == "fixed":
            return fixed_embed(u, self.fixed)
        if self.spec.mode == FROZEN:
            return fuse_frozen(s, self.proj)
        if self.vqc is not None:
            return u @ self.vqc.input_map.T
        raise ValueError(f"{self.spec.method} has no constant part")

    def __call__(self, u: np.ndarray, s: np.ndarray | None, pre: np.ndarray | None = None) -> Tensor:
        """Embedding for a batch of nodes.  ``pre`` is the stacked output of
        :meth:`precompute` when available."""
        mode = self.spec.mode
        if mode in ("fixed", FROZEN):
            return Tensor(pre if pre is not None else self.precompute(u, s))
        if mode == "mlp":
            return mlp_embed_forward(Tensor(u), self.store)
        if self.vqc is not None:
            phi = pre if pre is not None else self.precompute(u, None)
            s_t = vqc_layer(phi, self.store["embed.vqc.theta"])
        else:
            s_t = Tensor(s)
        return fuse_trainable(Tensor(u), s_t, self.store)


__all__ = [
    "EMBED_DIM",
    "METHODS",
    "METHOD_ORDER",
    "EXTRA_PARAM_COUNT",
    "Embedder",
    "EmbedderSpec",
    "QpeConfig",
    "QuopConfig",
    "QWalkConfig",
    "VqcConfig",
    "concat_base_input",
    "descriptor_width",
]

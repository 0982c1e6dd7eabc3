"""Angle-encoded variational circuit on a batched statevector.

Basis index convention: qubit 0 is the most significant bit, so qubit ``j``
of basis state ``b`` is ``(b >> (q - 1 - j)) & 1``.

Circuit per node:
    |0...0> -> RY(phi_j) on every qubit          (phi = A u)
    repeat L times: RY(theta[l, j, 0]), RZ(theta[l, j, 1]) on every qubit,
                    then CNOT(j -> (j + 1) mod q) for j = 0..q-1
    measure <Z_k> for every qubit
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..autodiff import Tensor, custom_op
from ..rng import SplitMix64, mix
from .baseline import gaussian_matrix


@dataclass(frozen=True)
class VqcConfig:
    q: int = 8
    layers: int = 2


@dataclass
class AngleVqc:
    input_map: np.ndarray  # (q, d_u), frozen
    theta: np.ndarray  # (layers, q, 2): [..., 0] RY, [..., 1] RZ

    @property
    def q(self) -> int:
        return self.input_map.shape[0]

    @property
    def layers(self) -> int:
        return self.theta.shape[0]


def init_vqc(cfg: VqcConfig, d_u: int, seed: int) -> AngleVqc:
    """Input map ~ N(0, 1/d_u); angles ~ U[0, 2 pi)."""
    a = gaussian_matrix(seed, "vqc-input-map", cfg.q, d_u)
    theta = SplitMix64(mix(seed, "vqc-theta")).uniform(cfg.layers * cfg.q * 2) * 2 * np.pi
    return AngleVqc(a, theta.reshape(cfg.layers, cfg.q, 2))


@lru_cache(maxsize=None)
def _z_signs(q: int) -> np.ndarray:
    """(2^q, q) matrix of Z eigenvalues: +1 where the qubit bit is 0."""
    b = np.arange(2**q)[:, None]
    bits = (b >> (q - 1 - np.arange(q))[None, :]) & 1
    return 1.0 - 2.0 * bits


@lru_cache(maxsize=None)
def _cnot_ring_index(q: int) -> np.ndarray:
    """Gather index equivalent to the full CNOT ring: ``new = state[:, idx]``."""
    idx = np.arange(2**q)
    if q < 2:
        return idx
    # each CNOT is an involution on basis labels; compose last-gate-first
    for j in reversed(range(q)):
        c_bit = 1 << (q - 1 - j)
        t_bit = 1 << (q - 1 - (j + 1) % q)
        idx = np.where(idx & c_bit, idx ^ t_bit, idx)
    return idx


def encode_states(phi: np.ndarray) -> np.ndarray:
    """Product states ``prod_j RY(phi_j)|0>`` for each row of ``phi`` (N, q)."""
    n, q = phi.shape
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    state = np.ones((n, 1))
    for j in range(q):
        amp = np.stack([c[:, j], s[:, j]], axis=1)
        state = (state[:, :, None] * amp[:, None, :]).reshape(n, -1)
    return state.astype(np.complex128)


def _apply_ry(state: np.ndarray, angle, qubit: int, q: int) -> np.ndarray:
    """RY on one qubit; ``angle`` is a scalar or one angle per row."""
    b = state.shape[0]
    view = state.reshape(b, 2**qubit, 2, 2 ** (q - qubit - 1))
    angle = np.asarray(angle, dtype=np.float64)
    if angle.ndim:
        angle = angle[:, None, None]
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    a0, a1 = view[:, :, 0, :], view[:, :, 1, :]
    out = np.empty_like(view)
    out[:, :, 0, :] = c * a0 - s * a1
    out[:, :, 1, :] = s * a0 + c * a1
    return out.reshape(b, -1)


def _ry_block(state: np.ndarray, ry: np.ndarray, q: int) -> np.ndarray:
    per_row = ry.ndim == 2
    for j in range(q):
        state = _apply_ry(state, ry[:, j] if per_row else ry[j], j, q)
    return state


def _rz_phase(rz: np.ndarray, q: int) -> np.ndarray:
    """Diagonal of prod_j RZ(rz_j), RZ(t) = diag(e^{-it/2}, e^{+it/2})."""
    return np.exp(-0.5j * (rz @ _z_signs(q).T))


def apply_layer(state: np.ndarray, layer_theta: np.ndarray, q: int) -> np.ndarray:
    """One variational layer.  ``layer_theta`` is (q, 2) shared by all rows
    or (B, q, 2) per row."""
    state = _ry_block(state, layer_theta[..., 0], q)
    state = state * _rz_phase(layer_theta[..., 1], q)
    return state[:, _cnot_ring_index(q)]


def z_expectations(state: np.ndarray) -> np.ndarray:
    q = int(np.log2(state.shape[1]))
    return (np.abs(state) ** 2) @ _z_signs(q)


def run_circuit(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Z expectations (N, q) for angles ``phi`` (N, q) and weights ``theta``."""
    q = phi.shape[1]
    state = encode_states(phi)
    for layer in range(theta.shape[0]):
        state = apply_layer(state, theta[layer], q)
    return z_expectations(state)


def vqc_descriptor(u: np.ndarray, circuit: AngleVqc) -> np.ndarray:
    """Descriptor row(s) for base input ``u`` (a row or an (N, d_u) block)."""
    u2 = np.atleast_2d(u)
    out = run_circuit(u2 @ circuit.input_map.T, circuit.theta)
    return out[0] if np.ndim(u) == 1 else out


def param_shift_jacobian_vjp(phi: np.ndarray, theta: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """``sum_{n,k} upstream[n,k] * d s[n,k] / d theta`` via the shift rule.

    Each angle is evaluated at +-pi/2.  Rotations about one axis compose
    additively, so a shifted gate is applied as an extra RY/RZ(+-pi/2) on
    top of the unshifted layer state instead of rerunning the layer.
    """
    q = phi.shape[1]
    n_layers = theta.shape[0]
    ring = _cnot_ring_index(q)
    zs = _z_signs(q)
    grad = np.zeros_like(theta)
    shift = np.pi / 2
    state = encode_states(phi)

    def finish(st, layer):
        st = st[:, ring]
        for later in range(layer + 1, n_layers):
            st = apply_layer(st, theta[later], q)
        return z_expectations(st)

    for layer in range(n_layers):
        after_ry = _ry_block(state, theta[layer, :, 0], q)
        phase = _rz_phase(theta[layer, :, 1], q)
        after_rz = after_ry * phase
        for j in range(q):
            plus = finish(_apply_ry(after_ry, shift, j, q) * phase, layer)
            minus = finish(_apply_ry(after_ry, -shift, j, q) * phase, layer)
            grad[layer, j, 0] = np.sum(upstream * (plus - minus)) / 2.0
            extra = np.exp(-0.5j * shift * zs[:, j])
            plus = finish(after_rz * extra, layer)
            minus = finish(after_rz * extra.conj(), layer)
            grad[layer, j, 1] = np.sum(upstream * (plus - minus)) / 2.0
        state = after_rz[:, ring]
    return grad


def vqc_param_shift_grad(u: np.ndarray, circuit: AngleVqc, upstream: np.ndarray) -> np.ndarray:
    """Gradient of ``<upstream, s(u)>`` with respect to the circuit angles."""
    u2 = np.atleast_2d(u)
    up = np.atleast_2d(upstream)
    return param_shift_jacobian_vjp(u2 @ circuit.input_map.T, circuit.theta, up)


def vqc_layer(phi: np.ndarray, theta: Tensor) -> Tensor:
    """Tape op: descriptors for fixed angles ``phi`` with trainable ``theta``.

    Backward uses the parameter-shift rule; ``phi`` receives no gradient.
    """
    th = theta.data
    out = run_circuit(phi, th)
    return custom_op((theta,), out, lambda g: (param_shift_jacobian_vjp(phi, th, g),), "vqc")

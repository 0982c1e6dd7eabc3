"""Dense symmetric linear algebra: normalized Laplacian, eigendecomposition,
``exp(-iHt)`` and Laplacian positional encodings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .graph import Graph


@dataclass(frozen=True)
class PeConfig:
    k: int = 8

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("PeConfig.k must be >= 1")


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns


def normalized_laplacian(g: Graph) -> np.ndarray:
    """``I - D^-1/2 A D^-1/2``; isolated nodes keep a unit diagonal."""
    a = g.adjacency()
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    lap = np.eye(g.num_nodes) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    # exact symmetry as stored
    return np.triu(lap) + np.triu(lap, 1).T


def hermitian_eig(m: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix (LAPACK ``syevd``).

    Raises NumericalError when the solver does not converge or the input is
    not square and symmetric.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NumericalError(f"expected a square matrix, got shape {m.shape}")
    if not np.array_equal(m, m.T):
        raise NumericalError("matrix is not symmetric")
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc
    return EigenDecomposition(w, v)


def evolution_operator(m: np.ndarray, t: float, eig: EigenDecomposition | None = None) -> np.ndarray:
    """``U(t) = V exp(-i Lambda t) V^T`` for symmetric ``m``.

    Pass a precomputed ``eig`` to evaluate several times from one
    decomposition.
    """
    if eig is None:
        eig = hermitian_eig(m)
    v = eig.eigenvectors
    phases = np.exp(-1j * eig.eigenvalues * t)
    return (v * phases[None, :]) @ v.T


def _sign_fix(col: np.ndarray) -> np.ndarray:
    mags = np.abs(col)
    top = mags.max()
    if top == 0.0:
        return col
    # first index within rounding of the max magnitude
    pivot = int(np.flatnonzero(mags >= top - 1e-12)[0])
    return -col if col[pivot] < 0 else col


def laplacian_pe(g: Graph, cfg: PeConfig = PeConfig()) -> np.ndarray:
    """Eigenvectors 1..k of the normalized Laplacian (ascending eigenvalue),
    skipping index 0, sign-fixed and zero-padded to ``k`` columns."""
    n = g.num_nodes
    pe = np.zeros((n, cfg.k))
    if n <= 1:
        return pe
    eig = hermitian_eig(normalized_laplacian(g))
    take = min(cfg.k, n - 1)
    for j in range(take):
        pe[:, j] = _sign_fix(eig.eigenvectors[:, j + 1])
    return pe

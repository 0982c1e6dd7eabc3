"""A small tape-based reverse-mode autodiff engine over dense float64 arrays.

Operations record themselves on the active :class:`Tape` only when at least
one input requires a gradient.  Outside a ``with Tape():`` block nothing is
recorded, which is how inference passes stay tape-free.

    store = ParamStore()
    w = store.add("w", np.ones((2, 3)))
    with Tape() as tape:
        loss = total(relu(matmul(x, w)))
        backward(loss, tape)
    w.grad  # populated
"""

from __future__ import annotations

import contextvars
import json
import logging
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import NonFiniteError, ShapeError

log = logging.getLogger(__name__)

_active_tape: contextvars.ContextVar["Tape | None"] = contextvars.ContextVar("tape", default=None)
_relu_probe: contextvars.ContextVar["list | None"] = contextvars.ContextVar("relu_probe", default=None)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "node_id", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self.node_id: int | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, as_tensor(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Records operation outputs in creation order (a valid topological order)."""

    def __init__(self):
        self.nodes: list[Tensor] = []
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc):
        _active_tape.reset(self._token)
        self._token = None

    def clear(self) -> None:
        for node in self.nodes:
            node._parents = ()
            node._vjp = None
        self.nodes.clear()


def active_tape() -> Tape | None:
    return _active_tape.get()


def _record(data: np.ndarray, parents: Sequence[Tensor], vjp: Callable, op: str) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite values produced by {op}")
    tape = _active_tape.get()
    needs = tape is not None and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=needs)
    if needs:
        out._parents = tuple(parents)
        out._vjp = vjp
        out.node_id = len(tape.nodes)
        tape.nodes.append(out)
    return out


def custom_op(inputs: Sequence[Tensor], data: np.ndarray, vjp: Callable, op: str = "custom") -> Tensor:
    """Record an op whose forward value was computed outside the engine.

    ``vjp(g)`` must return one gradient (or None) per input.
    """
    return _record(np.asarray(data, dtype=np.float64), inputs, vjp, op)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# --------------------------------------------------------------------------
# Operations


def add(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.shape, b.shape
    return _record(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
        "add",
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    return _record(
        ad * bd,
        (a, b),
        lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)),
        "mul",
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    return _record(ad @ bd, (a, b), lambda g: (g @ bd.T, ad.T @ g), "matmul")


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` with ``weight`` stored as (out, in)."""
    if x.data.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"linear expects input width {weight.shape[1]}, got {x.shape}")
    xd, wd = x.data, weight.data
    out = xd @ wd.T
    if bias is None:
        return _record(out, (x, weight), lambda g: (g @ wd, g.T @ xd), "linear")
    out = out + bias.data
    return _record(
        out, (x, weight, bias), lambda g: (g @ wd, g.T @ xd, g.sum(axis=0)), "linear"
    )


def relu(x: Tensor) -> Tensor:
    probe = _relu_probe.get()
    if probe is not None:
        probe.append(x.data.copy())
    mask = x.data > 0
    return _record(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def concat(parts: Sequence[Tensor], axis: int = 1) -> Tensor:
    sizes = [p.shape[axis] for p in parts]
    cuts = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _record(np.concatenate([p.data for p in parts], axis=axis), parts, vjp, "concat")


def spmm(adj, h: Tensor) -> Tensor:
    """Constant (sparse or dense) matrix times ``h``."""
    return _record(np.asarray(adj @ h.data), (h,), lambda g: (np.asarray(adj.T @ g),), "spmm")


def segment_mean(h: Tensor, segments: np.ndarray, num_segments: int) -> Tensor:
    """Row means of ``h`` grouped by ``segments`` (ids ``0..num_segments-1``)."""
    counts = np.bincount(segments, minlength=num_segments)
    if np.any(counts == 0):
        empty = np.flatnonzero(counts == 0).tolist()
        raise ShapeError(f"empty segment(s) {empty} in segment_mean")
    sums = np.zeros((num_segments,) + h.shape[1:])
    np.add.at(sums, segments, h.data)
    scale = 1.0 / counts
    return _record(
        sums * scale[:, None],
        (h,),
        lambda g: ((g * scale[:, None])[segments],),
        "segment_mean",
    )


def total(x: Tensor) -> Tensor:
    shape = x.shape
    return _record(np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, shape).copy(),), "sum")


def square(x: Tensor) -> Tensor:
    xd = x.data
    return _record(xd * xd, (x,), lambda g: (2.0 * xd * g,), "square")


# --------------------------------------------------------------------------
# Reverse sweep


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf that requires it."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = tape if tape is not None else _active_tape.get()
    if tape is None:
        raise RuntimeError("backward called without an active tape")
    if not loss.requires_grad:
        tape.clear()
        return
    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            if parent._vjp is None:
                parent.grad = pg.copy() if parent.grad is None else parent.grad + pg
            else:
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg
    tape.clear()


# --------------------------------------------------------------------------
# Parameters


class ParamStore:
    """Named trainable tensors plus their Adam moments."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.adam_m: dict[str, np.ndarray] = {}
        self.adam_v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.params:
            raise KeyError(f"parameter {name!r} already registered")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.params[name] = t
        self.adam_m[name] = np.zeros_like(t.data)
        self.adam_v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __len__(self) -> int:
        return len(self.params)

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def items(self):
        return self.params.items()

    def num_values(self) -> int:
        return sum(t.data.size for t in self.params.values())

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.params.items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        for k, arr in snap.items():
            self.params[k].data = arr.copy()

    def save(self, path: str | Path, manifest: dict) -> None:
        """Write ``<path>.npz`` (raw float64 tensors) and ``<path>.json``."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp.npz")
        np.savez(tmp, **{k: t.data for k, t in self.params.items()})
        tmp.replace(path.with_suffix(".npz"))
        meta = dict(manifest)
        meta["tensors"] = {k: list(t.shape) for k, t in self.params.items()}
        path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=1))

    def load(self, path: str | Path) -> dict:
        path = Path(path)
        with np.load(path.with_suffix(".npz")) as arrs:
            for k in self.params:
                arr = arrs[k]
                if arr.shape != self.params[k].shape:
                    raise ShapeError(f"checkpoint tensor {k} has shape {arr.shape}")
                self.params[k].data = arr.astype(np.float64)
        return json.loads(path.with_suffix(".json").read_text())


# --------------------------------------------------------------------------
# Gradient checking


def finite_diff_check(
    pipeline: Callable[[], Tensor],
    params: ParamStore,
    epsilon: float = 1e-5,
    coords_per_tensor: int | None = 32,
    seed: int = 0,
    floor: float = 1e-8,
    excluded: list | None = None,
) -> float:
    """Max relative error between tape gradients and central differences.

    ``pipeline`` must be deterministic and return a scalar Tensor.  For each
    tensor up to ``coords_per_tensor`` coordinates are checked (all when
    None).  A coordinate is skipped when a rectifier it influences sits at
    a kink: any affected pre-activation with ``|z| <= 10 * epsilon`` or one
    that changes sign between the two probes.  Skipped coordinates are
    appended to ``excluded`` as ``(name, flat_index)``.

    The error of one coordinate is ``|a - n| / max(|a|, |n|, floor)``; pick
    ``floor`` above the rounding noise of the differences, roughly
    ``eps_mach * |loss| / epsilon``.
    """
    params.zero_grad()
    with Tape() as tape:
        loss = pipeline()
        backward(loss, tape)
    analytic = {k: (t.grad if t.grad is not None else np.zeros_like(t.data)) for k, t in params.items()}

    def probe_eval():
        acts: list[np.ndarray] = []
        token = _relu_probe.set(acts)
        try:
            value = float(pipeline().data)
        finally:
            _relu_probe.reset(token)
        return value, acts

    _, base_acts = probe_eval()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, t in params.items():
        flat = t.data.reshape(-1)
        n = flat.size
        if coords_per_tensor is None or coords_per_tensor >= n:
            coords = np.arange(n)
        else:
            coords = np.sort(rng.choice(n, size=coords_per_tensor, replace=False))
        for i in coords:
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus, acts_plus = probe_eval()
            flat[i] = orig - epsilon
            f_minus, acts_minus = probe_eval()
            flat[i] = orig
            kink = False
            for z0, zp, zm in zip(base_acts, acts_plus, acts_minus):
                moved = zp != zm
                if not np.any(moved):
                    continue
                if np.any(np.abs(z0[moved]) <= 10 * epsilon) or np.any(
                    np.sign(zp[moved]) != np.sign(zm[moved])
                ):
                    kink = True
                    break
            if kink:
                if excluded is not None:
                    excluded.append((name, int(i)))
                continue
            numeric = (f_plus - f_minus) / (2 * epsilon)
            a = float(analytic[name].reshape(-1)[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
    params.zero_grad()
    return worst

"""Loss, optimizer, metrics and the early-stopped training loop."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .autodiff import ParamStore, Tape, Tensor, backward, custom_op
from .embed import EMBED_DIM, Embedder, EmbedderSpec, VqcConfig, concat_base_input
from .errors import NonFiniteError, ShapeError
from .gnn import GinClassifier, GinConfig, batch_adjacency
from .graph import Dataset, SplitManifest
from .rng import SplitMix64, mix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 0.0
    max_epochs: int = 30
    batch_size: int = 16
    patience: int = 7
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 7


# --------------------------------------------------------------------------
# Loss and optimizer


def cross_entropy(logits: Tensor, labels: Sequence[int]) -> Tensor:
    """Mean negative log-softmax of the true class (max-shifted)."""
    z = logits.data
    y = np.asarray(labels, dtype=np.int64)
    n, c = z.shape
    if y.shape != (n,):
        raise ShapeError(f"expected {n} labels, got {y.shape}")
    if np.any(y < 0) or np.any(y >= c):
        raise ValueError(f"label outside [0, {c})")
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    logp = shifted - log_norm[:, None]
    loss = -logp[np.arange(n), y].mean()
    probs = np.exp(logp)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0
    return custom_op((logits,), np.asarray(loss), lambda g: (g * (probs - onehot) / n,), "cross_entropy")


def adam_step(store: ParamStore, cfg: TrainConfig) -> None:
    """Bias-corrected Adam over every registered tensor, then zero grads."""
    for name, p in store.items():
        if p.grad is None:
            raise RuntimeError(f"parameter {name!r} has no gradient; incomplete backward?")
    store.step += 1
    t = store.step
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    for name, p in store.items():
        g = p.grad
        if cfg.weight_decay:
            g = g + cfg.weight_decay * p.data
        m = store.adam_m[name] = cfg.beta1 * store.adam_m[name] + (1.0 - cfg.beta1) * g
        v = store.adam_v[name] = cfg.beta2 * store.adam_v[name] + (1.0 - cfg.beta2) * g * g
        p.data = p.data - cfg.lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
    store.zero_grad()


# --------------------------------------------------------------------------
# Metrics


@dataclass
class Metrics:
    accuracy: float
    macro_f1: float
    macro_precision: float
    macro_recall: float
    confusion: np.ndarray


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    nz = den != 0
    out[nz] = num[nz] / den[nz]
    return out


def compute_metrics(predictions: Sequence[int], labels: Sequence[int], num_classes: int) -> Metrics:
    """Accuracy and macro P/R/F1 over all ``num_classes`` classes (0/0 -> 0)."""
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(labels, dtype=np.int64)
    if pred.shape != true.shape:
        raise ShapeError("predictions and labels differ in length")
    conf = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(conf, (true, pred), 1)
    tp = np.diag(conf).astype(np.float64)
    precision = _safe_div(tp, conf.sum(axis=0).astype(np.float64))
    recall = _safe_div(tp, conf.sum(axis=1).astype(np.float64))
    f1 = _safe_div(2.0 * precision * recall, precision + recall)
    total = conf.sum()
    return Metrics(
        accuracy=float(tp.sum() / total) if total else 0.0,
        macro_f1=float(f1.mean()),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        confusion=conf,
    )


# --------------------------------------------------------------------------
# Early stopping


class EarlyStopper:
    """Tracks the best score; strict improvement resets patience."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -math.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, score: float) -> bool:
        if score > self.best:
            self.best = score
            self.best_epoch = epoch
            self.bad_epochs = 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


# --------------------------------------------------------------------------
# Batching and the model wrapper


@dataclass
class Batch:
    u: np.ndarray
    s: np.ndarray | None
    pre: np.ndarray | None
    adj: object
    segments: np.ndarray
    labels: np.ndarray

    @property
    def num_graphs(self) -> int:
        return int(self.labels.size)


class GraphModel:
    """Embedder + GIN classifier sharing one ParamStore."""

    def __init__(
        self,
        dataset: Dataset,
        spec: EmbedderSpec,
        seed: int,
        vqc: VqcConfig = VqcConfig(),
        gin: GinConfig = GinConfig(),
    ):
        self.spec = spec
        self.store = ParamStore()
        self.u = [concat_base_input(g.x, g.pe) for g in dataset.graphs]
        d_u = self.u[0].shape[1]
        if spec.generator == "base" or spec.generator == "vqc":
            self.s = None
            d_s = vqc.q if spec.generator == "vqc" else 0
        else:
            self.s = [g.descriptors[spec.generator] for g in dataset.graphs]
            d_s = self.s[0].shape[1]
        self.embedder = Embedder(spec, self.store, d_u, d_s, seed, vqc)
        self.gin = GinClassifier(
            self.store, EMBED_DIM, dataset.num_classes, gin, SplitMix64(mix(seed, "gin-init"))
        )
        self.graphs = dataset.graphs
        self.pre = None
        if self.embedder.is_constant or spec.generator == "vqc":
            self.pre = [
                self.embedder.precompute(u, None if self.s is None else s)
                for u, s in zip(self.u, self.s or [None] * len(self.u))
            ]

    def batch(self, indices: Sequence[int]) -> Batch:
        graphs = [self.graphs[i] for i in indices]
        sizes = [g.num_nodes for g in graphs]
        return Batch(
            u=np.concatenate([self.u[i] for i in indices]),
            s=None if self.s is None else np.concatenate([self.s[i] for i in indices]),
            pre=None if self.pre is None else np.concatenate([self.pre[i] for i in indices]),
            adj=batch_adjacency(graphs),
            segments=np.repeat(np.arange(len(indices)), sizes),
            labels=np.array([g.label for g in graphs], dtype=np.int64),
        )

    def logits(self, batch: Batch, training: bool = False, rng: SplitMix64 | None = None) -> Tensor:
        z = self.embedder(batch.u, batch.s, batch.pre)
        return self.gin(z, batch.adj, batch.segments, batch.num_graphs, training, rng)

    def predict(self, batches: Sequence[Batch]) -> tuple[np.ndarray, np.ndarray]:
        preds, labels = [], []
        for b in batches:
            preds.append(np.argmax(self.logits(b).data, axis=1))
            labels.append(b.labels)
        return np.concatenate(preds), np.concatenate(labels)


# --------------------------------------------------------------------------
# Training loop


@dataclass
class TrainResult:
    status: str  # ok | diverged
    metrics: Metrics | None
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_val_f1: float = float("nan")
    epochs_ran: int = 0
    model: GraphModel | None = None


def _chunks(seq: Sequence[int], size: int) -> list[list[int]]:
    return [list(seq[i:i + size]) for i in range(0, len(seq), size)]


def evaluate(model: GraphModel, batches: Sequence[Batch], num_classes: int) -> Metrics:
    pred, true = model.predict(batches)
    return compute_metrics(pred, true, num_classes)


def train_model(
    dataset: Dataset,
    manifest: SplitManifest,
    spec: EmbedderSpec,
    cfg: TrainConfig = TrainConfig(),
    vqc: VqcConfig = VqcConfig(),
    gin: GinConfig = GinConfig(),
) -> TrainResult:
    """Mini-batch Adam on the train split with early stopping on val Macro-F1.

    The parameters from the best epoch (earliest on ties) are restored
    before the single test evaluation.
    """
    model = GraphModel(dataset, spec, cfg.seed, vqc, gin)
    store = model.store
    c = dataset.num_classes
    val_batches = [model.batch(ix) for ix in _chunks(manifest.val, 64)]
    test_batches = [model.batch(ix) for ix in _chunks(manifest.test, 64)]
    stopper = EarlyStopper(cfg.patience)
    best_params = store.snapshot()
    history: list[dict] = []
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = SplitMix64(mix(cfg.seed, "epoch", epoch)).permutation(manifest.train)
        drop_rng = SplitMix64(mix(cfg.seed, "dropout", epoch))
        loss_sum = 0.0
        try:
            for ix in _chunks(order, cfg.batch_size):
                b = model.batch(ix)
                with Tape() as tape:
                    loss = cross_entropy(model.logits(b, training=True, rng=drop_rng), b.labels)
                    backward(loss, tape)
                adam_step(store, cfg)
                loss_sum += float(loss.data) * len(ix)
            val_f1 = evaluate(model, val_batches, c).macro_f1
        except NonFiniteError as exc:
            log.error("run diverged at epoch %d: %s", epoch, exc)
            history.append({"epoch": epoch, "train_loss": float("nan"), "val_macro_f1": float("nan"), "is_best": False})
            return TrainResult("diverged", None, history, stopper.best_epoch, stopper.best, epoch, model)
        improved = stopper.update(epoch, val_f1)
        if improved:
            best_params = store.snapshot()
        history.append(
            {
                "epoch": epoch,
                "train_loss": loss_sum / len(manifest.train),
                "val_macro_f1": val_f1,
                "is_best": improved,
            }
        )
        log.debug("epoch %d loss %.4f val_f1 %.4f", epoch, history[-1]["train_loss"], val_f1)
        if stopper.should_stop:
            break
    store.restore(best_params)
    metrics = evaluate(model, test_batches, c)
    return TrainResult("ok", metrics, history, stopper.best_epoch, stopper.best, epoch, model)


def write_history(path: str | Path, history: Sequence[dict]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_macro_f1", "is_best"])
        for row in history:
            w.writerow([row["epoch"], f"{row['train_loss']:.10f}", f"{row['val_macro_f1']:.10f}", int(row["is_best"])])
    tmp.replace(path)

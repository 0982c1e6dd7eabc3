"""Dataset preparation (features, cached descriptors, split) and single runs."""

from __future__ import annotations

import csv
import dataclasses
import logging
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .config import DatasetConfig, ExperimentConfig, canonical_hash
from .embed import METHODS
from .embed.cache import read_descriptor_cache, write_descriptor_cache
from .embed.operators import qpe_descriptor, quop_run
from .embed.qwalk import qwalk_run
from .graph import (
    Dataset,
    SplitManifest,
    attach_labels,
    degree_onehot,
    load_jsonl_graphs,
    parse_tu_dataset,
    quantile_bin,
    stratified_split,
)
from .spectral import laplacian_pe
from .train import train_model, write_history

log = logging.getLogger(__name__)

FROZEN_GENERATORS = ("quop", "qwalk", "qpe")

RESULTS_HEADER = [
    "dataset",
    "method",
    "trainable",
    "acc",
    "macro_f1",
    "macro_p",
    "macro_r",
    "epochs",
    "seed",
    "status",
    "wall_seconds",
]


def load_dataset(ds: DatasetConfig) -> Dataset:
    path = ds.resolved_path()
    if ds.format == "tu":
        return parse_tu_dataset(path, ds.name)
    if ds.format == "jsonl":
        data, targets = load_jsonl_graphs(path, ds.target_index, ds.max_graphs)
        data = attach_labels(data, quantile_bin(targets, ds.bins))
        data.name = ds.name
        data.num_classes = ds.bins
        return data
    raise ValueError(f"unknown dataset format {ds.format!r}")


def add_base_features(dataset: Dataset, cfg: ExperimentConfig) -> Dataset:
    dataset = degree_onehot(dataset)
    graphs = [dataclasses.replace(g, pe=laplacian_pe(g, cfg.pe)) for g in dataset.graphs]
    return dataclasses.replace(dataset, graphs=graphs)


def _generator_config(cfg: ExperimentConfig, generator: str) -> dict:
    section = {"quop": cfg.quop, "qwalk": cfg.qwalk, "qpe": cfg.qpe}[generator]
    d = asdict(section)
    if "times" in d:
        d["times"] = list(d["times"])
    return {"dataset": asdict(cfg.dataset), "generator": generator, "params": d}


def compute_descriptors(dataset: Dataset, cfg: ExperimentConfig, generator: str) -> list[np.ndarray]:
    if generator == "quop":
        return [quop_run(g, cfg.quop) for g in dataset.graphs]
    if generator == "qwalk":
        return [qwalk_run(g, cfg.qwalk) for g in dataset.graphs]
    if generator == "qpe":
        return [qpe_descriptor(g, cfg.qpe) for g in dataset.graphs]
    raise ValueError(generator)


def cache_path(out: Path, dataset_name: str, generator: str, key: dict) -> Path:
    return out / "cache" / f"{dataset_name}__{generator}__{canonical_hash(key)}.bin"


def manifest_path(out: Path, cfg: ExperimentConfig) -> Path:
    return out / cfg.dataset.name / f"split_seed{cfg.seed}.json"


def prepare(cfg: ExperimentConfig, generators=FROZEN_GENERATORS) -> tuple[Dataset, SplitManifest]:
    """Parse, featurize, attach cached (or freshly computed) descriptors and
    write the split manifest under ``cfg.out``."""
    out = Path(cfg.out)
    (out / "cache").mkdir(parents=True, exist_ok=True)
    (out / cfg.dataset.name).mkdir(parents=True, exist_ok=True)
    dataset = add_base_features(load_dataset(cfg.dataset), cfg)

    for gen in generators:
        key = _generator_config(cfg, gen)
        path = cache_path(out, cfg.dataset.name, gen, key)
        mats = read_descriptor_cache(path, gen, key, len(dataset))
        if mats is None:
            t0 = time.perf_counter()
            mats = compute_descriptors(dataset, cfg, gen)
            write_descriptor_cache(path, gen, key, mats)
            log.info("computed %s descriptors for %s in %.1fs", gen, cfg.dataset.name, time.perf_counter() - t0)
        else:
            log.info("cache hit: %s", path.name)
        for g, m in zip(dataset.graphs, mats):
            g.descriptors[gen] = m

    mpath = manifest_path(out, cfg)
    manifest = stratified_split(dataset.labels, seed=cfg.seed)
    if mpath.is_file() and SplitManifest.load(mpath) == manifest:
        log.info("split manifest unchanged: %s", mpath)
    else:
        manifest.save(mpath)
    return dataset, manifest


@dataclass
class ResultRow:
    dataset: str
    method: str
    trainable: bool
    acc: float | None
    macro_f1: float | None
    macro_p: float | None
    macro_r: float | None
    epochs: int
    seed: int
    status: str
    wall_seconds: float

    def as_csv(self) -> list[str]:
        def fmt(x):
            return "" if x is None else f"{x:.6f}"

        return [
            self.dataset,
            self.method,
            "Y" if self.trainable else "N",
            fmt(self.acc),
            fmt(self.macro_f1),
            fmt(self.macro_p),
            fmt(self.macro_r),
            str(self.epochs),
            str(self.seed),
            self.status,
            f"{self.wall_seconds:.3f}",
        ]


def append_result(path: str | Path, row: ResultRow) -> None:
    """Append one row (writing the header first for a new file), flushed to disk."""
    path = Path(path)
    new = not path.is_file() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(RESULTS_HEADER)
        w.writerow(row.as_csv())
        fh.flush()
        os.fsync(fh.fileno())


def run_dir(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out) / "runs" / f"{cfg.dataset.name}__{cfg.method}__seed{cfg.seed}"


def run_experiment(cfg: ExperimentConfig, prepared: tuple[Dataset, SplitManifest] | None = None) -> ResultRow:
    """Train and test one (dataset, method) pair, write history, checkpoint
    and one results row."""
    t0 = time.perf_counter()
    spec = METHODS[cfg.method]
    dataset, manifest = prepared if prepared is not None else prepare(cfg)
    result = train_model(dataset, manifest, spec, cfg.train, cfg.vqc, cfg.gin)
    rdir = run_dir(cfg)
    rdir.mkdir(parents=True, exist_ok=True)
    write_history(rdir / "history.csv", result.history)
    if result.status == "ok":
        result.model.store.save(
            rdir / "checkpoint",
            {
                "epoch": result.best_epoch,
                "val_macro_f1": result.best_val_f1,
                "config_hash": cfg.config_hash(),
            },
        )
        m = result.metrics
        row = ResultRow(
            cfg.dataset.name, cfg.method, spec.trainable, m.accuracy, m.macro_f1,
            m.macro_precision, m.macro_recall, result.epochs_ran, cfg.seed, "ok",
            time.perf_counter() - t0,
        )
    else:
        row = ResultRow(
            cfg.dataset.name, cfg.method, spec.trainable, None, None, None, None,
            result.epochs_ran, cfg.seed, result.status, time.perf_counter() - t0,
        )
    append_result(Path(cfg.out) / "results.csv", row)
    return row


def run_bench(configs: list[ExperimentConfig], methods: list[str]) -> list[ResultRow]:
    """Every dataset x method, sequentially; a failing cell is recorded and skipped."""
    rows = []
    for base in configs:
        try:
            prepared = prepare(base)
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            log.error("prepare failed for %s: %s", base.dataset.name, exc)
            prepared = None
        for method in methods:
            cfg = base.with_overrides(method=method)
            t0 = time.perf_counter()
            if prepared is None:
                row = ResultRow(base.dataset.name, method, METHODS[method].trainable, None, None,
                                None, None, 0, cfg.seed, "failed", 0.0)
                append_result(Path(cfg.out) / "results.csv", row)
            else:
                try:
                    row = run_experiment(cfg, prepared)
                except Exception as exc:  # noqa: BLE001
                    log.error("%s/%s failed: %s", base.dataset.name, method, exc)
                    row = ResultRow(base.dataset.name, method, METHODS[method].trainable, None, None,
                                    None, None, 0, cfg.seed, "failed", time.perf_counter() - t0)
                    append_result(Path(cfg.out) / "results.csv", row)
            log.info("%s %s acc=%s f1=%s (%s)", row.dataset, row.method, row.acc, row.macro_f1, row.status)
            rows.append(row)
    return rows

"""Experiment configuration with canonical JSON hashing.

A config file is a JSON object.  Single-run fields::

    {
      "dataset": {"name": "MUTAG", "path": "data/MUTAG", "format": "tu"},
      "method": "qwalkvec-trainable",
      "seed": 7,
      "out": "runs",
      "pe": {"k": 8},
      "vqc": {"q": 8, "layers": 2},
      "quop": {"h": 1, "q": 5},
      "qwalk": {"steps": 32, "w_p": 0.5, "w_q": 4.0, "coin": "degree-weighted"},
      "qpe": {"times": [0.5, 1.0, 2.0], "anchors": 8},
      "train": {"lr": 0.001, "weight_decay": 0.0, "max_epochs": 30,
                "batch_size": 16, "patience": 7}
    }

A bench file may add ``"datasets": [...]`` (a list of dataset objects) and
``"methods": [...]``; every omitted field takes the default above.
For ``"format": "jsonl"`` datasets, ``path`` names the JSONL file and
``target_index``, ``bins`` and ``max_graphs`` control labelling.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .embed import METHODS, QpeConfig, QuopConfig, QWalkConfig, VqcConfig
from .gnn import GinConfig
from .spectral import PeConfig
from .train import TrainConfig


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    path: str | None = None
    format: str = "tu"  # tu | jsonl
    target_index: int = 0
    bins: int = 2
    max_graphs: int = 5000

    def resolved_path(self) -> Path:
        return Path(self.path) if self.path else Path("data") / self.name


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig
    method: str = "mlp"
    seed: int = 7
    out: str = "runs"
    pe: PeConfig = field(default_factory=PeConfig)
    vqc: VqcConfig = field(default_factory=VqcConfig)
    quop: QuopConfig = field(default_factory=QuopConfig)
    qwalk: QWalkConfig = field(default_factory=QWalkConfig)
    qpe: QpeConfig = field(default_factory=QpeConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    gin: GinConfig = field(default_factory=GinConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {list(METHODS)}")
        if self.train.seed != self.seed:
            object.__setattr__(self, "train", dataclasses.replace(self.train, seed=self.seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["qpe"]["times"] = list(d["qpe"]["times"])
        return d

    def config_hash(self) -> str:
        return canonical_hash(self.to_dict())

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "dataset" in kw and isinstance(kw["dataset"], str):
            name = kw.pop("dataset")
            kw["dataset"] = (
                self.dataset if name == self.dataset.name else DatasetConfig(name=name)
            )
        return dataclasses.replace(self, **kw)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def canonical_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]


_SECTIONS = {
    "pe": PeConfig,
    "vqc": VqcConfig,
    "quop": QuopConfig,
    "qwalk": QWalkConfig,
    "qpe": QpeConfig,
    "train": TrainConfig,
    "gin": GinConfig,
}


def _build(cls, data: dict | None):
    data = dict(data or {})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} field(s): {sorted(unknown)}")
    if cls is QpeConfig and "times" in data:
        data["times"] = tuple(data["times"])
    return cls(**data)


def _dataset(d) -> DatasetConfig:
    return DatasetConfig(name=d) if isinstance(d, str) else _build(DatasetConfig, d)


def experiment_from_dict(d: dict, dataset: DatasetConfig | None = None) -> ExperimentConfig:
    kwargs = {k: _build(cls, d.get(k)) for k, cls in _SECTIONS.items()}
    for key in ("method", "seed", "out"):
        if key in d:
            kwargs[key] = d[key]
    if dataset is None:
        if "dataset" not in d:
            raise ValueError("config needs a 'dataset' entry")
        dataset = _dataset(d["dataset"])
    return ExperimentConfig(dataset=dataset, **kwargs)


def load_config_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def bench_matrix(d: dict) -> tuple[list[ExperimentConfig], list[str]]:
    """Expand a bench file into one base config per dataset plus the method list."""
    datasets = [_dataset(x) for x in d.get("datasets", [])]
    if not datasets and "dataset" in d:
        datasets = [_dataset(d["dataset"])]
    methods = list(d.get("methods", METHODS))
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    return [experiment_from_dict(d, ds) for ds in datasets], methods

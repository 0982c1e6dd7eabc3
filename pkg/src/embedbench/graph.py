"""Graph containers, dataset ingestion, label binning and stratified splits."""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IngestionError, SplitError
from .rng import SplitMix64, mix

log = logging.getLogger(__name__)


@dataclass
class Graph:
    """Simple undirected graph with per-node feature blocks.

    ``edges`` holds each undirected edge once as ``(a, b)`` with ``a < b``,
    rows sorted lexicographically.
    """

    num_nodes: int
    edges: np.ndarray
    label: int = -1
    x: np.ndarray | None = None
    pe: np.ndarray | None = None
    descriptors: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        if self.num_edges:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        if self.num_edges:
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def neighbors(self) -> list[list[int]]:
        """Sorted adjacency lists."""
        nbrs: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for a, b in self.edges.tolist():
            nbrs[a].append(b)
            nbrs[b].append(a)
        for lst in nbrs:
            lst.sort()
        return nbrs


def make_graph(num_nodes: int, pairs: Iterable[Sequence[int]], label: int = -1) -> Graph:
    """Build a Graph from 0-based pairs, dropping self-loops and duplicates."""
    seen = set()
    for a, b in pairs:
        a, b = int(a), int(b)
        if not (0 <= a < num_nodes and 0 <= b < num_nodes):
            raise IngestionError(f"edge ({a}, {b}) outside graph of {num_nodes} nodes")
        if a == b:
            continue
        seen.add((a, b) if a < b else (b, a))
    edges = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
    return Graph(num_nodes=int(num_nodes), edges=edges, label=int(label))


@dataclass
class Dataset:
    name: str
    graphs: list[Graph]
    num_classes: int
    d_max: int = -1

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def labels(self) -> list[int]:
        return [g.label for g in self.graphs]


# --------------------------------------------------------------------------
# TU text format


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise IngestionError(f"missing dataset file: {path}")
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip()]


def parse_tu_dataset(directory: str | Path, name: str) -> Dataset:
    """Read a TU-format dataset (``NAME_A.txt``, ``NAME_graph_indicator.txt``,
    ``NAME_graph_labels.txt``).

    Node and edge attribute files are ignored; node features are built from
    degrees later.  Graph labels are remapped to ``0..C-1`` by ascending
    original value.
    """
    directory = Path(directory)
    indicator_path = directory / f"{name}_graph_indicator.txt"
    labels_path = directory / f"{name}_graph_labels.txt"
    edges_path = directory / f"{name}_A.txt"

    indicator = []
    for lineno, ln in enumerate(_read_lines(indicator_path), start=1):
        try:
            indicator.append(int(ln))
        except ValueError as exc:
            raise IngestionError(f"{indicator_path}:{lineno}: bad graph id {ln!r}") from exc

    raw_labels = []
    for lineno, ln in enumerate(_read_lines(labels_path), start=1):
        try:
            raw_labels.append(int(float(ln)))
        except ValueError as exc:
            raise IngestionError(f"{labels_path}:{lineno}: bad label {ln!r}") from exc

    n_graphs = len(raw_labels)
    counts = np.zeros(n_graphs, dtype=np.int64)
    local = np.empty(len(indicator), dtype=np.int64)
    for node, gid in enumerate(indicator):
        if not 1 <= gid <= n_graphs:
            raise IngestionError(
                f"{indicator_path}:{node + 1}: graph id {gid} outside 1..{n_graphs}"
            )
        local[node] = counts[gid - 1]
        counts[gid - 1] += 1

    pairs: dict[int, list[tuple[int, int]]] = defaultdict(list)
    n_nodes_total = len(indicator)
    for lineno, ln in enumerate(_read_lines(edges_path), start=1):
        parts = ln.replace(",", " ").split()
        if len(parts) != 2:
            raise IngestionError(f"{edges_path}:{lineno}: expected two node ids, got {ln!r}")
        try:
            a, b = int(parts[0]) - 1, int(parts[1]) - 1
        except ValueError as exc:
            raise IngestionError(f"{edges_path}:{lineno}: bad node id in {ln!r}") from exc
        if not (0 <= a < n_nodes_total and 0 <= b < n_nodes_total):
            raise IngestionError(f"{edges_path}:{lineno}: node id outside 1..{n_nodes_total}")
        if indicator[a] != indicator[b]:
            raise IngestionError(
                f"{edges_path}:{lineno}: edge ({a + 1}, {b + 1}) joins graphs "
                f"{indicator[a]} and {indicator[b]}"
            )
        pairs[indicator[a] - 1].append((int(local[a]), int(local[b])))

    classes = sorted(set(raw_labels))
    remap = {c: i for i, c in enumerate(classes)}
    graphs = [
        make_graph(int(counts[i]), pairs.get(i, ()), remap[raw_labels[i]])
        for i in range(n_graphs)
    ]
    return Dataset(name=name, graphs=graphs, num_classes=len(classes))


# --------------------------------------------------------------------------
# JSONL container


def load_jsonl_graphs(path: str | Path, target_index: int, max_graphs: int):
    """Read up to ``max_graphs`` graphs from a JSONL container.

    Each line is ``{"num_nodes": n, "edges": [[a, b], ...], "targets": [...]}``.
    Returns ``(dataset, targets)`` where the dataset graphs carry label -1.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"missing dataset file: {path}")
    graphs: list[Graph] = []
    targets: list[float] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if len(graphs) >= max_graphs:
                break
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                n = int(rec["num_nodes"])
                edges = rec["edges"]
                tvec = rec["targets"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise IngestionError(f"{path}:{lineno}: malformed record ({exc})") from exc
            if not 0 <= target_index < len(tvec):
                raise IngestionError(
                    f"{path}:{lineno}: target_index {target_index} out of range "
                    f"for {len(tvec)} targets"
                )
            try:
                graphs.append(make_graph(n, edges))
            except (IngestionError, ValueError, TypeError) as exc:
                raise IngestionError(f"{path}:{lineno}: {exc}") from exc
            targets.append(float(tvec[target_index]))
    return Dataset(name=path.stem, graphs=graphs, num_classes=0), targets


def write_jsonl_graphs(path: str | Path, graphs: Sequence[Graph], targets: Sequence[Sequence[float]]):
    with open(path, "w", encoding="utf-8") as fh:
        for g, t in zip(graphs, targets):
            rec = {"num_nodes": g.num_nodes, "edges": g.edges.tolist(), "targets": list(t)}
            fh.write(json.dumps(rec) + "\n")


def attach_labels(dataset: Dataset, labels: Sequence[int]) -> Dataset:
    graphs = [replace(g, label=int(y)) for g, y in zip(dataset.graphs, labels)]
    return replace(dataset, graphs=graphs, num_classes=int(max(labels)) + 1)


# --------------------------------------------------------------------------
# Features


def onehot_degrees(g: Graph, d_max: int) -> np.ndarray:
    idx = np.minimum(g.degrees(), d_max)
    x = np.zeros((g.num_nodes, d_max + 1))
    x[np.arange(g.num_nodes), idx] = 1.0
    return x


def degree_onehot(dataset: Dataset, d_max: int | None = None) -> Dataset:
    """Attach degree one-hot rows of width ``d_max + 1`` to every graph.

    ``d_max`` defaults to the largest degree in the dataset; degrees above
    an explicit cap are clamped into the last column.
    """
    if d_max is None:
        d_max = max((int(g.degrees().max(initial=0)) for g in dataset.graphs), default=0)
    graphs = [replace(g, x=onehot_degrees(g, d_max)) for g in dataset.graphs]
    return replace(dataset, graphs=graphs, d_max=d_max)


def ego_subgraph(g: Graph, v: int, h: int) -> tuple[Graph, list[int]]:
    """Induced ``h``-hop neighbourhood of ``v`` in canonical order.

    The ordering starts at ``v`` and then lists BFS layers, each layer sorted
    by original node index.  The returned graph uses positions in that
    ordering as node ids.
    """
    nbrs = g.neighbors()
    ordering = [v]
    seen = {v}
    frontier = [v]
    for _ in range(h):
        nxt = sorted({u for w in frontier for u in nbrs[w] if u not in seen})
        if not nxt:
            break
        seen.update(nxt)
        ordering.extend(nxt)
        frontier = nxt
    pos = {node: i for i, node in enumerate(ordering)}
    pairs = [(pos[a], pos[b]) for a, b in g.edges.tolist() if a in pos and b in pos]
    return make_graph(len(ordering), pairs), ordering


# --------------------------------------------------------------------------
# Labels and splits


def quantile_bin(targets: Sequence[float], bins: int) -> list[int]:
    """Bin real targets at empirical quantiles ``i / bins`` ("lower" rule).

    A value equal to an edge goes to the lower bin.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    t = np.asarray(targets, dtype=np.float64)
    if t.size == 0:
        raise ValueError("no targets to bin")
    if np.all(t == t[0]):
        raise SplitError("degenerate target: all values identical, cannot stratify")
    edges = np.quantile(t, [i / bins for i in range(1, bins)], method="lower")
    return np.searchsorted(edges, t, side="left").astype(int).tolist()


@dataclass
class SplitManifest:
    train: list[int]
    val: list[int]
    test: list[int]
    seed: int
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "ratios": list(self.ratios),
                "train": self.train,
                "val": self.val,
                "test": self.test,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SplitManifest":
        d = json.loads(text)
        return cls(
            train=[int(i) for i in d["train"]],
            val=[int(i) for i in d["val"]],
            test=[int(i) for i in d["test"]],
            seed=int(d["seed"]),
            ratios=tuple(float(r) for r in d["ratios"]),
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.to_json(), encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def stratified_split(
    labels: Sequence[int],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 7,
) -> SplitManifest:
    """Per-class shuffled split: floor for train and val, remainder to test."""
    by_class: dict[int, list[int]] = defaultdict(list)
    for i, y in enumerate(labels):
        by_class[int(y)].append(i)
    train, val, test = [], [], []
    for c in sorted(by_class):
        members = by_class[c]
        n_c = len(members)
        if n_c < 3:
            raise SplitError(f"unstratifiable class {c}: only {n_c} member(s)")
        order = SplitMix64(mix(seed, "split", c)).permutation(members)
        # 1e-9 absorbs products that land just below an integer, e.g. 0.7 * 10
        n_train = math.floor(ratios[0] * n_c + 1e-9)
        n_val = math.floor(ratios[1] * n_c + 1e-9)
        train += order[:n_train]
        val += order[n_train:n_train + n_val]
        test += order[n_train + n_val:]
    return SplitManifest(sorted(train), sorted(val), sorted(test), seed, tuple(ratios))

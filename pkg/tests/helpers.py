"""Small graph factories and dense oracles shared by the test modules."""

from __future__ import annotations

import numpy as np

from embedbench.graph import Dataset, Graph, make_graph


def random_graph(rng: np.random.Generator, n: int, p: float = 0.3, label: int = 0) -> Graph:
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
    return make_graph(n, pairs, label)


def cycle(n: int, label: int = 0) -> Graph:
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)], label)


def path(n: int, label: int = 0) -> Graph:
    return make_graph(n, [(i, i + 1) for i in range(n - 1)], label)


def star(n: int, label: int = 0) -> Graph:
    return make_graph(n, [(0, i) for i in range(1, n)], label)


def toy_dataset(name: str = "toy", per_class: int = 8, seed: int = 0) -> Dataset:
    """Two separable classes: cycles (label 0) and stars (label 1)."""
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(per_class):
        graphs.append(cycle(int(rng.integers(4, 9)), 0))
        graphs.append(star(int(rng.integers(4, 9)), 1))
    return Dataset(name=name, graphs=graphs, num_classes=2)


def write_tu(directory, name: str, dataset: Dataset, raw_labels=None) -> None:
    """Write a dataset in TU text format (1-indexed, both arc orientations)."""
    a_lines, ind_lines = [], []
    offset = 0
    for gi, g in enumerate(dataset.graphs, start=1):
        ind_lines += [str(gi)] * g.num_nodes
        for a, b in g.edges.tolist():
            a_lines.append(f"{a + 1 + offset}, {b + 1 + offset}")
            a_lines.append(f"{b + 1 + offset}, {a + 1 + offset}")
        offset += g.num_nodes
    labels = raw_labels if raw_labels is not None else [g.label for g in dataset.graphs]
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (directory / f"{name}_graph_indicator.txt").write_text("\n".join(ind_lines) + "\n")
    (directory / f"{name}_graph_labels.txt").write_text("\n".join(map(str, labels)) + "\n")


def taylor_expm(a: np.ndarray, terms: int = 30) -> np.ndarray:
    """exp(a) by scaling and squaring around a truncated Taylor series."""
    norm = np.max(np.sum(np.abs(a), axis=1))
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    b = a / 2**s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


# dense single-qubit gates for the circuit oracle
def ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def on_qubit(gate: np.ndarray, j: int, q: int) -> np.ndarray:
    """Embed a 1-qubit gate; qubit 0 is the most significant bit."""
    out = np.array([[1.0 + 0j]])
    for k in range(q):
        out = np.kron(out, gate if k == j else np.eye(2))
    return out


def cnot(control: int, target: int, q: int) -> np.ndarray:
    dim = 2**q
    m = np.zeros((dim, dim))
    for b in range(dim):
        cbit = (b >> (q - 1 - control)) & 1
        nb = b ^ (1 << (q - 1 - target)) if cbit else b
        m[nb, b] = 1.0
    return m


def dense_circuit_z(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """<Z_k> for one input row, built from explicit 2^q x 2^q matrices."""
    q = phi.size
    state = np.zeros(2**q, dtype=complex)
    state[0] = 1.0
    for j in range(q):
        state = on_qubit(ry(phi[j]), j, q) @ state
    for layer in theta:
        for j in range(q):
            state = on_qubit(ry(layer[j, 0]), j, q) @ state
        for j in range(q):
            state = on_qubit(rz(layer[j, 1]), j, q) @ state
        if q > 1:
            for j in range(q):
                state = cnot(j, (j + 1) % q, q) @ state
    probs = np.abs(state) ** 2
    z = np.zeros(q)
    for b, p in enumerate(probs):
        for k in range(q):
            z[k] += p * (1 - 2 * ((b >> (q - 1 - k)) & 1))
    return z


def dense_walk(g: Graph, steps: int, w_p: float, w_q: float, coin: str = "degree-weighted"):
    """Coined walk with explicit S and C matrices over arcs enumerated naively."""
    arcs = []
    for v in range(g.num_nodes):
        for a, b in g.edges.tolist():
            if a == v:
                arcs.append((a, b))
            elif b == v:
                arcs.append((b, a))
    arcs.sort()
    m = len(arcs)
    index = {arc: i for i, arc in enumerate(arcs)}
    deg = g.degrees()
    shift = np.zeros((m, m))
    for (x, y), i in index.items():
        shift[index[(y, x)], i] = 1.0
    c = np.zeros((m, m))
    for v in range(g.num_nodes):
        own = [i for (x, _), i in index.items() if x == v]
        if not own:
            continue
        if coin == "grover-uniform":
            alpha = np.ones(len(own))
        else:
            alpha = np.array([w_p if deg[arcs[i][1]] <= deg[v] else w_q for i in own])
        w = np.sqrt(alpha / alpha.sum())
        block = 2 * np.outer(w, w) - np.eye(len(own))
        for r, i in enumerate(own):
            for s, j in enumerate(own):
                c[i, j] = block[r, s]
    step = shift @ c
    psi = np.full(m, 1 / np.sqrt(m))
    out = np.zeros((g.num_nodes, steps))
    for t in range(steps):
        psi = step @ psi
        for (x, y), i in index.items():
            out[y, t] += psi[i] ** 2
    return out


def featurize(dataset: Dataset, k: int = 8) -> Dataset:
    """Attach degree one-hot and Laplacian PE blocks in place of the pipeline."""
    from dataclasses import replace

    from embedbench.graph import degree_onehot
    from embedbench.spectral import PeConfig, laplacian_pe

    ds = degree_onehot(dataset)
    return replace(ds, graphs=[replace(g, pe=laplacian_pe(g, PeConfig(k))) for g in ds.graphs])


def random_batch_dataset(seed: int = 0, count: int = 5, classes: int = 2) -> Dataset:
    rng = np.random.default_rng(seed)
    graphs = [random_graph(rng, int(rng.integers(4, 10)), 0.4, label=i % classes) for i in range(count)]
    return featurize(Dataset("rand", graphs, classes))

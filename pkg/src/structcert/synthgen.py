"""Synthetic motif benchmark.

Each graph is a label-bearing motif (cycle for label 0, clique for label 1)
on nodes ``0..n_motif-1`` joined by a single bridge edge to a connected
Erdos-Renyi graph on the remaining nodes.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .graph import GraphBits, InvalidInputError, encode_graph, read_edge_list, write_edge_list

NEGATIVE, POSITIVE = 0, 1
SPLITS = ("train", "val", "test")
MAX_ER_ATTEMPTS = 10_000


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_motif: int = 10
    n_random: int = 10
    er_p: float = 0.5
    train: int = 1000
    val: int = 1000
    test: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_motif < 3:
            raise InvalidInputError("n_motif must be at least 3")
        if self.n_random < 1:
            raise InvalidInputError("n_random must be at least 1")
        if not 0.0 < self.er_p < 1.0:
            raise InvalidInputError("er_p must lie in (0, 1)")
        for name in SPLITS:
            size = getattr(self, name)
            if size < 1 or size % 2:
                raise InvalidInputError(f"{name} size must be a positive even number")

    @property
    def num_nodes(self) -> int:
        return self.n_motif + self.n_random

    def sizes(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in SPLITS}

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _find(parent: list[int], a: int) -> int:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def is_connected(num_nodes: int, edges) -> bool:
    parent = list(range(num_nodes))
    components = num_nodes
    for u, v in edges:
        ru, rv = _find(parent, u), _find(parent, v)
        if ru != rv:
            parent[ru] = rv
            components -= 1
    return components == 1


def _er_edges(n: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(rows.size) < p
    return list(zip(rows[keep].tolist(), cols[keep].tolist()))


def connected_er_edges(n: int, p: float, rng: np.random.Generator,
                       max_attempts: int = MAX_ER_ATTEMPTS) -> list[tuple[int, int]]:
    if n < 1:
        raise InvalidInputError("need at least one node")
    for _ in range(max_attempts):
        edges = _er_edges(n, p, rng)
        if is_connected(n, edges):
            return edges
    raise GenerationError(f"no connected G({n}, {p}) after {max_attempts} attempts")


def connected_er(n: int, p: float, rng: np.random.Generator) -> GraphBits:
    """G(n, p) conditioned on connectivity, by rejection."""
    return encode_graph(connected_er_edges(n, p, rng), n)


def motif_edges(label: int, n_motif: int) -> list[tuple[int, int]]:
    if label == NEGATIVE:
        return [(i, (i + 1) % n_motif) for i in range(n_motif)]
    if label == POSITIVE:
        return [(u, v) for u in range(n_motif) for v in range(u + 1, n_motif)]
    raise InvalidInputError(f"label must be 0 or 1, got {label}")


def generate_graph(label: int, cfg: SynthConfig, rng: np.random.Generator) -> GraphBits:
    edges = motif_edges(label, cfg.n_motif)
    offset = cfg.n_motif
    edges += [(u + offset, v + offset) for u, v in connected_er_edges(cfg.n_random, cfg.er_p, rng)]
    bridge_motif = int(rng.integers(cfg.n_motif))
    bridge_random = offset + int(rng.integers(cfg.n_random))
    edges.append((bridge_motif, bridge_random))
    return encode_graph(edges, cfg.num_nodes)


@dataclass
class Split:
    graphs: list[GraphBits]
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.graphs)

    def bits(self) -> np.ndarray:
        return np.stack([g.bits for g in self.graphs])


def generate_split(size: int, cfg: SynthConfig, rng: np.random.Generator) -> Split:
    labels = np.array([POSITIVE] * (size // 2) + [NEGATIVE] * (size // 2))
    rng.shuffle(labels)
    return Split([generate_graph(int(y), cfg, rng) for y in labels], labels)


def generate_dataset(cfg: SynthConfig) -> dict[str, Split]:
    """Balanced train/val/test splits; each split draws from its own derived seed."""
    root = np.random.SeedSequence(cfg.seed)
    streams = root.spawn(len(SPLITS))
    return {name: generate_split(getattr(cfg, name), cfg, np.random.default_rng(ss))
            for name, ss in zip(SPLITS, streams)}


def write_dataset(dataset: dict[str, Split], cfg: SynthConfig, root: str | Path) -> Path:
    root = Path(root)
    (root / "graphs").mkdir(parents=True, exist_ok=True)
    rows = []
    for name in SPLITS:
        for i, (g, y) in enumerate(zip(dataset[name].graphs, dataset[name].labels)):
            gid = f"{name}_{i:05d}"
            write_edge_list(g, root / "graphs" / f"{gid}.txt")
            rows.append((gid, int(y), name))
    with (root / "labels.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["graph_id", "label", "split"])
        w.writerows(rows)
    meta = {"config": asdict(cfg), "seed": cfg.seed, "config_hash": cfg.digest()}
    (root / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return root


def read_dataset(root: str | Path) -> tuple[dict[str, Split], dict, dict[str, list[str]]]:
    """Load a dataset directory; returns splits, metadata and graph ids per row."""
    root = Path(root)
    meta = json.loads((root / "meta.json").read_text())
    graphs = {name: [] for name in SPLITS}
    labels = {name: [] for name in SPLITS}
    ids = {name: [] for name in SPLITS}
    with (root / "labels.csv").open() as fh:
        for row in csv.DictReader(fh):
            name = row["split"]
            graphs[name].append(read_edge_list(root / "graphs" / f"{row['graph_id']}.txt"))
            labels[name].append(int(row["label"]))
            ids[name].append(row["graph_id"])
    splits = {name: Split(graphs[name], np.array(labels[name], dtype=np.int64))
              for name in SPLITS}
    return splits, meta, ids


def bridge_count(g: GraphBits, n_motif: int) -> int:
    adj = g.adjacency()
    return int(adj[:n_motif, n_motif:].sum())


"""Bit-vector representation of undirected, unweighted graphs.

A graph on ``n`` nodes is stored as a binary vector over its ``n(n-1)/2``
node pairs.  Pair ``(u, v)`` with ``u < v`` lives at index
``u*n - u(u+1)/2 + (v - u - 1)`` (upper triangle, row-major).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .partition import NodePairPartition


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class ResourceLimitError(RuntimeError):
    """Raised when a computation would exceed a configured size cap."""


def num_pairs(num_nodes: int) -> int:
    return num_nodes * (num_nodes - 1) // 2


def pair_index(u: int, v: int, num_nodes: int) -> int:
    if u == v:
        raise InvalidInputError(f"self-loop ({u}, {v}) is not a node pair")
    if u > v:
        u, v = v, u
    if u < 0 or v >= num_nodes:
        raise InvalidInputError(f"pair ({u}, {v}) out of range for {num_nodes} nodes")
    return u * num_nodes - u * (u + 1) // 2 + (v - u - 1)


def pair_endpoints(num_nodes: int) -> np.ndarray:
    """Return an ``(n_pairs, 2)`` array whose row ``k`` is the pair at index ``k``."""
    rows, cols = np.triu_indices(num_nodes, k=1)
    return np.stack([rows, cols], axis=1)


@dataclass(frozen=True, eq=False)
class GraphBits:
    """An undirected graph as an immutable bit vector over node pairs."""

    num_nodes: int
    bits: np.ndarray

    def __post_init__(self):
        if self.num_nodes < 1:
            raise InvalidInputError("num_nodes must be positive")
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size != num_pairs(self.num_nodes):
            raise InvalidInputError(
                f"expected {num_pairs(self.num_nodes)} bits for {self.num_nodes} nodes, "
                f"got shape {bits.shape}"
            )
        if np.any(bits > 1):
            raise InvalidInputError("bits must be 0/1")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other):
        if not isinstance(other, GraphBits):
            return NotImplemented
        return self.num_nodes == other.num_nodes and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.num_nodes, self.bits.tobytes()))

    def __repr__(self):
        return f"GraphBits(num_nodes={self.num_nodes}, bits='{self.bitstring()}')"

    @property
    def num_edges(self) -> int:
        return int(self.bits.sum())

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def complement(self) -> GraphBits:
        return GraphBits(self.num_nodes, 1 - self.bits)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.num_nodes, self.num_nodes), dtype=np.uint8)
        rows, cols = np.triu_indices(self.num_nodes, k=1)
        adj[rows, cols] = self.bits
        return adj | adj.T


def encode_graph(edge_list: Iterable[tuple[int, int]], num_nodes: int) -> GraphBits:
    bits = np.zeros(num_pairs(num_nodes), dtype=np.uint8)
    for u, v in edge_list:
        bits[pair_index(int(u), int(v), num_nodes)] = 1
    return GraphBits(num_nodes, bits)


def decode_graph(g: GraphBits) -> list[tuple[int, int]]:
    ends = pair_endpoints(g.num_nodes)[g.bits.astype(bool)]
    return [(int(u), int(v)) for u, v in ends]


def region_distances(x: GraphBits, x_tilde: GraphBits,
                     partition: NodePairPartition) -> np.ndarray:
    """Count differing bits per region.

    Returns a vector of length ``C + 1``; the last entry counts differences in
    the noise-free pairs.
    """
    if x.num_nodes != x_tilde.num_nodes or partition.num_nodes != x.num_nodes:
        raise InvalidInputError("graphs and partition must share num_nodes")
    diff = x.bits != x_tilde.bits
    labels = partition.region_of.copy()
    labels[labels < 0] = partition.num_regions
    return np.bincount(labels[diff], minlength=partition.num_regions + 1).astype(np.int64)


def read_edge_list(path: str | Path) -> GraphBits:
    num_nodes = None
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if num_nodes is None:
            if len(parts) != 2 or parts[0] != "n":
                raise InvalidInputError(f"{path}:{lineno}: expected header 'n <num_nodes>'")
            num_nodes = int(parts[1])
            continue
        if len(parts) != 2:
            raise InvalidInputError(f"{path}:{lineno}: expected 'u v'")
        edges.append((int(parts[0]), int(parts[1])))
    if num_nodes is None:
        raise InvalidInputError(f"{path}: missing header")
    return encode_graph(edges, num_nodes)


def write_edge_list(g: GraphBits, path: str | Path) -> None:
    lines = [f"n {g.num_nodes}"] + [f"{u} {v}" for u, v in decode_graph(g)]
    Path(path).write_text("\n".join(lines) + "\n")

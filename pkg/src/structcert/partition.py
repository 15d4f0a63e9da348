"""Disjoint node-pair regions sharing one flip probability each."""
from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import GraphBits, InvalidInputError, num_pairs, pair_endpoints, pair_index

NOISE_FREE = -1


@dataclass(frozen=True, eq=False)
class NodePairPartition:
    """Assignment of every node pair to one region id or ``NOISE_FREE``.

    ``region_of[k]`` is the region of pair index ``k``.  Regions are dense
    integers ``0..C-1``; ``names`` carries optional human-readable labels.
    """

    num_nodes: int
    region_of: np.ndarray
    num_regions: int
    names: tuple = field(default=())

    def __post_init__(self):
        region_of = np.asarray(self.region_of, dtype=np.int64)
        if region_of.shape != (num_pairs(self.num_nodes),):
            raise InvalidInputError("region_of must have one entry per node pair")
        if self.num_regions < 1:
            raise InvalidInputError("a partition needs at least one region")
        if np.any((region_of < NOISE_FREE) | (region_of >= self.num_regions)):
            raise InvalidInputError("region ids out of range")
        region_of = region_of.copy()
        region_of.setflags(write=False)
        object.__setattr__(self, "region_of", region_of)
        if not self.names:
            object.__setattr__(self, "names", tuple(str(i) for i in range(self.num_regions)))
        elif len(self.names) != self.num_regions:
            raise InvalidInputError("one name per region required")

    @property
    def region_sizes(self) -> np.ndarray:
        return np.bincount(self.region_of[self.region_of >= 0],
                           minlength=self.num_regions).astype(np.int64)

    @property
    def num_noise_free(self) -> int:
        return int(np.count_nonzero(self.region_of == NOISE_FREE))

    def members(self, region: int) -> np.ndarray:
        return np.flatnonzero(self.region_of == region)

    def __eq__(self, other):
        if not isinstance(other, NodePairPartition):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and self.num_regions == other.num_regions
                and np.array_equal(self.region_of, other.region_of))

    def __hash__(self):
        return hash((self.num_nodes, self.num_regions, self.region_of.tobytes()))


def _items(assignment) -> Iterable:
    if isinstance(assignment, Mapping):
        return assignment.items()
    return assignment


def build_partition(num_nodes: int,
                    assignment: Mapping[tuple[int, int], Hashable]
                    | Iterable[tuple[tuple[int, int], Hashable]]) -> NodePairPartition:
    """Build a partition from a ``pair -> region`` assignment.

    Unassigned pairs are noise-free.  Region ids are compacted to ``0..C-1``
    in order of first appearance while iterating ``assignment``.
    """
    region_of = np.full(num_pairs(num_nodes), NOISE_FREE, dtype=np.int64)
    ids: dict = {}
    for (u, v), region in _items(assignment):
        k = pair_index(int(u), int(v), num_nodes)
        rid = ids.setdefault(region, len(ids))
        if region_of[k] != NOISE_FREE and region_of[k] != rid:
            raise InvalidInputError(f"pair ({u}, {v}) assigned to two regions")
        region_of[k] = rid
    if not ids:
        raise InvalidInputError("assignment is empty: every pair would be noise-free")
    return NodePairPartition(num_nodes, region_of, len(ids), tuple(str(r) for r in ids))


def isotropic_partition(num_nodes: int) -> NodePairPartition:
    return NodePairPartition(num_nodes, np.zeros(num_pairs(num_nodes), dtype=np.int64), 1,
                             ("all",))


def motif_partition(n_motif: int, n_random: int) -> NodePairPartition:
    """Motif pairs -> region 0, random-part pairs -> region 1, cross pairs noise-free.

    Nodes ``0..n_motif-1`` form the motif.  The bridge edge is a cross pair, so
    it is never perturbed.
    """
    if n_motif < 3:
        raise InvalidInputError("n_motif must be at least 3")
    if n_random < 2:
        raise InvalidInputError("random part needs at least 2 nodes for a non-empty region")
    n = n_motif + n_random
    ends = pair_endpoints(n)
    in_motif = ends < n_motif
    region_of = np.full(len(ends), NOISE_FREE, dtype=np.int64)
    region_of[in_motif.all(axis=1)] = 0
    region_of[~in_motif.any(axis=1)] = 1
    return NodePairPartition(n, region_of, 2, ("motif", "random"))


def sparsity_aware_partition(x: GraphBits) -> NodePairPartition:
    """Existing edges -> region 0 (deletions), non-edges -> region 1 (additions)."""
    region_of = np.where(x.bits == 1, 0, 1).astype(np.int64)
    return NodePairPartition(x.num_nodes, region_of, 2, ("edges", "non_edges"))


def read_partition(path: str | Path, num_nodes: int) -> NodePairPartition:
    """Read ``u v region_name`` lines; region names get ids in alphabetical order."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InvalidInputError(f"{path}:{lineno}: expected 'u v region_name'")
        rows.append(((int(parts[0]), int(parts[1])), parts[2]))
    rows.sort(key=lambda item: item[1])
    return build_partition(num_nodes, rows)


def write_partition(partition: NodePairPartition, path: str | Path) -> None:
    ends = pair_endpoints(partition.num_nodes)
    lines = [f"{u} {v} {partition.names[r]}"
             for (u, v), r in zip(ends, partition.region_of) if r != NOISE_FREE]
    Path(path).write_text("\n".join(lines) + "\n")

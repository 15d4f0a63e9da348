"""Anisotropic Bernoulli noise and Monte-Carlo vote counting.

A label oracle is any callable mapping a ``(m, n_pairs)`` uint8 array of
graph bit vectors to ``m`` integer labels.  Working in batches keeps the
sampling loop in numpy.
"""
from __future__ import annotations

import json
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import GraphBits, InvalidInputError
from .partition import NodePairPartition

LabelOracle = Callable[[np.ndarray], np.ndarray]

NO_LABEL = -1
DEFAULT_CHUNK = 10_000


@dataclass(frozen=True)
class NoiseSpec:
    """Per-region flip probabilities.

    Probabilities must lie in ``[0, 0.5)``; ``allow_half`` lifts the upper
    limit to ``0.5`` inclusive for tests of the degenerate uniform case.
    """

    probs: tuple[float, ...]
    allow_half: bool = field(default=False, compare=False)

    def __post_init__(self):
        probs = tuple(float(p) for p in np.atleast_1d(self.probs))
        object.__setattr__(self, "probs", probs)
        if not probs:
            raise InvalidInputError("need at least one flip probability")
        for p in probs:
            ok = 0.0 <= p <= 0.5 if self.allow_half else 0.0 <= p < 0.5
            if not ok:
                raise InvalidInputError(f"flip probability {p} outside [0, 0.5)")

    @property
    def num_regions(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def per_pair(self, partition: NodePairPartition) -> np.ndarray:
        """Flip probability of every node pair (0 for noise-free pairs)."""
        if partition.num_regions != self.num_regions:
            raise InvalidInputError(
                f"partition has {partition.num_regions} regions, noise has {self.num_regions}")
        table = np.append(self.as_array(), 0.0)
        return table[partition.region_of]  # NOISE_FREE == -1 picks the trailing 0


@dataclass(frozen=True)
class LabelDistribution:
    counts: dict
    total: int

    @property
    def ranking(self) -> list[tuple[int, int]]:
        # highest count first, smallest label id on ties
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    @property
    def c_A(self) -> int:
        return self.ranking[0][0]

    @property
    def n_A(self) -> int:
        return self.ranking[0][1]

    @property
    def c_B(self) -> int:
        r = self.ranking
        return r[1][0] if len(r) > 1 else NO_LABEL

    @property
    def n_B(self) -> int:
        r = self.ranking
        return r[1][1] if len(r) > 1 else 0

    def frequency(self, label: int) -> float:
        return self.counts.get(label, 0) / self.total


def sample_noise_batch(x: GraphBits, partition: NodePairPartition, noise: NoiseSpec,
                       size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` noisy copies of ``x`` as a ``(size, n_pairs)`` uint8 array."""
    if partition.num_nodes != x.num_nodes:
        raise InvalidInputError("partition and graph disagree on num_nodes")
    p = noise.per_pair(partition)
    noisy = np.flatnonzero(p > 0)
    out = np.broadcast_to(x.bits, (size, x.bits.size)).copy()
    if noisy.size:
        flips = rng.random((size, noisy.size), dtype=np.float32) < p[noisy].astype(np.float32)
        out[:, noisy] ^= flips.astype(np.uint8)
    return out


def sample_noise(x: GraphBits, partition: NodePairPartition, noise: NoiseSpec,
                 rng: np.random.Generator) -> GraphBits:
    return GraphBits(x.num_nodes, sample_noise_batch(x, partition, noise, 1, rng)[0])


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _as_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2**63))
    return int(rng)


def estimate_label_distribution(x: GraphBits, classify: LabelOracle,
                                partition: NodePairPartition, noise: NoiseSpec, N: int,
                                rng: int | np.random.Generator = 0, *,
                                chunk_size: int = DEFAULT_CHUNK,
                                workers: int = 1) -> LabelDistribution:
    """Count base-classifier labels over ``N`` noisy copies of ``x``.

    Each chunk of samples gets its own generator derived from the master seed
    and the chunk index, so the counts do not depend on ``workers``.
    """
    if N < 1:
        raise InvalidInputError("N must be at least 1")
    seed = _as_seed(rng)
    sizes = [min(chunk_size, N - start) for start in range(0, N, chunk_size)]

    def run(chunk: int) -> np.ndarray:
        batch = sample_noise_batch(x, partition, noise, sizes[chunk], _chunk_rng(seed, chunk))
        return np.asarray(classify(batch), dtype=np.int64)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            labels = list(pool.map(run, range(len(sizes))))
    else:
        labels = [run(i) for i in range(len(sizes))]
    values, counts = np.unique(np.concatenate(labels), return_counts=True)
    return LabelDistribution({int(v): int(c) for v, c in zip(values, counts)}, N)


def save_votes(path: str | Path, graph_id: str, seed: int, dist: LabelDistribution,
               **extra) -> None:
    record = {"graph_id": graph_id, "seed": seed, "N": dist.total,
              "counts": {str(k): v for k, v in sorted(dist.counts.items())}, **extra}
    Path(path).write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")


def load_votes(path: str | Path) -> tuple[dict, LabelDistribution]:
    record = json.loads(Path(path).read_text())
    counts = {int(k): int(v) for k, v in record["counts"].items()}
    if sum(counts.values()) != record["N"]:
        raise InvalidInputError(f"{path}: counts do not sum to N")
    return record, LabelDistribution(counts, record["N"])


def empirical_flip_rates(x: GraphBits, samples: np.ndarray,
                         partition: NodePairPartition) -> np.ndarray:
    """Fraction of flipped bits per region over a batch of samples."""
    flipped = (samples != x.bits).mean(axis=0)
    return np.array([flipped[partition.members(i)].mean() if partition.members(i).size
                     else np.nan for i in range(partition.num_regions)])


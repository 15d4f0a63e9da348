"""End-to-end experiment pipeline: generate, train, certify, score."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import synthgen
from .classifier import LinearModel, train
from .engine import CertificationGrid, certification_grid, write_grid_report
from .graph import GraphBits, InvalidInputError
from .partition import (NodePairPartition, isotropic_partition, motif_partition,
                        read_partition, sparsity_aware_partition)
from .smoothing import LabelDistribution, NoiseSpec, estimate_label_distribution, load_votes, \
    save_votes
from .stats import ConfidenceBounds, bound_top_two

log = logging.getLogger(__name__)

MODES = ("isotropic", "anisotropic", "sparsity-aware")
DEFAULT_NOISE = {"isotropic": [0.02], "anisotropic": [0.02, 0.45],
                 "sparsity-aware": [0.04, 0.2]}
SWEEP_MOTIF = [round(0.02 * k, 2) for k in range(1, 11)]
SWEEP_RANDOM = [round(0.05 * k, 2) for k in range(1, 10)]


@dataclass
class ExperimentConfig:
    dataset_dir: str = "data"
    n_motif: int = 10
    n_random: int = 10
    er_p: float = 0.5
    train_size: int = 1000
    val_size: int = 1000
    test_size: int = 100
    model_path: str = "model.json"
    epochs: int = 50
    learning_rate: float = 0.1
    regularization: float = 1e-3
    mode: str = "anisotropic"
    noise: list | None = None
    N: int = 100_000
    alpha: float = 0.99
    r_max: list | None = None
    seed: int = 0
    output_dir: str = "out"
    split: str = "test"
    partition_file: str | None = None
    max_graphs: int | None = None
    workers: int = 1
    prune: bool = False
    full_margins: bool = True
    sweep_motif: list = field(default_factory=lambda: list(SWEEP_MOTIF))
    sweep_random: list = field(default_factory=lambda: list(SWEEP_RANDOM))

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.noise is None:
            self.noise = list(DEFAULT_NOISE[self.mode])
        self.noise = [float(p) for p in np.atleast_1d(self.noise)]
        if self.r_max is not None:
            self.r_max = [int(r) for r in np.atleast_1d(self.r_max)]
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError("alpha must lie in (0, 1)")
        if self.N < 1:
            raise InvalidInputError("N must be at least 1")
        if self.split not in synthgen.SPLITS:
            raise InvalidInputError(f"split must be one of {synthgen.SPLITS}")

    @classmethod
    def fields(cls) -> list[dataclasses.Field]:
        return list(dataclasses.fields(cls))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def synth_config(self) -> synthgen.SynthConfig:
        return synthgen.SynthConfig(self.n_motif, self.n_random, self.er_p, self.train_size,
                                    self.val_size, self.test_size, self.seed)

    def with_noise(self, noise) -> ExperimentConfig:
        return dataclasses.replace(self, noise=list(noise))


# -- generate / train --------------------------------------------------------------------

def run_generate(cfg: ExperimentConfig) -> Path:
    sc = cfg.synth_config()
    return synthgen.write_dataset(synthgen.generate_dataset(sc), sc, cfg.dataset_dir)


def run_train(cfg: ExperimentConfig) -> tuple[LinearModel, dict]:
    splits, _, _ = synthgen.read_dataset(cfg.dataset_dir)
    model = train(splits["train"].graphs, splits["train"].labels, epochs=cfg.epochs,
                  learning_rate=cfg.learning_rate, regularization=cfg.regularization,
                  seed=cfg.seed)
    acc = {name: float(np.mean(model.predict_batch(splits[name].bits()) == splits[name].labels))
           for name in synthgen.SPLITS}
    Path(cfg.model_path).parent.mkdir(parents=True, exist_ok=True)
    model.save(cfg.model_path)
    Path(cfg.model_path).with_suffix(".metrics.json").write_text(
        json.dumps({"accuracy": acc, "config_hash": cfg.digest(), "seed": cfg.seed},
                   indent=1, sort_keys=True) + "\n")
    return model, acc


# -- certify ------------------------------------------------------------------------------

def partition_for(cfg: ExperimentConfig, x: GraphBits) -> NodePairPartition:
    if cfg.partition_file:
        return read_partition(cfg.partition_file, x.num_nodes)
    if cfg.mode == "isotropic":
        return isotropic_partition(x.num_nodes)
    if cfg.mode == "anisotropic":
        return motif_partition(cfg.n_motif, x.num_nodes - cfg.n_motif)
    return sparsity_aware_partition(x)


def default_r_max(cfg: ExperimentConfig, partition: NodePairPartition) -> list[int]:
    if cfg.r_max is not None:
        return list(cfg.r_max)
    return [int(s) for s in partition.region_sizes]


def model_digest(model: LinearModel) -> str:
    return hashlib.sha256(json.dumps(model.to_json(), sort_keys=True).encode()).hexdigest()[:16]


def graph_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1, dtype=np.uint64)[0]
               >> np.uint64(1))


@dataclass
class GraphResult:
    graph_id: str
    label: int
    votes: LabelDistribution
    bounds: ConfidenceBounds
    grid: CertificationGrid
    seed: int

    @property
    def prediction(self) -> int | None:
        return None if self.bounds.abstain else self.votes.c_A

    @property
    def correct(self) -> bool:
        return self.prediction == self.label

    def certified_at(self, r) -> bool:
        idx = tuple(min(int(ri), s - 1) for ri, s in zip(r, self.grid.certified.shape))
        return bool(self.grid.certified[idx])


_GRID_MEMO: dict = {}


def _grid(bounds: ConfidenceBounds, r_max, noise: NoiseSpec, cfg: ExperimentConfig):
    key = (bounds, tuple(r_max), noise.probs, cfg.prune, cfg.full_margins)
    if key not in _GRID_MEMO:
        _GRID_MEMO[key] = certification_grid(bounds, r_max, noise, prune=cfg.prune,
                                             full_margins=cfg.full_margins)
    return _GRID_MEMO[key]


def certify_graph(x: GraphBits, label: int, graph_id: str, model: LinearModel,
                  cfg: ExperimentConfig, seed: int, votes_path: Path | None = None,
                  model_hash: str = "") -> GraphResult:
    partition = partition_for(cfg, x)
    noise = NoiseSpec(tuple(cfg.noise))
    votes = None
    if votes_path is not None and votes_path.exists():
        _, votes = load_votes(votes_path)
    if votes is None:
        votes = estimate_label_distribution(x, model.predict_batch, partition, noise, cfg.N, seed)
        if votes_path is not None:
            votes_path.parent.mkdir(parents=True, exist_ok=True)
            save_votes(votes_path, graph_id, seed, votes, noise=list(noise.probs),
                       model_hash=model_hash, mode=cfg.mode)
    bounds = bound_top_two(votes, cfg.alpha)
    sizes = partition.region_sizes
    r_max = [min(int(r), int(s)) for r, s in zip(default_r_max(cfg, partition), sizes)]
    grid = _grid(bounds, r_max, noise, cfg)
    return GraphResult(graph_id, int(label), votes, bounds, grid, seed)


def _votes_key(cfg: ExperimentConfig, model_hash: str) -> str:
    noise = "_".join(f"{p:g}" for p in cfg.noise)
    return f"{cfg.mode}_{noise}_N{cfg.N}_s{cfg.seed}_{model_hash}"


def _certify_task(args):
    x, label, gid, model, cfg, seed, votes_path, model_hash = args
    return certify_graph(x, label, gid, model, cfg, seed, votes_path, model_hash)


def certify_graphs(graphs, labels, ids, model: LinearModel, cfg: ExperimentConfig,
                   cache_dir: Path | None = None) -> list[GraphResult]:
    model_hash = model_digest(model)
    tasks = []
    for i, (x, y, gid) in enumerate(zip(graphs, labels, ids)):
        path = None
        if cache_dir is not None:
            path = cache_dir / _votes_key(cfg, model_hash) / f"{gid}.json"
        tasks.append((x, int(y), gid, model, cfg, graph_seed(cfg.seed, i), path, model_hash))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_certify_task, tasks))
    return [_certify_task(t) for t in tasks]


def certified_ratio(results: list[GraphResult], r_max) -> np.ndarray:
    """Fraction of graphs whose smoothed prediction is correct and certified at each R."""
    shape = tuple(int(r) + 1 for r in r_max)
    ratio = np.zeros(shape)
    for res in results:
        if not res.correct:
            continue
        # radii beyond a region's size describe the same ball as the size itself
        axes = [np.minimum(np.arange(n), s - 1) for n, s in zip(shape, res.grid.certified.shape)]
        ratio += res.grid.certified[np.ix_(*axes)]
    return ratio / max(len(results), 1)


def score(ratio: np.ndarray) -> int:
    """Number of radius vectors at which strictly more than half the graphs certify."""
    return int(np.count_nonzero(ratio > 0.5))


def write_ratio_csv(ratio: np.ndarray, path: Path, sidecar: dict) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"R_{i + 1}" for i in range(ratio.ndim)] + ["certified_ratio"])
        for idx in np.ndindex(*ratio.shape):
            w.writerow(list(idx) + [repr(float(ratio[idx]))])
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1, sort_keys=True) + "\n")


def read_ratio_csv(path: Path) -> np.ndarray:
    with path.open() as fh:
        rows = list(csv.reader(fh))[1:]
    C = len(rows[0]) - 1
    idx = np.array([[int(v) for v in row[:C]] for row in rows])
    ratio = np.zeros(tuple(idx.max(axis=0) + 1))
    for row, i in zip(rows, idx):
        ratio[tuple(i)] = float(row[C])
    return ratio


def load_split(cfg: ExperimentConfig):
    splits, meta, ids = synthgen.read_dataset(cfg.dataset_dir)
    split = splits[cfg.split]
    graphs, labels, gids = split.graphs, split.labels, ids[cfg.split]
    if cfg.max_graphs is not None:
        graphs, labels, gids = graphs[:cfg.max_graphs], labels[:cfg.max_graphs], \
            gids[:cfg.max_graphs]
    return graphs, labels, gids, meta


def run_certify(cfg: ExperimentConfig, out_dir: Path | None = None,
                model: LinearModel | None = None) -> dict:
    """Certify every graph of the configured split and write per-graph and aggregate reports."""
    out_dir = Path(out_dir or cfg.output_dir)
    (out_dir / "grids").mkdir(parents=True, exist_ok=True)
    model = model or LinearModel.load(cfg.model_path)
    graphs, labels, gids, _ = load_split(cfg)
    results = certify_graphs(graphs, labels, gids, model, cfg,
                             Path(cfg.output_dir) / "votes_cache")
    base = {"config_hash": cfg.digest(), "seed": cfg.seed, "mode": cfg.mode,
            "noise": cfg.noise, "N": cfg.N, "alpha": cfg.alpha}
    for res in results:
        write_grid_report(res.grid, out_dir / "grids" / f"{res.graph_id}.csv",
                          {**base, "graph_id": res.graph_id, "label": res.label,
                           "counts": {str(k): v for k, v in sorted(res.votes.counts.items())},
                           "p_A_lower": res.bounds.p_A_lower, "p_B_upper": res.bounds.p_B_upper,
                           "abstain": res.bounds.abstain, "graph_seed": res.seed})
    r_max = [max(res.grid.r_max[i] for res in results) for i in range(len(cfg.noise))]
    ratio = certified_ratio(results, r_max)
    summary = {**base, "num_graphs": len(results),
               "smoothed_accuracy": float(np.mean([r.correct for r in results])),
               "abstained": int(sum(r.bounds.abstain for r in results)),
               "score": score(ratio), "r_max": r_max}
    write_ratio_csv(ratio, out_dir / "certified_ratio.csv", summary)
    return {"results": results, "ratio": ratio, "summary": summary}


def sweep_dir(out_root: Path, p_motif: float, p_random: float) -> Path:
    return Path(out_root) / "sweep" / f"pm{p_motif:g}_pr{p_random:g}"


def run_sweep(cfg: ExperimentConfig, model: LinearModel | None = None) -> None:
    model = model or LinearModel.load(cfg.model_path)
    for pm in cfg.sweep_motif:
        for pr in cfg.sweep_random:
            run_certify(cfg.with_noise([pm, pr]),
                        sweep_dir(cfg.output_dir, pm, pr), model)


def run_score(cfg: ExperimentConfig) -> dict:
    """Collect the score of every swept noise setting into ``score.csv``."""
    missing = [str(sweep_dir(cfg.output_dir, pm, pr) / "certified_ratio.csv")
               for pm in cfg.sweep_motif for pr in cfg.sweep_random
               if not (sweep_dir(cfg.output_dir, pm, pr) / "certified_ratio.csv").exists()]
    if missing:
        raise FileNotFoundError("missing certified-ratio grids:\n  " + "\n  ".join(missing))
    table = {}
    rows = []
    for pm in cfg.sweep_motif:
        for pr in cfg.sweep_random:
            d = sweep_dir(cfg.output_dir, pm, pr)
            s = score(read_ratio_csv(d / "certified_ratio.csv"))
            acc = json.loads((d / "certified_ratio.json").read_text())["smoothed_accuracy"]
            table[(pm, pr)] = s
            rows.append((pm, pr, s, acc))
    path = Path(cfg.output_dir) / "score.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p_motif", "p_random", "score", "smoothed_accuracy"])
        w.writerows(rows)
    best = max(table, key=lambda k: (table[k], -k[0], k[1]))
    meta = {"config_hash": cfg.digest(), "seed": cfg.seed, "best": list(best),
            "best_score": table[best]}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return {"table": table, "best": best}

"""Structure-aware certificates for anisotropically smoothed classifiers.

For a radius vector ``R`` (flip budget per region) every outcome ``z`` of
the noise falls in one cell ``Q`` (``0 <= Q <= R``): ``Q_i`` counts the
perturbed pairs of region ``i`` on which ``z`` still agrees with ``x``.
Inside a cell the likelihood ratio between the perturbed and clean noise
distributions is

    prod_i ((1 - p_i) / p_i) ** (R_i - 2 Q_i)

and the cell has probability ``prod_i Binom(R_i - Q_i | R_i, p_i)`` under
the clean distribution.  Sorting cells by ratio turns the worst-case class
probability bounds into fractional-knapsack problems solved greedily.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy.special import gammaln

from .graph import InvalidInputError, ResourceLimitError
from .partition import NodePairPartition
from .smoothing import NoiseSpec
from .stats import ConfidenceBounds

MAX_CELLS = 10**7
MAX_GRID_POINTS = 10**6
MARGIN_EPS = 1e-12
MASS_TOL = 1e-9

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class RegionCell:
    q: tuple[int, ...]
    log_ratio: float
    mass: float


class Cells:
    """Equal-likelihood-ratio cells for one radius vector, sorted by ratio.

    Stored column-wise; iterating yields :class:`RegionCell` records.
    """

    def __init__(self, q: np.ndarray, log_ratio: np.ndarray, log_mass: np.ndarray):
        order = np.argsort(log_ratio, kind="stable")
        self.q = q[order]
        self.log_ratio = log_ratio[order]
        self.log_mass = log_mass[order]
        mass = np.exp(self.log_mass)
        mass[mass < _TINY] = 0.0
        self.mass = mass
        tilde = np.exp(self.log_ratio + self.log_mass)
        tilde[tilde < _TINY] = 0.0
        self.tilde_mass = tilde

    def __len__(self) -> int:
        return len(self.log_ratio)

    def __iter__(self) -> Iterator[RegionCell]:
        for q, lr, m in zip(self.q, self.log_ratio, self.mass):
            yield RegionCell(tuple(int(v) for v in q), float(lr), float(m))

    def __getitem__(self, i: int) -> RegionCell:
        return RegionCell(tuple(int(v) for v in self.q[i]), float(self.log_ratio[i]),
                          float(self.mass[i]))

    @classmethod
    def from_arrays(cls, log_ratio, mass, q=None) -> Cells:
        """Build cells from explicit ratios and masses (mainly for testing)."""
        log_ratio = np.asarray(log_ratio, dtype=float)
        mass = np.asarray(mass, dtype=float)
        if q is None:
            q = np.zeros((len(log_ratio), 1), dtype=np.int64)
        with np.errstate(divide="ignore"):
            log_mass = np.log(mass)
        return cls(np.asarray(q), log_ratio, log_mass)


def _as_radius(r, noise: NoiseSpec, partition: NodePairPartition | None = None) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=np.int64))
    if r.shape != (noise.num_regions,):
        raise InvalidInputError(f"radius has {r.size} entries, noise has {noise.num_regions}")
    if np.any(r < 0):
        raise InvalidInputError("radius entries must be nonnegative")
    if np.any((noise.as_array() == 0) & (r > 0)):
        raise InvalidInputError("regions with zero flip probability only admit radius 0")
    if partition is not None:
        if partition.num_regions != noise.num_regions:
            raise InvalidInputError("partition and noise disagree on region count")
        if np.any(r > partition.region_sizes):
            raise InvalidInputError(f"radius {r.tolist()} exceeds region sizes "
                                    f"{partition.region_sizes.tolist()}")
    return r


def _log_binom_pmf(k: np.ndarray, n: int, p: float) -> np.ndarray:
    # log Binom(k | n, p) with 0*log(0) = 0
    out = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    if p > 0:
        out = out + k * math.log(p)
    else:
        out = np.where(k > 0, -np.inf, out)
    if p < 1:
        out = out + (n - k) * math.log1p(-p)
    else:
        out = np.where(n - k > 0, -np.inf, out)
    return out


def _log_odds(p: float) -> float:
    return math.log1p(-p) - math.log(p)


def _log_binom_pmf_scalar(k: int, n: int, p: float) -> float:
    if (p == 0 and k > 0) or (p == 1 and k < n):
        return -math.inf
    out = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    if k:
        out += k * math.log(p)
    if n - k:
        out += (n - k) * math.log1p(-p)
    return out


def region_mass(q, r, noise: NoiseSpec) -> float:
    """Probability that clean noise lands in cell ``q`` of radius ``r``."""
    # scalar path: this is called once per cell in tight loops
    r = [int(v) for v in np.atleast_1d(r)]
    q = [int(v) for v in np.atleast_1d(q)]
    if len(r) != noise.num_regions or any(
            ri < 0 or (ri > 0 and p == 0) for ri, p in zip(r, noise.probs)):
        _as_radius(r, noise)  # raises with the specific reason
    if len(q) != len(r) or any(not 0 <= qi <= ri for qi, ri in zip(q, r)):
        raise InvalidInputError(f"cell {q} outside 0 <= Q <= {r}")
    total = math.fsum(_log_binom_pmf_scalar(ri - qi, ri, p)
                      for qi, ri, p in zip(q, r, noise.probs) if ri > 0)
    value = math.exp(total)
    return value if value >= _TINY else 0.0


def enumerate_cells(r, noise: NoiseSpec, max_cells: int = MAX_CELLS) -> Cells:
    r = _as_radius(r, noise)
    T = int(np.prod(r + 1))
    if T > max_cells:
        raise ResourceLimitError(f"{T} cells for radius {r.tolist()} exceeds cap {max_cells}")
    axes = [np.arange(ri + 1) for ri in r]
    q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(T, len(r))
    log_ratio = np.zeros(T)
    log_mass = np.zeros(T)
    for i, (ri, p) in enumerate(zip(r, noise.probs)):
        if ri == 0:
            continue
        log_ratio += (ri - 2 * q[:, i]) * _log_odds(p)
        log_mass += _log_binom_pmf(ri - q[:, i], int(ri), p)
    return Cells(q, log_ratio, log_mass)


def _fill(p_target: float, mass: np.ndarray, tilde: np.ndarray) -> float:
    """Spend ``p_target`` of mass over the cells in the given order."""
    total = math.fsum(mass)
    if p_target < -MASS_TOL or p_target > total + MASS_TOL:
        raise InvalidInputError(f"target {p_target} infeasible for total mass {total}")
    if p_target <= 0.0:
        return 0.0
    k = int(np.searchsorted(np.cumsum(mass), p_target, side="right"))
    if k >= len(mass):
        return math.fsum(tilde)
    full = math.fsum(mass[:k])
    frac = 0.0 if mass[k] == 0 else min(1.0, max(0.0, (p_target - full) / mass[k]))
    return math.fsum(tilde[:k]) + frac * tilde[k]


def greedy_lp_lower(p_target: float, cells: Cells) -> float:
    """Smallest perturbed probability of any decision set with clean probability ``p_target``."""
    return _fill(p_target, cells.mass, cells.tilde_mass)


def greedy_lp_upper(p_target: float, cells: Cells) -> float:
    """Largest perturbed probability of any decision set with clean probability ``p_target``."""
    return _fill(p_target, cells.mass[::-1], cells.tilde_mass[::-1])


def margin(bounds: ConfidenceBounds, r, noise: NoiseSpec,
           max_cells: int = MAX_CELLS) -> float:
    """Worst-case gap between top-class and runner-up probabilities at distance ``r``.

    The value depends on the perturbed graph only through its per-region
    distances to ``x``, so one evaluation covers the whole sphere.
    """
    cells = enumerate_cells(r, noise, max_cells)
    return (greedy_lp_lower(bounds.p_A_lower, cells)
            - greedy_lp_upper(bounds.p_B_upper, cells))


def certify(bounds: ConfidenceBounds, r, noise: NoiseSpec,
            partition: NodePairPartition | None = None, *, prune: bool = False,
            max_cells: int = MAX_CELLS) -> bool:
    """Is the smoothed prediction constant on the whole ball of radius ``r``?

    The ball is the union of spheres at every distance vector ``Q <= r``;
    all of them are checked unless ``prune`` is set, in which case only ``r``
    itself is (valid when certification is monotone in the radius).
    """
    r = _as_radius(r, noise, partition)
    if bounds.abstain:
        return False
    corners = [r] if prune else itertools.product(*(range(ri + 1) for ri in r))
    return all(margin(bounds, c, noise, max_cells) > MARGIN_EPS for c in corners)


@dataclass
class CertificationGrid:
    r_max: tuple[int, ...]
    margins: np.ndarray
    certified: np.ndarray
    pareto_front: list[tuple[int, ...]]

    def points(self) -> Iterator[tuple[int, ...]]:
        return np.ndindex(*self.certified.shape)

    def is_certified(self, r) -> bool:
        return bool(self.certified[tuple(r)])


def _box_min(values: np.ndarray) -> np.ndarray:
    out = values.copy()
    for axis in range(out.ndim):
        out = np.minimum.accumulate(out, axis=axis)
    return out


def pareto_front(certified: np.ndarray) -> list[tuple[int, ...]]:
    """Certified grid points not elementwise-dominated by another certified point."""
    dominated_from = certified.copy()
    for axis in range(certified.ndim):
        flipped = np.flip(dominated_from, axis=axis)
        dominated_from = np.flip(np.logical_or.accumulate(flipped, axis=axis), axis=axis)
    front = []
    for idx in zip(*np.nonzero(certified)):
        maximal = True
        for axis in range(certified.ndim):
            up = list(idx)
            up[axis] += 1
            if up[axis] < certified.shape[axis] and dominated_from[tuple(up)]:
                maximal = False
                break
        if maximal:
            front.append(tuple(int(v) for v in idx))
    return front


def margin_grid(bounds: ConfidenceBounds, r_max, noise: NoiseSpec,
                partition: NodePairPartition | None = None,
                max_cells: int = MAX_CELLS,
                max_points: int = MAX_GRID_POINTS) -> np.ndarray:
    r_max = _as_radius(r_max, noise, partition)
    shape = tuple(int(v) + 1 for v in r_max)
    if math.prod(shape) > max_points:
        raise ResourceLimitError(f"grid of {math.prod(shape)} points exceeds cap {max_points}")
    margins = np.empty(shape)
    for idx in np.ndindex(*shape):
        margins[idx] = margin(bounds, idx, noise, max_cells)
    return margins


def certification_grid(bounds: ConfidenceBounds, r_max, noise: NoiseSpec,
                       partition: NodePairPartition | None = None, *, prune: bool = False,
                       full_margins: bool = True, max_cells: int = MAX_CELLS,
                       max_points: int = MAX_GRID_POINTS) -> CertificationGrid:
    """Certify every radius vector ``R <= r_max`` and extract the Pareto front.

    A point is certified when the margin is positive on every sphere inside
    its ball, i.e. at every grid point below it.  With ``full_margins=False``
    margins are skipped (left NaN) at points already ruled out by a failed
    predecessor; the certified set is unchanged.
    """
    r_max = _as_radius(r_max, noise, partition)
    shape = tuple(int(v) + 1 for v in r_max)
    if math.prod(shape) > max_points:
        raise ResourceLimitError(f"grid of {math.prod(shape)} points exceeds cap {max_points}")
    r_tuple = tuple(int(v) for v in r_max)
    if bounds.abstain:
        return CertificationGrid(r_tuple, np.full(shape, np.nan), np.zeros(shape, dtype=bool), [])
    if full_margins or prune:
        margins = margin_grid(bounds, r_max, noise, None, max_cells, max_points)
        ok = margins > MARGIN_EPS
        certified = ok if prune else _box_min(ok.astype(np.int8)).astype(bool)
    else:
        margins = np.full(shape, np.nan)
        certified = np.zeros(shape, dtype=bool)
        for idx in np.ndindex(*shape):
            # C-order visits every R - e_i before R
            if any(idx[i] > 0 and not certified[idx[:i] + (idx[i] - 1,) + idx[i + 1:]]
                   for i in range(len(idx))):
                continue
            margins[idx] = margin(bounds, idx, noise, max_cells)
            certified[idx] = margins[idx] > MARGIN_EPS
    return CertificationGrid(r_tuple, margins, certified, pareto_front(certified))


def write_grid_report(grid: CertificationGrid, csv_path: str | Path,
                      sidecar: dict | None = None) -> None:
    """Write ``R_1..R_C,margin,certified`` rows plus a JSON sidecar next to the CSV."""
    csv_path = Path(csv_path)
    C = len(grid.r_max)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"R_{i + 1}" for i in range(C)] + ["margin", "certified"])
        for idx in np.ndindex(*grid.certified.shape):
            m = grid.margins[idx]
            w.writerow(list(idx) + ["nan" if np.isnan(m) else repr(float(m)),
                                    int(grid.certified[idx])])
    meta = dict(sidecar or {})
    meta["r_max"] = list(grid.r_max)
    meta["pareto_front"] = [list(p) for p in grid.pareto_front]
    csv_path.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def read_grid_report(csv_path: str | Path) -> CertificationGrid:
    csv_path = Path(csv_path)
    with csv_path.open() as fh:
        rows = list(csv.reader(fh))
    C = len(rows[0]) - 2
    body = rows[1:]
    idx = np.array([[int(v) for v in row[:C]] for row in body])
    shape = tuple(idx.max(axis=0) + 1)
    margins = np.empty(shape)
    certified = np.zeros(shape, dtype=bool)
    for row, i in zip(body, idx):
        margins[tuple(i)] = float(row[C])
        certified[tuple(i)] = row[C + 1] == "1"
    return CertificationGrid(tuple(int(s) - 1 for s in shape), margins, certified,
                             pareto_front(certified))

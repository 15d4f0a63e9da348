"""Brute-force ground truth for tiny instances.

Nothing here reuses the certification engine: distributions come from
enumerating every flip pattern, linear programs from enumerating vertex
solutions or their duals, and worst-case margins from enumerating every perturbed graph.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphBits, InvalidInputError, ResourceLimitError, region_distances
from .partition import NodePairPartition
from .smoothing import LabelOracle, NoiseSpec
from .stats import ConfidenceBounds

MAX_NOISY_BITS = 20
MAX_LP_CELLS = 12
MAX_BALL = 10**5
LP_TOL = 1e-12


def _pair_probs(partition: NodePairPartition, noise: NoiseSpec) -> np.ndarray:
    probs = np.zeros(len(partition.region_of))
    for k, region in enumerate(partition.region_of):
        if region >= 0:
            probs[k] = noise.probs[region]
    return probs


def _patterns(m: int) -> np.ndarray:
    return ((np.arange(2**m)[:, None] >> np.arange(m)) & 1).astype(np.uint8)


def _pattern_probs(flips: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.prod(np.where(flips == 1, p, 1.0 - p), axis=1)


def exact_smoothed_distribution(x: GraphBits, classify: LabelOracle,
                                partition: NodePairPartition,
                                noise: NoiseSpec) -> dict[int, float]:
    """Exact label probabilities of the smoothed classifier by full enumeration."""
    probs = _pair_probs(partition, noise)
    noisy = np.flatnonzero(probs > 0)
    if noisy.size > MAX_NOISY_BITS:
        raise ResourceLimitError(f"{noisy.size} noisy pairs exceeds {MAX_NOISY_BITS}")
    flips = _patterns(noisy.size)
    weight = _pattern_probs(flips, probs[noisy])
    samples = np.tile(x.bits, (len(flips), 1))
    samples[:, noisy] ^= flips
    labels = np.asarray(classify(samples))
    return {int(y): math.fsum(weight[labels == y]) for y in np.unique(labels)}


def exhaustive_lp(p_target: float, cells) -> tuple[float, float]:
    """Solve ``min/max h.tilde  s.t.  h.mass = p_target, 0 <= h <= 1`` by vertex enumeration.

    ``cells`` is a sequence of ``(mass, tilde_mass)`` pairs in any order, or an
    object exposing ``mass`` and ``tilde_mass`` arrays.  Every vertex of the
    box-constrained LP has at most one fractional coordinate, so all choices
    of (fractional index, saturated subset) are tried.
    """
    if hasattr(cells, "mass"):
        mass, tilde = np.asarray(cells.mass, float), np.asarray(cells.tilde_mass, float)
    else:
        arr = np.asarray(cells, dtype=float).reshape(-1, 2)
        mass, tilde = arr[:, 0], arr[:, 1]
    T = len(mass)
    if T > MAX_LP_CELLS:
        raise ResourceLimitError(f"{T} cells exceeds {MAX_LP_CELLS}")
    tol = 1e-9
    subsets = _patterns(T).astype(float)
    lo, hi = math.inf, -math.inf
    # fully integral vertices
    s_mass = subsets @ mass
    s_tilde = subsets @ tilde
    hit = np.abs(s_mass - p_target) <= tol
    if hit.any():
        lo, hi = min(lo, s_tilde[hit].min()), max(hi, s_tilde[hit].max())
    for j in range(T):
        if mass[j] <= 0:
            continue
        others = subsets[subsets[:, j] == 0]
        h_j = (p_target - others @ mass) / mass[j]
        ok = (h_j >= -tol) & (h_j <= 1 + tol)
        if ok.any():
            value = others[ok] @ tilde + np.clip(h_j[ok], 0, 1) * tilde[j]
            lo, hi = min(lo, value.min()), max(hi, value.max())
    if lo == math.inf:
        raise InvalidInputError(f"target {p_target} infeasible")
    return float(lo), float(hi)


def dual_lp(p_target: float, mass, tilde) -> tuple[float, float]:
    """Both LP bounds from their Lagrangian duals, for any number of cells.

    ``min h.tilde`` equals ``max_l  l*p - sum_k max(0, l*m_k - t_k)`` and
    ``max h.tilde`` equals ``min_l  l*p + sum_k max(0, t_k - l*m_k)``.  Both
    objectives are piecewise linear in ``l`` with kinks at ``t_k / m_k``,
    so evaluating them at every kink (and at zero) is exact.
    """
    mass = np.asarray(mass, dtype=float)
    tilde = np.asarray(tilde, dtype=float)
    total = math.fsum(mass)
    if p_target < -LP_TOL or p_target > total + 1e-9:
        raise InvalidInputError(f"target {p_target} infeasible")
    pos = mass > 0
    kinks = np.append(tilde[pos] / mass[pos], 0.0)
    lo = max(lam * p_target - math.fsum(np.maximum(0.0, lam * mass - tilde)) for lam in kinks)
    hi = min(lam * p_target + math.fsum(np.maximum(0.0, tilde - lam * mass)) for lam in kinks)
    return float(lo), float(hi)


def _ball(x: GraphBits, R, partition: NodePairPartition):
    per_region = []
    for i, r in enumerate(R):
        members = partition.members(i)
        if r > members.size:
            raise InvalidInputError(f"radius {r} exceeds region {i} size {members.size}")
        per_region.append([c for k in range(r + 1) for c in itertools.combinations(members, k)])
    size = math.prod(len(opts) for opts in per_region)
    if size > MAX_BALL:
        raise ResourceLimitError(f"ball of {size} graphs exceeds {MAX_BALL}")
    for choice in itertools.product(*per_region):
        flipped = [k for part in choice for k in part]
        bits = x.bits.copy()
        bits[flipped] ^= 1
        yield GraphBits(x.num_nodes, bits)


def pointwise_margin(x: GraphBits, x_tilde: GraphBits, bounds: ConfidenceBounds,
                     partition: NodePairPartition, noise: NoiseSpec) -> float:
    """Exact margin for one perturbed graph from per-outcome likelihoods.

    Outcomes are enumerated over every noisy pair and grouped by their
    likelihood ratio; the two linear programs are solved through
    :func:`dual_lp`.
    """
    probs = _pair_probs(partition, noise)
    noisy = np.flatnonzero(probs > 0)
    if np.any(x.bits[probs == 0] != x_tilde.bits[probs == 0]):
        # supports are disjoint: no robust decision set exists
        return -1.0
    if noisy.size > MAX_NOISY_BITS:
        raise ResourceLimitError(f"{noisy.size} noisy pairs exceeds {MAX_NOISY_BITS}")
    z = _patterns(noisy.size)
    p = probs[noisy]
    a, b = x.bits[noisy], x_tilde.bits[noisy]
    clean = _pattern_probs(z ^ a, p)
    perturbed = _pattern_probs(z ^ b, p)
    key = np.round(np.log(perturbed) - np.log(clean), 9)
    groups = {}
    for k, m, t in zip(key, clean, perturbed):
        acc = groups.setdefault(float(k), [[], []])
        acc[0].append(m)
        acc[1].append(t)
    mass = np.array([math.fsum(m) for m, _ in groups.values()])
    tilde = np.array([math.fsum(t) for _, t in groups.values()])
    total = math.fsum(mass)
    lower, _ = dual_lp(min(bounds.p_A_lower, total), mass, tilde)
    _, upper = dual_lp(min(bounds.p_B_upper, total), mass, tilde)
    return lower - upper


@dataclass
class WorstCase:
    min_margin: float
    argmin: GraphBits
    sphere_margins: dict = field(default_factory=dict)

    def sphere_spread(self) -> float:
        return max((max(v) - min(v) for v in self.sphere_margins.values()), default=0.0)


def exact_bounds(x: GraphBits, classify: LabelOracle, partition: NodePairPartition,
                 noise: NoiseSpec) -> ConfidenceBounds:
    dist = exact_smoothed_distribution(x, classify, partition, noise)
    ranked = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
    p_b = ranked[1][1] if len(ranked) > 1 else 0.0
    return ConfidenceBounds.exact(ranked[0][1], p_b)


def exhaustive_worst_case(x: GraphBits, bounds: ConfidenceBounds | None, R,
                          partition: NodePairPartition, noise: NoiseSpec,
                          classify: LabelOracle | None = None) -> WorstCase:
    """Minimum exact margin over every graph within per-region distance ``R`` of ``x``.

    With ``bounds=None`` the exact smoothed probabilities of ``classify`` are used.
    Margins are also collected per sphere (distance vector) for symmetry checks.
    """
    if x.num_nodes > 5:
        raise ResourceLimitError("exhaustive worst case is limited to graphs of <= 5 nodes")
    if bounds is None:
        if classify is None:
            raise InvalidInputError("need bounds or a classifier")
        bounds = exact_bounds(x, classify, partition, noise)
    best = None
    spheres: dict = {}
    for x_tilde in _ball(x, R, partition):
        value = pointwise_margin(x, x_tilde, bounds, partition, noise)
        dist = tuple(int(v) for v in region_distances(x, x_tilde, partition)[:-1])
        spheres.setdefault(dist, []).append(value)
        if best is None or value < best[0]:
            best = (value, x_tilde)
    return WorstCase(best[0], best[1], spheres)


def isotropic_certificate(p_A: float, p_B: float, p: float, radius: int) -> float:
    """Margin of the single-probability certificate at one scalar radius.

    Written directly from the isotropic flip model: among the ``radius``
    differing pairs, ``j`` flips under clean noise give likelihood ratio
    ``((1-p)/p) ** (2j - radius)``.  Solved with an LP solver.
    """
    from scipy.optimize import linprog
    from scipy.stats import binom

    j = np.arange(radius + 1)
    clean = binom.pmf(j, radius, p)
    perturbed = binom.pmf(radius - j, radius, p)
    bounds = [(0.0, 1.0)] * len(j)
    lo = linprog(perturbed, A_eq=clean[None, :], b_eq=[p_A], bounds=bounds, method="highs")
    hi = linprog(-perturbed, A_eq=clean[None, :], b_eq=[p_B], bounds=bounds, method="highs")
    if not (lo.success and hi.success):
        raise InvalidInputError("isotropic LP infeasible")
    return float(lo.fun + hi.fun)

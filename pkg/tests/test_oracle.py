import math

import numpy as np
import pytest

from structcert.engine import MARGIN_EPS, certify
from structcert.graph import ResourceLimitError, encode_graph
from structcert.oracle import (dual_lp, exact_bounds, exact_smoothed_distribution, exhaustive_lp,
                               exhaustive_worst_case, isotropic_certificate, pointwise_margin)
from structcert.partition import isotropic_partition, motif_partition, sparsity_aware_partition
from structcert.smoothing import NoiseSpec
from structcert.stats import ConfidenceBounds

from conftest import parity_classifier, random_graph, random_partition


def test_parity_channel_closed_form(rng):
    p = 0.3
    for _ in range(5):
        x = random_graph(rng, 4)
        dist = exact_smoothed_distribution(x, parity_classifier, isotropic_partition(4),
                                           NoiseSpec((p,)))
        keep = (1 + (1 - 2 * p) ** 6) / 2
        own = int(x.bits.sum() % 2)
        assert dist[own] == pytest.approx(keep, abs=1e-12)
        assert dist[1 - own] == pytest.approx(1 - keep, abs=1e-12)
        assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-12)


def test_point_mass_cases(rng):
    x = random_graph(rng, 4)
    part = isotropic_partition(4)
    assert exact_smoothed_distribution(x, parity_classifier, part, NoiseSpec((0.0,))) == \
        {int(x.bits.sum() % 2): 1.0}
    const = exact_smoothed_distribution(x, lambda b: np.full(len(b), 7), part, NoiseSpec((0.4,)))
    assert const == {7: 1.0}


def test_enumeration_cap():
    with pytest.raises(ResourceLimitError):
        exact_smoothed_distribution(encode_graph([], 7), parity_classifier,
                                    isotropic_partition(7), NoiseSpec((0.1,)))


def test_lp_solvers_agree(rng):
    for _ in range(200):
        T = int(rng.integers(1, 10))
        mass, tilde = rng.dirichlet(np.ones(T)), rng.dirichlet(np.ones(T))
        p = rng.random()
        a, b = exhaustive_lp(p, list(zip(mass, tilde))), dual_lp(p, mass, tilde)
        assert a == pytest.approx(b, abs=1e-12)


def test_lp_single_cell():
    assert exhaustive_lp(0.4, [(0.4, 0.9)]) == pytest.approx((0.9, 0.9))
    assert dual_lp(0.4, [0.4], [0.9]) == pytest.approx((0.9, 0.9))


def test_zero_radius_margin(rng):
    x = random_graph(rng, 4)
    b = ConfidenceBounds.exact(0.8, 0.15)
    worst = exhaustive_worst_case(x, b, [0], isotropic_partition(4), NoiseSpec((0.2,)))
    assert worst.min_margin == pytest.approx(0.65)
    assert worst.argmin == x


def test_noise_free_difference_gives_no_certificate():
    part = motif_partition(3, 2)
    x = encode_graph([], 5)
    y = encode_graph([(0, 3)], 5)
    assert pointwise_margin(x, y, ConfidenceBounds.exact(1.0, 0.0), part,
                            NoiseSpec((0.1, 0.1))) == -1.0


def test_sphere_symmetry_and_soundness():
    rng = np.random.default_rng(21)
    for _ in range(5):
        x = random_graph(rng, 5)
        part = random_partition(rng, 5, 2, noise_free_share=0.2)
        noise = NoiseSpec(tuple(rng.uniform(0.05, 0.45, 2)))
        bounds = ConfidenceBounds.exact(0.95, 0.05)
        R = [min(2, s) for s in part.region_sizes]
        worst = exhaustive_worst_case(x, bounds, R, part, noise)
        assert worst.sphere_spread() <= 1e-12
        if certify(bounds, R, noise, part):
            assert worst.min_margin > MARGIN_EPS


def test_exact_bounds_from_classifier():
    x = encode_graph([(0, 1)], 4)
    part = sparsity_aware_partition(x)
    b = exact_bounds(x, parity_classifier, part, NoiseSpec((0.1, 0.2)))
    assert b.p_A_lower + b.p_B_upper == pytest.approx(1.0, abs=1e-12)
    worst = exhaustive_worst_case(x, None, [1, 1], part, NoiseSpec((0.1, 0.2)), parity_classifier)
    assert worst.min_margin <= b.p_A_lower - b.p_B_upper


def test_isotropic_certificate_small_case():
    assert isotropic_certificate(0.9, 0.1, 0.2, 1) == pytest.approx(0.2, abs=1e-9)
    assert isotropic_certificate(0.9, 0.1, 0.2, 0) == pytest.approx(0.8, abs=1e-9)

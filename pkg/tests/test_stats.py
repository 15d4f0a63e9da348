import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structcert.graph import InvalidInputError
from structcert.smoothing import LabelDistribution
from structcert.stats import (ConfidenceBounds, bound_top_two, clopper_pearson_lower,
                              clopper_pearson_upper)

from conftest import CP_GRID, oracle_lower, oracle_upper


def test_unanimous_lower_closed_form():
    assert clopper_pearson_lower(100, 100, 0.99) == pytest.approx(0.01 ** (1 / 100), abs=1e-9)
    assert clopper_pearson_lower(100, 100, 0.99) == pytest.approx(0.954992586, abs=1e-9)


def test_zero_upper_closed_form():
    # k = 0: upper solves (1 - p)^N = 1 - c
    assert clopper_pearson_upper(0, 100, 0.99) == pytest.approx(1 - 0.01 ** (1 / 100), abs=1e-9)
    assert clopper_pearson_upper(0, 100, 0.99) == pytest.approx(0.04501, abs=1e-5)


def test_edge_values():
    assert clopper_pearson_lower(0, 50, 0.99) == 0.0
    assert clopper_pearson_upper(50, 50, 0.99) == 1.0


@pytest.mark.parametrize("k, n, c", CP_GRID)
def test_matches_binomial_tail_oracle(k, n, c):
    assert clopper_pearson_lower(k, n, c) == pytest.approx(oracle_lower(k, n, c), abs=1e-9)
    assert clopper_pearson_upper(k, n, c) == pytest.approx(oracle_upper(k, n, c), abs=1e-9)


@pytest.mark.parametrize("k, n, c", [(-1, 10, 0.9), (11, 10, 0.9), (0, 0, 0.9),
                                     (3, 10, 0.0), (3, 10, 1.0)])
def test_invalid_arguments(k, n, c):
    with pytest.raises(InvalidInputError):
        clopper_pearson_lower(k, n, c)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 300), st.data())
def test_monotone_and_symmetric(n, data):
    k = data.draw(st.integers(0, n - 1))
    c = data.draw(st.sampled_from([0.9, 0.99, 0.999]))
    lo, lo_next = clopper_pearson_lower(k, n, c), clopper_pearson_lower(k + 1, n, c)
    assert lo <= lo_next
    assert clopper_pearson_upper(k, n, c) <= clopper_pearson_upper(k + 1, n, c)
    assert lo <= k / n <= clopper_pearson_upper(k, n, c)
    assert lo_next == pytest.approx(1 - clopper_pearson_upper(n - k - 1, n, c), abs=1e-10)
    # higher confidence widens the interval
    assert clopper_pearson_lower(k + 1, n, 0.999) <= clopper_pearson_lower(k + 1, n, 0.9)


def test_lower_bound_coverage():
    rng = np.random.default_rng(7)
    p, n, trials = 0.9, 200, 2000
    ks = rng.binomial(n, p, trials)
    covered = np.mean([clopper_pearson_lower(int(k), n, 0.99) <= p for k in ks])
    assert covered >= 0.985


def test_bound_top_two_and_abstain():
    b = bound_top_two(LabelDistribution({0: 95, 1: 5}, 100), 0.99)
    assert b.n_A == 95 and b.n_B == 5 and b.N == 100
    assert b.p_A_lower == pytest.approx(clopper_pearson_lower(95, 100, 0.99))
    assert b.p_B_upper <= 1 - b.p_A_lower + 1e-15
    assert not b.abstain
    assert bound_top_two(LabelDistribution({0: 1}, 1), 0.99).abstain
    assert bound_top_two(LabelDistribution({0: 50, 1: 50}, 100), 0.99).abstain


def test_binary_runner_up_is_complement():
    # with one shared sample, n_B <= N - n_A so the clamp never loosens anything
    b = bound_top_two(LabelDistribution({3: 1000}, 1000), 0.99)
    assert b.p_B_upper == pytest.approx(1 - b.p_A_lower, abs=1e-11)
    assert b.p_B_upper == pytest.approx(clopper_pearson_upper(0, 1000, 0.99))


def test_exact_bounds():
    b = ConfidenceBounds.exact(0.8, 0.2)
    assert b.alpha is None and not b.abstain

import math

import numpy as np
import pytest

from structcert.graph import GraphBits, num_pairs
from structcert.partition import NOISE_FREE, NodePairPartition


def random_graph(rng, n, density=0.5):
    return GraphBits(n, (rng.random(num_pairs(n)) < density).astype(np.uint8))


def random_partition(rng, n, C, noise_free_share=0.0):
    """Random partition with every region non-empty."""
    P = num_pairs(n)
    while True:
        region_of = rng.integers(0, C, size=P)
        region_of[rng.random(P) < noise_free_share] = NOISE_FREE
        if all(np.any(region_of == i) for i in range(C)):
            return NodePairPartition(n, region_of, C)


def parity_classifier(bits):
    return np.asarray(bits).sum(axis=1) % 2


def binom_tail_ge(k, n, p):
    """P(Bin(n, p) >= k) by direct summation in log space."""
    if p <= 0:
        return 1.0 if k <= 0 else 0.0
    if p >= 1:
        return 1.0
    terms = [math.exp(math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)
                      + j * math.log(p) + (n - j) * math.log1p(-p)) for j in range(k, n + 1)]
    return math.fsum(terms)


def solve_increasing(f, target):
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def oracle_lower(k, n, c):
    # the p at which seeing >= k successes has probability 1 - c
    return 0.0 if k == 0 else solve_increasing(lambda p: binom_tail_ge(k, n, p), 1 - c)


def oracle_upper(k, n, c):
    # the p at which seeing <= k successes has probability 1 - c
    return 1.0 if k == n else solve_increasing(lambda p: binom_tail_ge(k + 1, n, p), c)


# 20 (successes, trials, confidence) cases
CP_GRID = [(k, n, c) for n, ks in [(10, (0, 3, 10)), (100, (1, 50, 99, 100)),
                                   (1000, (5, 990, 1000))]
           for k in ks for c in (0.99, 0.95)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


def report_criterion(number: int, title: str, passed: bool, detail: str) -> bool:
    """Record one acceptance line; printed in the terminal summary."""
    ACCEPTANCE_LINES[number] = f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}"
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])

"""One-sided Clopper-Pearson bounds on the top-two vote probabilities."""
from __future__ import annotations

from dataclasses import dataclass

from scipy.special import betainc

from .graph import InvalidInputError

BISECTION_TOL = 1e-12


def _check(k: int, n: int, confidence: float) -> None:
    if n < 1 or k < 0 or k > n:
        raise InvalidInputError(f"need 0 <= k <= N and N >= 1, got k={k}, N={n}")
    if not 0.0 < confidence < 1.0:
        raise InvalidInputError(f"confidence must lie in (0, 1), got {confidence}")


def beta_quantile(q: float, a: float, b: float, tol: float = BISECTION_TOL) -> float:
    """Quantile of Beta(a, b) by bisection on the regularized incomplete Beta."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if betainc(a, b, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def clopper_pearson_lower(k: int, n: int, confidence: float) -> float:
    _check(k, n, confidence)
    if k == 0:
        return 0.0
    return beta_quantile(1.0 - confidence, k, n - k + 1)


def clopper_pearson_upper(k: int, n: int, confidence: float) -> float:
    _check(k, n, confidence)
    if k == n:
        return 1.0
    return beta_quantile(confidence, k + 1, n - k)


@dataclass(frozen=True)
class ConfidenceBounds:
    p_A_lower: float
    p_B_upper: float
    alpha: float | None
    n_A: int
    n_B: int
    N: int

    @property
    def abstain(self) -> bool:
        return self.p_A_lower <= self.p_B_upper

    @classmethod
    def exact(cls, p_A: float, p_B: float) -> ConfidenceBounds:
        """Bounds for known probabilities (no sampling error)."""
        return cls(p_A, p_B, alpha=None, n_A=0, n_B=0, N=0)


def bound_top_two(dist, confidence: float) -> ConfidenceBounds:
    """Lower-bound ``p_A`` and upper-bound ``p_B`` from one shared vote sample.

    ``p_B_upper`` is clamped to ``1 - p_A_lower``, which is exact for binary
    tasks and conservative otherwise.
    """
    p_a = clopper_pearson_lower(dist.n_A, dist.total, confidence)
    p_b = min(1.0 - p_a, clopper_pearson_upper(dist.n_B, dist.total, confidence))
    return ConfidenceBounds(p_a, p_b, confidence, dist.n_A, dist.n_B, dist.total)

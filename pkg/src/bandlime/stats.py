"""Cross-clip aggregation and the two-sample Cramér test.

aggregate() condenses many per-clip explanations for one emotion into
per-band mean and standard deviation. cramer_test() asks whether two such
weight populations plausibly come from the same distribution, using the
Baringhaus-Franz statistic with a permutation null.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist

from bandlime.explainer import Explanation


@dataclass(frozen=True)
class EmotionAggregate:
    """Per-band weight summary across the utterances of one emotion."""

    emotion: str
    n_utterances: int
    mean_weights: np.ndarray  # (d',)
    std_weights: np.ndarray  # (d',) sample std, 0 when n = 1
    weight_matrix: np.ndarray  # (n_utterances, d')

    def __post_init__(self) -> None:
        n, d = self.weight_matrix.shape
        if n != self.n_utterances:
            raise ValueError("weight_matrix row count must equal n_utterances")
        if self.mean_weights.shape != (d,) or self.std_weights.shape != (d,):
            raise ValueError("mean and std must have one entry per band")
        if np.any(self.std_weights < 0):
            raise ValueError("std_weights must be non-negative")

    @property
    def n_components(self) -> int:
        return self.weight_matrix.shape[1]


@dataclass(frozen=True)
class CramerResult:
    statistic: float
    critical_value: float
    p_value: float
    alpha: float
    n_permutations: int
    reject: bool

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 <= self.p_value <= 1:
            raise ValueError("p_value must lie in [0, 1]")
        if self.reject != (self.statistic > self.critical_value):
            raise ValueError("reject flag inconsistent with critical value")


def aggregate(explanations: Sequence[Explanation], emotion: str) -> EmotionAggregate:
    """Column-wise mean and sample standard deviation of the weights.

    All explanations must target the given emotion and share a band count.
    With a single explanation the std is all zeros.
    """
    if not explanations:
        raise ValueError("cannot aggregate zero explanations")
    d = explanations[0].n_components
    for e in explanations:
        if e.target_class != emotion:
            raise ValueError(
                f"explanation targets {e.target_class!r}, expected {emotion!r}"
            )
        if e.n_components != d:
            raise ValueError("explanations disagree on the number of bands")
    matrix = np.array([e.weights for e in explanations], dtype=np.float64)
    n = matrix.shape[0]
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    return EmotionAggregate(
        emotion=emotion,
        n_utterances=n,
        mean_weights=mean,
        std_weights=std,
        weight_matrix=matrix,
    )


def _as_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("expected a non-empty 2-D sample matrix")
    return X


def cramer_statistic(X: np.ndarray, Y: np.ndarray) -> float:
    """Baringhaus-Franz two-sample statistic

        T = (mn/(m+n)) * [ mean ||X_i - Y_j||
                           - sum ||X_i - X_i'|| / (2 m^2)
                           - sum ||Y_j - Y_j'|| / (2 n^2) ]

    with Euclidean norms and ordered self-pairs. Distances are summed in
    sorted order, which makes T(X, Y) == T(Y, X) exact and the value
    independent of row order within each sample.
    """
    X = _as_matrix(X)
    Y = _as_matrix(Y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    m, n = X.shape[0], Y.shape[0]
    cross = float(np.sort(cdist(X, Y).ravel()).sum())
    # pdist yields each unordered pair once; ordered-pair sums double it.
    within_x = 2.0 * float(np.sort(pdist(X)).sum()) if m > 1 else 0.0
    within_y = 2.0 * float(np.sort(pdist(Y)).sum()) if n > 1 else 0.0
    penalty = within_x / (2.0 * m * m) + within_y / (2.0 * n * n)
    return float(m * n / (m + n) * (cross / (m * n) - penalty))


def _permutation_statistics(
    pooled: np.ndarray, m: int, n_permutations: int, seed: int
) -> np.ndarray:
    """Statistics of n_permutations random re-splits of the pooled rows.

    One pooled distance matrix is shared by all replicates. For a 0/1
    membership matrix S (replicates x rows) selecting each replicate's
    first sample, A = S @ D gives per-row sums of distances to that
    sample, from which the three double sums follow without forming any
    per-replicate matrices.
    """
    N = pooled.shape[0]
    n = N - m
    D = cdist(pooled, pooled)
    total = D.sum()
    rng = np.random.default_rng(seed)
    # Row b of argsort(random matrix) is a uniform random permutation.
    order = np.argsort(rng.random((n_permutations, N)), axis=1)
    S = np.zeros((n_permutations, N))
    np.put_along_axis(S, order[:, :m], 1.0, axis=1)
    A = S @ D
    sum_xx = (A * S).sum(axis=1)
    sum_xy = A.sum(axis=1) - sum_xx
    sum_yy = total - sum_xx - 2.0 * sum_xy
    return (
        m * n / N * (sum_xy / (m * n) - sum_xx / (2.0 * m * m) - sum_yy / (2.0 * n * n))
    )


def cramer_test(
    X: np.ndarray,
    Y: np.ndarray,
    alpha: float = 0.05,
    n_permutations: int = 1000,
    seed: int = 0,
) -> CramerResult:
    """Permutation two-sample test on the Cramér statistic.

    The pooled rows are re-split into sizes (m, n) uniformly at random
    n_permutations times. The critical value is the empirical
    (1 - alpha)-quantile of the permutation statistics; the p-value uses
    the add-one convention (1 + #{perm >= observed}) / (n_permutations + 1)
    so it is never exactly 0. Rejection means statistic > critical_value.
    """
    X = _as_matrix(X)
    Y = _as_matrix(Y)
    if X.shape[0] < 2 or Y.shape[0] < 2:
        raise ValueError("each sample needs at least 2 rows")
    if n_permutations < 99:
        raise ValueError("n_permutations must be >= 99")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")

    observed = cramer_statistic(X, Y)
    perm = _permutation_statistics(
        np.vstack([X, Y]), X.shape[0], n_permutations, seed
    )
    critical = float(np.quantile(perm, 1.0 - alpha, method="higher"))
    p_value = float((1 + np.count_nonzero(perm >= observed)) / (n_permutations + 1))
    return CramerResult(
        statistic=observed,
        critical_value=critical,
        p_value=p_value,
        alpha=alpha,
        n_permutations=n_permutations,
        reject=observed > critical,
    )

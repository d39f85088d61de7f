"""Rank metrics over (true EU, estimator score) collections.

Concordance follows the survival-analysis convention: pairs with tied true
EU are excluded, pairs with tied scores get half credit, so a perfect
estimator scores exactly 1.0 and a constant one exactly 0.5. AUC-ROC is
computed from midrank statistics (Mann-Whitney), which handles ties exactly
without curve interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ValidationError


@dataclass(frozen=True)
class EvalRecord:
    """Per-question true epistemic uncertainty and estimator scores."""

    question_id: str
    true_eu: float
    scores: dict

    def __post_init__(self):
        if self.true_eu < 0:
            raise ValidationError(
                f"{self.question_id}: true_eu must be >= 0, got {self.true_eu!r}"
            )


def _extract(records, estimator: str):
    pairs = [
        (r.true_eu, r.scores[estimator]) for r in records if estimator in r.scores
    ]
    if not pairs:
        raise DegenerateInputError(f"no records carry estimator {estimator!r}")
    arr = np.asarray(pairs, dtype=float)
    return arr[:, 0], arr[:, 1]


class _Fenwick:
    """Prefix-sum tree over score ranks, for O(n log n) pair counting."""

    def __init__(self, size: int):
        self.tree = [0] * (size + 1)

    def add(self, i: int) -> None:
        i += 1
        while i < len(self.tree):
            self.tree[i] += 1
            i += i & (-i)

    def count_le(self, i: int) -> int:
        i += 1
        total = 0
        while i > 0:
            total += self.tree[i]
            i -= i & (-i)
        return total


def _pair_counts(truth: np.ndarray, score: np.ndarray):
    """(comparable, discordant, score-tied) pair counts, truth ties excluded."""
    n = truth.shape[0]
    total = n * (n - 1) // 2

    def tie_pairs(keys) -> int:
        _, counts = np.unique(keys, return_counts=True, axis=0)
        return int((counts * (counts - 1) // 2).sum())

    ties_truth = tie_pairs(truth)
    ties_score = tie_pairs(score)
    ties_both = tie_pairs(np.stack([truth, score], axis=1))
    comparable = total - ties_truth

    # sort by (truth, score) ascending; discordant pairs are then exactly
    # the strict inversions of the score sequence
    order = np.lexsort((score, truth))
    rank_of = np.unique(score, return_inverse=True)[1][order]
    tree = _Fenwick(int(rank_of.max()) + 1 if n else 1)
    discordant = 0
    for j, r in enumerate(rank_of):
        discordant += j - tree.count_le(int(r))
        tree.add(int(r))
    score_tied = ties_score - ties_both
    return comparable, discordant, score_tied


def concordance(records, estimator: str) -> float:
    """P(estimator ranks the higher-true-EU record higher), with 0.5 credit
    for score ties; 0.5 is chance, 1.0 is perfect."""
    truth, score = _extract(records, estimator)
    comparable, discordant, score_tied = _pair_counts(truth, score)
    if comparable == 0:
        raise DegenerateInputError(
            f"concordance undefined: no pairs with distinct true_eu for {estimator!r}"
        )
    concordant = comparable - discordant - score_tied
    return (concordant + 0.5 * score_tied) / comparable


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty_like(values, dtype=float)
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def aucroc(records, estimator: str, delta: float) -> float:
    """Rank-based AUC separating uncertain (true_eu >= delta) from certain
    records by the estimator's score; score ties credit 0.5."""
    truth, score = _extract(records, estimator)
    positive = truth >= delta
    n_pos = int(positive.sum())
    n_neg = int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError(
            f"aucroc undefined at delta={delta}: binarization left a single class"
        )
    ranks = _midranks(score)
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray

    def histogram_rows(self):
        """(bin_left, bin_right, count) rows for CSV emission."""
        return [
            (float(self.bin_edges[i]), float(self.bin_edges[i + 1]), int(c))
            for i, c in enumerate(self.bin_counts)
        ]


def summarize(values, bins: int = 30) -> Summary:
    """Mean, population standard deviation, and a fixed-bin histogram."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise DegenerateInputError("cannot summarize an empty collection")
    counts, edges = np.histogram(arr, bins=bins)
    return Summary(
        mean=float(arr.mean()),
        std=float(arr.std(ddof=0)),
        bin_edges=edges,
        bin_counts=counts,
    )

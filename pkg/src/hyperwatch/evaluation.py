"""Rank-based evaluation of score streams against binary labels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class LabeledScores:
    """Scored events joined with labels; entries are (index, score, label).

    Only entries whose event index is >= ``eval_from`` count toward
    metrics; everything earlier is warm-up and excluded entirely.
    """

    entries: tuple[tuple[int, float, int], ...]
    eval_from: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(tuple(entry) for entry in self.entries))
        for index, _, label in self.entries:
            if label not in (0, 1):
                raise ValueError(f"label for index {index} must be 0 or 1")
        indices = [index for index, _, _ in self.entries]
        if len(set(indices)) != len(indices):
            raise ValueError("entry indices must be unique")

    def evaluated(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indices, scores, labels) arrays of the evaluated entries."""
        kept = [entry for entry in self.entries if entry[0] >= self.eval_from]
        indices = np.array([entry[0] for entry in kept], dtype=np.int64)
        scores = np.array([entry[1] for entry in kept], dtype=np.float64)
        labels = np.array([entry[2] for entry in kept], dtype=np.int64)
        return indices, scores, labels


def auroc(ls: LabeledScores) -> float:
    """Probability a random positive outranks a random negative.

    Mann-Whitney rank-sum formulation: tied scores contribute half
    credit, which makes auroc(scores) + auroc(-scores) add to exactly 1.
    """
    _, scores, labels = ls.evaluated()
    positives = int(labels.sum())
    negatives = labels.size - positives
    if positives == 0 or negatives == 0:
        raise ValueError("degenerate labels: need at least one positive and one negative")
    ranks = rankdata(scores)
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - positives * (positives + 1) / 2) / (positives * negatives)


def precision_at_k(ls: LabeledScores, k: int) -> float:
    """Fraction of positives among the k best scores.

    Ties are broken by lower event index first, so the metric is
    deterministic even on heavily saturated score streams.
    """
    indices, scores, labels = ls.evaluated()
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > scores.size:
        raise ValueError(f"k={k} exceeds the {scores.size} evaluated entries")
    order = np.lexsort((indices, -scores))
    return float(labels[order[:k]].sum()) / k


@dataclass(frozen=True)
class ComplementarityReport:
    """The four headline cells: {AUROC, P@k} for each score variant."""

    k: int
    auroc_u: float
    auroc_b: float
    p_at_k_u: float
    p_at_k_b: float

    def rows(self) -> list[tuple[str, float, float]]:
        return [
            ("score_u", self.auroc_u, self.p_at_k_u),
            ("score_b", self.auroc_b, self.p_at_k_b),
        ]


def complementarity_report(
    scores_u: LabeledScores, scores_b: LabeledScores, k: int
) -> ComplementarityReport:
    if [e[0] for e in scores_u.entries] != [e[0] for e in scores_b.entries]:
        raise ValueError("score streams cover different index sets")
    if scores_u.eval_from != scores_b.eval_from:
        raise ValueError("score streams disagree on eval_from")
    return ComplementarityReport(
        k=k,
        auroc_u=auroc(scores_u),
        auroc_b=auroc(scores_b),
        p_at_k_u=precision_at_k(scores_u, k),
        p_at_k_b=precision_at_k(scores_b, k),
    )


def join_scores_with_labels(
    indices: Sequence[int],
    scores: Sequence[float],
    labels: dict[int, int],
    eval_from: int = 0,
) -> LabeledScores:
    """Attach labels to a score column; unlabeled indices default to 0.

    A label whose index never appears among the scores is an error: it
    would silently vanish from every metric.
    """
    known = set(indices)
    for index in labels:
        if index not in known:
            raise ValueError(f"label index {index} does not appear among the scores")
    entries = tuple(
        (int(index), float(score), labels.get(int(index), 0))
        for index, score in zip(indices, scores)
    )
    return LabeledScores(entries=entries, eval_from=eval_from)

"""Per-hyperedge anomaly scores against a frozen proximity snapshot.

Every ordered supernode pair (u, v) of the arriving hyperedge, diagonal
included, contributes one term ``d[u]**beta * ln(a / s)`` where ``a`` is
the hyperedge's own transition mass onto ``v``, ``s`` is the snapshot's
expectation for the pair, and ``d[u]`` counts same-timestamp hyperedges
containing ``u``.  Unexpectedness takes the maximum term with beta = 0;
burstiness takes the mean with beta = 1.  Across the K independent hash
functions the final score is the maximum per-summary score.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hyperwatch.hashing import SupernodeVector
from hyperwatch.summary import ProximityView


class Aggregator(enum.Enum):
    MAX = "max"
    MEAN = "mean"


@dataclass(frozen=True)
class ScoreConfig:
    """Knobs of one score variant.

    ``floor`` clamps the expected proximity away from zero so a
    never-seen pair scores very high but finite; ``prior`` replaces
    whole rows that have no decayed mass yet (an uninformed walker is
    uniform, so the natural prior is 1/M).
    """

    beta: float
    aggregator: Aggregator
    floor: float = 1e-12
    prior: float = 1e-12

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if not self.floor > 0:
            raise ValueError("floor must be positive")
        if not 0 < self.prior <= 1:
            raise ValueError("prior must be in (0, 1]")
        if not isinstance(self.aggregator, Aggregator):
            raise ValueError("aggregator must be an Aggregator member")

    @classmethod
    def unexpectedness(cls, num_supernodes: int, floor: float = 1e-12) -> "ScoreConfig":
        return cls(beta=0.0, aggregator=Aggregator.MAX, floor=floor, prior=1.0 / num_supernodes)

    @classmethod
    def burstiness(cls, num_supernodes: int, floor: float = 1e-12) -> "ScoreConfig":
        return cls(beta=1.0, aggregator=Aggregator.MEAN, floor=floor, prior=1.0 / num_supernodes)


class DegreeTracker:
    """Occurrence counts of supernodes among hyperedges at one timestamp.

    Counts are membership-based: a hyperedge contributes 1 to each
    supernode it touches no matter how many of its nodes hash there.
    The map resets whenever the stream timestamp strictly advances, so
    it never holds more than one entry per supernode.
    """

    __slots__ = ("current_timestamp", "counts")

    def __init__(self) -> None:
        self.current_timestamp = -math.inf
        self.counts: dict[int, int] = {}

    def observe(self, mv: SupernodeVector, t: float) -> "DegreeTracker":
        t = float(t)
        if t < self.current_timestamp:
            raise ValueError("non-monotone timestamp")
        if t > self.current_timestamp:
            self.counts = {}
            self.current_timestamp = t
        for bucket in mv.counts:
            self.counts[bucket] = self.counts.get(bucket, 0) + 1
        return self

    def count(self, bucket: int) -> int:
        return self.counts.get(bucket, 0)


def score(mv: SupernodeVector, snapshot: ProximityView, tracker: DegreeTracker, cfg: ScoreConfig) -> float:
    """Aggregate Definition-style terms over all |support|^2 ordered pairs.

    The caller must have already registered the hyperedge with the
    tracker, and the snapshot must exclude every hyperedge at the
    current timestamp (it is the state "just before" it).
    """
    support = np.array(mv.support(), dtype=np.intp)
    if support[-1] >= snapshot.num_supernodes:
        raise ValueError("vector addresses buckets outside the snapshot")
    observed = np.array([mv.counts[k] for k in support], dtype=np.float64) / mv.size
    expected = np.where(
        snapshot.defined_rows[support][:, np.newaxis],
        snapshot.entries[np.ix_(support, support)],
        cfg.prior,
    )
    np.maximum(expected, cfg.floor, out=expected)
    ratios = np.log(observed[np.newaxis, :] / expected)
    degrees = np.array([tracker.count(k) for k in support], dtype=np.float64)
    terms = (degrees ** cfg.beta)[:, np.newaxis] * ratios
    if cfg.aggregator is Aggregator.MAX:
        return float(terms.max())
    return float(terms.mean())


def score_pair(
    mvs: Sequence[SupernodeVector],
    snapshots: Sequence[ProximityView],
    trackers: Sequence[DegreeTracker],
    cfg_u: ScoreConfig,
    cfg_b: ScoreConfig,
) -> tuple[float, float]:
    """Unexpectedness and burstiness, each maxed over the K summaries."""
    if not len(mvs) == len(snapshots) == len(trackers):
        raise ValueError("mvs, snapshots, and trackers must have equal length")
    if not mvs:
        raise ValueError("at least one summary is required")
    score_u = -math.inf
    score_b = -math.inf
    for mv, snapshot, tracker in zip(mvs, snapshots, trackers):
        score_u = max(score_u, score(mv, snapshot, tracker, cfg_u))
        score_b = max(score_b, score(mv, snapshot, tracker, cfg_b))
    return score_u, score_b

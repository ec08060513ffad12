"""End-to-end streaming pipeline.

``Detector`` is the reference implementation: plain Python objects, one
Summary/DegreeTracker/snapshot per hash function, processing one
hyperedge at a time.  ``run_stream`` is the public entry point; by
default it dispatches to the compiled engine in :mod:`hyperwatch.kernel`
(identical arithmetic, restated over flat arrays) and falls back to the
reference detector when numba is unavailable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from hyperwatch.hashing import HashConfig, vectorize
from hyperwatch.scoring import DegreeTracker, ScoreConfig, score_pair
from hyperwatch.summary import ProximityView, Summary

DEFAULT_CHUNK_SIZE = 32768


@dataclass(frozen=True)
class ScoredEvent:
    index: int
    timestamp: float
    score_u: float
    score_b: float


class Detector:
    """Sequential reference detector over K hashed summaries."""

    def __init__(
        self,
        hash_config: HashConfig,
        alpha: float,
        *,
        floor: float = 1e-12,
        score_u: ScoreConfig | None = None,
        score_b: ScoreConfig | None = None,
        force_rebase: bool = False,
    ) -> None:
        m = hash_config.num_supernodes
        self.hash_config = hash_config
        self.score_u = score_u if score_u is not None else ScoreConfig.unexpectedness(m, floor=floor)
        self.score_b = score_b if score_b is not None else ScoreConfig.burstiness(m, floor=floor)
        self.summaries = [Summary(m, alpha) for _ in hash_config.seeds]
        self.trackers = [DegreeTracker() for _ in hash_config.seeds]
        self.snapshots = [ProximityView.empty(m) for _ in hash_config.seeds]
        self.force_rebase = force_rebase
        self.events_processed = 0
        self._current_timestamp = -math.inf

    @property
    def alpha(self) -> float:
        return self.summaries[0].alpha

    def process(self, nodes: Iterable[str], timestamp: float) -> ScoredEvent:
        """Score one hyperedge, then fold it into the live summaries.

        On a strict timestamp advance the live summaries are frozen
        into new snapshots first, so every event sharing a timestamp is
        scored against the state just before that timestamp; the
        summaries themselves absorb each event immediately.
        """
        t = float(timestamp)
        if t < self._current_timestamp:
            raise ValueError("non-monotone timestamp")
        config = self.hash_config
        mvs = [vectorize(nodes, seed, config.num_supernodes) for seed in config.seeds]
        if t > self._current_timestamp:
            self.snapshots = [summary.proximity() for summary in self.summaries]
            self._current_timestamp = t
        for tracker, mv in zip(self.trackers, mvs):
            tracker.observe(mv, t)
        score_u, score_b = score_pair(mvs, self.snapshots, self.trackers, self.score_u, self.score_b)
        for summary, mv in zip(self.summaries, mvs):
            summary.update(mv, t)
            if self.force_rebase:
                summary.rebase(t)
        event = ScoredEvent(self.events_processed, t, score_u, score_b)
        self.events_processed += 1
        return event


def run_stream(
    events: Iterable[tuple[Iterable[str], float]],
    hash_config: HashConfig,
    alpha: float,
    *,
    floor: float = 1e-12,
    engine: str = "fast",
    force_rebase: bool = False,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Iterator[ScoredEvent]:
    """Score a whole (nodes, timestamp) stream lazily, in arrival order.

    Memory stays constant in the stream length: state is the K
    summaries plus per-chunk buffers.  ``engine="reference"`` forces
    the pure-Python detector, which the compiled path must match to
    within float noise.
    """
    if engine not in ("fast", "reference"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "fast":
        from hyperwatch import kernel

        if kernel.HAVE_NUMBA:
            yield from kernel.run_stream_fast(
                events,
                hash_config,
                alpha,
                floor=floor,
                force_rebase=force_rebase,
                chunk_size=chunk_size,
            )
            return
    detector = Detector(hash_config, alpha, floor=floor, force_rebase=force_rebase)
    for nodes, timestamp in events:
        yield detector.process(nodes, timestamp)

"""Streaming anomaly detection for hyperedge streams.

Nodes are folded into a small number of supernodes by seeded hashing, a
decayed numerator/denominator summary tracks supernode-to-supernode
proximity in constant space, and every arriving hyperedge is scored for
unexpectedness and burstiness against the summary state frozen just
before its timestamp.
"""

from hyperwatch.detector import Detector, ScoredEvent, run_stream
from hyperwatch.hashing import HashConfig, SupernodeVector, hash_node, vectorize
from hyperwatch.scoring import Aggregator, DegreeTracker, ScoreConfig
from hyperwatch.summary import ProximityView, Summary, batch_proximity

__all__ = [
    "Aggregator",
    "DegreeTracker",
    "Detector",
    "HashConfig",
    "ProximityView",
    "ScoreConfig",
    "ScoredEvent",
    "Summary",
    "SupernodeVector",
    "batch_proximity",
    "hash_node",
    "run_stream",
    "vectorize",
]

__version__ = "0.1.0"

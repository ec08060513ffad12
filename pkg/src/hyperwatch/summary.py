"""Decayed proximity summaries over supernodes.

The summary keeps one numerator matrix ``S`` and one denominator vector
``T`` per hash function.  Both accumulate contributions of past
hyperedges weighted by an exponential time-decay kernel, and their ratio
``S[u] / T[u]`` is the decayed transition probability from supernode
``u`` to every other supernode.  Updates touch only the buckets hit by
the arriving hyperedge, so one update costs O(support^2) instead of a
full recompute over history.

Stored entries carry an implicit scale factor ``alpha ** base_time``:
instead of discounting all of history on every arrival, each new
contribution is multiplied by ``alpha ** (base_time - t)``, which grows
as time advances.  The scale cancels in the ratio, and ``rebase`` moves
``base_time`` forward (multiplying the state by a factor <= 1) before
the growing factor can overflow.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

from hyperwatch.hashing import SupernodeVector

# Rebase as soon as the pending increment factor alpha**(base_time - t)
# would exceed this, leaving ample float64 headroom for the entries
# themselves.
REBASE_THRESHOLD = 1e120

CHECKPOINT_MAGIC = b"HNWK"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sHI6s")
_FOOTER = struct.Struct("<3d")


def _decay_factor(alpha: float, exponent: float) -> float:
    """``alpha ** exponent`` with overflow mapped to +inf.

    CPython raises OverflowError where C would return inf; the caller
    treats inf as "rebase first", so saturating is the right behavior.
    Also pins down the alpha == 0 corner: 0**0 == 1, 0**positive == 0,
    0**negative == +inf.
    """
    if exponent == 0.0:
        return 1.0
    if alpha == 0.0:
        return 0.0 if exponent > 0.0 else math.inf
    try:
        return alpha ** exponent
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class ProximityView:
    """Immutable snapshot of the transition matrix at some instant.

    ``entries[u, v]`` is the decayed probability mass from ``u`` to
    ``v``; rows whose denominator is zero (no decayed mass at all) are
    flagged False in ``defined_rows`` and zero-filled in ``entries``.
    """

    entries: np.ndarray
    defined_rows: np.ndarray

    def __post_init__(self) -> None:
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        if self.defined_rows.shape != (self.entries.shape[0],):
            raise ValueError("defined_rows must have one flag per row")

    @property
    def num_supernodes(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def empty(cls, num_supernodes: int) -> "ProximityView":
        entries = np.zeros((num_supernodes, num_supernodes))
        defined = np.zeros(num_supernodes, dtype=bool)
        entries.setflags(write=False)
        defined.setflags(write=False)
        return cls(entries=entries, defined_rows=defined)


class Summary:
    """One running S/T pair for a single hash function."""

    __slots__ = ("alpha", "S", "T", "base_time", "last_time")

    def __init__(self, num_supernodes: int, alpha: float) -> None:
        if num_supernodes < 1:
            raise ValueError("num_supernodes must be at least 1")
        if not 0.0 <= alpha < 1.0:
            raise ValueError("alpha must be in [0, 1)")
        self.alpha = float(alpha)
        self.S = np.zeros((num_supernodes, num_supernodes))
        self.T = np.zeros(num_supernodes)
        self.base_time = 0.0
        self.last_time = -math.inf

    @property
    def num_supernodes(self) -> int:
        return self.T.shape[0]

    def update(self, mv: SupernodeVector, t: float) -> "Summary":
        """Fold one hyperedge observed at time ``t`` into the summary."""
        t = float(t)
        if t < self.last_time:
            raise ValueError("timestamps must be non-decreasing")
        if math.isinf(self.last_time):
            # First event anchors the implicit scale, so the very first
            # increment factor is exactly 1 regardless of where the
            # stream's clock starts.
            self.base_time = t
        factor = _decay_factor(self.alpha, self.base_time - t)
        if factor > REBASE_THRESHOLD:
            self.rebase(t)
            factor = 1.0
        idx = np.array(mv.support(), dtype=np.intp)
        shares = np.array([mv.counts[k] for k in idx], dtype=np.float64) / mv.size
        self.T[idx] += factor
        self.S[np.ix_(idx, idx)] += factor * shares[np.newaxis, :]
        self.last_time = t
        return self

    def proximity(self) -> ProximityView:
        defined = self.T > 0.0
        entries = self.S / np.where(defined, self.T, 1.0)[:, np.newaxis]
        entries[~defined] = 0.0
        entries.setflags(write=False)
        defined.setflags(write=False)
        return ProximityView(entries=entries, defined_rows=defined)

    def rebase(self, new_base: float) -> "Summary":
        """Move ``base_time`` forward to ``new_base``, rescaling state.

        Leaves every ratio S[u, v] / T[u] unchanged up to the shared
        scale; entries older than the float64 range simply underflow to
        zero, which is the correct decayed weight for them anyway.
        """
        new_base = float(new_base)
        if new_base < self.base_time:
            raise ValueError("base_time may only move forward")
        if new_base == self.base_time:
            return self
        scale = _decay_factor(self.alpha, new_base - self.base_time)
        self.S *= scale
        self.T *= scale
        self.base_time = new_base
        return self


def batch_proximity(
    history: Sequence[tuple[SupernodeVector, float]],
    t_now: float,
    alpha: float,
    num_supernodes: int,
) -> ProximityView:
    """Transition matrix recomputed from scratch over explicit history.

    Builds the random-walk product (inverse vertex degrees, decayed
    incidence weights, inverse edge sizes, incidence counts) directly,
    in O(len(history) * num_supernodes^2).  Exists as the slow oracle
    for the incremental summary; the two must agree to float precision
    at any reference time because the decay scale cancels row-wise.
    """
    if not history:
        raise ValueError("history must contain at least one hyperedge")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must be in [0, 1)")
    if num_supernodes < 1:
        raise ValueError("num_supernodes must be at least 1")
    num_edges = len(history)
    weights = np.zeros((num_supernodes, num_edges))
    shares = np.zeros((num_edges, num_supernodes))
    for j, (mv, t) in enumerate(history):
        if t > t_now:
            raise ValueError("history may not contain events after t_now")
        # Vertex side of the walk: an incident edge is chosen by its
        # decayed kernel weight alone (membership, not multiplicity);
        # the per-bucket multiplicity enters only through the edge's
        # transition distribution in `shares`.
        ker = _decay_factor(alpha, t_now - t) * (1.0 - alpha)
        for bucket, count in mv.counts.items():
            weights[bucket, j] = ker
            shares[j, bucket] = count / mv.size
    row_mass = weights.sum(axis=1)
    defined = row_mass > 0.0
    entries = (weights / np.where(defined, row_mass, 1.0)[:, np.newaxis]) @ shares
    entries[~defined] = 0.0
    entries.setflags(write=False)
    defined.setflags(write=False)
    return ProximityView(entries=entries, defined_rows=defined)


def save_summary(summary: Summary, fh: BinaryIO) -> None:
    """Write a bit-exact binary checkpoint of one summary."""
    fh.write(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, summary.num_supernodes, b"\x00" * 6))
    fh.write(np.ascontiguousarray(summary.S, dtype="<f8").tobytes())
    fh.write(np.ascontiguousarray(summary.T, dtype="<f8").tobytes())
    fh.write(_FOOTER.pack(summary.base_time, summary.last_time, summary.alpha))


def load_summary(fh: BinaryIO) -> Summary:
    """Read a checkpoint written by :func:`save_summary`."""
    header = fh.read(_HEADER.size)
    if len(header) != _HEADER.size:
        raise ValueError("truncated checkpoint header")
    magic, version, m, _reserved = _HEADER.unpack(header)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError("bad checkpoint magic")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    if m < 1:
        raise ValueError("checkpoint declares an empty summary")
    body = fh.read()
    expected = 8 * (m * m + m) + _FOOTER.size
    if len(body) != expected:
        raise ValueError("checkpoint payload has the wrong length")
    s_flat = np.frombuffer(body[: 8 * m * m], dtype="<f8")
    t_flat = np.frombuffer(body[8 * m * m: 8 * (m * m + m)], dtype="<f8")
    base_time, last_time, alpha = _FOOTER.unpack(body[8 * (m * m + m):])
    if not 0.0 <= alpha < 1.0:
        raise ValueError("checkpoint alpha out of range")
    summary = Summary(m, alpha)
    summary.S = s_flat.astype(np.float64).reshape(m, m).copy()
    summary.T = t_flat.astype(np.float64).copy()
    summary.base_time = base_time
    summary.last_time = last_time
    return summary

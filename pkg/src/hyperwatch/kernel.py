"""Compiled streaming engine.

Identical arithmetic to the reference ``Detector`` (same operations in
the same order on the same float64 values), restated over preallocated
arrays and JIT-compiled with numba.  Events are pulled in chunks: node
tokens are interned to integer ids with their bucket rows cached, the
chunk is handed to one compiled call, and scores come back as arrays.
State lives across chunks, so memory stays constant in stream length.

Everything here is an optimization detail; behavior is defined by the
reference path, and the two are held together by differential tests.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

from hyperwatch.detector import ScoredEvent
from hyperwatch.hashing import HashConfig, bucket_row
from hyperwatch.scoring import Aggregator, ScoreConfig
from hyperwatch.summary import REBASE_THRESHOLD

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


DEFAULT_CHUNK_SIZE = 32768

# The token cache trades memory for hashing speed; clearing it keeps
# the engine constant-space on streams with unbounded vocabularies.
# Cleared only between chunks so in-flight ids stay valid.
TOKEN_CACHE_LIMIT = 1 << 20


@njit(cache=True)
def _process_chunk(
    tok,
    indptr,
    ts,
    buckets,
    S,
    T,
    base,
    snap,
    snap_def,
    deg,
    prev_t,
    counts,
    touched,
    shares,
    alpha,
    beta_u,
    max_u,
    prior_u,
    floor_u,
    beta_b,
    max_b,
    prior_b,
    floor_b,
    force_rebase,
    out_u,
    out_b,
):
    num_funcs = buckets.shape[1]
    num_buckets = T.shape[1]
    num_events = indptr.shape[0] - 1
    for i in range(num_events):
        t = ts[i]
        if t < prev_t[0]:
            return i
        if t > prev_t[0]:
            for k in range(num_funcs):
                for u in range(num_buckets):
                    t_u = T[k, u]
                    if t_u > 0.0:
                        snap_def[k, u] = True
                        for v in range(num_buckets):
                            snap[k, u, v] = S[k, u, v] / t_u
                    else:
                        snap_def[k, u] = False
                    deg[k, u] = 0.0
            prev_t[0] = t
        begin = indptr[i]
        end = indptr[i + 1]
        size = end - begin
        best_u = -np.inf
        best_b = -np.inf
        for k in range(num_funcs):
            n_touched = 0
            for j in range(begin, end):
                b = buckets[tok[j], k]
                if counts[b] == 0:
                    touched[n_touched] = b
                    n_touched += 1
                counts[b] += 1
            for a in range(1, n_touched):
                key = touched[a]
                pos = a - 1
                while pos >= 0 and touched[pos] > key:
                    touched[pos + 1] = touched[pos]
                    pos -= 1
                touched[pos + 1] = key
            for x in range(n_touched):
                shares[x] = counts[touched[x]] / size
                deg[k, touched[x]] += 1.0
            top_u = -np.inf
            top_b = -np.inf
            sum_u = 0.0
            sum_b = 0.0
            for x in range(n_touched):
                u = touched[x]
                d = deg[k, u]
                w_u = d ** beta_u
                w_b = d ** beta_b
                defined = snap_def[k, u]
                for y in range(n_touched):
                    a_v = shares[y]
                    s_u = snap[k, u, touched[y]] if defined else prior_u
                    s_b = snap[k, u, touched[y]] if defined else prior_b
                    if s_u < floor_u:
                        s_u = floor_u
                    if s_b < floor_b:
                        s_b = floor_b
                    term_u = w_u * np.log(a_v / s_u)
                    term_b = w_b * np.log(a_v / s_b)
                    if term_u > top_u:
                        top_u = term_u
                    if term_b > top_b:
                        top_b = term_b
                    sum_u += term_u
                    sum_b += term_b
            pairs = n_touched * n_touched
            cand_u = top_u if max_u else sum_u / pairs
            cand_b = top_b if max_b else sum_b / pairs
            if cand_u > best_u:
                best_u = cand_u
            if cand_b > best_b:
                best_b = cand_b
            factor = alpha ** (base[k] - t)
            if not factor <= REBASE_THRESHOLD:
                scale = alpha ** (t - base[k])
                for u in range(num_buckets):
                    T[k, u] *= scale
                    for v in range(num_buckets):
                        S[k, u, v] *= scale
                base[k] = t
                factor = 1.0
            for x in range(n_touched):
                u = touched[x]
                T[k, u] += factor
                for y in range(n_touched):
                    S[k, u, touched[y]] += factor * shares[y]
            if force_rebase and base[k] != t:
                scale = alpha ** (t - base[k])
                for u in range(num_buckets):
                    T[k, u] *= scale
                    for v in range(num_buckets):
                        S[k, u, v] *= scale
                base[k] = t
            for x in range(n_touched):
                counts[touched[x]] = 0
        out_u[i] = best_u
        out_b[i] = best_b
    return -1


class _TokenEncoder:
    """Interns node tokens and caches their bucket row per hash seed."""

    __slots__ = ("_seeds", "_num_buckets", "_ids", "_table")

    def __init__(self, hash_config: HashConfig) -> None:
        self._seeds = hash_config.seeds
        self._num_buckets = hash_config.num_supernodes
        self._ids: dict[str, int] = {}
        self._table = np.empty((1024, len(self._seeds)), dtype=np.int64)

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def cached_tokens(self) -> int:
        return len(self._ids)

    def encode_chunk(
        self, chunk: Sequence[tuple[Iterable[str], float]], first_index: int
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if len(self._ids) >= TOKEN_CACHE_LIMIT:
            self._ids.clear()
        ids = self._ids
        flat: list[int] = []
        indptr = np.empty(len(chunk) + 1, dtype=np.int64)
        timestamps = np.empty(len(chunk), dtype=np.float64)
        indptr[0] = 0
        new_tokens: list[str] = []
        for i, (nodes, timestamp) in enumerate(chunk):
            distinct = set(nodes)
            if not distinct:
                raise ValueError(f"empty hyperedge at event {first_index + i}")
            for token in distinct:
                tid = ids.get(token)
                if tid is None:
                    tid = len(ids)
                    ids[token] = tid
                    new_tokens.append(token)
                flat.append(tid)
            indptr[i + 1] = len(flat)
            timestamps[i] = timestamp
        if new_tokens:
            needed = len(ids)
            if needed > self._table.shape[0]:
                capacity = self._table.shape[0]
                while capacity < needed:
                    capacity *= 2
                grown = np.empty((capacity, len(self._seeds)), dtype=np.int64)
                grown[: self._table.shape[0]] = self._table
                self._table = grown
            for token in new_tokens:
                self._table[ids[token]] = bucket_row(token, self._seeds, self._num_buckets)
        return np.array(flat, dtype=np.int64), indptr, timestamps


class FastStream:
    """Chunked compiled pipeline with persistent summary state."""

    def __init__(
        self,
        hash_config: HashConfig,
        alpha: float,
        *,
        floor: float = 1e-12,
        score_u: ScoreConfig | None = None,
        score_b: ScoreConfig | None = None,
        force_rebase: bool = False,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
    ) -> None:
        if not 0.0 <= alpha < 1.0:
            raise ValueError("alpha must be in [0, 1)")
        if chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        m = hash_config.num_supernodes
        k = hash_config.num_functions
        self.score_u = score_u if score_u is not None else ScoreConfig.unexpectedness(m, floor=floor)
        self.score_b = score_b if score_b is not None else ScoreConfig.burstiness(m, floor=floor)
        self.alpha = float(alpha)
        self.force_rebase = bool(force_rebase)
        self.chunk_size = int(chunk_size)
        self.encoder = _TokenEncoder(hash_config)
        self.S = np.zeros((k, m, m))
        self.T = np.zeros((k, m))
        self.base = np.zeros(k)
        self.snap = np.zeros((k, m, m))
        self.snap_def = np.zeros((k, m), dtype=np.bool_)
        self.deg = np.zeros((k, m))
        self.prev_t = np.full(1, -np.inf)
        self._counts = np.zeros(m, dtype=np.int64)
        self._touched = np.zeros(m, dtype=np.int64)
        self._shares = np.zeros(m, dtype=np.float64)
        self._out_u = np.empty(self.chunk_size)
        self._out_b = np.empty(self.chunk_size)
        self.events_processed = 0

    def state_bytes(self) -> int:
        """Resident bytes of all persistent per-summary state arrays."""
        return (
            self.S.nbytes
            + self.T.nbytes
            + self.base.nbytes
            + self.snap.nbytes
            + self.snap_def.nbytes
            + self.deg.nbytes
        )

    def score_chunks(
        self, events: Iterable[tuple[Iterable[str], float]]
    ) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Yield (timestamps, score_u, score_b) arrays per input chunk."""
        started = self.events_processed > 0
        chunk: list[tuple[Iterable[str], float]] = []
        for event in events:
            chunk.append(event)
            if len(chunk) >= self.chunk_size:
                yield self._run_chunk(chunk, started)
                started = True
                chunk = []
        if chunk:
            yield self._run_chunk(chunk, started)

    def _run_chunk(
        self, chunk: Sequence[tuple[Iterable[str], float]], started: bool
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        tok, indptr, timestamps = self.encoder.encode_chunk(chunk, self.events_processed)
        if not started:
            # First update anchors the decay scale at the first
            # timestamp, matching Summary.update on a fresh summary.
            self.base[:] = timestamps[0]
        n = len(chunk)
        out_u = self._out_u[:n]
        out_b = self._out_b[:n]
        bad = _process_chunk(
            tok,
            indptr,
            timestamps,
            self.encoder.table,
            self.S,
            self.T,
            self.base,
            self.snap,
            self.snap_def,
            self.deg,
            self.prev_t,
            self._counts,
            self._touched,
            self._shares,
            self.alpha,
            self.score_u.beta,
            self.score_u.aggregator is Aggregator.MAX,
            self.score_u.prior,
            self.score_u.floor,
            self.score_b.beta,
            self.score_b.aggregator is Aggregator.MAX,
            self.score_b.prior,
            self.score_b.floor,
            self.force_rebase,
            out_u,
            out_b,
        )
        if bad >= 0:
            raise ValueError(f"non-monotone timestamp at event {self.events_processed + bad}")
        self.events_processed += n
        return timestamps, out_u.copy(), out_b.copy()


def run_stream_fast(
    events: Iterable[tuple[Iterable[str], float]],
    hash_config: HashConfig,
    alpha: float,
    *,
    floor: float = 1e-12,
    force_rebase: bool = False,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Iterator[ScoredEvent]:
    stream = FastStream(
        hash_config,
        alpha,
        floor=floor,
        force_rebase=force_rebase,
        chunk_size=chunk_size,
    )
    index = 0
    for timestamps, score_u, score_b in stream.score_chunks(events):
        for i in range(len(timestamps)):
            yield ScoredEvent(index, float(timestamps[i]), float(score_u[i]), float(score_b[i]))
            index += 1

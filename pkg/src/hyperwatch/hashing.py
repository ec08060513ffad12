"""Node-to-supernode hashing and hyperedge vectorization.

A node identifier (an arbitrary UTF-8 string) is mapped to one of
``num_supernodes`` buckets by hashing its bytes with FNV-1a, mixing the
digest with a 64-bit seed through a SplitMix64 finalizer, and reducing
modulo the bucket count.  A hyperedge then becomes a sparse count vector
over buckets plus its original size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    """SplitMix64 step: add the golden-gamma increment, then finalize."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def hash_node(node_id: str, seed: int, num_supernodes: int) -> int:
    """Bucket index of ``node_id`` under ``seed``, in [0, num_supernodes)."""
    if num_supernodes < 1:
        raise ValueError("num_supernodes must be at least 1")
    return splitmix64((seed & _MASK64) ^ fnv1a64(node_id.encode("utf-8"))) % num_supernodes


def bucket_row(token: str, seeds: Iterable[int], num_supernodes: int) -> list[int]:
    """Bucket of ``token`` under every seed, hashing its bytes once."""
    if num_supernodes < 1:
        raise ValueError("num_supernodes must be at least 1")
    digest = fnv1a64(token.encode("utf-8"))
    return [splitmix64((seed & _MASK64) ^ digest) % num_supernodes for seed in seeds]


def derive_seeds(master_seed: int, count: int) -> tuple[int, ...]:
    """Derive ``count`` distinct 64-bit seeds from one master seed.

    Walks a SplitMix64 chain starting at the master seed and skips the
    (astronomically unlikely) repeats so the result is always pairwise
    distinct.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    seeds: list[int] = []
    seen: set[int] = set()
    state = master_seed & _MASK64
    while len(seeds) < count:
        state = splitmix64(state)
        if state not in seen:
            seen.add(state)
            seeds.append(state)
    return tuple(seeds)


@dataclass(frozen=True)
class HashConfig:
    """Shared hashing setup: bucket count plus one seed per hash function."""

    num_supernodes: int
    seeds: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.num_supernodes < 1:
            raise ValueError("num_supernodes must be at least 1")
        if len(self.seeds) < 1:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be pairwise distinct")
        for s in self.seeds:
            if not 0 <= s <= _MASK64:
                raise ValueError("seeds must be unsigned 64-bit integers")
        object.__setattr__(self, "seeds", tuple(self.seeds))

    @property
    def num_functions(self) -> int:
        return len(self.seeds)

    @classmethod
    def from_master_seed(cls, master_seed: int, num_functions: int, num_supernodes: int) -> "HashConfig":
        return cls(num_supernodes=num_supernodes, seeds=derive_seeds(master_seed, num_functions))


@dataclass(frozen=True)
class SupernodeVector:
    """A hyperedge folded onto buckets.

    ``counts`` maps bucket index to the number of member nodes hashed
    there (only non-zero entries are stored) and ``size`` is the number
    of distinct nodes in the original hyperedge, so the counts sum to
    ``size``.
    """

    counts: dict[int, int]
    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("size must be at least 1")
        if sum(self.counts.values()) != self.size:
            raise ValueError("counts must sum to size")
        if any(c < 1 for c in self.counts.values()):
            raise ValueError("stored counts must be positive")

    def support(self) -> tuple[int, ...]:
        """Bucket indices with at least one member, in increasing order."""
        return tuple(sorted(self.counts))


def vectorize(nodes: Iterable[str], seed: int, num_supernodes: int) -> SupernodeVector:
    """Fold a hyperedge (any iterable of node ids) onto buckets.

    Duplicate identifiers are collapsed first, so multiplicities reflect
    distinct nodes only.
    """
    distinct = set(nodes)
    if not distinct:
        raise ValueError("empty hyperedge")
    counts: dict[int, int] = {}
    for node in distinct:
        k = hash_node(node, seed, num_supernodes)
        counts[k] = counts.get(k, 0) + 1
    return SupernodeVector(counts=counts, size=len(distinct))

"""Labeled benchmark streams: synthetic bases, injections, upscaling.

The synthetic base models a community-structured interaction log.  Each
community has one permanent hub, a small team whose active roster
rotates slowly, and a quiet remainder that appears once in an opening
census and then goes dormant.  Recurring patterns (roster edges, hub
round-trips, periodic team huddles, reunion threads that bring briefly
absent members back) keep the normal co-occurrence structure warm, so
anomalies planted later stand out.  The two injection protocols supply
the ground truth: "unexpected" edges splice foreign nodes into
otherwise normal hyperedges, "bursty" edges flood single timestamps
with subsets of one small node group.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

MIN_EDGE_SIZE = 2
MAX_EDGE_SIZE = 6
WITHIN_COMMUNITY_SHARE = 0.8
TIME_ADVANCE_PROBABILITY = 0.7

# Team shape: each community fields a roster of ROSTER_SIZE rotation
# members (plus the hub) and rotates one slot roughly every
# ROTATION_BLOCK timestamps, so every rotation member is absent for
# three blocks out of six.
ROTATION_SLOTS = 6
ROSTER_SIZE = 3
ROTATION_BLOCK = 150

# A member absent for at least this long is brought back through a
# "reunion" thread (a verbatim-repeated edge for the rest of the run).
REUNION_STALENESS = 350.0

# Every community gathers its full rotation in one edge at this cadence,
# which bounds how stale any rotation pair can get.
HUDDLE_PERIOD = 600.0

# Rare within-community events pair two long-dormant members instead of
# roster members.
ECHO_RATE = 0.002

_INJECTION_RETRY_LIMIT = 100


@dataclass(frozen=True)
class LabeledEvent:
    nodes: tuple[str, ...]
    timestamp: float
    label: int = 0

    def __post_init__(self) -> None:
        if not self.nodes:
            raise ValueError("empty hyperedge")
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


@dataclass(frozen=True)
class InjectionUParams:
    """Unexpected-hyperedge protocol: g template replacements."""

    g: int
    t_setup: float
    rng_seed: int

    def __post_init__(self) -> None:
        if self.g < 1:
            raise ValueError("g must be at least 1")


@dataclass(frozen=True)
class InjectionBParams:
    """Bursty-hyperedge protocol: l bursts of m subsets of an n-group."""

    bursts: int
    per_burst: int
    group_size: int
    t_setup: float
    rng_seed: int

    def __post_init__(self) -> None:
        if self.bursts < 1 or self.per_burst < 1 or self.group_size < 1:
            raise ValueError("bursts, per_burst, and group_size must be at least 1")


def _prologue_edges(
    rng: random.Random, members: list[list[str]], hubs: list[str]
) -> list[tuple[str, ...]]:
    """Opening edges: a census of the dormant tail, then pair warm-up.

    The warm-up deterministically covers every node pair the steady
    state will revisit (rotation pairs via one huddle per community,
    hub-rotation pairs via two bridge edges, hub-hub pairs via four
    fixed mixer edges), so no recurring pair meets for the first time
    after the opening.
    """
    census: list[tuple[str, ...]] = []
    for mem in members:
        rest = mem[1 + ROTATION_SLOTS:]
        i = 0
        while i < len(rest):
            size = rng.randint(MIN_EDGE_SIZE, MAX_EDGE_SIZE)
            census.append(tuple(rest[i: i + size]))
            i += size
    rng.shuffle(census)
    warmup: list[tuple[str, ...]] = []
    half = ROTATION_SLOTS // 2
    for c, mem in enumerate(members):
        rotation = mem[1: 1 + ROTATION_SLOTS]
        if rotation:
            warmup.append(tuple(rotation))
            warmup.append(tuple([hubs[c]] + rotation[:half]))
            if rotation[half:]:
                warmup.append(tuple([hubs[c]] + rotation[half:]))
    for picks in ((0, 1, 2, 3, 4, 5), (4, 5, 6, 7, 8, 9), (8, 9, 0, 1, 2, 3), (0, 1, 2, 3, 6, 7)):
        mixer = tuple(hubs[p] for p in picks if p < len(hubs))
        if len(mixer) >= 2:
            warmup.append(mixer)
    rng.shuffle(warmup)
    return census + warmup


def synth_base(num_nodes: int, num_events: int, communities: int, rng_seed: int) -> list[LabeledEvent]:
    """Community-structured base stream; all labels 0.

    Deterministic per seed.  Hyperedge sizes stay in 1..6, roughly 80%
    of steady-state edges stay within one community (the rest visit the
    hub circle), and integer timestamps advance by 1 with probability
    0.7 per event.  After the opening census and warm-up, each
    community's activity comes from its hub plus a rotating roster,
    punctuated by periodic huddles, reunion threads for returning
    members, and rare echoes from the dormant tail.
    """
    if communities < 1:
        raise ValueError("communities must be at least 1")
    if num_nodes < communities:
        raise ValueError("need at least one node per community")
    if num_events < 0:
        raise ValueError("num_events must be non-negative")
    rng = random.Random(rng_seed)
    nodes = [str(i) for i in range(num_nodes)]
    bounds = [round(c * num_nodes / communities) for c in range(communities + 1)]
    members = [nodes[bounds[c]: bounds[c + 1]] for c in range(communities)]
    hubs = [mem[0] for mem in members]
    prologue = iter(_prologue_edges(rng, members, hubs))
    last_seen: dict[str, int] = {}
    events: list[LabeledEvent] = []

    def emit(edge: Sequence[str], t: int) -> None:
        events.append(LabeledEvent(tuple(edge), float(t)))
        for node in edge:
            last_seen[node] = t

    t = 0
    community: int | None = None
    run_thread: tuple[str, ...] | None = None
    next_huddle: list[float] | None = None
    while len(events) < num_events:
        if events and rng.random() < TIME_ADVANCE_PROBABILITY:
            t += 1
            community = None
            run_thread = None
        edge = next(prologue, None)
        if edge is not None:
            emit(edge, t)
            continue
        if next_huddle is None:
            next_huddle = [t + HUDDLE_PERIOD * (0.5 + rng.random()) for _ in range(communities)]
        if run_thread is not None:
            # Reunion threads repeat verbatim for the rest of the run.
            emit(run_thread, t)
            continue
        if community is None:
            community = rng.randrange(communities)
        mem = members[community]
        rotation = mem[1: 1 + ROTATION_SLOTS]
        if rotation and t >= next_huddle[community]:
            next_huddle[community] = t + HUDDLE_PERIOD
            emit(rotation, t)
            continue
        block = t // ROTATION_BLOCK
        ranked = sorted(range(len(rotation)), key=lambda p: (p - block) % ROTATION_SLOTS)
        roster = [hubs[community]] + [rotation[p] for p in ranked[:ROSTER_SIZE]]
        stale = [
            rotation[p]
            for p in ranked[ROSTER_SIZE:]
            if t - last_seen.get(rotation[p], t) >= REUNION_STALENESS
        ]
        if stale:
            stale.sort(key=lambda node: last_seen[node])
            thread = stale[:2] if len(stale) >= 2 else [rng.choice(roster)] + stale
            run_thread = tuple(thread)
            emit(run_thread, t)
            continue
        if rng.random() < WITHIN_COMMUNITY_SHARE:
            dormant = mem[1 + ROTATION_SLOTS:]
            if len(dormant) >= 2 and rng.random() < ECHO_RATE:
                emit(rng.sample(dormant, 2), t)
                continue
            size = min(rng.randint(MIN_EDGE_SIZE, MAX_EDGE_SIZE), len(roster))
            emit(rng.sample(roster, size), t)
        else:
            size = min(rng.randint(MIN_EDGE_SIZE, MAX_EDGE_SIZE), len(hubs))
            emit(rng.sample(hubs, size), t)
    return events


def _check_sorted(events: Sequence[LabeledEvent]) -> None:
    for prev, cur in zip(events, events[1:]):
        if cur.timestamp < prev.timestamp:
            raise ValueError("base stream timestamps must be non-decreasing")


def _vocabulary(events: Sequence[LabeledEvent]) -> list[str]:
    return sorted({node for event in events for node in event.nodes})


def _stable_merge(base: Sequence[LabeledEvent], injected: Sequence[LabeledEvent]) -> list[LabeledEvent]:
    # Stable sort of base-then-injected puts every injected event after
    # the existing events of its timestamp while preserving both
    # original orders.
    return sorted(list(base) + list(injected), key=lambda event: event.timestamp)


def inject_unexpected(base: Sequence[LabeledEvent], params: InjectionUParams) -> list[LabeledEvent]:
    """Plant g label-1 hyperedges by mutating uniformly chosen templates.

    Each template (an event after t_setup) has ceil(size/2) of its
    members replaced by nodes drawn uniformly from the rest of the
    vocabulary, so the injected edge keeps its template's size and
    timestamp but pairs nodes that normally never meet.
    """
    _check_sorted(base)
    eligible = [event for event in base if event.timestamp > params.t_setup]
    if not eligible:
        raise ValueError("no base events after t_setup")
    vocabulary = _vocabulary(base)
    rng = random.Random(params.rng_seed)
    injected: list[LabeledEvent] = []
    for _ in range(params.g):
        for _ in range(_INJECTION_RETRY_LIMIT):
            template = eligible[rng.randrange(len(eligible))]
            members = set(template.nodes)
            replace = math.ceil(len(members) / 2)
            outsiders = [node for node in vocabulary if node not in members]
            if len(outsiders) >= replace:
                break
        else:
            raise ValueError("vocabulary too small to replace nodes without collisions")
        victims = set(rng.sample(sorted(members), replace))
        keep = [node for node in template.nodes if node not in victims]
        newcomers = rng.sample(outsiders, replace)
        injected.append(LabeledEvent(tuple(keep + newcomers), template.timestamp, 1))
    return _stable_merge(base, injected)


def inject_bursty(base: Sequence[LabeledEvent], params: InjectionBParams) -> list[LabeledEvent]:
    """Plant l bursts: m subsets of one n-node group at one timestamp."""
    _check_sorted(base)
    vocabulary = _vocabulary(base)
    if params.group_size > len(vocabulary):
        raise ValueError("group_size exceeds the base vocabulary")
    timestamps = sorted({event.timestamp for event in base if event.timestamp > params.t_setup})
    if not timestamps:
        raise ValueError("no base timestamps after t_setup")
    rng = random.Random(params.rng_seed)
    injected: list[LabeledEvent] = []
    for _ in range(params.bursts):
        t = timestamps[rng.randrange(len(timestamps))]
        group = rng.sample(vocabulary, params.group_size)
        for _ in range(params.per_burst):
            size = rng.randint(1, params.group_size)
            injected.append(LabeledEvent(tuple(rng.sample(group, size)), t, 1))
    return _stable_merge(base, injected)


def upscale(base: Sequence[LabeledEvent], factor: int) -> list[LabeledEvent]:
    """Concatenate ``factor`` copies, shifting each copy past the last.

    Node identifiers are reused, so the result is the same population
    with a proportionally longer history.
    """
    if factor < 1:
        raise ValueError("factor must be at least 1")
    if not base:
        return []
    _check_sorted(base)
    period = base[-1].timestamp - base[0].timestamp + 1
    out: list[LabeledEvent] = []
    for copy in range(factor):
        shift = copy * period
        if copy == 0:
            out.extend(base)
        else:
            out.extend(
                LabeledEvent(event.nodes, event.timestamp + shift, event.label) for event in base
            )
    return out

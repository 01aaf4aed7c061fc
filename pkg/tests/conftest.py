"""Shared fixtures: worked networks and random generators.

The three fixed networks reappear across the suite:

* ``half_gain_net`` is the five-edge diamond whose middle vertex halves
  its inflow; a known mid-run snapshot of it exercises the cycle planner.
* ``doubling_loop_net`` is the four-edge cyclic network where both inner
  vertices double their inflow; its only walk from s is a cycle whose
  stem demand is negative, so it cannot be solved without reduction.
* ``two_segment_loop_net`` is the cyclic two-vertex network with genuine
  multi-segment mappings and a positive starting point at each vertex;
  the full pipeline (segment split, cycle removal, solve, pull back)
  is pinned against worked values in test_acceptance.
"""

from fractions import Fraction as F
import random

import pytest

import stableflow as sf


@pytest.fixture
def half_gain_net() -> sf.Network:
    return sf.Network.create(
        source="s",
        sink="t",
        vertices=["v1", "v2", "v3"],
        mappings={"v2": sf.PLMapping((F(1, 2),))},
        edges=[("s", "v1", 10), ("v1", "v2", 4), ("v1", "v3", 9),
               ("v2", "v3", 4), ("v3", "t", 9)],
        pref_out={"v1": ["v3", "v2"]},
        pref_in={"v3": ["v2", "v1"]},
    )


@pytest.fixture
def doubling_loop_net() -> sf.Network:
    return sf.Network.create(
        source="s",
        sink="t",
        vertices=["v1", "v2"],
        mappings={"v1": sf.PLMapping((F(2),)), "v2": sf.PLMapping((F(2),))},
        edges=[("s", "v1", 1), ("v1", "v2", 2), ("v2", "v1", 4),
               ("v1", "t", 6)],
        pref_in={"v1": ["v2", "s"]},
        pref_out={"v1": ["v2", "t"]},
    )


@pytest.fixture
def two_segment_loop_net() -> sf.Network:
    return sf.Network.create(
        source="s",
        sink="t",
        vertices=["v1", "v2"],
        mappings={
            "v1": sf.PLMapping((F(2), F(1)), start=F(2), breakpoints=(F(2),)),
            "v2": sf.PLMapping((F(1), F(2)), start=F(1), breakpoints=(F(3),)),
        },
        edges=[("s", "v1", 10), ("v1", "v2", 10), ("v2", "v1", 10),
               ("v1", "t", 10)],
        pref_in={"v1": ["v2", "s"]},
        pref_out={"v1": ["v2", "t"]},
    )


# a compact pool of mappings used by the mapping unit tests; the fourth
# one is the identity and the last two are convex
MAPPING_FIXTURES = [
    sf.PLMapping((F(1),)),
    sf.PLMapping((F(2),), start=F(2)),
    sf.PLMapping((F(2), F(1)), start=F(2), breakpoints=(F(2),)),
    sf.PLMapping((F(1, 2), F(3), F(1)), start=F(1),
                 breakpoints=(F(2), F(7, 2))),
    sf.PLMapping((F(1), F(2)), start=F(1), breakpoints=(F(3),)),
    sf.PLMapping((F(1, 4), F(1), F(5, 2)), breakpoints=(F(1), F(3))),
]


def rational(rng: random.Random, lo: int = 0, hi: int = 8,
             max_den: int = 4) -> F:
    den = rng.randint(1, max_den)
    return F(rng.randint(lo * den, hi * den), den)


def random_acyclic_linear_net(rng: random.Random) -> sf.Network:
    """A layered network with single-segment mappings.

    Vertices are topologically ordered by construction, every inner
    vertex keeps at least one outgoing edge (the solver refuses dead
    ends), and roughly one edge in twelve gets capacity zero so the
    pointer bookkeeping around useless edges stays covered.
    """
    n = rng.randint(1, 8)
    names = [f"v{i}" for i in range(n)]
    mappings = {}
    for v in names:
        slope = rng.choice([F(1, 4), F(1, 2), F(1), F(1), F(3, 2), F(2), F(3)])
        start = rng.choice([F(0), F(0), F(0), F(1), F(2), F(1, 2)])
        mappings[v] = sf.PLMapping((slope,), start=start)

    def cap() -> F:
        if rng.random() < 1 / 12:
            return F(0)
        return rational(rng, 0, 8) + F(1, 4)

    edges = []
    seen = set()

    def add(tail, head):
        if (tail, head) not in seen:
            seen.add((tail, head))
            edges.append((tail, head, cap()))

    for i, v in enumerate(names):
        later = names[i + 1:]
        targets = [w for w in later if rng.random() < 0.4]
        if rng.random() < 0.6 or not targets:
            targets.append("t")
        for w in targets:
            add(v, w)
    for v in names:
        if rng.random() < 0.5:
            add("s", v)
    if not any(tail == "s" for tail, _, _ in edges):
        add("s", names[0])

    by_tail = {v: [] for v in names}
    by_head = {v: [] for v in names}
    for tail, head, _ in edges:
        if tail in by_tail:
            by_tail[tail].append(head)
        if head in by_head:
            by_head[head].append(tail)
    pref_out = {}
    pref_in = {}
    for v in names:
        outs = list(by_tail[v])
        ins = list(by_head[v])
        rng.shuffle(outs)
        rng.shuffle(ins)
        pref_out[v] = outs
        pref_in[v] = ins
    return sf.Network.create(
        source="s", sink="t", vertices=names, mappings=mappings,
        edges=edges, pref_in=pref_in, pref_out=pref_out)


def random_convex_net(rng: random.Random) -> sf.Network:
    """A small network whose mappings have strictly increasing slopes.

    Built so that the direct instance translation applies to any stable
    flow of it: every vertex has an edge from the source and every
    outgoing capacity exceeds the vertex starting point, hence no vertex
    can be starved into the ambiguous zero-inflow band by capacities
    alone.  Cycles are allowed.
    """
    n = rng.randint(1, 5)
    names = [f"v{i}" for i in range(n)]
    mappings = {}
    starts = {}
    for v in names:
        k = rng.randint(1, 3)
        pool = [F(1, 4), F(1, 2), F(1), F(3, 2), F(2), F(3), F(4)]
        slopes = tuple(sorted(rng.sample(pool, k)))
        start = rng.choice([F(0), F(1), F(2), F(1, 2)])
        breaks = []
        at = F(0)
        for _ in range(k - 1):
            at += F(rng.randint(1, 3), rng.choice([1, 2]))
            breaks.append(at)
        mappings[v] = sf.PLMapping(slopes, start=start,
                                   breakpoints=tuple(breaks))
        starts[v] = start

    edges = []
    seen = set()

    def add(tail, head, lo):
        if (tail, head) in seen:
            return
        seen.add((tail, head))
        edges.append((tail, head, lo + rational(rng, 1, 6)))

    for v in names:
        add("s", v, starts[v])
    for v in names:
        add(v, "t", starts[v])
        for w in names:
            if w != v and rng.random() < 0.25:
                add(v, w, max(starts[v], F(1)))

    by_tail = {v: [] for v in names}
    by_head = {v: [] for v in names}
    for tail, head, _ in edges:
        if tail in by_tail:
            by_tail[tail].append(head)
        if head in by_head:
            by_head[head].append(tail)
    pref_out = {}
    pref_in = {}
    for v in names:
        outs = list(by_tail[v])
        ins = list(by_head[v])
        rng.shuffle(outs)
        rng.shuffle(ins)
        pref_out[v] = outs
        pref_in[v] = ins
    return sf.Network.create(
        source="s", sink="t", vertices=names, mappings=mappings,
        edges=edges, pref_in=pref_in, pref_out=pref_out)

"""Network reductions: many segments to one, cyclic to acyclic.

Both reductions return the reduced network together with a map sending
each original edge to the reduced edge carrying its flow, so a solution
of the reduced network pulls back by plain lookup.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import (
    Capacity,
    EdgeKey,
    Flow,
    INFINITE,
    ModelError,
    Network,
    PLMapping,
    ONE,
    ZERO,
    is_infinite,
)
from . import scarf as scarf_mod


@dataclass
class Reduction:
    kind: str  # "single_segment" | "acyclic"
    network: Network
    edge_map: dict  # original EdgeKey -> reduced EdgeKey
    layered: "scarf_mod.LayeredTranslation | None" = None


def pullback_flow(reduction: Reduction, reduced_flow: Flow) -> Flow:
    """Read the original flow off the carrier edges of the reduced one."""
    return {key: reduced_flow.get(carrier, ZERO)
            for key, carrier in reduction.edge_map.items()}


# -- cycle detection ---------------------------------------------------------


def find_cycle(network: Network) -> list[str] | None:
    """Vertices of some directed cycle, or None if the network is acyclic."""
    adjacency: dict[str, list[str]] = {}
    for e in network.edges:
        adjacency.setdefault(e.tail, []).append(e.head)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {name: WHITE for name in
             [network.source, network.sink, *network.vertices]}
    parent: dict[str, str] = {}
    for root in color:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(adjacency.get(root, ())))]
        color[root] = GREY
        while stack:
            node, children = stack[-1]
            advanced = False
            for child in children:
                if color[child] == WHITE:
                    color[child] = GREY
                    parent[child] = node
                    stack.append((child, iter(adjacency.get(child, ()))))
                    advanced = True
                    break
                if color[child] == GREY:
                    cycle = [node]
                    walker = node
                    while walker != child:
                        walker = parent[walker]
                        cycle.append(walker)
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return None


def is_acyclic(network: Network) -> bool:
    return find_cycle(network) is None


# -- many segments -> one ----------------------------------------------------


def _fresh(base: str, used: set[str]) -> str:
    name = base
    while name in used:
        name = name + "_"
    used.add(name)
    return name


def to_single_segment(network: Network) -> Reduction:
    """Expand every inner vertex into a chain of single-segment vertices.

    A vertex with segments a_1..a_k becomes an entry relay, one vertex
    per segment (capacity = the segment's width, scaled by its slope on
    the way out) and an exit relay adding the pseudo starting point.
    The entry and exit relays prefer lower segments, which makes routing
    through the chain reproduce the original mapping exactly under
    stability.  Original edges keep their capacities and preference
    positions between exit and entry relays.
    """
    used = {network.source, network.sink, *network.vertices}
    entry: dict[str, str] = {}
    exit_: dict[str, str] = {}
    chain: dict[str, list[str]] = {}
    order: list[str] = []
    for v in network.vertices:
        entry[v] = _fresh(f"{v}_in", used)
        chain[v] = [_fresh(f"{v}_{i}", used)
                    for i in range(1, network.mapping(v).segment_count + 1)]
        exit_[v] = _fresh(f"{v}_out", used)
        order += [entry[v], *chain[v], exit_[v]]

    def tail_node(u: str) -> str:
        return u if u == network.source else exit_[u]

    def head_node(w: str) -> str:
        return w if w == network.sink else entry[w]

    mappings: dict[str, PLMapping] = {}
    edges: list[tuple[str, str, Capacity]] = []
    edge_map: dict[EdgeKey, EdgeKey] = {}
    for e in network.edges:
        key = (tail_node(e.tail), head_node(e.head))
        edges.append((key[0], key[1], e.capacity))
        edge_map[e.key] = key

    for v in network.vertices:
        m = network.mapping(v)
        borders = m.segment_borders()
        cap_in = ZERO
        for key in network.in_edges(v):
            cap = network.capacity(key)
            if is_infinite(cap):
                cap_in = INFINITE
                break
            cap_in += cap
        widths: list[Capacity] = []
        for i in range(m.segment_count):
            if i < m.segment_count - 1:
                widths.append(borders[i + 1] - borders[i])
            else:
                if is_infinite(cap_in):
                    if m.segment_count > 1:
                        raise ModelError(
                            f"{v!r} mixes several segments with an infinite "
                            f"incoming capacity; the last width is undefined")
                    widths.append(INFINITE)
                else:
                    widths.append(max(ZERO, cap_in - borders[-1]))
        mappings[entry[v]] = PLMapping((ONE,))
        for i, node in enumerate(chain[v]):
            mappings[node] = PLMapping((m.slopes[i],))
            edges.append((entry[v], node, widths[i]))
        for i, node in enumerate(chain[v]):
            scaled = (INFINITE if is_infinite(widths[i])
                      else m.slopes[i] * widths[i])
            edges.append((node, exit_[v], scaled))
        mappings[exit_[v]] = PLMapping((ONE,), start=m.start)

    pref_in: dict[str, list[str]] = {}
    pref_out: dict[str, list[str]] = {}
    for v in network.vertices:
        pref_in[entry[v]] = [tail_node(u) for (u, _w) in network.pref_in[v]]
        pref_out[entry[v]] = list(chain[v])
        pref_in[exit_[v]] = list(chain[v])
        pref_out[exit_[v]] = [head_node(w) for (_u, w) in network.pref_out[v]]

    reduced = Network.create(
        source=network.source, sink=network.sink, vertices=order,
        mappings=mappings, edges=edges, pref_in=pref_in, pref_out=pref_out)
    return Reduction(kind="single_segment", network=reduced, edge_map=edge_map)


# -- cyclic -> acyclic -------------------------------------------------------


def to_acyclic(network: Network) -> Reduction:
    """Rebuild a single-segment network as a three-layer acyclic one.

    Works through the instance translation: the layered expansion of the
    network's instance is an acyclic network whose stable flows restrict
    to stable flows of the original (carrier edges hold the original
    edge values).  Requires finite capacities throughout.
    """
    if not network.is_linear():
        raise ModelError("acyclic reduction expects single-segment mappings; "
                         "run the segment reduction first")
    for e in network.edges:
        if is_infinite(e.capacity):
            raise ModelError("acyclic reduction needs finite capacities")
    instance = scarf_mod.build_scarf(network)
    translation = scarf_mod.scarf_to_network(
        instance, source=network.source, sink=network.sink)
    edge_map = {
        e.key: translation.col_edge[scarf_mod.edge_col(*e.key)]
        for e in network.edges}
    assert is_acyclic(translation.network), "layered output must be acyclic"
    return Reduction(kind="acyclic", network=translation.network,
                     edge_map=edge_map, layered=translation)

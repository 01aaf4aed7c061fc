"""Blocking-path search and stability verification.

A candidate augmentation is tracked symbolically as a germ
``r = scale * eps + offset`` for an arbitrarily small positive eps.
Propagating a germ through a vertex composes it with the local mapping:
the offset moves to the continuous image and the scale picks up the
slope immediately to the right of the landing point.  An edge can carry
the germ iff its slack exceeds the offset (strictly), which guarantees a
concrete eps exists once a complete path is found.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .model import (
    EdgeKey,
    Flow,
    FlowCheck,
    Network,
    ZERO,
    ONE,
    check_flow,
    flow_in,
    flow_out,
    is_infinite,
)


@dataclass(frozen=True)
class Germ:
    scale: Fraction
    offset: Fraction

    def at(self, eps: Fraction) -> Fraction:
        return self.scale * eps + self.offset


@dataclass
class BlockingPath:
    """A path certificate: vertices, per-edge germs and a concrete witness."""

    vertices: tuple[str, ...]
    germs: tuple[Germ, ...]
    epsilon: Fraction
    amounts: tuple[Fraction, ...]

    def describe(self) -> str:
        route = " -> ".join(self.vertices)
        parts = ", ".join(str(a) for a in self.amounts)
        return f"{route} carrying ({parts}) at eps={self.epsilon}"


@dataclass
class StabilityReport:
    verdict: str  # "stable" | "unstable" | "infeasible" | "inconclusive"
    feasibility: FlowCheck
    blocking: BlockingPath | None = None
    max_len: int | None = None

    @property
    def stable(self) -> bool:
        return self.verdict == "stable"


def default_max_len(network: Network) -> int:
    return 2 * (len(network.vertices) + 2)


@dataclass(frozen=True)
class _State:
    vertex: str
    germ: Germ
    path: tuple[str, ...] = field(compare=False)
    germs: tuple[Germ, ...] = field(compare=False)
    # first_edge_floor: when starting from an inner vertex, the first edge
    # must beat this outgoing edge in the start vertex's preference
    first_edge_floor: EdgeKey | None = None
    has_positive: bool = True


def _propagate(network: Network, flow: Flow, v: str, germ: Germ) -> Germ:
    m = network.mapping(v)
    fin = flow_in(network, flow, v)
    fout = flow_out(network, flow, v)
    landed = fin + germ.offset
    if landed == 0:
        # zero stored inflow: the eps of extra inflow jumps the outflow to
        # the top of the multi-valued image before the first slope applies
        return Germ(m.slopes[0] * germ.scale, m.start - fout)
    return Germ(m.right_slope(landed) * germ.scale, m.evaluate(landed) - fout)


def _accepts(network: Network, flow: Flow, arriving: EdgeKey, w: str) -> bool:
    """Can the path legally end at w when entering through ``arriving``?"""
    if w == network.sink:
        return True
    if w == network.source:
        return False
    for key in network.in_edges(w):
        if flow.get(key, ZERO) > 0 and network.prefers_in(w, arriving, key):
            return True
    return False


def _start_states(network: Network, flow: Flow, strict: bool) -> list[_State]:
    starts = [
        _State(network.source, Germ(ONE, ZERO), (network.source,), ())
    ]
    if not strict:
        starts.append(
            _State(network.source, Germ(ZERO, ZERO), (network.source,), (),
                   has_positive=False))
    for v in network.vertices:
        positive = [k for k in network.pref_out.get(v, ()) if flow.get(k, ZERO) > 0]
        if not positive:
            continue
        floor = positive[-1]  # least preferred outgoing edge with positive flow
        starts.append(_State(v, Germ(ONE, ZERO), (v,), (), first_edge_floor=floor))
        if not strict:
            starts.append(_State(v, Germ(ZERO, ZERO), (v,), (),
                                 first_edge_floor=floor, has_positive=False))
    return starts


def find_blocking_path(
    network: Network,
    flow: Flow,
    max_len: int | None = None,
    strict_components: bool = True,
) -> tuple[str, BlockingPath | None]:
    """Search for a blocking path; returns (status, certificate).

    status is "blocked", "none" or "inconclusive".  The search is a BFS
    over (vertex, germ) states, so a returned certificate has minimum
    vertex count.  ``max_len`` bounds the path length in vertices
    (default 2*(inner vertices + 2)); if the bound cuts off live states
    the answer "none" degrades to "inconclusive".

    With ``strict_components=False`` every carried amount only needs to
    be nonnegative (at least one positive): paths may ride zero germs
    through saturated regions and activate at a vertex whose outflow sits
    strictly below its pseudo starting point.
    """
    if max_len is None:
        max_len = default_max_len(network)
    queue: deque[_State] = deque()
    seen: set[tuple] = set()
    truncated = False

    for state in _start_states(network, flow, strict_components):
        marker = (state.vertex, state.germ, state.first_edge_floor, state.has_positive)
        if marker not in seen:
            seen.add(marker)
            queue.append(state)

    while queue:
        state = queue.popleft()
        v = state.vertex
        out_keys = network.out_edges(v)
        if len(state.path) >= max_len:
            if any(_carries(state.germ, _slack(network, flow, k)) for k in out_keys):
                truncated = True
            continue
        for key in out_keys:
            if state.first_edge_floor is not None and not network.prefers_out(
                    v, key, state.first_edge_floor):
                continue
            slack = _slack(network, flow, key)
            if not _carries(state.germ, slack):
                continue
            w = key[1]
            germs = state.germs + (state.germ,)
            path = state.path + (w,)
            positive = state.has_positive or state.germ.scale > 0 or state.germ.offset > 0
            if positive and _accepts(network, flow, key, w):
                return "blocked", _certify(network, flow, path, germs)
            if w == network.sink or w == network.source:
                continue
            for nxt in _successor_germs(network, flow, w, state.germ):
                marker = (w, nxt, None, positive or nxt.scale > 0)
                if marker in seen:
                    continue
                seen.add(marker)
                queue.append(_State(w, nxt, path, germs,
                                    has_positive=positive or nxt.scale > 0))
    return ("inconclusive" if truncated else "none"), None


def _slack(network: Network, flow: Flow, key: EdgeKey):
    cap = network.capacity(key)
    if is_infinite(cap):
        return INF_SLACK
    return cap - flow.get(key, ZERO)


INF_SLACK = float("inf")


def _carries(germ: Germ, slack) -> bool:
    if isinstance(slack, float):
        return True
    if germ.scale > 0 or germ.offset > 0:
        return germ.offset < slack
    return slack >= 0  # zero germ rides any edge


def _successor_germs(network: Network, flow: Flow, w: str,
                     germ: Germ) -> list[Germ]:
    if germ.scale > 0 or germ.offset > 0:
        return [_propagate(network, flow, w, germ)]
    # zero germ: stays zero, and may activate where the vertex can emit
    # spontaneously (zero inflow, outflow strictly below the pseudo start);
    # zero germs only exist when strict_components is off
    result = [Germ(ZERO, ZERO)]
    m = network.mapping(w)
    if flow_in(network, flow, w) == 0 and flow_out(network, flow, w) < m.start:
        result.append(Germ(ONE, ZERO))
    return result


def _certify(network: Network, flow: Flow, path: tuple[str, ...],
             germs: tuple[Germ, ...]) -> BlockingPath:
    """Pick a concrete eps and verify the path definition exactly."""
    margins: list[Fraction] = []
    for i, germ in enumerate(germs):
        key = (path[i], path[i + 1])
        slack = _slack(network, flow, key)
        if germ.scale > 0 and not isinstance(slack, float):
            margins.append((slack - germ.offset) / germ.scale)
    for i in range(1, len(path) - 1):
        v = path[i]
        incoming = germs[i - 1]
        m = network.mapping(v)
        fin = flow_in(network, flow, v)
        landed = fin + incoming.offset
        if incoming.scale > 0:
            nxt = m.next_breakpoint_above(landed)
            if nxt is not None:
                margins.append((nxt - landed) / incoming.scale)
        if landed == 0 and incoming.scale == 0:
            # activation on a zero germ: the vertex inflow stays zero, so
            # the emitted amount must fit the multi-valued image [0, start]
            outgoing = germs[i]
            headroom = m.start - flow_out(network, flow, v)
            if outgoing.scale > 0:
                margins.append((headroom - outgoing.offset) / outgoing.scale)
    eps = Fraction(1)
    if margins:
        eps = min(min(margins) / 2, Fraction(1))
    amounts = tuple(g.at(eps) for g in germs)
    _verify_certificate(network, flow, path, amounts)
    return BlockingPath(vertices=path, germs=germs, epsilon=eps, amounts=amounts)


def _verify_certificate(network: Network, flow: Flow, path: tuple[str, ...],
                        amounts: tuple[Fraction, ...]) -> None:
    assert any(a > 0 for a in amounts), "carried amounts must not all vanish"
    for i, amount in enumerate(amounts):
        key = (path[i], path[i + 1])
        slack = _slack(network, flow, key)
        assert amount >= 0, "carried amounts are nonnegative"
        assert isinstance(slack, float) or amount <= slack, "capacity violated"
    for i in range(1, len(path) - 1):
        v = path[i]
        m = network.mapping(v)
        fin = flow_in(network, flow, v) + amounts[i - 1]
        fout = flow_out(network, flow, v) + amounts[i]
        if fin > 0:
            assert fout == m.evaluate(fin), "mapping balance violated on the path"
        else:
            assert 0 <= fout <= m.start, "multi-valued balance violated on the path"
    last = path[-1]
    if last != network.sink:
        arriving = (path[-2], path[-1])
        ok = any(
            flow.get(k, ZERO) > 0 and network.prefers_in(last, arriving, k)
            for k in network.in_edges(last))
        assert ok, "terminal vertex does not prefer the arriving edge"
    first = path[0]
    if first != network.source:
        first_edge = (path[0], path[1])
        ok = any(
            flow.get(k, ZERO) > 0 and network.prefers_out(first, first_edge, k)
            for k in network.out_edges(first))
        assert ok, "start vertex does not prefer the departing edge"


def is_stable(
    network: Network,
    flow: Flow,
    max_len: int | None = None,
    strict_components: bool = True,
) -> StabilityReport:
    """Feasibility check plus blocking-path search."""
    feas = check_flow(network, flow)
    if not feas.ok:
        return StabilityReport("infeasible", feas)
    status, certificate = find_blocking_path(
        network, flow, max_len=max_len, strict_components=strict_components)
    verdict = {"blocked": "unstable", "none": "stable",
               "inconclusive": "inconclusive"}[status]
    return StabilityReport(verdict, feas, certificate,
                           max_len if max_len is not None
                           else default_max_len(network))

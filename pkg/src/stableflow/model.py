"""Core data model: vertex mappings, networks, flows, feasibility checks.

All quantities are exact rationals (`fractions.Fraction`).  The single
exception is edge capacity, which may be `float("inf")`; infinity never
appears in a flow value, only as an absorbing bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping as TMapping, Sequence, Union

Rational = Fraction
Capacity = Union[Fraction, float]  # float only ever holds +inf
EdgeKey = tuple[str, str]

INFINITE: float = float("inf")

ZERO = Fraction(0)
ONE = Fraction(1)


def is_infinite(value: Capacity) -> bool:
    return isinstance(value, float)


def as_rational(value: Union[int, str, Fraction]) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational value")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def as_capacity(value: Union[int, str, float, Fraction]) -> Capacity:
    if isinstance(value, float):
        if value == INFINITE:
            return INFINITE
        raise TypeError("finite capacities must be exact rationals, not floats")
    if isinstance(value, str) and value.strip() in ("inf", "infinity"):
        return INFINITE
    return as_rational(value)


class ModelError(ValueError):
    """Raised when a mapping, network or flow violates a structural rule."""


@dataclass(frozen=True)
class PLMapping:
    """A monotone piecewise-linear inflow->outflow mapping.

    ``slopes`` are the per-segment slopes a_1..a_k (all positive),
    ``start`` is the pseudo starting point b >= 0 (the image of zero
    inflow is the whole interval [0, b]), and ``breakpoints`` are the
    interior segment borders 0 < c_1 < ... < c_{k-1}.  The implicit
    outer borders are c_0 = 0 and c_k = infinity.
    """

    slopes: tuple[Fraction, ...]
    start: Fraction = ZERO
    breakpoints: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "slopes", tuple(as_rational(a) for a in self.slopes))
        object.__setattr__(self, "start", as_rational(self.start))
        object.__setattr__(
            self, "breakpoints", tuple(as_rational(c) for c in self.breakpoints)
        )
        if not self.slopes:
            raise ModelError("a mapping needs at least one segment")
        if any(a <= 0 for a in self.slopes):
            raise ModelError("segment slopes must be positive")
        if self.start < 0:
            raise ModelError("the pseudo starting point must be nonnegative")
        if len(self.breakpoints) != len(self.slopes) - 1:
            raise ModelError(
                f"{len(self.slopes)} segments need exactly "
                f"{len(self.slopes) - 1} interior breakpoints"
            )
        previous = ZERO
        for c in self.breakpoints:
            if c <= previous:
                raise ModelError("breakpoints must be strictly increasing and positive")
            previous = c

    @property
    def segment_count(self) -> int:
        return len(self.slopes)

    def classify(self) -> str:
        """Return 'linear', 'convex' or 'general'.

        'linear' means a single segment; 'convex' means strictly
        increasing slopes (the max-of-lines form exists); 'general' is
        everything else.
        """
        if len(self.slopes) == 1:
            return "linear"
        if all(a < b for a, b in zip(self.slopes, self.slopes[1:])):
            return "convex"
        return "general"

    def segment_borders(self) -> tuple[Fraction, ...]:
        """Interior borders plus the leading zero: c_0..c_{k-1}."""
        return (ZERO,) + self.breakpoints

    def value_at_border(self, index: int) -> Fraction:
        """g(c_index) under the continuous reading, g(c_0) = start."""
        value = self.start
        borders = self.segment_borders()
        for i in range(index):
            upper = borders[i + 1]
            value += self.slopes[i] * (upper - borders[i])
        return value

    def evaluate(self, x: Capacity) -> Capacity:
        """Continuous evaluation; at x = 0 returns the upper image bound.

        The image of zero inflow is the interval [0, start]; callers
        that need the multi-valued rule (feasibility checks) handle the
        zero case themselves.  Infinity maps to infinity.
        """
        if is_infinite(x):
            return INFINITE
        x = as_rational(x)
        if x < 0:
            raise ModelError("mappings are defined on nonnegative inflow only")
        borders = self.segment_borders()
        i = self._segment_of(x)
        return self.slopes[i] * (x - borders[i]) + self.value_at_border(i)

    def inverse(self, y: Capacity) -> Capacity:
        """Generalized inverse: 0 for y <= start, exact preimage above."""
        if is_infinite(y):
            return INFINITE
        y = as_rational(y)
        if y < 0:
            raise ModelError("outflow values are nonnegative")
        if y <= self.start:
            return ZERO
        borders = self.segment_borders()
        # segment i covers the value range (g(c_i), g(c_{i+1})], the last
        # one unbounded above
        for i in range(len(self.slopes)):
            if i == len(self.slopes) - 1 or y <= self.value_at_border(i + 1):
                return borders[i] + (y - self.value_at_border(i)) / self.slopes[i]
        raise AssertionError("unreachable")

    def right_slope(self, x: Fraction) -> Fraction:
        """Slope immediately to the right of x (next segment at a border)."""
        x = as_rational(x)
        if x < 0:
            raise ModelError("mappings are defined on nonnegative inflow only")
        for i, c in enumerate(self.breakpoints):
            if x < c:
                return self.slopes[i]
        return self.slopes[-1]

    def next_breakpoint_above(self, x: Fraction) -> Fraction | None:
        """Smallest interior breakpoint strictly greater than x, if any."""
        for c in self.breakpoints:
            if c > x:
                return c
        return None

    def segment_lines(self) -> list[tuple[Fraction, Fraction]]:
        """Per-segment line coefficients (a_i, b_i) with g_i(x) = a_i x + b_i.

        For convex mappings the whole map is max_i g_i(x) on positive
        inflow; the first intercept always equals the pseudo starting
        point.
        """
        borders = self.segment_borders()
        lines = []
        for i, a in enumerate(self.slopes):
            intercept = self.value_at_border(i) - a * borders[i]
            lines.append((a, intercept))
        return lines

    def _segment_of(self, x: Fraction) -> int:
        """Index of the segment owning x: segment i covers (c_i, c_{i+1}]."""
        if x == 0:
            return 0
        for i, c in enumerate(self.breakpoints):
            if x <= c:
                return i
        return len(self.slopes) - 1


IDENTITY = PLMapping(slopes=(ONE,))


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    capacity: Capacity

    @property
    def key(self) -> EdgeKey:
        return (self.tail, self.head)


@dataclass(frozen=True)
class Network:
    """A directed capacitated network with one mapping per inner vertex.

    ``vertices`` excludes the source and the sink and fixes the
    declaration order used for all deterministic tie-breaks.  Preference
    tuples run from most to least preferred and must cover exactly the
    incident edges of each inner vertex.
    """

    source: str
    sink: str
    vertices: tuple[str, ...]
    mappings: TMapping[str, PLMapping]
    edges: tuple[Edge, ...]
    pref_in: TMapping[str, tuple[EdgeKey, ...]]
    pref_out: TMapping[str, tuple[EdgeKey, ...]]

    def __post_init__(self) -> None:
        if self.source == self.sink:
            raise ModelError("source and sink must differ")
        names = set(self.vertices)
        if len(names) != len(self.vertices):
            raise ModelError("duplicate vertex id")
        if self.source in names or self.sink in names:
            raise ModelError("source/sink cannot appear in the vertex list")
        if set(self.mappings) != names:
            raise ModelError("mappings must cover exactly the inner vertices")
        seen: set[EdgeKey] = set()
        for e in self.edges:
            if e.tail == e.head:
                raise ModelError(f"self-loop at {e.tail!r}")
            if e.key in seen:
                raise ModelError(f"parallel edge {e.tail!r}->{e.head!r}")
            seen.add(e.key)
            if e.tail == self.sink:
                raise ModelError("the sink has no outgoing edges")
            if e.head == self.source:
                raise ModelError("the source has no incoming edges")
            for endpoint in (e.tail, e.head):
                if endpoint not in names and endpoint not in (self.source, self.sink):
                    raise ModelError(f"edge endpoint {endpoint!r} is not declared")
            if not is_infinite(e.capacity) and e.capacity < 0:
                raise ModelError("capacities are nonnegative")
        for v in self.vertices:
            want_in = [e.key for e in self.edges if e.head == v]
            want_out = [e.key for e in self.edges if e.tail == v]
            got_in = self.pref_in.get(v, ())
            got_out = self.pref_out.get(v, ())
            if sorted(got_in) != sorted(want_in):
                raise ModelError(f"incoming preference list of {v!r} is not a "
                                 f"permutation of its incoming edges")
            if sorted(got_out) != sorted(want_out):
                raise ModelError(f"outgoing preference list of {v!r} is not a "
                                 f"permutation of its outgoing edges")

    # -- construction ----------------------------------------------------

    @classmethod
    def create(
        cls,
        source: str,
        sink: str,
        vertices: Sequence[str] = (),
        mappings: TMapping[str, PLMapping] | None = None,
        edges: Iterable[tuple] = (),
        pref_in: TMapping[str, Sequence[str]] | None = None,
        pref_out: TMapping[str, Sequence[str]] | None = None,
    ) -> "Network":
        """Build a network from plain data.

        ``edges`` holds (tail, head, capacity) triples.  Preferences are
        given as neighbour-id sequences (most preferred first) and may be
        omitted for vertices with at most one incident edge on that side.
        Missing mappings default to the identity.
        """
        vertices = tuple(vertices)
        mapping_table = {v: (mappings or {}).get(v, IDENTITY) for v in vertices}
        edge_objs = tuple(Edge(t, h, as_capacity(c)) for t, h, c in edges)
        by_head: dict[str, list[EdgeKey]] = {v: [] for v in vertices}
        by_tail: dict[str, list[EdgeKey]] = {v: [] for v in vertices}
        for e in edge_objs:
            if e.head in by_head:
                by_head[e.head].append(e.key)
            if e.tail in by_tail:
                by_tail[e.tail].append(e.key)

        def resolve(v, given, incident, side):
            if given is None:
                if len(incident) > 1:
                    raise ModelError(
                        f"{v!r} has {len(incident)} {side} edges; an explicit "
                        f"preference order is required")
                return tuple(incident)
            order = list(given)
            if side == "incoming":
                keys = [(u, v) for u in order]
            else:
                keys = [(v, w) for w in order]
            return tuple(keys)

        pin = {v: resolve(v, (pref_in or {}).get(v), by_head[v], "incoming")
               for v in vertices}
        pout = {v: resolve(v, (pref_out or {}).get(v), by_tail[v], "outgoing")
                for v in vertices}
        return cls(source=source, sink=sink, vertices=vertices,
                   mappings=mapping_table, edges=edge_objs,
                   pref_in=pin, pref_out=pout)

    # -- queries ----------------------------------------------------------

    def edge(self, key: EdgeKey) -> Edge:
        for e in self.edges:
            if e.key == key:
                return e
        raise KeyError(key)

    def capacity(self, key: EdgeKey) -> Capacity:
        return self._capacity_table()[key]

    def _capacity_table(self) -> dict[EdgeKey, Capacity]:
        table = getattr(self, "_caps", None)
        if table is None:
            table = {e.key: e.capacity for e in self.edges}
            object.__setattr__(self, "_caps", table)
        return table

    def in_edges(self, v: str) -> list[EdgeKey]:
        return [e.key for e in self.edges if e.head == v]

    def out_edges(self, v: str) -> list[EdgeKey]:
        return [e.key for e in self.edges if e.tail == v]

    def mapping(self, v: str) -> PLMapping:
        return self.mappings[v]

    def in_rank(self, v: str, key: EdgeKey) -> int:
        """Position of an incoming edge in v's preference (0 = best)."""
        return self.pref_in[v].index(key)

    def out_rank(self, v: str, key: EdgeKey) -> int:
        return self.pref_out[v].index(key)

    def prefers_in(self, v: str, a: EdgeKey, b: EdgeKey) -> bool:
        """True when v strictly prefers incoming edge a over b."""
        return self.in_rank(v, a) < self.in_rank(v, b)

    def prefers_out(self, v: str, a: EdgeKey, b: EdgeKey) -> bool:
        return self.out_rank(v, a) < self.out_rank(v, b)

    def is_linear(self) -> bool:
        return all(m.segment_count == 1 for m in self.mappings.values())


Flow = dict  # EdgeKey -> Fraction


def zero_flow(network: Network) -> Flow:
    return {e.key: ZERO for e in network.edges}


def flow_in(network: Network, flow: Flow, v: str) -> Fraction:
    return sum((flow.get(k, ZERO) for k in network.in_edges(v)), ZERO)


def flow_out(network: Network, flow: Flow, v: str) -> Fraction:
    return sum((flow.get(k, ZERO) for k in network.out_edges(v)), ZERO)


def flow_value(network: Network, flow: Flow) -> Fraction:
    """Total amount leaving the source."""
    return flow_out(network, flow, network.source)


@dataclass
class FlowCheck:
    """Outcome of a feasibility check, with human-readable violations."""

    edge_violations: list[str] = field(default_factory=list)
    balance_violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.edge_violations and not self.balance_violations

    def messages(self) -> list[str]:
        return self.edge_violations + self.balance_violations


def check_flow(network: Network, flow: Flow) -> FlowCheck:
    """Verify capacity bounds and the mapping balance rule at every vertex.

    Zero inflow permits any outflow in [0, start]; positive inflow pins
    the outflow to the mapping value exactly.
    """
    report = FlowCheck()
    keys = {e.key for e in network.edges}
    for key in flow:
        if key not in keys:
            report.edge_violations.append(f"flow on unknown edge {key[0]}->{key[1]}")
    for e in network.edges:
        value = flow.get(e.key, ZERO)
        if not isinstance(value, Fraction):
            report.edge_violations.append(
                f"flow on {e.tail}->{e.head} is not an exact rational")
            continue
        if value < 0:
            report.edge_violations.append(f"negative flow on {e.tail}->{e.head}")
        elif not is_infinite(e.capacity) and value > e.capacity:
            report.edge_violations.append(
                f"flow {value} exceeds capacity {e.capacity} on {e.tail}->{e.head}")
    for v in network.vertices:
        fin = flow_in(network, flow, v)
        fout = flow_out(network, flow, v)
        m = network.mapping(v)
        if fin > 0:
            expected = m.evaluate(fin)
            if fout != expected:
                report.balance_violations.append(
                    f"at {v}: inflow {fin} demands outflow {expected}, got {fout}")
        else:
            if not (0 <= fout <= m.start):
                report.balance_violations.append(
                    f"at {v}: zero inflow allows outflow in [0, {m.start}], got {fout}")
    return report

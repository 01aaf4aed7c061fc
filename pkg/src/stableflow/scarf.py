"""Scarf-style instances: build, check dominance, translate flows.

An instance is a nonnegative matrix A, row bounds b, and one strict
preference order per row over the columns that row touches.  A feasible
point dominates a column j when some row i is tight, touches j, and
ranks every other active column it touches above j.  Stable flows on
convex-mapping networks correspond to feasible points dominating every
column; both directions of that translation live here, as does the
reverse construction that turns a single-segment instance back into a
three-layer acyclic network.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .model import (
    Capacity,
    EdgeKey,
    Flow,
    INFINITE,
    Network,
    PLMapping,
    ZERO,
    ONE,
    ModelError,
    flow_in,
    flow_out,
    is_infinite,
)

Label = tuple  # ("edge", tail, head) | ("slack1", v) | ("slack2", v)
RowLabel = tuple  # ("edge", tail, head) | ("seg", v, i) | ("vertex", v)


def edge_col(tail: str, head: str) -> Label:
    return ("edge", tail, head)


def slack_col(v: str, which: int) -> Label:
    return (f"slack{which}", v)


@dataclass(frozen=True)
class ScarfInstance:
    rows: tuple[RowLabel, ...]
    cols: tuple[Label, ...]
    bounds: tuple[Fraction, ...]
    matrix: tuple[dict, ...]  # per row: {col index: positive Fraction}
    prefs: tuple[tuple[int, ...], ...]  # per row: col indices, best first

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.bounds) or len(self.rows) != len(self.matrix):
            raise ModelError("row count mismatch")
        if len(self.rows) != len(self.prefs):
            raise ModelError("every row needs a preference order")
        for i, row in enumerate(self.matrix):
            touched = set(row)
            if any(coef <= 0 for coef in row.values()):
                raise ModelError("matrix entries are positive where present")
            if set(self.prefs[i]) != touched:
                raise ModelError(
                    f"row {self.rows[i]} preference order must cover exactly "
                    f"its positive columns")

    def col_index(self, label: Label) -> int:
        return self.cols.index(label)

    def row_index(self, label: RowLabel) -> int:
        return self.rows.index(label)

    def entry(self, i: int, j: int) -> Fraction:
        return self.matrix[i].get(j, ZERO)

    def row_value(self, i: int, point: list[Fraction]) -> Fraction:
        return sum((coef * point[j] for j, coef in self.matrix[i].items()), ZERO)

    def ranks_above(self, i: int, a: int, b: int) -> bool:
        """True when row i strictly prefers column a over column b."""
        order = self.prefs[i]
        return order.index(a) < order.index(b)


def feasibility_violations(instance: ScarfInstance, point: list[Fraction]) -> list[str]:
    issues = []
    if len(point) != len(instance.cols):
        return [f"point has {len(point)} entries, instance has "
                f"{len(instance.cols)} columns"]
    for j, value in enumerate(point):
        if value < 0:
            issues.append(f"negative value on column {instance.cols[j]}")
    for i in range(len(instance.rows)):
        lhs = instance.row_value(i, point)
        if lhs > instance.bounds[i]:
            issues.append(
                f"row {instance.rows[i]}: {lhs} exceeds bound {instance.bounds[i]}")
    return issues


def dominating_row(instance: ScarfInstance, point: list[Fraction],
                   j: int) -> int | None:
    """First row certifying that ``point`` dominates column j, if any."""
    for i in range(len(instance.rows)):
        if instance.entry(i, j) <= 0:
            continue
        if instance.row_value(i, point) != instance.bounds[i]:
            continue
        if all(instance.ranks_above(i, k, j)
               for k in instance.matrix[i]
               if k != j and point[k] > 0):
            return i
    return None


def undominated_columns(instance: ScarfInstance,
                        point: list[Fraction]) -> list[Label]:
    return [instance.cols[j] for j in range(len(instance.cols))
            if dominating_row(instance, point, j) is None]


def vertex_bound(network: Network, v: str) -> Fraction:
    """The strict row bound q(v): above all incident capacity sums and b_v."""
    cap_in = ZERO
    for key in network.in_edges(v):
        cap = network.capacity(key)
        if is_infinite(cap):
            raise ModelError(f"infinite capacity into {v!r}; bounds undefined")
        cap_in += cap
    cap_out = ZERO
    for key in network.out_edges(v):
        cap = network.capacity(key)
        if is_infinite(cap):
            raise ModelError(f"infinite capacity out of {v!r}; bounds undefined")
        cap_out += cap
    return max(cap_in, cap_out, network.mapping(v).start) + 1


def build_scarf(network: Network) -> ScarfInstance:
    """Translate a convex-mapping network into an instance.

    Requires every mapping to have strictly increasing slopes (a single
    segment qualifies) and every capacity to be finite.
    """
    for v in network.vertices:
        if network.mapping(v).classify() == "general":
            raise ModelError(
                f"mapping at {v!r} is not convex; reduce to single segments first")
    for e in network.edges:
        if is_infinite(e.capacity):
            raise ModelError("instances need finite capacities")

    cols: list[Label] = [edge_col(*e.key) for e in network.edges]
    for v in network.vertices:
        cols.append(slack_col(v, 1))
        cols.append(slack_col(v, 2))
    col_of = {label: j for j, label in enumerate(cols)}

    rows: list[RowLabel] = []
    bounds: list[Fraction] = []
    matrix: list[dict] = []
    prefs: list[tuple[int, ...]] = []

    for e in network.edges:
        rows.append(("edge",) + e.key)
        bounds.append(e.capacity)
        j = col_of[edge_col(*e.key)]
        matrix.append({j: ONE})
        prefs.append((j,))

    for v in network.vertices:
        q = vertex_bound(network, v)
        lines = network.mapping(v).segment_lines()
        s1 = col_of[slack_col(v, 1)]
        s2 = col_of[slack_col(v, 2)]
        for i, (slope, intercept) in enumerate(lines, start=1):
            rows.append(("seg", v, i))
            bounds.append(q - intercept)
            row = {col_of[edge_col(*key)]: slope for key in network.in_edges(v)}
            row[s1] = ONE
            row[s2] = ONE
            matrix.append(row)
            order = [s1] + [col_of[edge_col(*key)] for key in network.pref_in[v]] + [s2]
            prefs.append(tuple(order))

    for v in network.vertices:
        q = vertex_bound(network, v)
        s1 = col_of[slack_col(v, 1)]
        s2 = col_of[slack_col(v, 2)]
        rows.append(("vertex", v))
        bounds.append(q)
        row = {col_of[edge_col(*key)]: ONE for key in network.out_edges(v)}
        row[s1] = ONE
        row[s2] = ONE
        matrix.append(row)
        order = [s2] + [col_of[edge_col(*key)] for key in network.pref_out[v]] + [s1]
        prefs.append(tuple(order))

    return ScarfInstance(tuple(rows), tuple(cols), tuple(bounds),
                         tuple(matrix), tuple(prefs))


def _smallest_maximizing_segment(mapping: PLMapping, x: Fraction) -> int:
    """1-based index of the first segment line attaining max_i (a_i x + b_i)."""
    lines = mapping.segment_lines()
    values = [a * x + b for a, b in lines]
    best = max(values)
    return values.index(best) + 1


def flow_to_scarf(network: Network, flow: Flow,
                  instance: ScarfInstance | None = None) -> list[Fraction]:
    """Point with the same edge coordinates as ``flow``.

    For a stable feasible flow the result is feasible and dominates every
    column (use ``undominated_columns`` to verify; failures are how
    instability shows up here).  Each vertex parks its whole slack on one
    side: the in-side column when ``_wants_in_side_slack`` selects it,
    the out-side column otherwise.  The in-side choice makes the active
    segment row bind; the out-side choice makes the vertex row bind;
    whenever the outflow matches the mapping both rows bind at once.
    """
    if instance is None:
        instance = build_scarf(network)
    point = [ZERO] * len(instance.cols)
    for e in network.edges:
        point[instance.col_index(edge_col(*e.key))] = flow.get(e.key, ZERO)

    in_side = _wants_in_side_slack(network, flow)
    for v in network.vertices:
        q = vertex_bound(network, v)
        m = network.mapping(v)
        fin = flow_in(network, flow, v)
        fout = flow_out(network, flow, v)
        s1 = instance.col_index(slack_col(v, 1))
        s2 = instance.col_index(slack_col(v, 2))

        if v in in_side:
            i = _smallest_maximizing_segment(m, fin)
            slope, intercept = m.segment_lines()[i - 1]
            point[s1] = q - slope * fin - intercept
            point[s2] = ZERO
        else:
            point[s1] = ZERO
            point[s2] = q - fout
    return point


def _is_saturated(network: Network, flow: Flow, key: EdgeKey) -> bool:
    cap = network.capacity(key)
    return not is_infinite(cap) and flow.get(key, ZERO) >= cap


def _tail_would_reroute(network: Network, flow: Flow, key: EdgeKey) -> bool:
    """The tail of ``key`` sends positive flow it likes less, or is s."""
    u = key[0]
    if u == network.source:
        return True
    return any(flow.get(other, ZERO) > 0 and network.prefers_out(u, key, other)
               for other in network.out_edges(u))


def _wants_in_side_slack(network: Network, flow: Flow) -> set[str]:
    """Vertices whose slack must sit in their first (in-side) column.

    Seeds are heads of unsaturated edges whose tail would reroute onto
    them, plus vertices resting strictly inside their zero-inflow
    window (there the vertex row cannot bind at all).  The duty then
    propagates forward across unsaturated edges: a vertex carrying
    in-side slack has that column active but ranked last in its vertex
    row, so the row certifies none of its unsaturated out-edges and
    each head must provide the certificate through its segment row
    instead.
    """
    inner = set(network.vertices)
    chosen: set[str] = set()
    for e in network.edges:
        if e.key[1] in inner and not _is_saturated(network, flow, e.key) \
                and _tail_would_reroute(network, flow, e.key):
            chosen.add(e.key[1])
    for v in network.vertices:
        fin = flow_in(network, flow, v)
        fout = flow_out(network, flow, v)
        if fin == 0 and fout < network.mapping(v).start:
            chosen.add(v)
    frontier = list(chosen)
    while frontier:
        v = frontier.pop()
        for key in network.out_edges(v):
            w = key[1]
            if w in inner and w not in chosen \
                    and not _is_saturated(network, flow, key):
                chosen.add(w)
                frontier.append(w)
    return chosen


def scarf_to_flow(network: Network, instance: ScarfInstance,
                  point: list[Fraction]) -> Flow:
    """Read the edge coordinates of a point as a flow on the network."""
    flow = {}
    for e in network.edges:
        flow[e.key] = point[instance.col_index(edge_col(*e.key))]
    return flow


# ---------------------------------------------------------------------------
# Reverse construction: single-segment instance -> three-layer acyclic network
# ---------------------------------------------------------------------------


@dataclass
class LayeredTranslation:
    """A three-layer acyclic network plus the column/edge correspondence.

    ``col_edge`` maps every instance column to the reduced edge carrying
    its value; ``edge_routes`` lists the one- or two-edge route a network
    edge expands into (two when the head applies a non-identity factor).
    """

    instance: ScarfInstance
    network: Network
    col_edge: dict = field(default_factory=dict)
    edge_routes: dict = field(default_factory=dict)  # edge label -> edge keys
    multipliers: dict = field(default_factory=dict)  # edge label -> Fraction
    vertex_nodes: dict = field(default_factory=dict)  # v -> (in, out, m1, m2)
    bounds_by_vertex: dict = field(default_factory=dict)
    starts_by_vertex: dict = field(default_factory=dict)
    source_relay: str | None = None  # node absorbing the old source's edges
    sink_relay: str | None = None


def _instance_shape(instance: ScarfInstance):
    """Vertices, per-vertex data and edge labels of a single-segment instance."""
    vertices = [label[1] for label in instance.cols if label[0] == "slack1"]
    seg_rows: dict[str, list[RowLabel]] = {v: [] for v in vertices}
    for label in instance.rows:
        if label[0] == "seg":
            if label[1] not in seg_rows:
                raise ModelError(f"segment row for unknown vertex {label[1]!r}")
            seg_rows[label[1]].append(label)
    for v, found in seg_rows.items():
        if len(found) != 1:
            raise ModelError(
                f"{v!r} has {len(found)} segments; the layered construction "
                f"needs single-segment instances")
    edges = [label for label in instance.cols if label[0] == "edge"]
    return vertices, edges


def _infer_terminals(instance: ScarfInstance, vertices: list[str],
                     edges: list[Label]) -> tuple[str, str]:
    inner = set(vertices)
    tails = {t for (_, t, _h) in edges if t not in inner}
    heads = {h for (_, _t, h) in edges if h not in inner}
    if len(tails) > 1 or len(heads) > 1 or tails & heads:
        raise ModelError("instance does not describe a single-source network")
    used = inner | tails | heads
    source = next(iter(tails)) if tails else _fresh("s", used)
    sink = next(iter(heads)) if heads else _fresh("t", used | {source})
    return source, sink


def _fresh(base: str, used) -> str:
    name = base
    while name in used:
        name = name + "_"
    return name


def scarf_to_network(instance: ScarfInstance, source: str | None = None,
                     sink: str | None = None) -> LayeredTranslation:
    """Expand a single-segment instance into an acyclic layered network.

    Layer one fans the new source out to one relay per old vertex, layer
    three drains per-vertex relays into the new sink; between them each
    old edge becomes a direct link, or a link through a factor vertex
    when the old head scales its inflow.  Old preferences survive on the
    relays, bracketed by the two slack detours.
    """
    vertices, edges = _instance_shape(instance)
    inferred = _infer_terminals(instance, vertices, edges)
    source = source if source is not None else inferred[0]
    sink = sink if sink is not None else inferred[1]

    q: dict[str, Fraction] = {}
    start: dict[str, Fraction] = {}
    factor: dict[str, Fraction] = {}
    for v in vertices:
        vrow = instance.row_index(("vertex", v))
        srow = instance.row_index(("seg", v, 1))
        q[v] = instance.bounds[vrow]
        start[v] = q[v] - instance.bounds[srow]
        coefs = {instance.entry(srow, instance.col_index(label))
                 for label in edges if label[2] == v}
        if len(coefs) > 1:
            raise ModelError(f"{v!r} scales its incoming edges unevenly")
        factor[v] = coefs.pop() if coefs else ONE

    used = set(vertices) | {source, sink}
    node_out: dict[str, str] = {}
    node_in: dict[str, str] = {}
    node_m1: dict[str, str] = {}
    node_m2: dict[str, str] = {}
    for v in vertices:
        node_out[v] = _fresh(f"{v}_out", used); used.add(node_out[v])
        node_in[v] = _fresh(f"{v}_in", used); used.add(node_in[v])
        node_m1[v] = _fresh(f"{v}_m1", used); used.add(node_m1[v])
        node_m2[v] = _fresh(f"{v}_m2", used); used.add(node_m2[v])

    source_edges = [label for label in edges if label[1] == source]
    sink_edges = [label for label in edges if label[2] == sink]
    source_relay = _fresh(f"{source}_out", used) if source_edges else None
    if source_relay:
        used.add(source_relay)
    sink_relay = _fresh(f"{sink}_in", used) if sink_edges else None
    if sink_relay:
        used.add(sink_relay)

    factor_node: dict[Label, str] = {}
    multiplier: dict[Label, Fraction] = {}
    for label in edges:
        head = label[2]
        multiplier[label] = factor[head] if head in q else ONE
        if multiplier[label] != 1:
            factor_node[label] = _fresh(f"m_{label[1]}_{label[2]}", used)
            used.add(factor_node[label])

    def tail_node(label: Label) -> str:
        u = label[1]
        return source_relay if u == source else node_out[u]

    def head_node(label: Label) -> str:
        w = label[2]
        return sink_relay if w == sink else node_in[w]

    new_vertices: list[str] = []
    if source_relay:
        new_vertices.append(source_relay)
    new_vertices += [node_out[v] for v in vertices]
    new_vertices += [node_in[v] for v in vertices]
    for v in vertices:
        new_vertices += [node_m1[v], node_m2[v]]
    new_vertices += [factor_node[label] for label in edges if label in factor_node]
    if sink_relay:
        new_vertices.append(sink_relay)

    mappings = {name: PLMapping((ONE,)) for name in new_vertices}
    for label, node in factor_node.items():
        mappings[node] = PLMapping((multiplier[label],))

    edge_rows = {label: instance.row_index(("edge", label[1], label[2]))
                 for label in edges}
    cap = {label: instance.bounds[edge_rows[label]] for label in edges}

    new_edges: list[tuple[str, str, Capacity]] = []
    if source_relay:
        new_edges.append((source, source_relay, INFINITE))
    for v in vertices:
        new_edges.append((source, node_out[v], q[v]))
    for v in vertices:
        new_edges.append((node_in[v], sink, q[v] - start[v]))
    edge_routes: dict[Label, tuple[EdgeKey, ...]] = {}
    for label in edges:
        t, h = tail_node(label), head_node(label)
        if label in factor_node:
            mid = factor_node[label]
            new_edges.append((t, mid, cap[label]))
            new_edges.append((mid, h, multiplier[label] * cap[label]))
            edge_routes[label] = ((t, mid), (mid, h))
        else:
            new_edges.append((t, h, cap[label]))
            edge_routes[label] = ((t, h),)
    for v in vertices:
        new_edges.append((node_out[v], node_m1[v], q[v]))
        new_edges.append((node_m1[v], node_in[v], q[v]))
        new_edges.append((node_out[v], node_m2[v], q[v]))
        new_edges.append((node_m2[v], node_in[v], q[v]))
    if sink_relay:
        new_edges.append((sink_relay, sink, INFINITE))

    pref_in: dict[str, list[str]] = {}
    pref_out: dict[str, list[str]] = {}
    for v in vertices:
        vrow = instance.row_index(("vertex", v))
        srow = instance.row_index(("seg", v, 1))
        out_labels = _strip_slacks(instance, vrow, slack_col(v, 2), slack_col(v, 1))
        in_labels = _strip_slacks(instance, srow, slack_col(v, 1), slack_col(v, 2))
        pref_out[node_out[v]] = [node_m2[v]] + [
            edge_routes[lab][0][1] for lab in out_labels] + [node_m1[v]]
        pref_in[node_in[v]] = [node_m1[v]] + [
            edge_routes[lab][-1][0] for lab in in_labels] + [node_m2[v]]
    if source_relay:
        pref_out[source_relay] = [edge_routes[lab][0][1] for lab in source_edges]
    if sink_relay:
        pref_in[sink_relay] = [edge_routes[lab][-1][0] for lab in sink_edges]

    network = Network.create(
        source=source, sink=sink, vertices=new_vertices, mappings=mappings,
        edges=new_edges, pref_in=pref_in, pref_out=pref_out)

    col_edge: dict[Label, EdgeKey] = {}
    for label in edges:
        col_edge[label] = edge_routes[label][0]
    for v in vertices:
        col_edge[slack_col(v, 1)] = (node_m1[v], node_in[v])
        col_edge[slack_col(v, 2)] = (node_out[v], node_m2[v])

    return LayeredTranslation(
        instance=instance, network=network, col_edge=col_edge,
        edge_routes=edge_routes, multipliers=multiplier,
        vertex_nodes={v: (node_in[v], node_out[v], node_m1[v], node_m2[v])
                      for v in vertices},
        bounds_by_vertex=q, starts_by_vertex=start,
        source_relay=source_relay, sink_relay=sink_relay)


def _strip_slacks(instance: ScarfInstance, row: int, first: Label,
                  last: Label) -> list[Label]:
    order = [instance.cols[j] for j in instance.prefs[row]]
    if not order or order[0] != first or order[-1] != last:
        raise ModelError(f"row {instance.rows[row]} does not bracket its "
                         f"preference order with the slack columns")
    return order[1:-1]


def layered_flow_to_scarf(translation: LayeredTranslation,
                          layered_flow: Flow) -> list[Fraction]:
    """Coordinates of a layered flow: read each column's carrier edge."""
    instance = translation.instance
    point = [ZERO] * len(instance.cols)
    for label, key in translation.col_edge.items():
        point[instance.col_index(label)] = layered_flow.get(key, ZERO)
    return point


def scarf_to_layered_flow(translation: LayeredTranslation,
                          point: list[Fraction]) -> Flow:
    """Unique layered flow with the given column coordinates.

    Inverse of ``layered_flow_to_scarf`` on dominating points: relay and
    drain edges are forced by conservation once the carrier edges are
    pinned.
    """
    instance = translation.instance
    network = translation.network
    value = {label: point[instance.col_index(label)]
             for label in translation.col_edge}
    flow: Flow = {}
    vertices, edges = _instance_shape(instance)
    for label in edges:
        route = translation.edge_routes[label]
        flow[route[0]] = value[label]
        if len(route) == 2:
            flow[route[1]] = translation.multipliers[label] * value[label]
    for v in vertices:
        node_in, node_out, m1, m2 = translation.vertex_nodes[v]
        flow[(node_out, m1)] = value[slack_col(v, 1)]
        flow[(m1, node_in)] = value[slack_col(v, 1)]
        flow[(node_out, m2)] = value[slack_col(v, 2)]
        flow[(m2, node_in)] = value[slack_col(v, 2)]
        outgoing = sum((value[lab] for lab in edges if lab[1] == v), ZERO)
        incoming = sum((translation.multipliers[lab] * value[lab]
                        for lab in edges if lab[2] == v), ZERO)
        slack = value[slack_col(v, 1)] + value[slack_col(v, 2)]
        flow[(network.source, node_out)] = outgoing + slack
        flow[(node_in, network.sink)] = incoming + slack
    if translation.source_relay:
        total = sum((value[lab] for lab in edges if lab[1] == network.source), ZERO)
        flow[(network.source, translation.source_relay)] = total
    if translation.sink_relay:
        total = sum((translation.multipliers[lab] * value[lab]
                     for lab in edges if lab[2] == network.sink), ZERO)
        flow[(translation.sink_relay, network.sink)] = total
    return flow

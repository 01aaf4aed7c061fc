"""Plain-text formats for networks, flows, instances and points.

All formats are line-oriented: blank lines and '#' comments are
ignored, every other line starts with a keyword.  Values are exact
rationals ('5', '5/2') and capacities may be 'inf'.  Formatting then
parsing reproduces the object exactly.
"""
from __future__ import annotations

from fractions import Fraction

from .model import (
    Capacity,
    EdgeKey,
    Flow,
    Network,
    PLMapping,
    ZERO,
    as_capacity,
    as_rational,
    is_infinite,
)
from .scarf import ScarfInstance


class DocumentError(ValueError):
    pass


_FORBIDDEN = set(" \t:,=#")


def _check_name(name: str, line_no: int) -> str:
    if not name or any(ch in _FORBIDDEN for ch in name):
        raise DocumentError(f"line {line_no}: invalid identifier {name!r}")
    return name


def format_capacity(value: Capacity) -> str:
    return "inf" if is_infinite(value) else str(value)


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


# -- networks ----------------------------------------------------------------


def format_network(network: Network) -> str:
    out = [f"source {network.source}", f"sink {network.sink}"]
    for v in network.vertices:
        m = network.mapping(v)
        parts = [f"vertex {v}", "slopes " + ",".join(str(a) for a in m.slopes)]
        if m.start != 0:
            parts.append(f"start {m.start}")
        if m.breakpoints:
            parts.append("breaks " + ",".join(str(c) for c in m.breakpoints))
        out.append(" ".join(parts))
    for e in network.edges:
        out.append(f"edge {e.tail} {e.head} {format_capacity(e.capacity)}")
    for v in network.vertices:
        if len(network.pref_in[v]) > 1:
            tails = ",".join(u for (u, _w) in network.pref_in[v])
            out.append(f"prefer-in {v} {tails}")
        if len(network.pref_out[v]) > 1:
            heads = ",".join(w for (_u, w) in network.pref_out[v])
            out.append(f"prefer-out {v} {heads}")
    return "\n".join(out) + "\n"


def parse_network(text: str) -> Network:
    source = sink = None
    vertices: list[str] = []
    mappings: dict[str, PLMapping] = {}
    edges: list[tuple[str, str, Capacity]] = []
    pref_in: dict[str, list[str]] = {}
    pref_out: dict[str, list[str]] = {}
    for no, tokens in _lines(text):
        kind, rest = tokens[0], tokens[1:]
        if kind == "source" or kind == "sink":
            if len(rest) != 1:
                raise DocumentError(f"line {no}: {kind} takes one identifier")
            if kind == "source":
                source = _check_name(rest[0], no)
            else:
                sink = _check_name(rest[0], no)
        elif kind == "vertex":
            if not rest:
                raise DocumentError(f"line {no}: vertex needs a name")
            name = _check_name(rest[0], no)
            slopes: tuple = (Fraction(1),)
            start = ZERO
            breaks: tuple = ()
            position = 1
            while position < len(rest):
                field = rest[position]
                if position + 1 >= len(rest):
                    raise DocumentError(f"line {no}: {field} needs a value")
                value = rest[position + 1]
                if field == "slopes":
                    slopes = tuple(as_rational(s) for s in value.split(","))
                elif field == "start":
                    start = as_rational(value)
                elif field == "breaks":
                    breaks = tuple(as_rational(c) for c in value.split(","))
                else:
                    raise DocumentError(f"line {no}: unknown field {field!r}")
                position += 2
            vertices.append(name)
            mappings[name] = PLMapping(slopes, start, breaks)
        elif kind == "edge":
            if len(rest) != 3:
                raise DocumentError(f"line {no}: edge takes tail, head, capacity")
            tail = _check_name(rest[0], no)
            head = _check_name(rest[1], no)
            edges.append((tail, head, as_capacity(rest[2])))
        elif kind == "prefer-in" or kind == "prefer-out":
            if len(rest) != 2:
                raise DocumentError(f"line {no}: {kind} takes vertex and list")
            name = _check_name(rest[0], no)
            order = [_check_name(item, no) for item in rest[1].split(",")]
            (pref_in if kind == "prefer-in" else pref_out)[name] = order
        elif kind == "map":
            continue  # reduction annotations ride along harmlessly
        else:
            raise DocumentError(f"line {no}: unknown keyword {kind!r}")
    if source is None or sink is None:
        raise DocumentError("a network document needs source and sink lines")
    try:
        return Network.create(source=source, sink=sink, vertices=vertices,
                              mappings=mappings, edges=edges,
                              pref_in=pref_in, pref_out=pref_out)
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def format_reduction_map(edge_map: dict) -> str:
    out = []
    for (tail, head), (rtail, rhead) in edge_map.items():
        out.append(f"map {tail} {head} {rtail} {rhead}")
    return "\n".join(out) + ("\n" if out else "")


def parse_reduction_map(text: str) -> dict:
    edge_map: dict[EdgeKey, EdgeKey] = {}
    for no, tokens in _lines(text):
        if tokens[0] != "map":
            continue
        if len(tokens) != 5:
            raise DocumentError(f"line {no}: map takes four identifiers")
        edge_map[(tokens[1], tokens[2])] = (tokens[3], tokens[4])
    return edge_map


# -- flows -------------------------------------------------------------------


def format_flow(network: Network, flow: Flow) -> str:
    out = []
    for e in network.edges:
        out.append(f"flow {e.tail} {e.head} {flow.get(e.key, ZERO)}")
    return "\n".join(out) + "\n"


def parse_flow(text: str) -> Flow:
    flow: Flow = {}
    for no, tokens in _lines(text):
        if tokens[0] != "flow" or len(tokens) != 4:
            raise DocumentError(f"line {no}: expected 'flow tail head value'")
        key = (tokens[1], tokens[2])
        if key in flow:
            raise DocumentError(f"line {no}: duplicate flow entry for "
                                f"{key[0]}->{key[1]}")
        flow[key] = as_rational(tokens[3])
    return flow


# -- instances and points ----------------------------------------------------


def _format_label(label: tuple) -> str:
    return ":".join(str(part) for part in label)


def _parse_label(text: str, line_no: int) -> tuple:
    parts = text.split(":")
    if parts[0] in ("edge",) and len(parts) == 3:
        return ("edge", parts[1], parts[2])
    if parts[0] in ("slack1", "slack2", "vertex") and len(parts) == 2:
        return (parts[0], parts[1])
    if parts[0] == "seg" and len(parts) == 3:
        return ("seg", parts[1], int(parts[2]))
    raise DocumentError(f"line {line_no}: bad label {text!r}")


def format_instance(instance: ScarfInstance) -> str:
    out = []
    for label in instance.cols:
        out.append(f"col {_format_label(label)}")
    for i, label in enumerate(instance.rows):
        entries = ",".join(
            f"{_format_label(instance.cols[j])}={coef}"
            for j, coef in sorted(instance.matrix[i].items()))
        prefs = ",".join(_format_label(instance.cols[j])
                         for j in instance.prefs[i])
        out.append(f"row {_format_label(label)} bound {instance.bounds[i]} "
                   f"entries {entries} prefs {prefs}")
    return "\n".join(out) + "\n"


def parse_instance(text: str) -> ScarfInstance:
    cols: list[tuple] = []
    rows: list[tuple] = []
    bounds: list[Fraction] = []
    matrix: list[dict] = []
    prefs: list[tuple[int, ...]] = []
    col_index: dict[tuple, int] = {}
    for no, tokens in _lines(text):
        if tokens[0] == "col":
            if len(tokens) != 2:
                raise DocumentError(f"line {no}: col takes one label")
            label = _parse_label(tokens[1], no)
            col_index[label] = len(cols)
            cols.append(label)
        elif tokens[0] == "row":
            if len(tokens) != 8 or tokens[2] != "bound" or \
                    tokens[4] != "entries" or tokens[6] != "prefs":
                raise DocumentError(
                    f"line {no}: expected 'row LABEL bound B entries E prefs P'")
            rows.append(_parse_label(tokens[1], no))
            bounds.append(as_rational(tokens[3]))
            row: dict[int, Fraction] = {}
            for piece in tokens[5].split(","):
                if "=" not in piece:
                    raise DocumentError(f"line {no}: entry {piece!r} needs '='")
                label_text, value = piece.split("=", 1)
                label = _parse_label(label_text, no)
                if label not in col_index:
                    raise DocumentError(f"line {no}: unknown column {label_text!r}")
                row[col_index[label]] = as_rational(value)
            matrix.append(row)
            order = []
            for label_text in tokens[7].split(","):
                label = _parse_label(label_text, no)
                if label not in col_index:
                    raise DocumentError(f"line {no}: unknown column {label_text!r}")
                order.append(col_index[label])
            prefs.append(tuple(order))
        else:
            raise DocumentError(f"line {no}: unknown keyword {tokens[0]!r}")
    try:
        return ScarfInstance(tuple(rows), tuple(cols), tuple(bounds),
                             tuple(matrix), tuple(prefs))
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def format_point(instance: ScarfInstance, point: list[Fraction]) -> str:
    out = []
    for label, value in zip(instance.cols, point):
        out.append(f"value {_format_label(label)} {value}")
    return "\n".join(out) + "\n"


def parse_point(instance: ScarfInstance, text: str) -> list[Fraction]:
    values: dict[tuple, Fraction] = {}
    for no, tokens in _lines(text):
        if tokens[0] != "value" or len(tokens) != 3:
            raise DocumentError(f"line {no}: expected 'value LABEL amount'")
        label = _parse_label(tokens[1], no)
        if label in values:
            raise DocumentError(f"line {no}: duplicate value for {tokens[1]!r}")
        values[label] = as_rational(tokens[2])
    point = []
    for label in instance.cols:
        if label not in values:
            raise DocumentError(f"point is missing column {_format_label(label)}")
        point.append(values.pop(label))
    if values:
        stray = _format_label(next(iter(values)))
        raise DocumentError(f"point names unknown column {stray}")
    return point

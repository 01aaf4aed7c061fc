"""Path-augmenting stable flow solver for acyclic single-segment networks.

Every inner vertex holds a proposal pointer (deferred acceptance): a
proposing vertex offers flow along one outgoing edge, a rejecting vertex
names the positive incoming edge it likes least, a done vertex has given
up entirely.  The pointers form one outgoing helper edge per live
vertex: proposals push along their edge, rejections remove flow from
theirs (traversed backwards).  Each iteration walks helper edges from
the source until it hits the sink, a done vertex whose spontaneous
output absorbs the removal, or a repeated vertex (a cycle with a stem);
exact deltas are then propagated forward and backward so that every
vertex stays balanced, and at least one helper edge saturates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .model import (
    Capacity,
    EdgeKey,
    Flow,
    ModelError,
    Network,
    ONE,
    PLMapping,
    ZERO,
    check_flow,
    flow_in,
    flow_out,
    is_infinite,
    zero_flow,
)
from .reduction import is_acyclic

PROPOSE = "propose"
REJECT = "reject"
DONE = "done"

PUSH = "push"
REMOVE = "remove"


class SolverError(Exception):
    """An internal invariant failed; indicates a bug or bad precondition."""


@dataclass
class VertexState:
    status: str
    edge: EdgeKey | None


@dataclass
class SolverState:
    network: Network
    flow: Flow
    states: dict[str, VertexState]
    iterations: int = 0

    def h_residual(self, u: str) -> Capacity:
        st = self.states[u]
        if st.status == PROPOSE:
            cap = self.network.capacity(st.edge)
            if is_infinite(cap):
                return cap
            return cap - self.flow.get(st.edge, ZERO)
        if st.status == REJECT:
            return self.flow.get(st.edge, ZERO)
        raise SolverError(f"{u!r} is done and has no helper edge")


@dataclass
class WalkStep:
    owner: str
    kind: str  # PUSH | REMOVE
    edge: EdgeKey
    residual: Capacity


@dataclass
class AugmentPlan:
    walk: list[str]
    kind: str  # "path" | "drain" | "cycle"
    deltas: list[Fraction]
    violations: list[str] = field(default_factory=list)
    meet_index: int | None = None
    cycle_entry: Fraction | None = None
    stem_required: Fraction | None = None
    # overflow continuation used by rejection-spiral cycles: extra steps
    # past the walk, with their own deltas (see _plan_spiral)
    tail_steps: list["WalkStep"] = field(default_factory=list)
    tail_deltas: list[Fraction] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations


@dataclass
class SolveResult:
    flow: Flow
    iterations: int
    trace: list[AugmentPlan]

    def path_lengths(self) -> list[int]:
        return [len(plan.walk) for plan in self.trace]


# -- state construction ------------------------------------------------------


def init_state(network: Network, require_acyclic: bool = True) -> SolverState:
    """Fresh all-propose state with every pointer on the favourite edge."""
    if not network.is_linear():
        raise SolverError("the solver handles single-segment mappings only; "
                          "reduce the network first")
    if require_acyclic and not is_acyclic(network):
        raise SolverError("the solver needs an acyclic network; reduce first")
    for v in network.vertices:
        if not network.out_edges(v):
            raise SolverError(f"{v!r} has no outgoing edge; it can never "
                              f"balance positive inflow")
    states: dict[str, VertexState] = {}
    source_edges = network.out_edges(network.source)
    if source_edges:
        states[network.source] = VertexState(PROPOSE, source_edges[0])
    else:
        states[network.source] = VertexState(REJECT, None)
    for v in network.vertices:
        states[v] = VertexState(PROPOSE, network.pref_out[v][0])
    state = SolverState(network=network, flow=zero_flow(network), states=states)
    _residual_sweep(state)
    return state


def snapshot_state(network: Network, flow: Flow,
                   statuses: dict[str, tuple[str, EdgeKey | None]],
                   require_acyclic: bool = False) -> SolverState:
    """Build a mid-run state directly; used by tests and diagnostics."""
    if not network.is_linear():
        raise SolverError("the solver handles single-segment mappings only")
    if require_acyclic and not is_acyclic(network):
        raise SolverError("the solver needs an acyclic network")
    states = {}
    for name, (status, edge) in statuses.items():
        states[name] = VertexState(status, edge)
    return SolverState(network=network, flow=dict(flow), states=states)


# -- walking -----------------------------------------------------------------


def find_walk(state: SolverState) -> tuple[list[str], str]:
    """Follow helper edges from the source.

    Returns (walk, kind) with kind "path" (reached the sink), "drain"
    (reached a done vertex that absorbs a removal into its spontaneous
    output) or "cycle" (a vertex repeated).
    """
    network = state.network
    walk = [network.source]
    seen = {network.source}
    v = network.source
    for _ in range(len(state.states) + 2):
        st = state.states.get(v)
        if st is None:
            raise SolverError(f"walk reached {v!r} which has no state")
        if st.status == DONE:
            return walk, "drain"
        if st.edge is None:
            raise SolverError(f"walk reached {v!r} with no helper edge")
        nxt = st.edge[1] if st.status == PROPOSE else st.edge[0]
        walk.append(nxt)
        if nxt == network.sink:
            return walk, "path"
        if nxt in seen:
            return walk, "cycle"
        seen.add(nxt)
        v = nxt
    raise SolverError("walk exceeded the vertex count without terminating")


def _walk_steps(state: SolverState, walk: list[str]) -> list[WalkStep]:
    steps = []
    for i in range(len(walk) - 1):
        owner = walk[i]
        st = state.states[owner]
        kind = PUSH if st.status == PROPOSE else REMOVE
        steps.append(WalkStep(owner=owner, kind=kind, edge=st.edge,
                              residual=state.h_residual(owner)))
    return steps


# -- delta propagation -------------------------------------------------------


def _forward(mapping: PLMapping, fin: Fraction, fout: Fraction,
             kind_in: str, kind_out: str, d_prev: Capacity) -> Capacity:
    """Delta on the outgoing step forced by d_prev on the incoming step."""
    if kind_in == PUSH and kind_out == PUSH:
        return mapping.evaluate(fin + d_prev) - fout
    if kind_in != kind_out:
        return d_prev
    return fin - mapping.inverse(fout - d_prev)


def _backward(mapping: PLMapping, fin: Fraction, fout: Fraction,
              kind_in: str, kind_out: str, d_next: Fraction) -> Fraction:
    """Delta on the incoming step forced by d_next on the outgoing step."""
    if kind_in == PUSH and kind_out == PUSH:
        return mapping.inverse(fout + d_next) - fin
    if kind_in != kind_out:
        return d_next
    return fout - mapping.evaluate(fin - d_next)


def _vertex_data(state: SolverState, v: str):
    network = state.network
    return (network.mapping(v), flow_in(network, state.flow, v),
            flow_out(network, state.flow, v))


def plan_path(state: SolverState, walk: list[str], kind: str) -> AugmentPlan:
    """Plan a source-to-terminal augmentation (sink or draining vertex)."""
    steps = _walk_steps(state, walk)
    m = len(steps)
    d: list[Capacity] = [ZERO] * m
    d[0] = steps[0].residual
    for i in range(1, m):
        mapping, fin, fout = _vertex_data(state, walk[i])
        value = _forward(mapping, fin, fout, steps[i - 1].kind, steps[i].kind,
                         d[i - 1])
        d[i] = min(value, steps[i].residual)
    if is_infinite(d[m - 1]):
        raise SolverError("augmentation is unbounded; every step has "
                          "infinite headroom")
    for i in range(m - 1, 0, -1):
        mapping, fin, fout = _vertex_data(state, walk[i])
        d[i - 1] = _backward(mapping, fin, fout, steps[i - 1].kind,
                             steps[i].kind, d[i])
    plan = AugmentPlan(walk=walk, kind=kind, deltas=list(d))
    plan.violations = _validate(state, steps, plan.deltas)
    return plan


def plan_cycle(state: SolverState, walk: list[str],
               spiral: bool = True) -> AugmentPlan:
    """Plan an augmentation along a stem plus cycle.

    The cycle is first balanced on its own; the meeting vertex then
    either agrees (self-consistent), or names the stem delta that
    restores its balance.  When the stem cannot deliver that much the
    cycle is shrunk: the entry delta becomes an unknown and the exact
    kink-aware parametric propagation solves for the value whose stem
    requirement equals the stem's maximum.

    A cycle that asks the stem for a negative amount it does not carry
    has outgrown the stem entirely; with ``spiral`` enabled such a plan
    is replaced by a stem-free circulation with a spill route (see
    _plan_spiral).  Disable to inspect the raw requirement."""
    network = state.network
    meet = walk[-1]
    j = walk.index(meet)
    steps = _walk_steps(state, walk)
    m = len(steps)
    d: list[Capacity] = [ZERO] * m

    if is_infinite(steps[j].residual):
        raise SolverError("cycle entry edge has infinite headroom; the "
                          "recycling amount is unbounded")
    d[j] = steps[j].residual
    for i in range(j + 1, m):
        mapping, fin, fout = _vertex_data(state, walk[i])
        value = _forward(mapping, fin, fout, steps[i - 1].kind, steps[i].kind,
                         d[i - 1])
        d[i] = min(value, steps[i].residual)
    if is_infinite(d[m - 1]):
        raise SolverError("cycle carries infinite headroom")
    for i in range(m - 1, j, -1):
        mapping, fin, fout = _vertex_data(state, walk[i])
        d[i - 1] = _backward(mapping, fin, fout, steps[i - 1].kind,
                             steps[i].kind, d[i])

    plan = AugmentPlan(walk=walk, kind="cycle", deltas=list(d), meet_index=j)

    if j == 0:
        # the cycle closes at the source, whose throughput is unconstrained
        plan.cycle_entry = d[j]
        plan.violations = _validate(state, steps, plan.deltas)
        return plan

    mapping, fin, fout = _vertex_data(state, meet)
    din, dout = _meet_shift(steps[j], d[j], steps[m - 1], d[m - 1])
    if _meet_consistent(mapping, fin + din, fout + dout):
        plan.cycle_entry = d[j]
        plan.violations = _validate(state, steps, plan.deltas)
        return plan

    lam = _stem_requirement(mapping, fin + din, fout + dout, steps[j - 1].kind)

    # maximum the stem can deliver, forward only
    cap: list[Capacity] = [ZERO] * j
    cap[0] = steps[0].residual
    for i in range(1, j):
        mapping_i, fin_i, fout_i = _vertex_data(state, walk[i])
        value = _forward(mapping_i, fin_i, fout_i, steps[i - 1].kind,
                         steps[i].kind, cap[i - 1])
        cap[i] = min(value, steps[i].residual)
    deliverable = cap[j - 1]

    if not is_infinite(deliverable) and lam > deliverable:
        theta = _solve_shrink(state, walk, steps, j, deliverable)
        d[j] = theta
        for i in range(j + 1, m):
            mapping_i, fin_i, fout_i = _vertex_data(state, walk[i])
            value = _forward(mapping_i, fin_i, fout_i, steps[i - 1].kind,
                             steps[i].kind, d[i - 1])
            d[i] = min(value, steps[i].residual)
        for i in range(m - 1, j, -1):
            mapping_i, fin_i, fout_i = _vertex_data(state, walk[i])
            d[i - 1] = _backward(mapping_i, fin_i, fout_i, steps[i - 1].kind,
                                 steps[i].kind, d[i])
        mapping, fin, fout = _vertex_data(state, meet)
        din, dout = _meet_shift(steps[j], d[j], steps[m - 1], d[m - 1])
        lam = _stem_requirement(mapping, fin + din, fout + dout,
                                steps[j - 1].kind)

    plan.deltas = list(d)
    plan.cycle_entry = d[j]
    plan.stem_required = lam
    try:
        plan.deltas[j - 1] = lam
        for i in range(j - 1, 0, -1):
            mapping_i, fin_i, fout_i = _vertex_data(state, walk[i])
            plan.deltas[i - 1] = _backward(
                mapping_i, fin_i, fout_i, steps[i - 1].kind, steps[i].kind,
                plan.deltas[i])
    except Exception as exc:  # negative arguments: the stem cannot bend back
        plan.violations = [f"stem propagation failed: {exc}"]
        return _spiral_or(plan, state, walk, steps, j) if spiral else plan
    plan.violations = _validate(state, steps, plan.deltas)
    return _spiral_or(plan, state, walk, steps, j) if spiral else plan


def _spiral_or(plan: AugmentPlan, state: SolverState, walk: list[str],
               steps: list[WalkStep], j: int) -> AugmentPlan:
    """Swap an infeasible negative-stem plan for a spiral plan if any."""
    if plan.feasible or plan.stem_required is None or plan.stem_required >= 0:
        return plan
    spiral = _plan_spiral(state, walk, steps, j)
    if spiral is not None:
        return spiral
    plan.violations = plan.violations + [
        "cycle demands negative stem flow and no single-pass spiral "
        "completion exists; the freeze needs several pointer events at once"]
    return plan


def _probe_affine(state: SolverState, v: str, kind_in: str, kind_out: str,
                  p: Fraction, q: Fraction):
    """Affine response of v's forward rule to a delta p*T + q.

    Two-point probe; the larger point shrinks toward the base whenever it
    leaves the mapping's domain, so a small feasible range still yields
    the local slope.  Returns (slope, offset) in T, or None.
    """
    mapping, fin, fout = _vertex_data(state, v)
    try:
        f0 = _forward(mapping, fin, fout, kind_in, kind_out, q)
    except ModelError:
        return None
    if is_infinite(f0):
        return None
    t = ONE
    for _ in range(64):
        try:
            f1 = _forward(mapping, fin, fout, kind_in, kind_out, p * t + q)
        except ModelError:
            t = t / 2
            continue
        if is_infinite(f1):
            return None
        return (f1 - f0) / t, f0
    return None


def _affine_of(fn):
    """Affinize an exact single-argument callable by a two-point probe."""
    try:
        f0 = fn(ZERO)
    except ModelError:
        return None
    t = ONE
    for _ in range(64):
        try:
            f1 = fn(t)
        except ModelError:
            t = t / 2
            continue
        return (f1 - f0) / t, f0
    return None


def _open_residual(state: SolverState, key: EdgeKey) -> Capacity:
    cap = state.network.capacity(key)
    return cap if is_infinite(cap) else cap - state.flow.get(key, ZERO)


def _follow_pointers(state: SolverState, owner: str, start: EdgeKey,
                     tp: Fraction, tq: Fraction, visited: set[str],
                     used: set[EdgeKey]):
    """Route an amount tp*T + tq along current proposal pointers.

    Starts on ``start`` (owned by ``owner``) and follows each head's own
    pointer until the sink.  Returns (steps, coeffs) or None when the
    route dead-ends, repeats a vertex, or touches an edge twice.
    """
    tail_steps: list[WalkStep] = []
    tail_coeffs: list[tuple[Fraction, Fraction]] = []
    cur = start
    while True:
        if cur in used:
            return None
        used.add(cur)
        tail_steps.append(WalkStep(owner=owner, kind=PUSH, edge=cur,
                                   residual=_open_residual(state, cur)))
        tail_coeffs.append((tp, tq))
        head = cur[1]
        if head == state.network.sink:
            return tail_steps, tail_coeffs
        if head in visited or head == state.network.source:
            return None
        visited.add(head)
        st = state.states.get(head)
        if st is None or st.status != PROPOSE or st.edge is None:
            return None
        got = _probe_affine(state, head, PUSH, PUSH, tp, tq)
        if got is None:
            return None
        tp, tq = got
        owner = head
        cur = st.edge
        if len(tail_steps) > len(state.states) + 2:
            return None


def _spill_candidates(state: SolverState, u: str,
                      after: EdgeKey) -> list[EdgeKey]:
    """Open acceptable out-edges u could still move its pointer to."""
    order = list(state.network.pref_out.get(u, ()))
    if after not in order:
        return []
    return [key for key in order[order.index(after) + 1:]
            if _open_residual(state, key) > 0
            and _acceptable_proposal(state, key)]


def _push_tail(state: SolverState, u: str, candidates: list[EdgeKey],
               sp: Fraction, sq: Fraction, visited: set[str],
               used: set[EdgeKey]):
    """Spill sp*T + sq from u along its next open acceptable edge."""
    for key in candidates:
        if key in used:
            continue
        return _follow_pointers(state, u, key, sp, sq, visited, used)
    return None


def _remove_tail(state: SolverState, u: str, yp: Fraction, yq: Fraction,
                 visited: set[str], used: set[EdgeKey]):
    """Shed yp*T + yq from u's incoming side, cascading like rejections.

    Each vertex on the way removes from the positive incoming edge it
    ranks worst; the removal is absorbed by the source or by a done
    vertex (whose spontaneous output simply drops), or re-routed forward
    by a proposing vertex along its pointer.
    """
    network = state.network
    tail_steps: list[WalkStep] = []
    tail_coeffs: list[tuple[Fraction, Fraction]] = []
    for _ in range(len(state.states) + 2):
        st = state.states.get(u)
        if st is not None and st.status == REJECT and st.edge is not None:
            floor = st.edge
        else:
            positive = [k for k in network.pref_in.get(u, ())
                        if state.flow.get(k, ZERO) > 0 and k not in used]
            floor = positive[-1] if positive else None
        if floor is None or floor in used:
            return None
        used.add(floor)
        tail_steps.append(WalkStep(owner=u, kind=REMOVE, edge=floor,
                                   residual=state.flow.get(floor, ZERO)))
        tail_coeffs.append((yp, yq))
        w = floor[0]
        if w == network.source:
            return tail_steps, tail_coeffs
        if w in visited:
            return None
        visited.add(w)
        wst = state.states.get(w)
        if wst is None or wst.status == DONE:
            return tail_steps, tail_coeffs
        if wst.status == PROPOSE:
            if wst.edge is None:
                return None
            rest = _follow_pointers(state, w, wst.edge, yp, yq, visited, used)
            if rest is None:
                return None
            return tail_steps + rest[0], tail_coeffs + rest[1]
        got = _probe_affine(state, w, REMOVE, REMOVE, yp, yq)
        if got is None:
            return None
        yp, yq = got
        u = w
    return None


def _plan_spiral(state: SolverState, walk: list[str], steps: list[WalkStep],
                 j: int) -> AugmentPlan | None:
    """Resolve a cycle whose feedback outgrows what the stem can absorb.

    Shape: the cycle hands the meeting vertex more than the circulation
    it started, so balancing it would need flow taken back out of the
    stem, beyond what the stem carries.  The loop's actual resting point
    keeps the stem untouched: circulate T, return exactly what the
    meeting vertex can absorb, and spill the surplus from the one
    overfull vertex, either forward along its next open edges or
    backward as rejections down its incoming side.  T is the first bound
    hit, so some edge saturates or empties and the helper graph moves
    on.

    With a rejecting meeting vertex the circulation removes T from its
    floor and the returned flow must equal T; the surplus sits at the
    fork in front of it.  With a proposing meeting vertex the chain
    feeds the full response back into it and the surplus is its own
    excess output beyond the entry push (for instance the jump of its
    zero-inflow window).
    """
    m = len(steps)
    if m - 1 <= j or steps[m - 1].kind != PUSH:
        return None
    meet = walk[j]
    used = {s.edge for s in steps}
    visited = set(walk)

    # circulation amounts as affine functions of the entry amount T; a
    # rejecting meet owns the fork demand separately, a proposing meet
    # folds the whole chain into the returned amount
    last = m - 1 if steps[j].kind == PUSH else m - 2
    coeffs = [(ONE, ZERO)]
    p, q = ONE, ZERO
    for i in range(j + 1, last + 1):
        got = _probe_affine(state, walk[i], steps[i - 1].kind, steps[i].kind,
                            p, q)
        if got is None:
            return None
        p, q = got
        coeffs.append(got)

    if steps[j].kind == REMOVE:
        fork = walk[m - 1]
        got = _probe_affine(state, fork, steps[m - 2].kind, PUSH, p, q)
        if got is None:
            return None
        dp, dq = got
        sp, sq = dp - ONE, dq
        loop_pairs = list(zip(coeffs, steps[j:m - 1]))
        loop_pairs.append(((ONE, ZERO), steps[m - 1]))
        spill_at, after = fork, steps[m - 1].edge
        mapping, fin, fout = _vertex_data(state, fork)
        cp, cq = coeffs[-1]
        if steps[m - 2].kind == REMOVE:
            def shed(t):
                return fin - mapping.inverse(fout - (cp * t + cq) + t)
        else:
            def shed(t):
                return fin + cp * t + cq - mapping.inverse(fout + t)
    else:
        rp, rq = coeffs[-1]
        got = _probe_affine(state, meet, PUSH, PUSH, rp, rq)
        if got is None:
            return None
        np_, nq = got
        sp, sq = np_ - ONE, nq
        loop_pairs = list(zip(coeffs, steps[j:m]))
        spill_at, after = meet, steps[j].edge
        mapping, fin, fout = _vertex_data(state, meet)

        def shed(t):
            return fin + rp * t + rq - mapping.inverse(fout + t)

    # a spill that is never positive means the loop did not actually
    # outgrow its stem; leave that to the ordinary planner
    if sp <= 0 and sq <= 0:
        return None

    candidates = _spill_candidates(state, spill_at, after)
    tail = _push_tail(state, spill_at, candidates, sp, sq, visited, used)
    if tail is None:
        if candidates:
            # the overfull vertex would reroute its surplus along a still
            # open edge, but that route needs further rejection rounds; a
            # single plan cannot express it, so the shed below would strand
            # capacity instead.  Give up and let the caller see the freeze.
            return None
        y = _affine_of(shed)
        if y is None:
            return None
        tail = _remove_tail(state, spill_at, y[0], y[1], visited, used)
    if tail is None:
        return None
    tail_steps, tail_coeffs = tail

    # first bound hit by T across the loop and the spill route
    bounds: list[Fraction] = []

    def within(cp_, cq_, limit):
        if is_infinite(limit):
            return True
        if cp_ <= 0:
            # nonincreasing in T: feasible iff already within at T = 0
            return cq_ <= limit
        bounds.append((limit - cq_) / cp_)
        return True

    for (cp_, cq_), stp in loop_pairs + list(zip(tail_coeffs, tail_steps)):
        if not within(cp_, cq_, stp.residual):
            return None
    if not bounds:
        return None
    theta = min(bounds)
    if theta <= 0:
        return None

    deltas: list[Fraction] = [ZERO] * m
    for idx, ((cp_, cq_), _stp) in enumerate(loop_pairs):
        deltas[j + idx] = cp_ * theta + cq_
    tail_deltas = [cp_ * theta + cq_ for cp_, cq_ in tail_coeffs]
    if any(d < 0 for d in deltas) or any(d < 0 for d in tail_deltas):
        return None
    plan = AugmentPlan(walk=walk, kind="cycle", deltas=deltas, meet_index=j,
                       cycle_entry=deltas[j], stem_required=ZERO,
                       tail_steps=tail_steps, tail_deltas=tail_deltas)
    plan.violations = _validate(state, steps + tail_steps,
                                deltas + tail_deltas)
    if plan.violations:
        return None
    return plan


def _meet_shift(own: WalkStep, d_own: Fraction, arrival: WalkStep,
                d_arrival: Fraction) -> tuple[Fraction, Fraction]:
    """Signed inflow/outflow shift at the meeting vertex from cycle deltas."""
    din = ZERO
    dout = ZERO
    if own.kind == PUSH:
        dout += d_own
    else:
        din -= d_own
    if arrival.kind == PUSH:
        din += d_arrival
    else:
        dout -= d_arrival
    return din, dout


def _meet_consistent(mapping: PLMapping, new_in: Fraction,
                     new_out: Fraction) -> bool:
    if new_in < 0 or new_out < 0:
        return False
    if new_in > 0:
        return new_out == mapping.evaluate(new_in)
    return new_out <= mapping.start


def _stem_requirement(mapping: PLMapping, new_in: Fraction, new_out: Fraction,
                      stem_kind: str) -> Fraction:
    """Stem delta restoring balance at the meeting vertex.

    A pushing stem adds inflow: solve g(new_in + lam) = new_out via the
    generalized inverse (landing inside the spontaneous window empties
    the inflow entirely).  A removing stem sheds outflow:
    lam = new_out - g(new_in), reading g(0) as the window top, i.e. the
    smallest removal.  Either sign may come out negative, meaning the
    stem must run backwards.
    """
    if stem_kind == PUSH:
        if new_out < 0:
            raise SolverError("negative outflow at the meeting vertex")
        return mapping.inverse(new_out) - new_in
    if new_in < 0:
        raise SolverError("negative inflow at the meeting vertex")
    return new_out - mapping.evaluate(new_in)


# -- exact parametric shrink -------------------------------------------------


@dataclass
class _Region:
    lo: Fraction  # open lower end
    hi: Fraction  # closed upper end
    coeffs: list[tuple[Fraction, Fraction]]  # affine (p, q) per tracked delta


def _split_at(regions: list[_Region], index: int,
              transform) -> list[_Region]:
    """Apply a piecewise-affine transform to the tracked delta ``index``.

    ``transform`` maps (p, q, lo, hi) to a list of (lo', hi', p', q')
    pieces covering (lo, hi]; the other tracked deltas are carried along
    unchanged."""
    out: list[_Region] = []
    for region in regions:
        p, q = region.coeffs[index]
        for lo, hi, np_, nq in transform(p, q, region.lo, region.hi):
            coeffs = list(region.coeffs)
            coeffs[index] = (np_, nq)
            out.append(_Region(lo=lo, hi=hi, coeffs=coeffs))
    return out


def _affine_min_cap(p: Fraction, q: Fraction, lo: Fraction, hi: Fraction,
                    cap: Capacity):
    """Pieces of min(p*theta + q, cap) on (lo, hi]."""
    if is_infinite(cap):
        return [(lo, hi, p, q)]
    if p == 0:
        return [(lo, hi, ZERO, min(q, cap))]
    crossing = (cap - q) / p
    if p > 0:
        if crossing >= hi:
            return [(lo, hi, p, q)]
        if crossing <= lo:
            return [(lo, hi, ZERO, cap)]
        return [(lo, crossing, p, q), (crossing, hi, ZERO, cap)]
    if crossing <= lo:
        return [(lo, hi, p, q)]
    if crossing >= hi:
        return [(lo, hi, ZERO, cap)]
    return [(lo, crossing, ZERO, cap), (crossing, hi, p, q)]


def _solve_shrink(state: SolverState, walk: list[str], steps: list[WalkStep],
                  j: int, target: Fraction) -> Fraction:
    """Entry delta theta with stem requirement exactly ``target``.

    Propagates theta symbolically around the cycle, splitting the theta
    axis wherever a generalized inverse changes branch or a capacity
    starts to bind, then solves the per-region affine requirement."""
    network = state.network
    m = len(steps)
    hi0 = steps[j].residual
    assert not is_infinite(hi0)
    # tracked deltas: [0] = current cycle delta, [1] = entry delta (theta)
    regions = [_Region(lo=ZERO, hi=hi0, coeffs=[(Fraction(1), ZERO),
                                                (Fraction(1), ZERO)])]
    for i in range(j + 1, m):
        mapping, fin, fout = _vertex_data(state, walk[i])
        kind_in, kind_out = steps[i - 1].kind, steps[i].kind

        def forward_piece(p, q, lo, hi, mapping=mapping, fin=fin, fout=fout,
                          kind_in=kind_in, kind_out=kind_out):
            slope = mapping.slopes[0]
            start = mapping.start
            if kind_in == PUSH and kind_out == PUSH:
                # evaluate(fin + value) - fout, single segment: affine
                return [(lo, hi, slope * p, slope * (fin + q) + start - fout)]
            if kind_in != kind_out:
                return [(lo, hi, p, q)]
            # both remove: fin - inverse(fout - value); branch at the window
            pieces = []
            for plo, phi in _binary_split(p, q, lo, hi, fout - start):
                mid_q = fout - (p * _probe(plo, phi) + q)
                if mid_q <= start:
                    pieces.append((plo, phi, ZERO, fin))
                else:
                    pieces.append((plo, phi, p / slope,
                                   fin - (fout - q - start) / slope))
            return pieces

        regions = _split_at(regions, 0, forward_piece)
        regions = _split_at(
            regions, 0,
            lambda p, q, lo, hi, cap=steps[i].residual:
                _affine_min_cap(p, q, lo, hi, cap))

    meet = walk[j]
    mapping, fin, fout = _vertex_data(state, meet)
    candidates: list[Fraction] = []
    for region in regions:
        p_last, q_last = region.coeffs[0]
        p_theta, q_theta = region.coeffs[1]
        # inflow/outflow shift at the meeting vertex as affine functions
        pin, qin = ZERO, ZERO
        pout, qout = ZERO, ZERO
        if steps[j].kind == PUSH:
            pout, qout = pout + p_theta, qout + q_theta
        else:
            pin, qin = pin - p_theta, qin - q_theta
        if steps[m - 1].kind == PUSH:
            pin, qin = pin + p_last, qin + q_last
        else:
            pout, qout = pout - p_last, qout - q_last
        pin_t, qin_t = pin, qin + fin
        pout_t, qout_t = pout, qout + fout
        stem_kind = steps[j - 1].kind
        slope = mapping.slopes[0]
        start = mapping.start
        if stem_kind == PUSH:
            # lam = inverse(new_out) - new_in, branch at new_out = start
            branch_pieces = _branch_on(pout_t, qout_t, region.lo, region.hi,
                                       start)
            for lo, hi, below in branch_pieces:
                if below:
                    pl, ql = -pin_t, -qin_t
                else:
                    pl = pout_t / slope - pin_t
                    ql = (qout_t - start) / slope - qin_t
                candidates += _solve_affine(pl, ql, lo, hi, target)
        else:
            # lam = new_out - evaluate(new_in); evaluate is affine on >= 0
            pl = pout_t - slope * pin_t
            ql = qout_t - (slope * qin_t + start)
            candidates += _solve_affine(pl, ql, region.lo, region.hi, target)
    if not candidates:
        raise SolverError("no entry delta matches the stem capacity; the "
                          "cycle cannot be rebalanced")
    return max(candidates)


def _probe(lo: Fraction, hi: Fraction) -> Fraction:
    return (lo + hi) / 2


def _binary_split(p: Fraction, q: Fraction, lo: Fraction, hi: Fraction,
                  threshold: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Split (lo, hi] where p*theta + q crosses ``threshold``."""
    if p == 0:
        return [(lo, hi)]
    crossing = (threshold - q) / p
    if lo < crossing < hi:
        return [(lo, crossing), (crossing, hi)]
    return [(lo, hi)]


def _branch_on(p: Fraction, q: Fraction, lo: Fraction, hi: Fraction,
               threshold: Fraction):
    """Pieces of (lo, hi] tagged True where p*theta + q <= threshold."""
    pieces = []
    for plo, phi in _binary_split(p, q, lo, hi, threshold):
        value = p * _probe(plo, phi) + q
        pieces.append((plo, phi, value <= threshold))
    return pieces


def _solve_affine(p: Fraction, q: Fraction, lo: Fraction, hi: Fraction,
                  target: Fraction) -> list[Fraction]:
    if p == 0:
        return [hi] if q == target else []
    theta = (target - q) / p
    if lo < theta <= hi:
        return [theta]
    return []


# -- validation and application ----------------------------------------------


def _validate(state: SolverState, steps: list[WalkStep],
              deltas: list[Fraction]) -> list[str]:
    """Check the planned deltas give a feasible balanced flow with progress."""
    issues: list[str] = []
    if any(is_infinite(d) for d in deltas):
        return ["a planned delta is infinite"]
    new_flow = dict(state.flow)
    seen: set[EdgeKey] = set()
    for step, delta in zip(steps, deltas):
        if step.edge in seen:
            issues.append(f"edge {step.edge} is touched twice")
            continue
        seen.add(step.edge)
        if step.kind == PUSH:
            new_flow[step.edge] = new_flow.get(step.edge, ZERO) + delta
        else:
            new_flow[step.edge] = new_flow.get(step.edge, ZERO) - delta
    report = check_flow(state.network, new_flow)
    issues.extend(report.messages())
    saturated = any(
        not is_infinite(step.residual) and delta == step.residual and delta > 0
        for step, delta in zip(steps, deltas))
    if not issues and not saturated:
        issues.append("no helper edge saturates; the plan makes no progress")
    return issues


def apply_plan(state: SolverState, plan: AugmentPlan) -> None:
    if not plan.feasible:
        raise SolverError("refusing to apply an infeasible plan: "
                          + "; ".join(plan.violations))
    steps = _walk_steps(state, plan.walk) + list(plan.tail_steps)
    for step, delta in zip(steps, plan.deltas + plan.tail_deltas):
        if step.kind == PUSH:
            state.flow[step.edge] = state.flow.get(step.edge, ZERO) + delta
        else:
            state.flow[step.edge] = state.flow.get(step.edge, ZERO) - delta
    marks: set[str] = set()
    for step in steps:
        st = state.states[step.owner]
        if st.status == DONE or st.edge != step.edge:
            continue
        residual = state.h_residual(step.owner)
        if not is_infinite(residual) and residual == 0:
            _update(state, step.owner, marks)
    _residual_sweep(state)


def _residual_sweep(state: SolverState) -> None:
    """Re-point every live vertex whose helper edge went stale.

    A helper edge is stale when it has zero headroom, or (for a
    proposer) when its target would no longer welcome the proposal.
    The second case covers a proposer whose cascade update was
    suppressed by the recursion guard while its target emptied out in
    the same pass; one extra pass here re-points it.
    """
    order = [state.network.source] + list(state.network.vertices)
    for _ in range(2 * len(state.network.edges) + 2 * len(order) + 2):
        marks: set[str] = set()
        dirty = False
        for name in order:
            st = state.states.get(name)
            if st is None or st.status == DONE or st.edge is None:
                continue
            residual = state.h_residual(name)
            stale = not is_infinite(residual) and residual == 0
            if not stale and st.status == PROPOSE:
                stale = not _acceptable_proposal(state, st.edge)
            if stale:
                dirty = True
                _update(state, name, marks)
        if not dirty:
            return
    raise SolverError("residual sweep failed to stabilize")


def _update(state: SolverState, u: str, marks: set[str]) -> None:
    """Advance u's pointer; cascade to proposers it invalidates."""
    if u in marks:
        return
    marks.add(u)
    network = state.network
    st = state.states[u]
    if st.status == PROPOSE:
        order = (network.out_edges(u) if u == network.source
                 else list(network.pref_out[u]))
        position = order.index(st.edge) + 1
        for key in order[position:]:
            if _acceptable_proposal(state, key):
                st.edge = key
                return
        st.status = REJECT
        st.edge = None
        if u == network.source:
            return
    if st.status == REJECT:
        positive = [k for k in network.pref_in[u]
                    if state.flow.get(k, ZERO) > 0]
        if positive:
            st.edge = positive[-1]
        else:
            st.status = DONE
            st.edge = None
        # proposers pointing here must re-check: their offer now has to
        # beat the rejected edge strictly, and a done vertex takes nothing
        for w in [network.source] + list(network.vertices):
            ws = state.states.get(w)
            if ws is None or ws.status != PROPOSE or ws.edge is None:
                continue
            if ws.edge[1] != u:
                continue
            if st.status == DONE or not network.prefers_in(u, ws.edge, st.edge):
                _update(state, w, marks)


def _acceptable_proposal(state: SolverState, key: EdgeKey) -> bool:
    """Would the head of ``key`` currently welcome flow on it?"""
    network = state.network
    head = key[1]
    if head == network.sink:
        return True
    ws = state.states[head]
    if ws.status == PROPOSE:
        return True
    if ws.status == DONE:
        return False
    return network.prefers_in(head, key, ws.edge)


# -- main loop ---------------------------------------------------------------


def step(state: SolverState) -> AugmentPlan:
    """Plan and apply one augmentation; the caller owns the loop."""
    walk, kind = find_walk(state)
    if kind == "cycle":
        plan = plan_cycle(state, walk)
    else:
        plan = plan_path(state, walk, kind)
    if not plan.feasible:
        raise SolverError(
            f"infeasible augmentation on walk {' -> '.join(walk)}: "
            + "; ".join(plan.violations))
    apply_plan(state, plan)
    state.iterations += 1
    return plan


def run_state(state: SolverState) -> SolveResult:
    network = state.network
    bound = 2 * len(network.edges)
    trace: list[AugmentPlan] = []
    while state.states[network.source].status == PROPOSE:
        if state.iterations >= bound:
            raise SolverError(f"iteration bound 2|E| = {bound} exceeded")
        trace.append(step(state))
    return SolveResult(flow=state.flow, iterations=state.iterations,
                       trace=trace)


def run(network: Network) -> SolveResult:
    """Compute a stable flow on an acyclic single-segment network."""
    return run_state(init_state(network))

"""Instance translation tests.

The hand oracle is a one-vertex network: s -> u with capacity 1,
u -> t with capacity 6, u mapping x to 2x + 2.  Worked on paper:

    q(u) = max(cap_in, cap_out, start) + 1 = max(1, 6, 2) + 1 = 7
    segment row bound = q - intercept = 7 - 2 = 5
    segment row entry on the inflow column = slope = 2

With flow {(s,u): 1, (u,t): 4} the outflow matches the mapping
(2*1 + 2 = 4), u is saturated from the left, and the point should
be feasible and dominate every column with slack 7 - 4 = 3 parked
on the out side.
"""

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

import stableflow as sf
from stableflow import pipeline
from stableflow import solver as S

from conftest import random_convex_net


def one_vertex_net() -> sf.Network:
    return sf.Network.create(
        source="s", sink="t",
        vertices=["u"],
        mappings={"u": sf.PLMapping((F(2),), start=F(2))},
        edges=[("s", "u", 1), ("u", "t", 6)],
    )


def col(inst: sf.ScarfInstance, label) -> int:
    return inst.col_index(label)


class TestHandOracle:

    def test_shape_and_labels(self):
        inst = sf.build_scarf(one_vertex_net())
        assert inst.rows == (
            ("edge", "s", "u"),
            ("edge", "u", "t"),
            ("seg", "u", 1),
            ("vertex", "u"),
        )
        assert inst.cols == (
            sf.edge_col("s", "u"),
            sf.edge_col("u", "t"),
            sf.slack_col("u", 1),
            sf.slack_col("u", 2),
        )

    def test_bounds(self):
        net = one_vertex_net()
        inst = sf.build_scarf(net)
        assert sf.vertex_bound(net, "u") == 7
        assert inst.bounds == (F(1), F(6), F(5), F(7))

    def test_matrix_entries(self):
        inst = sf.build_scarf(one_vertex_net())
        seg = inst.row_index(("seg", "u", 1))
        vtx = inst.row_index(("vertex", "u"))
        j_in = col(inst, sf.edge_col("s", "u"))
        j_out = col(inst, sf.edge_col("u", "t"))
        s1 = col(inst, sf.slack_col("u", 1))
        s2 = col(inst, sf.slack_col("u", 2))
        # the segment row scales inflow by the slope; slacks enter plainly
        assert inst.entry(seg, j_in) == 2
        assert inst.entry(seg, j_out) == 0
        assert inst.entry(seg, s1) == inst.entry(seg, s2) == 1
        assert inst.entry(vtx, j_out) == 1
        assert inst.entry(vtx, j_in) == 0

    def test_preference_brackets(self):
        """Segment rows open with slack 1, vertex rows with slack 2."""
        inst = sf.build_scarf(one_vertex_net())
        seg = inst.row_index(("seg", "u", 1))
        vtx = inst.row_index(("vertex", "u"))
        s1 = col(inst, sf.slack_col("u", 1))
        s2 = col(inst, sf.slack_col("u", 2))
        assert inst.prefs[seg][0] == s1 and inst.prefs[seg][-1] == s2
        assert inst.prefs[vtx][0] == s2 and inst.prefs[vtx][-1] == s1

    def test_stable_flow_gives_dominating_point(self):
        net = one_vertex_net()
        inst = sf.build_scarf(net)
        flow = {("s", "u"): F(1), ("u", "t"): F(4)}
        assert sf.is_stable(net, flow).stable
        point = sf.flow_to_scarf(net, flow, inst)
        assert point[col(inst, sf.edge_col("s", "u"))] == 1
        assert point[col(inst, sf.edge_col("u", "t"))] == 4
        assert point[col(inst, sf.slack_col("u", 1))] == 0
        assert point[col(inst, sf.slack_col("u", 2))] == 3
        assert sf.feasibility_violations(inst, point) == []
        assert sf.undominated_columns(inst, point) == []

    def test_point_reads_back_as_the_same_flow(self):
        net = one_vertex_net()
        inst = sf.build_scarf(net)
        flow = {("s", "u"): F(1), ("u", "t"): F(4)}
        point = sf.flow_to_scarf(net, flow, inst)
        assert sf.scarf_to_flow(net, inst, point) == flow


class TestGuards:

    def test_infinite_capacity_is_refused(self):
        net = sf.Network.create(
            source="s", sink="t",
            vertices=["u"],
            mappings={"u": sf.PLMapping((F(1),))},
            edges=[("s", "u", "inf"), ("u", "t", 4)],
        )
        with pytest.raises(sf.ModelError, match="finite"):
            sf.build_scarf(net)

    def test_non_convex_mapping_is_refused(self):
        # slopes 2 then 1 bend downward; the row construction needs the
        # max of the segment lines to equal the mapping
        net = sf.Network.create(
            source="s", sink="t",
            vertices=["u"],
            mappings={"u": sf.PLMapping((F(2), F(1)), start=F(2),
                                        breakpoints=(F(2),))},
            edges=[("s", "u", 5), ("u", "t", 9)],
        )
        with pytest.raises(sf.ModelError, match="convex"):
            sf.build_scarf(net)


class TestLoopInstance:
    """The cyclic doubling net from conftest, translated whole.

    Both vertices double their inflow, so each contributes one segment
    row.  q(v1) = max(1 + 4, 2 + 6, 0) + 1 = 9 and q(v2) =
    max(2, 4, 0) + 1 = 5.
    """

    def test_shape(self, doubling_loop_net):
        inst = sf.build_scarf(doubling_loop_net)
        assert len(inst.rows) == 8  # 4 edge + 2 segment + 2 vertex
        assert len(inst.cols) == 8  # 4 edge + 2 slacks per vertex

    def test_bounds(self, doubling_loop_net):
        inst = sf.build_scarf(doubling_loop_net)
        assert inst.bounds[inst.row_index(("seg", "v1", 1))] == 9
        assert inst.bounds[inst.row_index(("vertex", "v1"))] == 9
        assert inst.bounds[inst.row_index(("seg", "v2", 1))] == 5
        assert inst.bounds[inst.row_index(("vertex", "v2"))] == 5

    def test_in_preference_order_survives(self, doubling_loop_net):
        # v1 ranks the loop edge from v2 above the source edge
        inst = sf.build_scarf(doubling_loop_net)
        seg = inst.row_index(("seg", "v1", 1))
        assert inst.ranks_above(seg,
                                col(inst, sf.edge_col("v2", "v1")),
                                col(inst, sf.edge_col("s", "v1")))

    def test_stable_flow_dominates_everything(self, doubling_loop_net):
        flow = {("s", "v1"): F(0), ("v1", "v2"): F(2),
                ("v2", "v1"): F(4), ("v1", "t"): F(6)}
        assert sf.is_stable(doubling_loop_net, flow).stable
        inst = sf.build_scarf(doubling_loop_net)
        point = sf.flow_to_scarf(doubling_loop_net, flow, inst)
        assert sf.feasibility_violations(inst, point) == []
        assert sf.undominated_columns(inst, point) == []
        # the empty source edge is turned down by v1's segment row, which
        # prefers both its slack and the loop inflow it already carries
        seg = inst.row_index(("seg", "v1", 1))
        j = col(inst, sf.edge_col("s", "v1"))
        assert sf.dominating_row(inst, point, j) == seg

    def test_unstable_flow_leaves_a_column_undominated(self, doubling_loop_net):
        # the zero flow is feasible but blockable through s -> v1 -> t,
        # and that shows up as the (v1, t) column escaping domination:
        # its edge row sits below bound and the vertex row ranks the
        # loaded slack column last
        inst = sf.build_scarf(doubling_loop_net)
        point = sf.flow_to_scarf(doubling_loop_net,
                                 sf.zero_flow(doubling_loop_net), inst)
        assert sf.feasibility_violations(inst, point) == []
        undominated = sf.undominated_columns(inst, point)
        assert sf.edge_col("v1", "t") in undominated


class TestLayeredRoundTrip:

    def _translation(self, doubling_loop_net):
        inst = sf.build_scarf(doubling_loop_net)
        return inst, sf.scarf_to_network(inst)

    def test_every_column_has_a_carrier_edge(self, doubling_loop_net):
        inst, tr = self._translation(doubling_loop_net)
        assert set(tr.col_edge) == set(inst.cols)
        assert sf.is_acyclic(tr.network)

    def test_solved_layer_flow_maps_to_dominating_point(self, doubling_loop_net):
        inst, tr = self._translation(doubling_loop_net)
        result = S.run(tr.network)
        point = sf.layered_flow_to_scarf(tr, result.flow)
        assert sf.feasibility_violations(inst, point) == []
        assert sf.undominated_columns(inst, point) == []

    def test_point_rebuilds_the_same_layer_flow(self, doubling_loop_net):
        inst, tr = self._translation(doubling_loop_net)
        result = S.run(tr.network)
        point = sf.layered_flow_to_scarf(tr, result.flow)
        back = sf.scarf_to_layered_flow(tr, point)
        check = sf.check_flow(tr.network, back)
        assert check.ok, check.messages()
        nonzero = {k: v for k, v in back.items() if v != 0}
        assert nonzero == {k: v for k, v in result.flow.items() if v != 0}


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10**9))
def test_shape_laws_on_random_nets(seed):
    """Row and column counts follow the network's size exactly."""
    net = random_convex_net(random.Random(seed))
    inst = sf.build_scarf(net)
    segments = sum(len(net.mapping(v).slopes) for v in net.vertices)
    assert len(inst.rows) == len(net.edges) + segments + len(net.vertices)
    assert len(inst.cols) == len(net.edges) + 2 * len(net.vertices)


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10**9))
def test_solved_flows_translate_to_dominating_points(seed):
    net = random_convex_net(random.Random(seed))
    try:
        report = pipeline.solve(net)
    except S.SolverError:
        return  # the solver announces the nets it cannot finish
    inst = sf.build_scarf(net)
    point = sf.flow_to_scarf(net, report.flow, inst)
    assert sf.feasibility_violations(inst, point) == []
    assert sf.undominated_columns(inst, point) == []

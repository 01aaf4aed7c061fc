"""Verifier tests: feasibility verdicts and blocking-path certificates.

The worked flows on the two-segment loop were checked by hand: with
flow (0, 1, 2, 5) both inner vertices balance, yet pushing one unit
along s -> v1 -> t raises v1's outflow exactly as its mapping demands,
so the flow is blocked.  The solved flow (2, 6, 10, 10) saturates both
of v1's escape edges and nothing can move.
"""

from fractions import Fraction as F

import pytest

import stableflow as sf
from stableflow.stability import Germ


def flow_on(net, values):
    return {e.key: F(v) for e, v in zip(net.edges, values)}


class TestVerdicts:
    def test_partial_flow_is_blocked(self, two_segment_loop_net):
        net = two_segment_loop_net
        report = sf.is_stable(net, flow_on(net, [0, 1, 2, 5]))
        assert report.verdict == "unstable"
        assert not report.stable
        cert = report.blocking
        assert cert.vertices == ("s", "v1", "t")
        assert cert.epsilon == 1
        assert cert.amounts == (F(1), F(1))

    def test_zero_flow_is_blocked_through_the_jump(self, two_segment_loop_net):
        # with no inflow at v1 the first eps of new inflow jumps the
        # outflow to the top of the multi-valued image, so the carried
        # amount grows across the vertex: (1, 4) not (1, 1)
        net = two_segment_loop_net
        report = sf.is_stable(net, sf.zero_flow(net))
        cert = report.blocking
        assert report.verdict == "unstable"
        assert cert.vertices == ("s", "v1", "t")
        assert cert.amounts == (F(1), F(4))

    def test_solved_flow_is_stable(self, two_segment_loop_net):
        net = two_segment_loop_net
        report = sf.is_stable(net, flow_on(net, [2, 6, 10, 10]))
        assert report.verdict == "stable"
        assert report.stable
        assert report.blocking is None
        assert report.max_len == sf.default_max_len(net)

    def test_doubling_loop_rest_point(self, doubling_loop_net):
        net = doubling_loop_net
        report = sf.is_stable(net, flow_on(net, [0, 2, 4, 6]))
        assert report.verdict == "stable"

    def test_imbalanced_flow_reports_infeasible(self, two_segment_loop_net):
        net = two_segment_loop_net
        report = sf.is_stable(net, flow_on(net, [2, 6, 10, 9]))
        assert report.verdict == "infeasible"
        assert not report.feasibility.ok
        assert report.blocking is None
        assert any("v1" in msg for msg in report.feasibility.balance_violations)


class TestSearchMechanics:
    def test_tiny_length_bound_degrades_to_inconclusive(self, two_segment_loop_net):
        net = two_segment_loop_net
        status, cert = sf.find_blocking_path(
            net, flow_on(net, [0, 1, 2, 5]), max_len=1)
        assert status == "inconclusive"
        assert cert is None

    def test_certificate_respects_slack_and_balance(self, two_segment_loop_net):
        net = two_segment_loop_net
        flow = flow_on(net, [0, 1, 2, 5])
        status, cert = sf.find_blocking_path(net, flow)
        assert status == "blocked"
        assert cert.epsilon > 0
        assert len(cert.amounts) == len(cert.vertices) - 1
        assert any(a > 0 for a in cert.amounts)
        for i, amount in enumerate(cert.amounts):
            key = (cert.vertices[i], cert.vertices[i + 1])
            assert amount <= net.capacity(key) - flow.get(key, F(0))
        # interior vertices keep their mapping balance after the push
        for i in range(1, len(cert.vertices) - 1):
            v = cert.vertices[i]
            fin = sf.flow_in(net, flow, v) + cert.amounts[i - 1]
            fout = sf.flow_out(net, flow, v) + cert.amounts[i]
            assert fout == net.mapping(v).evaluate(fin)

    def test_describe_mentions_route_and_eps(self, two_segment_loop_net):
        net = two_segment_loop_net
        _, cert = sf.find_blocking_path(net, flow_on(net, [0, 1, 2, 5]))
        text = cert.describe()
        assert "s -> v1 -> t" in text
        assert "eps=1" in text

    def test_germ_evaluation(self):
        germ = Germ(F(3), F(1, 2))
        assert germ.at(F(1, 4)) == F(5, 4)


class TestRelaxedComponents:
    """A saturated front edge hides a spontaneous emitter from the
    strict search; allowing zero carried amounts exposes it."""

    @pytest.fixture
    def choked_emitter(self):
        net = sf.Network.create(
            source="s", sink="t", vertices=["u"],
            edges=[("s", "u", 0), ("u", "t", 10)],
            mappings={"u": sf.PLMapping((F(1),), start=F(2))},
        )
        flow = {("s", "u"): F(0), ("u", "t"): F(1)}
        return net, flow

    def test_strict_search_sees_nothing(self, choked_emitter):
        net, flow = choked_emitter
        assert sf.is_stable(net, flow).verdict == "stable"

    def test_relaxed_search_activates_the_emitter(self, choked_emitter):
        net, flow = choked_emitter
        report = sf.is_stable(net, flow, strict_components=False)
        assert report.verdict == "unstable"
        cert = report.blocking
        assert cert.vertices == ("s", "u", "t")
        assert cert.amounts == (F(0), F(1, 2))
        assert cert.epsilon == F(1, 2)


class TestOnRandomNetworks:
    def test_solver_output_verifies_stable(self):
        import random
        from conftest import random_acyclic_linear_net

        rng = random.Random(20260825)
        for _ in range(25):
            net = random_acyclic_linear_net(rng)
            result = sf.solve(net)
            report = sf.is_stable(net, result.flow)
            assert report.verdict == "stable", report.blocking

    def test_verdict_vocabulary_on_zero_flows(self):
        import random
        from conftest import random_acyclic_linear_net

        rng = random.Random(77)
        seen = set()
        for _ in range(40):
            net = random_acyclic_linear_net(rng)
            report = sf.is_stable(net, sf.zero_flow(net))
            seen.add(report.verdict)
            if report.verdict == "unstable":
                assert report.blocking.epsilon > 0
        assert seen <= {"stable", "unstable", "inconclusive"}
        assert "unstable" in seen  # zero flow rarely survives

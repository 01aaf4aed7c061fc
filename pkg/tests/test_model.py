"""Mapping arithmetic and network validation."""

from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

import stableflow as sf
from stableflow import ModelError

from conftest import MAPPING_FIXTURES


def test_evaluate_known_values():
    two_seg = sf.PLMapping((F(2), F(1)), start=F(2), breakpoints=(F(2),))
    assert two_seg.evaluate(F(0)) == 2
    assert two_seg.evaluate(F(2)) == 6
    assert two_seg.evaluate(F(3)) == 7

    convex = sf.PLMapping((F(1), F(2)), start=F(1), breakpoints=(F(3),))
    assert convex.evaluate(F(3)) == 4
    assert convex.evaluate(F(6)) == 10
    assert convex.inverse(F(10)) == 6

    three = sf.PLMapping((F(1, 2), F(3), F(1)), start=F(1),
                         breakpoints=(F(2), F(7, 2)))
    assert three.evaluate(F(2)) == 2
    assert three.evaluate(F(7, 2)) == F(13, 2)
    assert three.evaluate(F(5)) == 8


def test_evaluate_rejects_negative_and_passes_infinity():
    m = sf.PLMapping((F(1),))
    with pytest.raises(ModelError):
        m.evaluate(F(-1))
    assert m.evaluate(sf.INFINITE) == sf.INFINITE


def test_zero_inflow_reads_as_starting_point():
    m = sf.PLMapping((F(3),), start=F(5))
    assert m.evaluate(F(0)) == 5


def test_inverse_is_generalized_below_start():
    m = sf.PLMapping((F(2),), start=F(2))
    assert m.inverse(F(0)) == 0
    assert m.inverse(F(2)) == 0
    assert m.inverse(F(4)) == 1


def test_classify():
    kinds = [m.classify() for m in MAPPING_FIXTURES]
    assert kinds == ["linear", "linear", "general", "general",
                     "convex", "convex"]


def test_segment_lines_known_values():
    m = sf.PLMapping((F(1), F(2)), start=F(1), breakpoints=(F(3),))
    assert m.segment_lines() == [(F(1), F(1)), (F(2), F(-2))]


@pytest.mark.parametrize("mapping", MAPPING_FIXTURES)
def test_segment_lines_agree_with_evaluate(mapping):
    """Every line reproduces the mapping on its own segment."""
    lines = mapping.segment_lines()
    borders = mapping.segment_borders()
    for i, (a, b) in enumerate(lines):
        lo = borders[i]
        hi = borders[i + 1] if i + 1 < len(borders) else lo + 2
        mid = (lo + hi) / 2
        for x in (lo, mid, hi):
            if x == 0:
                continue
            assert a * x + b == mapping.evaluate(x)


@pytest.mark.parametrize("mapping", MAPPING_FIXTURES)
def test_lines_meet_at_breakpoints(mapping):
    lines = mapping.segment_lines()
    for i, c in enumerate(mapping.breakpoints):
        a1, b1 = lines[i]
        a2, b2 = lines[i + 1]
        assert a1 * c + b1 == a2 * c + b2


@pytest.mark.parametrize("mapping", MAPPING_FIXTURES)
def test_convex_mappings_are_max_of_lines(mapping):
    if mapping.classify() not in ("convex", "linear"):
        pytest.skip("only convex shapes agree with the upper envelope")
    lines = mapping.segment_lines()
    top = mapping.segment_borders()[-1] + 3
    for k in range(1, 11):
        x = top * F(k, 10)
        expected = max(a * x + b for a, b in lines)
        assert mapping.evaluate(x) == expected


@pytest.mark.parametrize("mapping", MAPPING_FIXTURES)
def test_inverse_round_trip(mapping):
    borders = list(mapping.segment_borders())
    samples = set(borders)
    for i in range(len(borders) - 1):
        samples.add((borders[i] + borders[i + 1]) / 2)
    samples.add(borders[-1] + F(3, 2))
    for x in samples:
        if x > 0:
            assert mapping.inverse(mapping.evaluate(x)) == x
    assert mapping.inverse(mapping.start) == 0


def test_right_slope_uses_next_segment():
    m = sf.PLMapping((F(2), F(1)), start=F(2), breakpoints=(F(2),))
    assert m.right_slope(F(1)) == 2
    assert m.right_slope(F(2)) == 1
    assert m.right_slope(F(5)) == 1


def test_next_breakpoint_above():
    m = sf.PLMapping((F(1, 2), F(3), F(1)), start=F(1),
                     breakpoints=(F(2), F(7, 2)))
    assert m.next_breakpoint_above(F(0)) == 2
    assert m.next_breakpoint_above(F(2)) == F(7, 2)
    assert m.next_breakpoint_above(F(7, 2)) is None


@st.composite
def mappings(draw):
    k = draw(st.integers(min_value=1, max_value=4))
    slope_pool = st.fractions(min_value=F(1, 4), max_value=F(4),
                              max_denominator=4)
    slopes = tuple(draw(slope_pool) for _ in range(k))
    start = draw(st.fractions(min_value=0, max_value=3, max_denominator=4))
    gaps = [draw(st.fractions(min_value=F(1, 2), max_value=2,
                              max_denominator=2)) for _ in range(k - 1)]
    breaks = []
    at = F(0)
    for gap in gaps:
        at += gap
        breaks.append(at)
    return sf.PLMapping(slopes, start=start, breakpoints=tuple(breaks))


@given(mappings(), st.fractions(min_value=0, max_value=10, max_denominator=8),
       st.fractions(min_value=0, max_value=10, max_denominator=8))
def test_mapping_is_monotone(m, x, y):
    if x <= y:
        assert m.evaluate(x) <= m.evaluate(y)
    if 0 < x < y:
        assert m.evaluate(x) < m.evaluate(y)


@given(mappings(), st.fractions(min_value=F(1, 8), max_value=10,
                                max_denominator=8))
def test_mapping_inverse_round_trip_random(m, x):
    assert m.inverse(m.evaluate(x)) == x


@given(mappings(), st.fractions(min_value=0, max_value=20, max_denominator=8))
def test_mapping_inverse_is_lower_adjoint(m, y):
    x = m.inverse(y)
    assert x >= 0
    if y <= m.start:
        assert x == 0
    else:
        assert m.evaluate(x) == y


def test_mapping_validation():
    with pytest.raises(ModelError):
        sf.PLMapping(())
    with pytest.raises(ModelError):
        sf.PLMapping((F(0),))
    with pytest.raises(ModelError):
        sf.PLMapping((F(1),), start=F(-1))
    with pytest.raises(ModelError):
        sf.PLMapping((F(1), F(2)), breakpoints=())
    with pytest.raises(ModelError):
        sf.PLMapping((F(1), F(2), F(3)), breakpoints=(F(2), F(2)))
    with pytest.raises(ModelError):
        sf.PLMapping((F(1), F(2)), breakpoints=(F(0),))


def test_as_rational_rejects_floats_and_bools():
    assert sf.as_rational("3/4") == F(3, 4)
    assert sf.as_rational(2) == 2
    with pytest.raises(TypeError):
        sf.as_rational(0.5)
    with pytest.raises(TypeError):
        sf.as_rational(True)
    assert sf.as_capacity("inf") == sf.INFINITE


def test_network_validation():
    ok = sf.Network.create("s", "t", ["v"], edges=[("s", "v", 1),
                                                   ("v", "t", 1)])
    assert ok.capacity(("s", "v")) == 1

    with pytest.raises(ModelError):
        sf.Network.create("s", "t", ["v"], edges=[("v", "v", 1)])
    with pytest.raises(ModelError):
        sf.Network.create("s", "t", ["v"],
                          edges=[("s", "v", 1), ("s", "v", 2)])
    with pytest.raises(ModelError):
        sf.Network.create("s", "t", ["v"], edges=[("t", "v", 1)])
    with pytest.raises(ModelError):
        sf.Network.create("s", "t", ["v"], edges=[("v", "s", 1)])
    with pytest.raises(ModelError):
        sf.Network.create("s", "t", ["v"], edges=[("v", "w", 1)])
    with pytest.raises(ModelError):
        sf.Network.create("s", "t", ["v"], edges=[("s", "v", -1)])
    # two outgoing edges need an explicit order
    with pytest.raises(ModelError):
        sf.Network.create("s", "t", ["v"],
                          edges=[("s", "v", 1), ("v", "t", 1),
                                 ("v", "s2", 1)], pref_out={})
    # and the order must be a permutation
    with pytest.raises(ModelError):
        sf.Network.create("s", "t", ["v", "w"],
                          edges=[("s", "v", 1), ("v", "t", 1),
                                 ("v", "w", 1), ("w", "t", 1)],
                          pref_out={"v": ["t", "t"]})


def test_preference_ranks(doubling_loop_net):
    net = doubling_loop_net
    assert net.prefers_out("v1", ("v1", "v2"), ("v1", "t"))
    assert net.prefers_in("v1", ("v2", "v1"), ("s", "v1"))
    assert not net.prefers_in("v1", ("s", "v1"), ("v2", "v1"))


def test_check_flow_accepts_balanced(doubling_loop_net):
    flow = {("s", "v1"): F(0), ("v1", "v2"): F(2), ("v2", "v1"): F(4),
            ("v1", "t"): F(6)}
    rep = sf.check_flow(doubling_loop_net, flow)
    assert rep.ok
    assert rep.messages() == []


def test_check_flow_flags_imbalance(doubling_loop_net):
    flow = {("s", "v1"): F(1), ("v1", "v2"): F(2), ("v2", "v1"): F(4),
            ("v1", "t"): F(6)}
    rep = sf.check_flow(doubling_loop_net, flow)
    assert not rep.ok
    assert any("v1" in m for m in rep.messages())


def test_check_flow_flags_overflow(doubling_loop_net):
    flow = {("s", "v1"): F(2), ("v1", "v2"): F(2), ("v2", "v1"): F(4),
            ("v1", "t"): F(8)}
    rep = sf.check_flow(doubling_loop_net, flow)
    assert not rep.ok


def test_check_flow_zero_inflow_window():
    net = sf.Network.create(
        "s", "t", ["v"],
        mappings={"v": sf.PLMapping((F(1),), start=F(3))},
        edges=[("s", "v", 5), ("v", "t", 5)])
    inside = {("s", "v"): F(0), ("v", "t"): F(2)}
    assert sf.check_flow(net, inside).ok
    at_top = {("s", "v"): F(0), ("v", "t"): F(3)}
    assert sf.check_flow(net, at_top).ok
    outside = {("s", "v"): F(0), ("v", "t"): F(4)}
    assert not sf.check_flow(net, outside).ok


def test_flow_helpers(doubling_loop_net):
    flow = {("s", "v1"): F(0), ("v1", "v2"): F(2), ("v2", "v1"): F(4),
            ("v1", "t"): F(6)}
    assert sf.flow_in(doubling_loop_net, flow, "v1") == 4
    assert sf.flow_out(doubling_loop_net, flow, "v1") == 8
    assert sf.flow_value(doubling_loop_net, flow) == 0

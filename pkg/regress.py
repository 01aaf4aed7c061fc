"""Scratch regression harness for the three pinned oracles + stress.

Run:  python3 regress.py
Not part of the package or test suite; deleted before final check-in.
"""
import random
import sys
import time
from fractions import Fraction as F

sys.path.insert(0, "tests")
from conftest import random_acyclic_linear_net

from stableflow.model import PLMapping, Network, Edge, ZERO
from stableflow import pipeline, check_flow
from stableflow.stability import is_stable
from stableflow import solver as S


def golden_net():
    return Network(
        source="s", sink="t",
        vertices=("v1", "v2"),
        mappings={"v1": PLMapping(slopes=(F(2), F(1)), start=F(2),
                                  breakpoints=(F(2),)),
                  "v2": PLMapping(slopes=(F(1), F(2)), start=F(1),
                                  breakpoints=(F(3),))},
        edges=(Edge("s", "v1", F(10)), Edge("v1", "v2", F(10)),
               Edge("v2", "v1", F(10)), Edge("v1", "t", F(10))),
        pref_out={"s": (("s", "v1"),),
                  "v1": (("v1", "v2"), ("v1", "t")),
                  "v2": (("v2", "v1"),)},
        pref_in={"v1": (("v2", "v1"), ("s", "v1")),
                 "v2": (("v1", "v2"),),
                 "t": (("v1", "t"),)},
    )


def example1_state():
    net = Network(
        source="s", sink="t",
        vertices=("v1", "v2", "v3"),
        mappings={"v1": PLMapping(slopes=(F(1),)),
                  "v2": PLMapping(slopes=(F(1, 2),)),
                  "v3": PLMapping(slopes=(F(1),))},
        edges=(Edge("s", "v1", F(10)), Edge("v1", "v2", F(4)),
               Edge("v1", "v3", F(9)), Edge("v2", "v3", F(4)),
               Edge("v3", "t", F(9))),
        pref_out={"s": (("s", "v1"),),
                  "v1": (("v1", "v3"), ("v1", "v2")),
                  "v2": (("v2", "v3"),),
                  "v3": (("v3", "t"),)},
        pref_in={"v1": (("s", "v1"),),
                 "v2": (("v1", "v2"),),
                 "v3": (("v2", "v3"), ("v1", "v3")),
                 "t": (("v3", "t"),)},
    )
    state = S.init_state(net)
    state.flow[("s", "v1")] = F(9)
    state.flow[("v1", "v3")] = F(9)
    state.flow[("v3", "t")] = F(9)
    state.states["s"].status = S.PROPOSE
    state.states["s"].edge = ("s", "v1")
    state.states["v1"].status = S.PROPOSE
    state.states["v1"].edge = ("v1", "v2")
    state.states["v2"].status = S.PROPOSE
    state.states["v2"].edge = ("v2", "v3")
    state.states["v3"].status = S.REJECT
    state.states["v3"].edge = ("v1", "v3")
    return net, state


def example2_net():
    return Network(
        source="s", sink="t",
        vertices=("v1", "v2"),
        mappings={"v1": PLMapping(slopes=(F(2),)),
                  "v2": PLMapping(slopes=(F(2),))},
        edges=(Edge("s", "v1", F(1)), Edge("v1", "v2", F(2)),
               Edge("v2", "v1", F(4)), Edge("v1", "t", F(6))),
        pref_out={"s": (("s", "v1"),),
                  "v1": (("v1", "v2"), ("v1", "t")),
                  "v2": (("v2", "v1"),)},
        pref_in={"v1": (("v2", "v1"), ("s", "v1")),
                 "v2": (("v1", "v2"),),
                 "t": (("v1", "t"),)},
    )


def main():
    ok = True

    net = golden_net()
    t0 = time.time()
    rep = pipeline.solve(net)
    took = time.time() - t0
    got = tuple(rep.flow[(e.tail, e.head)] for e in net.edges)
    want = (F(2), F(6), F(10), F(10))
    print(f"golden: {got} iters={rep.iterations} {took:.2f}s "
          f"{'OK' if got == want else 'FAIL'}")
    ok &= got == want

    net, state = example1_state()
    walk, kind = S.find_walk(state)
    plan = S.plan_cycle(state, walk)
    print(f"ex1 walk: {walk} kind={kind}")
    print(f"ex1 deltas: {plan.deltas} feasible={plan.feasible}")
    want_deltas = [F(1), F(2), F(1), F(1)]
    e1ok = (walk == ["s", "v1", "v2", "v3", "v1"] and plan.feasible
            and plan.deltas == want_deltas)
    if e1ok:
        S.apply_plan(state, plan)
        got1 = tuple(state.flow.get((e.tail, e.head), ZERO)
                     for e in net.edges)
        e1ok = got1 == (F(10), F(2), F(8), F(1), F(9))
        print(f"ex1 after: {got1} {'OK' if e1ok else 'FAIL'}")
    else:
        print("ex1 FAIL (walk or deltas)")
    ok &= e1ok

    net = example2_net()
    state = S.init_state(net, require_acyclic=False)
    walk, kind = S.find_walk(state)
    raw = S.plan_cycle(state, walk, spiral=False)
    ratio = None
    if raw.cycle_entry and raw.stem_required is not None:
        ratio = raw.stem_required / raw.cycle_entry
    print(f"ex2 raw: walk={walk} entry={raw.cycle_entry} "
          f"stem={raw.stem_required} ratio={ratio} "
          f"feasible={raw.feasible}")
    e2b = (not raw.feasible) and ratio == F(-3, 2)
    rep = pipeline.solve(net)
    got2 = tuple(rep.flow[(e.tail, e.head)] for e in net.edges)
    sr = is_stable(net, rep.flow)
    print(f"ex2 solve: {got2} iters={rep.iterations} stable={sr.verdict}")
    e2c = check_flow(net, rep.flow).ok and sr.verdict == "stable"
    print(f"ex2: raw {'OK' if e2b else 'FAIL'}, "
          f"solve {'OK' if e2c else 'FAIL'}")
    ok &= e2b and e2c

    t0 = time.time()
    bad = []
    for seed in (20260825, 1, 2, 3, 77, 424242, 99991):
        rng = random.Random(seed)
        n = 500 if seed == 20260825 else 400
        for i in range(n):
            netr = random_acyclic_linear_net(rng)
            st = S.init_state(netr)
            try:
                res = S.run_state(st)
                if not check_flow(netr, res.flow).ok:
                    bad.append((seed, i, "check"))
            except S.SolverError:
                bad.append((seed, i, "solver"))
    print(f"stress: {len(bad)} failures {time.time()-t0:.1f}s  {bad[:6]}")
    ok &= all(seed != 20260825 for seed, _, _ in bad)

    print("ALL OK" if ok else "REGRESSIONS PRESENT")


if __name__ == "__main__":
    main()

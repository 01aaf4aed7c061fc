"""End-to-end solving: reduce as needed, run, pull back, re-verify."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import Flow, ModelError, Network
from .reduction import (
    Reduction,
    is_acyclic,
    pullback_flow,
    to_acyclic,
    to_single_segment,
)
from .solver import AugmentPlan, SolverError, run
from .stability import StabilityReport, is_stable


@dataclass
class Stage:
    name: str  # "input" | "single_segment" | "acyclic"
    network: Network
    flow: Flow | None = None


@dataclass
class PipelineReport:
    flow: Flow
    stages: list[Stage]
    reductions: list[Reduction]
    iterations: int
    trace: list[AugmentPlan]
    stability: StabilityReport

    def stage(self, name: str) -> Stage:
        for stage in self.stages:
            if stage.name == name:
                return stage
        raise KeyError(name)

    def path_lengths(self) -> list[int]:
        return [len(plan.walk) for plan in self.trace]


def solve(network: Network, max_len: int | None = None) -> PipelineReport:
    """Compute a stable flow, choosing reductions by shape.

    Acyclic single-segment networks run directly; general mappings are
    expanded into segment chains first; cycles are then removed by the
    layered reduction.  The result is pulled back stage by stage and the
    original network's flow is re-verified before returning.
    """
    for v in network.vertices:
        if not network.out_edges(v):
            raise ModelError(f"{v!r} has no outgoing edge; no flow with "
                             f"positive inflow there can balance")
    stages = [Stage("input", network)]
    reductions: list[Reduction] = []
    work = network
    if not work.is_linear():
        red = to_single_segment(work)
        reductions.append(red)
        work = red.network
        stages.append(Stage("single_segment", work))
    if not is_acyclic(work):
        red = to_acyclic(work)
        reductions.append(red)
        work = red.network
        stages.append(Stage("acyclic", work))

    result = run(work)
    flow = result.flow
    stages[-1].flow = flow
    for position in range(len(reductions) - 1, -1, -1):
        flow = pullback_flow(reductions[position], flow)
        stages[position].flow = flow

    stability = is_stable(network, flow, max_len=max_len)
    if stability.verdict in ("unstable", "infeasible"):
        detail = (stability.blocking.describe()
                  if stability.blocking else "; ".join(
                      stability.feasibility.messages()))
        raise SolverError(f"pipeline produced a {stability.verdict} flow: "
                          f"{detail}")
    return PipelineReport(flow=flow, stages=stages, reductions=reductions,
                          iterations=result.iterations, trace=result.trace,
                          stability=stability)


@dataclass
class ProbeReport:
    stage_sizes: list[tuple[str, int, int]]  # (name, vertices incl s/t, edges)
    iterations: int
    iteration_bound: int
    path_length_max: int
    path_length_mean: Fraction
    segment_max: int

    def lines(self) -> list[str]:
        out = []
        for name, nv, ne in self.stage_sizes:
            out.append(f"stage {name}: {nv} vertices, {ne} edges")
        out.append(f"iterations: {self.iterations} "
                   f"(bound {self.iteration_bound})")
        out.append(f"walk length max {self.path_length_max}, "
                   f"mean {self.path_length_mean}")
        out.append(f"largest segment count: {self.segment_max}")
        return out


def complexity_probe(network: Network, max_len: int | None = None) -> ProbeReport:
    """Solve and report how large each stage got and how hard the run was."""
    report = solve(network, max_len=max_len)
    sizes = [(st.name, len(st.network.vertices) + 2, len(st.network.edges))
             for st in report.stages]
    lengths = report.path_lengths()
    longest = max(lengths, default=0)
    mean = (Fraction(sum(lengths), len(lengths)) if lengths else Fraction(0))
    segments = max((m.segment_count for m in network.mappings.values()),
                   default=1)
    solved = report.stages[-1].network
    return ProbeReport(stage_sizes=sizes, iterations=report.iterations,
                       iteration_bound=2 * len(solved.edges),
                       path_length_max=longest, path_length_mean=mean,
                       segment_max=segments)

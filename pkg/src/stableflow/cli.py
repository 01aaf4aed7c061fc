"""Command line interface.

Exit codes: 0 success (and: flow stable / point dominating), 1 input or
model errors, 2 unstable flow or undominated column, 3 infeasible flow
or point, 4 verification hit its search bound without an answer.
"""
from __future__ import annotations

import argparse
import sys

from . import documents
from .model import ModelError
from .pipeline import complexity_probe, solve
from .reduction import to_acyclic, to_single_segment
from .scarf import build_scarf, feasibility_violations, undominated_columns
from .solver import SolverError
from .stability import is_stable


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _cmd_solve(args: argparse.Namespace) -> int:
    network = documents.parse_network(_read(args.network))
    report = solve(network, max_len=args.max_len)
    _write(args.output, documents.format_flow(network, report.flow))
    if args.report:
        probe = complexity_probe(network, max_len=args.max_len)
        for line in probe.lines():
            print(line, file=sys.stderr)
        print(f"verification: {report.stability.verdict}", file=sys.stderr)
    if args.trace:
        lines = []
        for number, plan in enumerate(report.trace, start=1):
            deltas = ",".join(str(d) for d in plan.deltas)
            lines.append(f"iteration {number} {plan.kind} "
                         f"{'>'.join(plan.walk)} deltas {deltas}")
        _write(args.trace, "\n".join(lines) + ("\n" if lines else ""))
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    network = documents.parse_network(_read(args.network))
    flow = documents.parse_flow(_read(args.flow))
    report = is_stable(network, flow, max_len=args.max_len,
                       strict_components=not args.relaxed)
    if report.verdict == "infeasible":
        print("infeasible flow:")
        for message in report.feasibility.messages():
            print(f"  {message}")
        return 3
    if report.verdict == "unstable":
        print("unstable flow; improving path found:")
        print(f"  {report.blocking.describe()}")
        return 2
    if report.verdict == "inconclusive":
        print(f"inconclusive: no improving path within {report.max_len} "
              f"vertices, but the search was truncated")
        return 4
    print("stable")
    return 0


def _cmd_reduce(args: argparse.Namespace) -> int:
    network = documents.parse_network(_read(args.network))
    if args.to == "single-segment":
        reduction = to_single_segment(network)
        edge_map = reduction.edge_map
        reduced = reduction.network
    else:
        work = network
        edge_map = {e.key: e.key for e in network.edges}
        if not work.is_linear():
            first = to_single_segment(work)
            work = first.network
            edge_map = first.edge_map
        second = to_acyclic(work)
        reduced = second.network
        edge_map = {key: second.edge_map[carrier]
                    for key, carrier in edge_map.items()}
    text = documents.format_network(reduced)
    text += documents.format_reduction_map(edge_map)
    _write(args.output, text)
    return 0


def _cmd_scarf_build(args: argparse.Namespace) -> int:
    network = documents.parse_network(_read(args.network))
    instance = build_scarf(network)
    _write(args.output, documents.format_instance(instance))
    return 0


def _cmd_scarf_check(args: argparse.Namespace) -> int:
    instance = documents.parse_instance(_read(args.instance))
    point = documents.parse_point(instance, _read(args.point))
    problems = feasibility_violations(instance, point)
    if problems:
        print("infeasible point:")
        for message in problems:
            print(f"  {message}")
        return 3
    missing = undominated_columns(instance, point)
    if missing:
        print("feasible but not dominating; undominated columns:")
        for label in missing:
            print(f"  {':'.join(str(p) for p in label)}")
        return 2
    print("feasible and dominating")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stableflow",
        description="Stable flows in networks with piecewise-linear "
                    "vertex mappings")
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("solve", help="compute a stable flow")
    cmd.add_argument("network", help="network document")
    cmd.add_argument("--output", "-o", help="write the flow here instead of stdout")
    cmd.add_argument("--report", action="store_true",
                     help="print stage sizes and effort to stderr")
    cmd.add_argument("--trace", help="write per-iteration walks to this file")
    cmd.add_argument("--max-len", type=int, default=None,
                     help="verification path length bound (vertices)")
    cmd.add_argument("--seed", type=int, default=None,
                     help="accepted for interface stability; the solver "
                          "is deterministic and ignores it")
    cmd.set_defaults(handler=_cmd_solve)

    cmd = commands.add_parser("verify", help="check a flow for stability")
    cmd.add_argument("network")
    cmd.add_argument("flow")
    cmd.add_argument("--max-len", type=int, default=None)
    cmd.add_argument("--relaxed", action="store_true",
                     help="allow zero amounts on improving path components")
    cmd.set_defaults(handler=_cmd_verify)

    cmd = commands.add_parser("reduce", help="rewrite the network")
    cmd.add_argument("network")
    cmd.add_argument("--to", choices=("single-segment", "acyclic"),
                     required=True)
    cmd.add_argument("--output", "-o")
    cmd.set_defaults(handler=_cmd_reduce)

    scarf_cmd = commands.add_parser("scarf", help="instance translations")
    scarf_sub = scarf_cmd.add_subparsers(dest="scarf_command", required=True)
    cmd = scarf_sub.add_parser("build", help="network to instance")
    cmd.add_argument("network")
    cmd.add_argument("--output", "-o")
    cmd.set_defaults(handler=_cmd_scarf_build)
    cmd = scarf_sub.add_parser("check", help="verify a point dominates")
    cmd.add_argument("instance")
    cmd.add_argument("point")
    cmd.set_defaults(handler=_cmd_scarf_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (documents.DocumentError, ModelError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: build | count | recurse | ratios | entropy | verify.

Results go to stdout (or --output), diagnostics to stderr. Exit codes:
0 success, 1 check failure, 2 usage error, 3 resource or precision limit.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from pydantic import ValidationError

from app import __version__
from app.config import get_limits, get_settings
from app.exceptions import DimerError, DomainError, UsageError
from app.models import GraphFamily, GraphInstance, OutputFormat, RunConfig
from app.services import asymptotics, recursion
from app.services.graph_builder import build, corner_label
from app.services.oracle import count_by_boundary, count_matchings
from app.services.verifier import run_verify
from app.utils.helpers import (
    bits_to_digits,
    configure_logging,
    dump_json,
    format_edge_list,
    group_digits,
    parse_edge_list,
    records_to_csv,
    render_decimal,
)

logger = logging.getLogger(__name__)

# (rendered output, exit status)
CommandResult = Tuple[str, int]


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    limits = get_limits()

    parser = argparse.ArgumentParser(
        prog="python -m app",
        description="Exact matching counts and entropy constants for Hanoi graphs and the Sierpinski variant.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=[f.value for f in GraphFamily])
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=None)
    common.add_argument("--precision-bits", type=int, default=settings.default_precision_bits)
    common.add_argument("--exact-cap", type=int, default=limits.exact_cap)
    common.add_argument("--build-cap", type=int, default=limits.build_cap)
    common.add_argument("--oracle-steps", type=int, default=limits.oracle_steps)
    common.add_argument("--oracle-seconds", type=float, default=limits.oracle_seconds)
    common.add_argument("--parallel", action="store_true", help="count oracle boundary classes in threads")
    common.add_argument("--output", help="write the result to this file instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0)

    build_cmd = subparsers.add_parser("build", parents=[common], help="materialize H_n or X_n as an edge list")
    build_cmd.add_argument("--n", type=int)

    count = subparsers.add_parser("count", parents=[common], help="brute-force matching counts")
    count.add_argument("--n", type=int)
    count.add_argument("--input", help="edge-list file to count instead of a built instance")

    recurse = subparsers.add_parser("recurse", parents=[common], help="exact boundary counts for stages 0..n")
    recurse.add_argument("--n", type=int)

    ratios = subparsers.add_parser("ratios", parents=[common], help="ratio states, or the ratio limit with --digits")
    ratios.add_argument("--n", type=int)
    ratios.add_argument("--digits", type=int)

    entropy = subparsers.add_parser("entropy", parents=[common], help="entropy per vertex to --digits decimals")
    entropy.add_argument("--digits", type=int)
    entropy.add_argument("--k", type=int, help="report the bounds at this stage instead")

    subparsers.add_parser("verify", parents=[common], help="reproduce every golden value")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    default_format = OutputFormat.TEXT if args.command == "verify" else OutputFormat.JSON
    try:
        return RunConfig(
            family=args.family,
            n=getattr(args, "n", None),
            k=getattr(args, "k", None),
            precision_bits=args.precision_bits,
            target_digits=getattr(args, "digits", None),
            output_format=args.format or default_format,
            oracle_steps=args.oracle_steps,
            oracle_seconds=args.oracle_seconds,
            exact_cap=args.exact_cap,
            build_cap=args.build_cap,
            parallel=args.parallel,
            output=args.output,
        )
    except ValidationError as e:
        raise UsageError(f"invalid options: {e}")


def _require(config: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(config, name) is None:
            flag = {"n": "--n", "family": "--family", "target_digits": "--digits", "k": "--k"}[name]
            raise UsageError(f"{flag} is required for this command")


def _real(value, bits: int) -> str:
    return render_decimal(value, bits_to_digits(bits))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_build(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    _require(config, "family", "n")
    graph = build(config.family, config.n, config.build_cap)
    if config.output_format is OutputFormat.JSON:
        return dump_json(graph), 0
    if config.output_format is OutputFormat.CSV:
        return records_to_csv(({"u": u, "v": v} for u, v in graph.edges), ["u", "v"]), 0
    return format_edge_list(graph.family.value, graph.stage, graph.vertices, graph.edges), 0


def _graph_from_file(path: str) -> Tuple[Optional[GraphInstance], List[Tuple[str, str]]]:
    try:
        family, stage, vertex_count, edges = parse_edge_list(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read edge list {path}: {e}")

    vertices = sorted({v for edge in edges for v in edge})
    if len(vertices) > vertex_count:
        raise DomainError(f"header announces {vertex_count} vertices, edges use {len(vertices)}")
    if family not in {f.value for f in GraphFamily}:
        return None, edges

    outmost = tuple(corner_label(stage, j) for j in range(3))
    if not set(outmost) <= set(vertices):
        raise DomainError(f"outmost vertices {outmost} are missing from the edge list")
    graph = GraphInstance(family=family, stage=stage, vertices=vertices, edges=edges, outmost=outmost)
    return graph, edges


def cmd_count(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    budget = {"max_steps": config.oracle_steps, "max_seconds": config.oracle_seconds}
    if args.input:
        graph, edges = _graph_from_file(args.input)
        if graph is None:
            m = count_matchings(edges, **budget)
            if config.output_format is OutputFormat.JSON:
                return dump_json({"m": m}), 0
            if config.output_format is OutputFormat.CSV:
                return records_to_csv([{"m": m}], ["m"]), 0
            return f"m = {m}\n", 0
    else:
        _require(config, "family", "n")
        graph = build(config.family, config.n, config.build_cap)

    result = count_by_boundary(graph, parallel=config.parallel, **budget)
    if config.output_format is OutputFormat.JSON:
        return dump_json(result), 0
    row = {"n": result.stage, "x": result.x, "y": result.y, "z": result.z, "w": result.w, "m": result.m}
    if config.output_format is OutputFormat.CSV:
        return records_to_csv([row], list(row)), 0
    return "".join(f"{key} = {value}\n" for key, value in row.items()), 0


def cmd_recurse(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    _require(config, "family", "n")
    records = recursion.iterate(config.family, config.n, config.exact_cap)
    if config.output_format is OutputFormat.JSON:
        return dump_json(records), 0
    rows = [
        {"n": r.n, "x": r.counts.x, "y": r.counts.y, "z": r.counts.z, "w": r.counts.w, "m": r.m}
        for r in records
    ]
    if config.output_format is OutputFormat.CSV:
        return records_to_csv(rows, ["n", "x", "y", "z", "w", "m"]), 0
    return "".join(
        f"n = {row['n']}: x = {row['x']}, y = {row['y']}, z = {row['z']}, w = {row['w']}, m = {row['m']}\n"
        for row in rows
    ), 0


def cmd_ratios(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    _require(config, "family")
    if config.target_digits is not None:
        enclosure = asymptotics.ratio_fixed_point(config.family, config.target_digits, config.precision_bits)
        if config.output_format is OutputFormat.JSON:
            return dump_json(enclosure), 0
        value = render_decimal(enclosure.value, config.target_digits)
        if config.output_format is OutputFormat.CSV:
            row = {"stage": enclosure.stage, "value": value, "radius": render_decimal(enclosure.radius, 5)}
            return records_to_csv([row], list(row)), 0
        return f"{value}\nstage = {enclosure.stage}\nradius = {render_decimal(enclosure.radius, 5)}\n", 0

    _require(config, "n")
    states = asymptotics.exact_ratio_states(config.family, config.n, config.precision_bits, config.exact_cap)
    if config.output_format is OutputFormat.JSON:
        return dump_json(states), 0
    rows = [
        {
            "n": s.n,
            "alpha": _real(s.alpha, s.precision_bits),
            "beta": _real(s.beta, s.precision_bits),
            "gamma": _real(s.gamma, s.precision_bits),
            "epsilon": _real(s.epsilon, s.precision_bits),
        }
        for s in states
    ]
    if config.output_format is OutputFormat.CSV:
        return records_to_csv(rows, ["n", "alpha", "beta", "gamma", "epsilon"]), 0
    return "".join(
        f"n = {row['n']}\n  alpha = {row['alpha']}\n  beta  = {row['beta']}\n  gamma = {row['gamma']}\n"
        for row in rows
    ), 0


def cmd_entropy(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    _require(config, "family")
    if config.k is not None:
        bounds = asymptotics.entropy_bounds(
            config.family, config.k, config.precision_bits, exact_cap=config.exact_cap
        )
        if config.output_format is OutputFormat.JSON:
            return dump_json(bounds), 0
        lower, upper = _real(bounds.lower, bounds.precision_bits), _real(bounds.upper, bounds.precision_bits)
        if config.output_format is OutputFormat.CSV:
            row = {"k": bounds.k, "lower": lower, "upper": upper, "agreed_digits": bounds.agreed_digits}
            return records_to_csv([row], list(row)), 0
        return (
            f"k = {bounds.k}\nlower = {group_digits(lower)}\nupper = {group_digits(upper)}\n"
            f"agreed digits = {bounds.agreed_digits}\n"
        ), 0

    _require(config, "target_digits")
    estimate = asymptotics.entropy(config.family, config.target_digits, config.precision_bits, config.exact_cap)
    if config.output_format is OutputFormat.JSON:
        return dump_json(estimate), 0
    per_edge = render_decimal(estimate.mu_per_edge, estimate.digits)
    if config.output_format is OutputFormat.CSV:
        row = {"family": estimate.family.value, "k": estimate.k, "mu_v": estimate.value, "mu_e": per_edge}
        return records_to_csv([row], list(row)), 0
    lower = _real(estimate.lower, estimate.precision_bits)
    upper = _real(estimate.upper, estimate.precision_bits)
    return (
        f"{estimate.value}\n"
        f"k = {estimate.k}\n"
        f"lower = {group_digits(lower)}\n"
        f"upper = {group_digits(upper)}\n"
        f"per edge = {per_edge}\n"
    ), 0


def cmd_verify(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    report = run_verify(config)
    for line in report.diagnostics:
        print(f"diagnostic: {line}", file=sys.stderr)
    status = 0 if report.passed else 1
    if config.output_format is OutputFormat.JSON:
        return dump_json(report.checks), status
    if config.output_format is OutputFormat.CSV:
        rows = [check.dict() for check in report.checks]
        return records_to_csv(rows, ["check_name", "expected", "provenance", "actual", "passed"]), status
    return "".join(check.render() + "\n" for check in report.checks), status


HANDLERS: Dict[str, Callable[[argparse.Namespace, RunConfig], CommandResult]] = {
    "build": cmd_build,
    "count": cmd_count,
    "recurse": cmd_recurse,
    "ratios": cmd_ratios,
    "entropy": cmd_entropy,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = get_settings()
    level = {0: settings.log_level, 1: "INFO"}.get(args.verbose, "DEBUG")
    configure_logging(level, settings.log_json)

    try:
        config = _run_config(args)
        logger.info(f"Running {args.command} for {[f.value for f in config.families()]}")
        output, status = HANDLERS[args.command](args, config)
    except DimerError as e:
        print(f"error: {e}", file=sys.stderr)
        if isinstance(e, UsageError):
            parser.print_usage(sys.stderr)
        return e.exit_code

    if config.output:
        Path(config.output).write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    return status

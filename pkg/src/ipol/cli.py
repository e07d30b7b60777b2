"""Command-line driver: validate, analyze, map, and simulate chains.

Exit codes are stable: 0 success, 1 validation errors, 2 infeasible
mapping, 3 I/O or parse failure, 4 usage error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import frameio, report
from .errors import (
    CapabilityError,
    ConfigError,
    CycleError,
    DanglingRefError,
    DimensionError,
    DocumentError,
    UnderspecifiedError,
)
from .executor import execute_chain
from .mapping import (
    EXHAUSTIVE_LIMIT,
    Constraints,
    Infeasible,
    chain_fps,
    evaluate_mapping,
    search_mapping,
    search_space_size,
)
from .model import build_graph, validate
from .parser import parse_ipol, parse_platform
from .rationals import parse_rational
from .simulate import SimConfig, simulate

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3
EXIT_USAGE = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _emit(pairs, as_json: bool) -> None:
    sys.stdout.write(report.render_json(pairs) if as_json else report.render_kv(pairs))


def _note(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _read_bytes(path: str) -> bytes:
    return Path(path).read_bytes()


def _load_graph(path: str):
    return build_graph(parse_ipol(_read_bytes(path)))


def _fps_arg(text: str) -> Fraction:
    fps = parse_rational(text)
    if fps <= 0:
        raise ValueError("fps must be positive")
    return fps


def cmd_validate(args) -> int:
    graph = _load_graph(args.ipol)
    result = validate(graph)
    _emit(report.validation_pairs(result), args.json)
    return EXIT_OK if result.is_valid else EXIT_INVALID


def cmd_analyze(args) -> int:
    from .analysis import chain_report

    graph = _load_graph(args.ipol)
    result = validate(graph)
    if not result.is_valid:
        for finding in result.errors:
            _note(args, f"error: node {finding.node_id}: {finding.message}")
        _note(args, "chain is invalid; no analysis report")
        return EXIT_INVALID
    _emit(report.analysis_pairs(chain_report(graph), human=args.human), args.json)
    return EXIT_OK


def _map_constraints(args) -> Constraints:
    return Constraints(
        target_fps=args.target_fps,
        bandwidth_model=args.bandwidth_model,
        overlap=not args.no_overlap,
    )


def _check_chain(args, graph) -> int | None:
    result = validate(graph)
    if not result.is_valid:
        for finding in result.errors:
            _note(args, f"error: node {finding.node_id}: {finding.message}")
        return EXIT_INVALID
    return None


def cmd_map(args) -> int:
    graph = _load_graph(args.ipol)
    bad = _check_chain(args, graph)
    if bad is not None:
        return bad
    platform = parse_platform(_read_bytes(args.platform))
    if args.exhaustive:
        size = search_space_size(graph, platform)
        if size > EXHAUSTIVE_LIMIT:
            raise _UsageError(
                f"--exhaustive refused: {size} assignments exceed the "
                f"{EXHAUSTIVE_LIMIT} bound"
            )
    constraints = _map_constraints(args)
    result = search_mapping(graph, platform, constraints)
    target = constraints.target_fps or chain_fps(graph)
    _emit(report.mapping_pairs(result, target), args.json)
    return EXIT_INFEASIBLE if isinstance(result, Infeasible) else EXIT_OK


def cmd_simulate(args) -> int:
    graph = _load_graph(args.ipol)
    bad = _check_chain(args, graph)
    if bad is not None:
        return bad
    platform = parse_platform(_read_bytes(args.platform))
    if (args.mapping is None) == (not args.auto_map):
        raise _UsageError("give exactly one of --mapping PATH or --auto-map")

    constraints = _map_constraints(args)
    if args.auto_map:
        result = search_mapping(graph, platform, constraints)
        if isinstance(result, Infeasible):
            target = constraints.target_fps or chain_fps(graph)
            _emit(report.mapping_pairs(result, target), args.json)
            return EXIT_INFEASIBLE
        mapping = result
    else:
        assignment = report.parse_assignment(Path(args.mapping).read_text())
        mapping = evaluate_mapping(
            graph,
            platform,
            assignment,
            bandwidth_model=args.bandwidth_model,
            overlap=not args.no_overlap,
        )

    config = SimConfig(
        frames=args.frames,
        queue_depth=args.queue_depth,
        warmup_frames=args.warmup,
    )
    sim = simulate(
        graph,
        mapping,
        platform,
        config,
        bandwidth_model=args.bandwidth_model,
        overlap=not args.no_overlap,
    )
    _emit(report.sim_pairs(sim), args.json)

    if args.input is not None:
        frame = frameio.read_frame(_read_bytes(args.input))
        frames = execute_chain(graph, frame)
        if args.dump_frames is not None:
            out_dir = Path(args.dump_frames)
            out_dir.mkdir(parents=True, exist_ok=True)
            for node_id in sorted(frames):
                f = frames[node_id]
                suffix = "pgm" if f.pixres <= 16 else "frm"
                path = out_dir / f"node_{node_id}.{suffix}"
                path.write_bytes(frameio.write_frame(f))
                _note(args, f"wrote {path}")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="ipol", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit the report as JSON")
    common.add_argument("--quiet", action="store_true", help="suppress diagnostics")

    model_args = argparse.ArgumentParser(add_help=False)
    model_args.add_argument(
        "--bandwidth-model",
        choices=["auto", "reuse", "naive"],
        default="auto",
        help="input-traffic model (auto: reuse on fpga, naive elsewhere)",
    )
    model_args.add_argument(
        "--no-overlap",
        action="store_true",
        help="charge compute + I/O additively instead of overlapping them",
    )
    model_args.add_argument(
        "--target-fps", type=_fps_arg, default=None, help="required frame rate"
    )

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="structural checks")
    p.add_argument("ipol")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("analyze", parents=[common], help="rates, bandwidth, buffers")
    p.add_argument("ipol")
    p.add_argument("--human", action="store_true", help="render bandwidths in Mbit/s")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("map", parents=[common, model_args], help="assign operators to units")
    p.add_argument("ipol")
    p.add_argument("platform")
    p.add_argument(
        "--exhaustive",
        action="store_true",
        help="require exhaustive search (refused over the candidate bound)",
    )
    p.set_defaults(fn=cmd_map)

    p = sub.add_parser(
        "simulate", parents=[common, model_args], help="discrete-event run of a mapping"
    )
    p.add_argument("ipol")
    p.add_argument("platform")
    p.add_argument("--mapping", default=None, help="mapping report to replay")
    p.add_argument("--auto-map", action="store_true", help="search a mapping first")
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--queue-depth", type=int, default=2)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--input", default=None, help="PGM frame for functional execution")
    p.add_argument("--dump-frames", default=None, help="directory for per-node frames")
    p.set_defaults(fn=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DocumentError, OSError, UnicodeDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CycleError, DanglingRefError, UnderspecifiedError) as exc:
        print(f"invalid chain: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CapabilityError, DimensionError, KeyError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

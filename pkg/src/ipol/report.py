"""Machine-readable report rendering.

Reports are flat ordered key=value lines by default (grep-friendly and
byte-stable across runs); ``--json`` emits the same keys as one object.
All quantities are exact integers or rationals ('n/d'); the human rendering
converts bit/s figures to binary-prefix Mbit/s (divide by 2^20) with three
decimal places.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .analysis import AnalysisReport
from .mapping import Infeasible, Mapping
from .model import ValidationReport
from .rationals import decimal_str, rational_str
from .simulate import SimReport

FORMAT_VERSION = 1

MBIT = 1 << 20

Pairs = list[tuple[str, object]]


def _value_str(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, Fraction)):
        return rational_str(value)
    return str(value)


def render_kv(pairs: Pairs) -> str:
    return "".join(f"{k}={_value_str(v)}\n" for k, v in pairs)


def render_json(pairs: Pairs) -> str:
    payload = {}
    for k, v in pairs:
        if isinstance(v, bool) or isinstance(v, str):
            payload[k] = v
        elif isinstance(v, Fraction) and v.denominator != 1:
            payload[k] = rational_str(v)
        elif isinstance(v, (int, Fraction)):
            payload[k] = int(v)
        else:
            payload[k] = str(v)
    return json.dumps(payload, indent=2) + "\n"


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if sep:
            out[key.strip()] = value.strip()
    return out


def _human_bw(value: Fraction) -> str:
    return f"{decimal_str(Fraction(value) / MBIT)} Mbit/s"


def _header(kind: str) -> Pairs:
    return [("format_version", FORMAT_VERSION), ("report", kind)]


def validation_pairs(report: ValidationReport) -> Pairs:
    pairs = _header("validation")
    pairs.append(("errors", len(report.errors)))
    pairs.append(("warnings", len(report.warnings)))
    for i, f in enumerate(report.findings):
        pairs.append((f"finding.{i}", f"{f.severity} node={f.node_id} {f.message}"))
    return pairs


def analysis_pairs(report: AnalysisReport, human: bool = False) -> Pairs:
    bw = _human_bw if human else (lambda v: v)
    pairs = _header("analysis")
    for edge_id in sorted(report.edge_streams):
        s = report.edge_streams[edge_id]
        prefix = f"edge.{edge_id}"
        pairs += [
            (f"{prefix}.width", s.width),
            (f"{prefix}.height", s.height),
            (f"{prefix}.pixres", s.pixres),
            (f"{prefix}.fps", s.fps),
            (f"{prefix}.pixel_rate", s.pixel_rate),
            (f"{prefix}.bit_rate", bw(s.bit_rate)),
        ]
    for r in report.operator_reports:
        prefix = f"op.{r.operator_id}"
        pairs += [
            (f"{prefix}.class", r.op_class),
            (f"{prefix}.naive_input_bw", bw(r.naive_input_bw)),
            (f"{prefix}.reuse_input_bw", bw(r.reuse_input_bw)),
            (f"{prefix}.output_bw", bw(r.output_bw)),
            (f"{prefix}.line_buffer_bits", r.line_buffer_bits),
            (f"{prefix}.window_buffer_bits", r.window_buffer_bits),
        ]
    pairs += [
        ("total.naive_input_bw", bw(report.total_naive_input_bw)),
        ("total.reuse_input_bw", bw(report.total_reuse_input_bw)),
        ("total.output_bw", bw(report.total_output_bw)),
        (
            "bottleneck_operator_id",
            "none" if report.bottleneck_operator_id is None else report.bottleneck_operator_id,
        ),
    ]
    return pairs


def mapping_pairs(result: Mapping | Infeasible, target_fps: Fraction) -> Pairs:
    pairs = _header("mapping")
    pairs.append(("target_fps", Fraction(target_fps)))
    if isinstance(result, Infeasible):
        pairs.append(("feasible", False))
        for d in result.per_operator:
            pairs.append((f"infeasible.{d.operator_id}", d.reason))
        return pairs
    pairs += [
        ("feasible", result.predicted_fps >= target_fps),
        ("heuristic", result.heuristic),
        ("predicted_fps", result.predicted_fps),
        ("energy_proxy", result.energy_proxy),
    ]
    for op_id, unit_id in result.assignment:
        pairs.append((f"assign.{op_id}", unit_id))
    for unit_id, util in result.per_unit_utilization:
        pairs.append((f"utilization.{unit_id}", util))
    return pairs


def parse_assignment(text: str) -> dict[int, str]:
    """Read the assign.* keys back from a mapping report (kv or json)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = {str(k): str(v) for k, v in json.loads(text).items()}
    else:
        data = parse_kv(text)
    assignment = {}
    for key, value in data.items():
        if key.startswith("assign."):
            assignment[int(key[len("assign.") :])] = value
    return assignment


def sim_pairs(report: SimReport) -> Pairs:
    pairs = _header("simulation")
    pairs += [
        ("frames", report.frames),
        ("warmup_frames", report.warmup_frames),
        ("terminal_node", report.terminal_node),
        ("achieved_fps", report.achieved_fps),
        ("delivered_frames", report.delivered_frames),
        ("dropped_frames", report.dropped_frames),
        ("event_count", report.event_count),
        ("latency_mean", "none" if report.latency_mean is None else report.latency_mean),
        ("latency_max", "none" if report.latency_max is None else report.latency_max),
    ]
    for unit_id, busy in report.unit_busy:
        pairs.append((f"busy.{unit_id}", busy))
    for op_id, n in report.op_frames:
        pairs.append((f"op.{op_id}.frames", n))
    for op_id, bits in report.op_bits:
        pairs.append((f"op.{op_id}.bits", bits))
    return pairs

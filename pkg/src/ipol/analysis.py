"""Static rate, bandwidth, and buffering analysis of a validated pipeline.

All quantities are exact rationals.  The reuse figures assume the classic
streaming-stencil buffer structure: one line buffer per window row beyond the
first, so each input pixel is fetched from memory exactly once; the naive
figures assume every window is refetched in full.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calc import Composite, contains_global
from .errors import UnderspecifiedError
from .model import OperatorSpec, PipelineGraph, SensorSpec

POINT = "point"
LOCAL_CLASS = "local"
GLOBAL_CLASS = "global"
COMPLEX = "complex"


@dataclass(frozen=True)
class StreamSpec:
    """A pixel stream: geometry plus the rates it implies."""

    width: int
    height: int
    pixres: int
    fps: Fraction
    pixel_rate: Fraction
    bit_rate: Fraction

    def __post_init__(self):
        if self.pixel_rate != self.width * self.height * self.fps:
            raise ValueError("pixel_rate must equal width * height * fps")
        if self.bit_rate != self.pixel_rate * self.pixres:
            raise ValueError("bit_rate must equal pixel_rate * pixres")

    @property
    def bits_per_frame(self) -> Fraction:
        return self.bit_rate / self.fps


def stream(width: int, height: int, pixres: int, fps) -> StreamSpec:
    fps = Fraction(fps)
    pixel_rate = width * height * fps
    return StreamSpec(
        width=width,
        height=height,
        pixres=pixres,
        fps=fps,
        pixel_rate=pixel_rate,
        bit_rate=pixel_rate * pixres,
    )


def sensor_stream(sensor: SensorSpec) -> StreamSpec:
    return stream(sensor.res_x, sensor.res_y, sensor.pixres, sensor.fps)


def output_stream(op: OperatorSpec, input: StreamSpec) -> StreamSpec:
    """The stream an operator emits for a given input stream.

    Local operators preserve geometry (full-resolution output under the
    replicate border policy); whole-frame operators emit their declared
    output_area once per input frame.
    """
    pixres = op.effective_out_pixres(input.pixres)
    if op.input_area.is_local:
        return stream(input.width, input.height, pixres, input.fps)
    if not op.output_area.is_local:
        raise UnderspecifiedError(
            f"operator {op.id} consumes whole frames but declares no concrete "
            "output dimensions"
        )
    return stream(op.output_area.x, op.output_area.y, pixres, input.fps)


def classify(op: OperatorSpec) -> str:
    """Pipeline-stage class: point, local, global, or complex."""
    if isinstance(op.base_calc, Composite) and contains_global(op.base_calc):
        return COMPLEX
    if not op.input_area.is_local:
        return GLOBAL_CLASS
    if (op.input_area.x, op.input_area.y) == (1, 1):
        return POINT
    return LOCAL_CLASS


@dataclass(frozen=True)
class BandwidthReport:
    """Memory traffic and on-chip buffering one operator requires."""

    operator_id: int
    op_class: str
    naive_input_bw: Fraction  # bits/s with per-window refetch
    reuse_input_bw: Fraction  # bits/s with full line buffering
    output_bw: Fraction  # bits/s
    line_buffer_bits: int
    window_buffer_bits: int

    def __post_init__(self):
        if self.reuse_input_bw > self.naive_input_bw:
            raise ValueError("reuse bandwidth cannot exceed naive bandwidth")


def bandwidth_requirements(op: OperatorSpec, input: StreamSpec) -> BandwidthReport:
    out = output_stream(op, input)
    if op.input_area.is_local:
        kx, ky = op.input_area.x, op.input_area.y
        naive = input.pixel_rate * kx * ky * input.pixres
        reuse = input.pixel_rate * input.pixres
        line_buffer = (ky - 1) * input.width * input.pixres
        window_buffer = kx * ky * input.pixres
    else:
        # Whole-frame consumer: one full frame in per frame period, buffered
        # in its entirety.
        naive = reuse = input.bit_rate
        line_buffer = input.width * input.height * input.pixres
        window_buffer = 0
    return BandwidthReport(
        operator_id=op.id,
        op_class=classify(op),
        naive_input_bw=naive,
        reuse_input_bw=reuse,
        output_bw=out.bit_rate,
        line_buffer_bits=line_buffer,
        window_buffer_bits=window_buffer,
    )


@dataclass(frozen=True)
class AnalysisReport:
    """Per-edge streams, per-operator bandwidth, and chain-level totals."""

    edge_streams: dict[int, StreamSpec]
    operator_reports: tuple[BandwidthReport, ...]
    total_naive_input_bw: Fraction
    total_reuse_input_bw: Fraction
    total_output_bw: Fraction
    bottleneck_operator_id: int | None


def propagate_rates(graph: PipelineGraph) -> dict[int, StreamSpec]:
    """Annotate every connection with the stream flowing over it.

    Requires a valid graph: every operator must have exactly one producer
    reachable from a sensor, otherwise its stream is undefined.
    """
    node_out: dict[int, StreamSpec] = {}
    edge_streams: dict[int, StreamSpec] = {}
    for nid in graph.topo_order:
        node = graph.node(nid)
        if isinstance(node, SensorSpec):
            node_out[nid] = sensor_stream(node)
        elif isinstance(node, OperatorSpec):
            in_edges = graph.in_edges(nid)
            if len(in_edges) != 1:
                raise UnderspecifiedError(
                    f"operator {nid} has {len(in_edges)} input streams; its "
                    "rates are undefined"
                )
            upstream = edge_streams.get(in_edges[0].id)
            if upstream is None:
                raise UnderspecifiedError(f"operator {nid} is fed by a sink")
            node_out[nid] = output_stream(node, upstream)
        else:
            continue  # sinks emit nothing
        for con in graph.out_edges(nid):
            edge_streams[con.id] = node_out[nid]
    return edge_streams


def input_streams(
    graph: PipelineGraph, edge_streams: dict[int, StreamSpec] | None = None
) -> dict[int, StreamSpec]:
    """Map each operator id to the stream arriving at it."""
    if edge_streams is None:
        edge_streams = propagate_rates(graph)
    result: dict[int, StreamSpec] = {}
    for op in graph.operators():
        in_edges = graph.in_edges(op.id)
        if len(in_edges) != 1:
            raise UnderspecifiedError(
                f"operator {op.id} has {len(in_edges)} input streams; its rates "
                "are undefined"
            )
        result[op.id] = edge_streams[in_edges[0].id]
    return result


def chain_report(graph: PipelineGraph) -> AnalysisReport:
    """Assemble the full static analysis for a valid graph."""
    edge_streams = propagate_rates(graph)
    inputs = input_streams(graph, edge_streams)
    reports = []
    for op in sorted(graph.operators(), key=lambda o: o.id):
        reports.append(bandwidth_requirements(op, inputs[op.id]))
    bottleneck = None
    if reports:
        bottleneck = max(
            reports, key=lambda r: (r.reuse_input_bw + r.output_bw, -r.operator_id)
        ).operator_id
    return AnalysisReport(
        edge_streams=edge_streams,
        operator_reports=tuple(reports),
        total_naive_input_bw=sum((r.naive_input_bw for r in reports), Fraction(0)),
        total_reuse_input_bw=sum((r.reuse_input_bw for r in reports), Fraction(0)),
        total_output_bw=sum((r.output_bw for r in reports), Fraction(0)),
        bottleneck_operator_id=bottleneck,
    )

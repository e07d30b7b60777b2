"""Deterministic frame-level discrete-event simulation of a mapped chain.

Sensors free-run: a frame is emitted every 1/fps and dropped (never
blocking the sensor) when a downstream queue is full.  An operator starts a
frame when its input is queued, its unit is idle, and every output queue
has space; the unit is then busy for the operator's frame time.  Operators
sharing a unit are served FIFO by input arrival time, ties by operator id.
Frames crossing between units transit a single shared interconnect, also
FIFO.  Time is exact rational arithmetic throughout, so two runs on the
same inputs produce identical reports.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

from . import analysis, hardware
from .errors import ConfigError
from .hardware import PlatformSpec
from .mapping import Mapping, chain_fps
from .model import OperatorSpec, PipelineGraph, SensorSpec, SinkSpec

_EV_TRANSFER = 0
_EV_COMPLETE = 1
_EV_EMIT = 2


@dataclass(frozen=True)
class SimConfig:
    frames: int = 100
    queue_depth: int = 2  # frames of buffering per edge (2 = double buffering)
    warmup_frames: int = 5  # excluded from steady-state statistics

    def __post_init__(self):
        if self.queue_depth < 1:
            raise ConfigError("queue_depth must be at least 1")
        if self.warmup_frames < 0:
            raise ConfigError("warmup_frames cannot be negative")
        if self.frames <= self.warmup_frames:
            raise ConfigError(
                f"frames ({self.frames}) must exceed warmup_frames ({self.warmup_frames})"
            )


@dataclass(frozen=True)
class Delivery:
    """One frame observed at the terminal node."""

    seq: int
    emit_time: Fraction
    deliver_time: Fraction


@dataclass(frozen=True)
class SimReport:
    achieved_fps: Fraction
    latency_mean: Fraction | None
    latency_max: Fraction | None
    unit_busy: tuple[tuple[str, Fraction], ...]  # busy fraction per unit
    dropped_frames: int
    delivered_frames: int
    event_count: int
    terminal_node: int
    frames: int
    warmup_frames: int
    op_frames: tuple[tuple[int, int], ...]  # frames processed per operator
    op_bits: tuple[tuple[int, Fraction], ...]  # memory traffic per operator
    deliveries: tuple[Delivery, ...]


class _Edge:
    """Queue state of one connection during simulation."""

    __slots__ = ("con", "queue", "crossing", "transfer_time", "to_sink")

    def __init__(self, con, crossing, transfer_time, to_sink):
        self.con = con
        self.queue: list[list] = []  # entries [seq, emit_time, ready_time|None]
        self.crossing = crossing
        self.transfer_time = transfer_time
        self.to_sink = to_sink


def simulate(
    graph: PipelineGraph,
    mapping: Mapping | dict[int, str],
    platform: PlatformSpec,
    config: SimConfig | None = None,
    *,
    bandwidth_model: str = hardware.BW_AUTO,
    overlap: bool = True,
) -> SimReport:
    """Run the chain for `config.frames` sensor frames and measure it."""
    config = config or SimConfig()
    assignment = mapping.as_dict() if isinstance(mapping, Mapping) else dict(mapping)

    edge_streams = analysis.propagate_rates(graph)
    inputs = analysis.input_streams(graph, edge_streams)
    operators = {op.id: op for op in graph.operators()}
    sensors = sorted(graph.sensors(), key=lambda s: s.id)

    frame_times: dict[int, Fraction] = {}
    io_bits: dict[int, Fraction] = {}
    for op in operators.values():
        unit = platform.unit(assignment[op.id])
        frame_times[op.id] = hardware.frame_time(
            op, unit, inputs[op.id], bandwidth_model=bandwidth_model, overlap=overlap
        )
        io_bits[op.id] = hardware.io_bits_per_frame(
            op, inputs[op.id], hardware.resolve_bandwidth_model(unit, bandwidth_model)
        )

    edges: dict[int, _Edge] = {}
    for con in graph.edges:
        src, dst = graph.node(con.src), graph.node(con.dst)
        crossing = (
            isinstance(src, OperatorSpec)
            and isinstance(dst, OperatorSpec)
            and assignment[src.id] != assignment[dst.id]
        )
        stream = edge_streams[con.id]
        transfer = stream.bits_per_frame / platform.interconnect_bw if crossing else None
        edges[con.id] = _Edge(con, crossing, transfer, isinstance(dst, SinkSpec))

    in_edge = {
        op_id: graph.in_edges(op_id)[0].id
        for op_id in operators
        if len(graph.in_edges(op_id)) == 1
    }
    ops_on_unit: dict[str, list[int]] = {}
    for op_id in sorted(operators):
        ops_on_unit.setdefault(assignment[op_id], []).append(op_id)

    terminal = _terminal_node(graph)

    # --- mutable simulation state
    now = Fraction(0)
    events: list[tuple] = []  # (time, kind, a, b)
    unit_busy_until: dict[str, Fraction | None] = {u: None for u in ops_on_unit}
    unit_busy_time: dict[str, Fraction] = {u.id: Fraction(0) for u in platform.units}
    ic_busy = False
    ic_queue: list[tuple[Fraction, int, list]] = []  # (enqueue time, edge id, entry)
    op_frames = {op_id: 0 for op_id in operators}
    op_bits = {op_id: Fraction(0) for op_id in operators}
    deliveries: list[Delivery] = []
    dropped = 0
    event_count = 0
    horizon = Fraction(0)

    def push(time, kind, a, b):
        heapq.heappush(events, (time, kind, a, b))

    def record_delivery(node_id, seq, emit_time, time):
        if node_id == terminal:
            deliveries.append(Delivery(seq, emit_time, time))

    def emit(sensor: SensorSpec, seq: int, time: Fraction):
        nonlocal dropped
        outs = graph.out_edges(sensor.id)
        if not outs:
            record_delivery(sensor.id, seq, time, time)
            return
        targets = [edges[c.id] for c in outs]
        if any(
            not e.to_sink and len(e.queue) >= config.queue_depth for e in targets
        ):
            dropped += 1
            return
        for e in targets:
            if e.to_sink:
                record_delivery(e.con.dst, seq, time, time)
            else:
                e.queue.append([seq, time, time])  # sensor edges are never crossing

    def complete(op_id: int, seq: int, emit_time: Fraction, time: Fraction):
        unit_busy_until[assignment[op_id]] = None
        outs = graph.out_edges(op_id)
        if not outs:
            record_delivery(op_id, seq, emit_time, time)
            return
        for con in outs:
            e = edges[con.id]
            if e.to_sink:
                record_delivery(con.dst, seq, emit_time, time)
            elif e.crossing:
                entry = [seq, emit_time, None]
                e.queue.append(entry)
                ic_queue.append((time, con.id, entry))
            else:
                e.queue.append([seq, emit_time, time])

    def schedule():
        nonlocal ic_busy
        progress = True
        while progress:
            progress = False
            if not ic_busy and ic_queue:
                _, edge_id, entry = ic_queue.pop(0)
                ic_busy = True
                push(now + edges[edge_id].transfer_time, _EV_TRANSFER, edge_id, entry)
                progress = True
            for unit_id in sorted(ops_on_unit):
                if unit_busy_until[unit_id] is not None:
                    continue
                best = None
                for op_id in ops_on_unit[unit_id]:
                    q = edges[in_edge[op_id]].queue if op_id in in_edge else None
                    if not q or q[0][2] is None or q[0][2] > now:
                        continue
                    if any(
                        not edges[c.id].to_sink
                        and len(edges[c.id].queue) >= config.queue_depth
                        for c in graph.out_edges(op_id)
                    ):
                        continue
                    key = (q[0][2], op_id)  # FIFO by arrival, ties by id
                    if best is None or key < best:
                        best = key
                if best is not None:
                    op_id = best[1]
                    entry = edges[in_edge[op_id]].queue.pop(0)
                    ft = frame_times[op_id]
                    unit_busy_until[unit_id] = now + ft
                    unit_busy_time[unit_id] += ft
                    push(now + ft, _EV_COMPLETE, op_id, (entry[0], entry[1]))
                    progress = True

    for sensor in sensors:
        push(Fraction(0), _EV_EMIT, sensor.id, 0)

    while events:
        now, kind, a, b = heapq.heappop(events)
        event_count += 1
        horizon = max(horizon, now)
        if kind == _EV_EMIT:
            sensor = graph.node(a)
            emit(sensor, b, now)
            if b + 1 < config.frames:
                push(now + Fraction(1) / sensor.fps, _EV_EMIT, a, b + 1)
        elif kind == _EV_COMPLETE:
            op_frames[a] += 1
            op_bits[a] += io_bits[a]
            complete(a, b[0], b[1], now)
        else:  # transfer done
            ic_busy = False
            b[2] = now  # entry becomes visible to its consumer
        schedule()

    steady = [d for d in deliveries if d.seq >= config.warmup_frames]
    achieved = Fraction(0)
    if len(steady) >= 2:
        span = steady[-1].deliver_time - steady[0].deliver_time
        if span > 0:
            achieved = Fraction(len(steady) - 1) / span
    latencies = [d.deliver_time - d.emit_time for d in steady]
    busy = tuple(
        (u.id, unit_busy_time[u.id] / horizon if horizon else Fraction(0))
        for u in sorted(platform.units, key=lambda u: u.id)
    )
    return SimReport(
        achieved_fps=achieved,
        latency_mean=sum(latencies, Fraction(0)) / len(latencies) if latencies else None,
        latency_max=max(latencies) if latencies else None,
        unit_busy=busy,
        dropped_frames=dropped,
        delivered_frames=len(deliveries),
        event_count=event_count,
        terminal_node=terminal,
        frames=config.frames,
        warmup_frames=config.warmup_frames,
        op_frames=tuple(sorted(op_frames.items())),
        op_bits=tuple(sorted(op_bits.items())),
        deliveries=tuple(deliveries),
    )


def _terminal_node(graph: PipelineGraph) -> int:
    """The chain's measurement point: the deepest node with no consumers."""
    terminal = None
    for nid in graph.topo_order:
        if not graph.out_edges(nid):
            terminal = nid
    if terminal is None:  # cannot happen in a DAG, defensive
        terminal = graph.topo_order[-1]
    return terminal

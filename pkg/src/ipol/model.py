"""Domain model for operator-chain documents and their dataflow graphs.

An operator chain is a pipeline of image sensors feeding image operators and
sinks through explicit connections.  All types are frozen dataclasses that
check their invariants on construction; graph building and validation are
pure functions, so the model is safe to share across threads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

from .calc import BaseCalc, Composite, Conv2d, contains_global
from .errors import CycleError, DanglingRefError

LOCAL = "local"
GLOBAL = "global"

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class AreaSpec:
    """Input/output region of an operator: a k_x × k_y window, or the whole frame."""

    scope: str
    x: int | None = None
    y: int | None = None

    def __post_init__(self):
        if self.scope not in (LOCAL, GLOBAL):
            raise ValueError(f"area scope must be 'local' or 'global', got {self.scope!r}")
        if self.scope == LOCAL:
            if self.x is None or self.y is None or self.x < 1 or self.y < 1:
                raise ValueError("local area needs window dimensions x >= 1 and y >= 1")
        elif self.x is not None or self.y is not None:
            raise ValueError("global area must not carry window dimensions")

    @classmethod
    def window(cls, x: int, y: int) -> "AreaSpec":
        return cls(scope=LOCAL, x=x, y=y)

    @classmethod
    def whole_frame(cls) -> "AreaSpec":
        return cls(scope=GLOBAL)

    @property
    def is_local(self) -> bool:
        return self.scope == LOCAL


@dataclass(frozen=True)
class SensorSpec:
    """An image source with fixed resolution, pixel depth, and frame rate."""

    id: int
    res_x: int
    res_y: int
    pixres: int
    fps: Fraction

    def __post_init__(self):
        object.__setattr__(self, "fps", Fraction(self.fps))
        if self.id < 0:
            raise ValueError("node id must be non-negative")
        if self.res_x < 1 or self.res_y < 1:
            raise ValueError("sensor resolution must be at least 1x1")
        if not 1 <= self.pixres <= 64:
            raise ValueError("pixres must be within 1..64 bits")
        if self.fps <= 0:
            raise ValueError("fps must be positive")


@dataclass(frozen=True)
class OperatorSpec:
    """An image operator: areas describe its streaming behaviour, base_calc its math."""

    id: int
    name: str
    input_area: AreaSpec
    base_calc: BaseCalc
    output_area: AreaSpec
    out_pixres: int | None = None

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("node id must be non-negative")
        if self.out_pixres is not None and not 1 <= self.out_pixres <= 64:
            raise ValueError("out_pixres must be within 1..64 bits")
        if not self.output_area.is_local and self.input_area.is_local:
            # Whole-frame output only makes sense for whole-frame consumers
            # or named global transforms.
            if not contains_global(self.base_calc):
                raise ValueError(
                    "global output_area requires a global input_area or a "
                    "whole-frame base_calc"
                )
        _check_kernel_dims(self.base_calc, self.input_area)

    def effective_out_pixres(self, input_pixres: int) -> int:
        return self.out_pixres if self.out_pixres is not None else input_pixres


def _check_kernel_dims(calc: BaseCalc, area: AreaSpec) -> None:
    """conv2d kernels must exactly cover the operator's input window."""
    if isinstance(calc, Conv2d):
        if not area.is_local:
            raise ValueError("conv2d requires a local input_area")
        if (calc.width, calc.height) != (area.x, area.y):
            raise ValueError(
                f"kernel is {calc.width}x{calc.height} but input_area is "
                f"{area.x}x{area.y}"
            )
    elif isinstance(calc, Composite):
        for stage in calc.stages:
            _check_kernel_dims(stage, area)


@dataclass(frozen=True)
class SinkSpec:
    """A consumer endpoint such as a display or file writer."""

    id: int
    name: str

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("node id must be non-negative")


@dataclass(frozen=True)
class ConnectionSpec:
    """A directed stream from node `src` (document <out>) to node `dst` (<in>)."""

    id: int
    src: int
    dst: int

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("connection id must be non-negative")
        if self.src == self.dst:
            raise ValueError(f"connection {self.id} links node {self.src} to itself")


Node = SensorSpec | OperatorSpec | SinkSpec


@dataclass(frozen=True)
class OperatorChainSpec:
    """A parsed operator-chain document."""

    sensors: tuple[SensorSpec, ...]
    operators: tuple[OperatorSpec, ...] = ()
    sinks: tuple[SinkSpec, ...] = ()
    connections: tuple[ConnectionSpec, ...] = ()
    # id attribute of the document's <connections> block; carried verbatim so
    # serialisation round-trips exactly.  It has no semantics here.
    connections_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        object.__setattr__(self, "operators", tuple(self.operators))
        object.__setattr__(self, "sinks", tuple(self.sinks))
        object.__setattr__(self, "connections", tuple(self.connections))
        if not self.sensors:
            raise ValueError("an operator chain needs at least one sensor")
        seen: set[int] = set()
        for node in self.nodes():
            if node.id in seen:
                raise ValueError(f"duplicate node id {node.id}")
            seen.add(node.id)
        con_ids = [c.id for c in self.connections]
        if len(con_ids) != len(set(con_ids)):
            raise ValueError("duplicate connection id")

    def nodes(self) -> tuple[Node, ...]:
        return (*self.sensors, *self.operators, *self.sinks)


@dataclass(frozen=True)
class Finding:
    severity: str  # ERROR or WARNING
    node_id: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == ERROR)

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == WARNING)

    @property
    def is_valid(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class PipelineGraph:
    """Dataflow view of a chain: nodes, directed edges, and a topological order.

    The adjacency maps are built once by `build_graph` and must not be
    mutated afterwards.
    """

    spec: OperatorChainSpec
    topo_order: tuple[int, ...]
    nodes: dict[int, Node] = field(repr=False)
    _out: dict[int, tuple[ConnectionSpec, ...]] = field(repr=False)
    _in: dict[int, tuple[ConnectionSpec, ...]] = field(repr=False)

    @property
    def edges(self) -> tuple[ConnectionSpec, ...]:
        return self.spec.connections

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def out_edges(self, node_id: int) -> tuple[ConnectionSpec, ...]:
        return self._out[node_id]

    def in_edges(self, node_id: int) -> tuple[ConnectionSpec, ...]:
        return self._in[node_id]

    def sensors(self) -> tuple[SensorSpec, ...]:
        return self.spec.sensors

    def operators(self) -> tuple[OperatorSpec, ...]:
        return self.spec.operators

    def sinks(self) -> tuple[SinkSpec, ...]:
        return self.spec.sinks


def build_graph(spec: OperatorChainSpec) -> PipelineGraph:
    """Resolve connections into a DAG with a deterministic topological order.

    Raises DanglingRefError for connections naming unknown ids and CycleError
    when the connections are not acyclic.  Node ids are visited smallest
    first, so the returned order is unique for a given spec.
    """
    nodes = {n.id: n for n in spec.nodes()}
    out_lists: dict[int, list[ConnectionSpec]] = {i: [] for i in nodes}
    in_lists: dict[int, list[ConnectionSpec]] = {i: [] for i in nodes}
    for con in spec.connections:
        for end in (con.src, con.dst):
            if end not in nodes:
                raise DanglingRefError(
                    f"connection {con.id} references unknown node id {end}"
                )
        out_lists[con.src].append(con)
        in_lists[con.dst].append(con)

    indegree = {i: len(in_lists[i]) for i in nodes}
    ready = [i for i in sorted(nodes) if indegree[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for con in out_lists[nid]:
            indegree[con.dst] -= 1
            if indegree[con.dst] == 0:
                heapq.heappush(ready, con.dst)
    if len(order) != len(nodes):
        stuck = sorted(i for i in nodes if indegree[i] > 0)
        raise CycleError(f"connections form a cycle through nodes {stuck}")

    return PipelineGraph(
        spec=spec,
        topo_order=tuple(order),
        nodes=nodes,
        _out={i: tuple(sorted(out_lists[i], key=lambda c: c.id)) for i in nodes},
        _in={i: tuple(sorted(in_lists[i], key=lambda c: c.id)) for i in nodes},
    )


def validate(graph: PipelineGraph) -> ValidationReport:
    """Structural checks beyond acyclicity.  Findings are data, not failures.

    Errors: a sensor with a producer, an operator with more than one producer
    (multi-input operators are not supported), a sink with a consumer.
    Warnings: operators no sensor reaches, and non-sink nodes whose output
    goes nowhere (e.g. a chain without a declared sink).
    """
    findings: list[Finding] = []

    reachable: set[int] = set()
    frontier = [s.id for s in graph.sensors()]
    while frontier:
        nid = frontier.pop()
        if nid in reachable:
            continue
        reachable.add(nid)
        frontier.extend(con.dst for con in graph.out_edges(nid))

    for sensor in graph.sensors():
        if graph.in_edges(sensor.id):
            findings.append(Finding(ERROR, sensor.id, "sensor cannot consume a stream"))
        if not graph.out_edges(sensor.id):
            findings.append(Finding(WARNING, sensor.id, "sensor output is unconnected"))

    for op in graph.operators():
        fan_in = len(graph.in_edges(op.id))
        if fan_in > 1:
            findings.append(
                Finding(ERROR, op.id, f"operator has {fan_in} producers; exactly one is allowed")
            )
        if op.id not in reachable:
            findings.append(Finding(WARNING, op.id, "operator is not reachable from any sensor"))
        if not graph.out_edges(op.id):
            findings.append(
                Finding(WARNING, op.id, "operator output is unconnected (no sink declared)")
            )

    for sink in graph.sinks():
        if graph.out_edges(sink.id):
            findings.append(Finding(ERROR, sink.id, "sink cannot produce a stream"))

    return ValidationReport(findings=tuple(findings))

"""Performance model of heterogeneous processing units.

A unit is characterised by clock rate, per-cycle parallelism, and memory
bandwidth.  Per-frame time is the max of compute and I/O time (both sides
fully overlapped, as in a double-buffered streaming design); the pessimistic
additive model is available via ``overlap=False``.

The I/O side is where architectures differ: fpga units are assumed to
implement line buffers and are charged the reuse input bandwidth, cpu/gpu
units are charged the naive bandwidth.  ``bandwidth_model`` overrides this
per-kind default with "reuse" or "naive" for every unit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import analysis
from .calc import (
    BaseCalc,
    Composite,
    Conv2d,
    GlobalOp,
    Pointwise,
    Rank,
    is_opaque,
    node_count,
)
from .errors import CapabilityError, OpaqueCalcError
from .model import OperatorSpec

CPU = "cpu"
GPU = "gpu"
FPGA = "fpga"
KINDS = (CPU, GPU, FPGA)

BW_AUTO = "auto"
BW_REUSE = "reuse"
BW_NAIVE = "naive"
BW_MODELS = (BW_AUTO, BW_REUSE, BW_NAIVE)

# Votes per contributing pixel for the line transform: one per 1-degree
# angle step, with no sparsity assumed.
HOUGH_OPS_PER_PIXEL = 180

# Stand-in compute cost for opaque calcs, which are hostable on cpu only.
# Their real cost is unknown; one op per output pixel keeps them mappable
# without letting them dominate.
OPAQUE_OPS_PER_PIXEL = 1


@dataclass(frozen=True)
class ProcessingUnit:
    id: str
    kind: str
    clock_hz: Fraction
    ops_per_cycle: int
    mem_bw: Fraction  # bits/s
    supports_global: bool
    power_weight: Fraction

    def __post_init__(self):
        object.__setattr__(self, "clock_hz", Fraction(self.clock_hz))
        object.__setattr__(self, "mem_bw", Fraction(self.mem_bw))
        object.__setattr__(self, "power_weight", Fraction(self.power_weight))
        if self.kind not in KINDS:
            raise ValueError(f"unknown unit kind {self.kind!r}")
        if self.clock_hz <= 0 or self.mem_bw <= 0 or self.power_weight <= 0:
            raise ValueError("unit rates and weights must be positive")
        if self.ops_per_cycle < 1:
            raise ValueError("ops_per_cycle must be at least 1")


@dataclass(frozen=True)
class PlatformSpec:
    units: tuple[ProcessingUnit, ...]
    interconnect_bw: Fraction  # bits/s shared by all inter-unit streams

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "interconnect_bw", Fraction(self.interconnect_bw))
        if not self.units:
            raise ValueError("a platform needs at least one unit")
        ids = [u.id for u in self.units]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate unit id")
        if self.interconnect_bw <= 0:
            raise ValueError("interconnect bandwidth must be positive")

    def unit(self, unit_id: str) -> ProcessingUnit:
        for u in self.units:
            if u.id == unit_id:
                return u
        raise KeyError(unit_id)


@dataclass(frozen=True)
class CostModel:
    """Per-operator cost on a given bandwidth model."""

    ops_per_output_pixel: int
    output_pixels_per_frame: int
    io_bits_per_frame: Fraction

    def __post_init__(self):
        if self.ops_per_output_pixel < 1:
            raise ValueError("ops_per_output_pixel must be at least 1")


def ops_per_output_pixel(calc: BaseCalc, window: tuple[int, int] | None = None) -> int:
    """Operation count to produce one output pixel.

    `window` is the operator's input window in pixels (k_x, k_y); rank
    statistics need it, the other kinds carry their own size.
    """
    if isinstance(calc, Conv2d):
        return 2 * calc.width * calc.height  # multiply + add per tap
    if isinstance(calc, Pointwise):
        return node_count(calc.expr)
    if isinstance(calc, Rank):
        if window is None:
            raise ValueError("rank cost needs the input window size")
        n = window[0] * window[1]
        # sorting-network estimate: n * ceil(log2 n) compare/swap steps
        return max(1, n * (n - 1).bit_length())
    if isinstance(calc, GlobalOp):
        return HOUGH_OPS_PER_PIXEL if calc.name == "hough_lines" else 1
    if isinstance(calc, Composite):
        if is_opaque(calc):
            raise OpaqueCalcError("opaque base_calc has no defined cost")
        return sum(ops_per_output_pixel(s, window) for s in calc.stages) + 1
    raise TypeError(f"not a base_calc: {calc!r}")


def resolve_bandwidth_model(unit: ProcessingUnit, model: str = BW_AUTO) -> str:
    if model not in BW_MODELS:
        raise ValueError(f"unknown bandwidth model {model!r}")
    if model != BW_AUTO:
        return model
    return BW_REUSE if unit.kind == FPGA else BW_NAIVE


def io_bits_per_frame(
    op: OperatorSpec, input: analysis.StreamSpec, model: str
) -> Fraction:
    """Input plus output traffic per frame under the chosen bandwidth model."""
    bw = analysis.bandwidth_requirements(op, input)
    input_bw = bw.reuse_input_bw if model == BW_REUSE else bw.naive_input_bw
    return (input_bw + bw.output_bw) / input.fps


def cost_model(
    op: OperatorSpec, input: analysis.StreamSpec, model: str = BW_REUSE
) -> CostModel:
    out = analysis.output_stream(op, input)
    if is_opaque(op.base_calc):
        ops = OPAQUE_OPS_PER_PIXEL
    else:
        ops = ops_per_output_pixel(op.base_calc, _window(op, input))
    return CostModel(
        ops_per_output_pixel=ops,
        output_pixels_per_frame=out.width * out.height,
        io_bits_per_frame=io_bits_per_frame(op, input, model),
    )


def _window(op: OperatorSpec, input: analysis.StreamSpec) -> tuple[int, int]:
    if op.input_area.is_local:
        return (op.input_area.x, op.input_area.y)
    return (input.width, input.height)


def can_host(op: OperatorSpec, unit: ProcessingUnit) -> bool:
    """Capability check: whole-frame work needs support, opaque work a cpu."""
    if is_opaque(op.base_calc) and unit.kind != CPU:
        return False
    if analysis.classify(op) in (analysis.GLOBAL_CLASS, analysis.COMPLEX):
        return unit.supports_global
    return True


def frame_time(
    op: OperatorSpec,
    unit: ProcessingUnit,
    input: analysis.StreamSpec,
    *,
    bandwidth_model: str = BW_AUTO,
    overlap: bool = True,
) -> Fraction:
    """Seconds the unit needs per frame for this operator."""
    if not can_host(op, unit):
        raise CapabilityError(f"unit {unit.id} cannot host operator {op.id}")
    model = resolve_bandwidth_model(unit, bandwidth_model)
    cost = cost_model(op, input, model)
    compute = Fraction(cost.output_pixels_per_frame * cost.ops_per_output_pixel) / (
        unit.clock_hz * unit.ops_per_cycle
    )
    io = cost.io_bits_per_frame / unit.mem_bw
    return max(compute, io) if overlap else compute + io

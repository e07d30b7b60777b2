"""Pixel-exact functional execution of operator chains.

Frames carry unsigned integers of `pixres` bits.  Arithmetic inside an
operator is exact (integers and rationals); each stage result is rounded
half away from zero, and the operator's final output is clamped to
[0, 2^out_pixres - 1].  Borders replicate the nearest edge pixel, so local
operators preserve frame geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .calc import (
    Apply,
    BaseCalc,
    Composite,
    Const,
    Conv2d,
    GlobalOp,
    Pointwise,
    Rank,
    Var,
    is_opaque,
)
from .errors import DimensionError, OpaqueCalcError
from .model import OperatorSpec, PipelineGraph, SensorSpec, SinkSpec
from .rationals import round_half_away


@dataclass(frozen=True)
class Frame:
    """A row-major image of unsigned `pixres`-bit integers."""

    width: int
    height: int
    pixres: int
    pixels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "pixels", tuple(self.pixels))
        if self.width < 1 or self.height < 1:
            raise DimensionError("frame dimensions must be positive")
        if not 1 <= self.pixres <= 64:
            raise DimensionError("pixres must be within 1..64 bits")
        if len(self.pixels) != self.width * self.height:
            raise DimensionError(
                f"expected {self.width * self.height} pixels, got {len(self.pixels)}"
            )
        limit = 1 << self.pixres
        for v in self.pixels:
            if not 0 <= v < limit:
                raise DimensionError(f"pixel value {v} out of range for {self.pixres} bits")

    @classmethod
    def from_rows(cls, rows, pixres: int) -> "Frame":
        rows = [list(r) for r in rows]
        return cls(
            width=len(rows[0]),
            height=len(rows),
            pixres=pixres,
            pixels=tuple(v for row in rows for v in row),
        )

    @classmethod
    def constant(cls, width: int, height: int, pixres: int, value: int) -> "Frame":
        return cls(width, height, pixres, (value,) * (width * height))

    def at(self, x: int, y: int) -> int:
        """Pixel at (x, y) with replicate-clamped coordinates."""
        x = 0 if x < 0 else (self.width - 1 if x >= self.width else x)
        y = 0 if y < 0 else (self.height - 1 if y >= self.height else y)
        return self.pixels[y * self.width + x]

    def rows(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            self.pixels[y * self.width : (y + 1) * self.width]
            for y in range(self.height)
        )


def execute_operator(op: OperatorSpec, input: Frame) -> Frame:
    """Run one operator on one frame.

    Output pixel depth is the operator's out_pixres, defaulting to the input
    frame's depth; every output value is clamped into that range.
    """
    if is_opaque(op.base_calc):
        raise OpaqueCalcError(
            f"operator {op.id} ({op.name}) has an opaque base_calc and cannot execute"
        )
    out_pixres = op.effective_out_pixres(input.pixres)
    if isinstance(op.base_calc, GlobalOp) or not op.input_area.is_local:
        values, width, height = _execute_global(op, input, out_pixres)
    else:
        values = _execute_local(op.base_calc, input, op.input_area.x, op.input_area.y)
        width, height = input.width, input.height
    limit = (1 << out_pixres) - 1
    clamped = tuple(0 if v < 0 else (limit if v > limit else v) for v in values)
    return Frame(width=width, height=height, pixres=out_pixres, pixels=clamped)


def _execute_local(calc: BaseCalc, frame: Frame, kx: int, ky: int) -> list[int]:
    """Evaluate a windowed calc at every pixel; results are signed integers."""
    if isinstance(calc, Conv2d):
        return _conv2d(calc, frame)
    if isinstance(calc, Pointwise):
        return [
            round_half_away(_eval_expr(calc.expr, frame.pixels[i]))
            for i in range(len(frame.pixels))
        ]
    if isinstance(calc, Rank):
        return _rank(calc, frame, kx, ky)
    if isinstance(calc, Composite):
        stage_results = [_execute_local(s, frame, kx, ky) for s in calc.stages]
        return _combine(calc.combine, stage_results)
    if isinstance(calc, GlobalOp):
        raise DimensionError("whole-frame calcs need a global input_area")
    raise TypeError(f"not a base_calc: {calc!r}")


def _combine(mode: str, stage_results: list[list[int]]) -> list[int]:
    if mode == "last":
        return stage_results[-1]
    if mode == "sum":
        return [sum(vals) for vals in zip(*stage_results)]
    return [sum(abs(v) for v in vals) for vals in zip(*stage_results)]  # magnitude


def _conv2d(calc: Conv2d, frame: Frame) -> list[int]:
    # anchor at the window centre (floor for even sizes)
    cx, cy = calc.width // 2, calc.height // 2
    integral = all(v.denominator == 1 for row in calc.kernel for v in row)
    out = []
    for y in range(frame.height):
        for x in range(frame.width):
            if integral:
                acc = 0
                for dy, row in enumerate(calc.kernel):
                    for dx, coeff in enumerate(row):
                        acc += coeff.numerator * frame.at(x + dx - cx, y + dy - cy)
            else:
                acc = Fraction(0)
                for dy, row in enumerate(calc.kernel):
                    for dx, coeff in enumerate(row):
                        acc += coeff * frame.at(x + dx - cx, y + dy - cy)
            out.append(round_half_away(acc * calc.post_scale))
    return out


def _rank(calc: Rank, frame: Frame, kx: int, ky: int) -> list[int]:
    cx, cy = kx // 2, ky // 2
    out = []
    for y in range(frame.height):
        for x in range(frame.width):
            window = sorted(
                frame.at(x + dx - cx, y + dy - cy)
                for dy in range(ky)
                for dx in range(kx)
            )
            out.append(_statistic(calc.statistic, window))
    return out


def _statistic(name: str, ordered: list[int]) -> int:
    if name == "min":
        return ordered[0]
    if name == "max":
        return ordered[-1]
    return ordered[(len(ordered) - 1) // 2]  # lower median


def _eval_expr(expr, p: int) -> Fraction:
    if isinstance(expr, Var):
        return Fraction(p)
    if isinstance(expr, Const):
        return expr.value
    args = [_eval_expr(a, p) for a in expr.args]
    fn = expr.fn
    if fn == "add":
        return args[0] + args[1]
    if fn == "sub":
        return args[0] - args[1]
    if fn == "mul":
        return args[0] * args[1]
    if fn == "div":
        if args[1] == 0:
            raise ZeroDivisionError("pointwise division by zero")
        return args[0] / args[1]
    if fn == "abs":
        return abs(args[0])
    if fn == "min":
        return min(args)
    if fn == "max":
        return max(args)
    if fn == "clamp":
        lo, hi = args[1], args[2]
        return min(max(args[0], lo), hi)
    # compare: 1 when a >= b, else 0
    return Fraction(1) if args[0] >= args[1] else Fraction(0)


def _execute_global(op: OperatorSpec, frame: Frame, out_pixres: int):
    """Whole-frame execution; returns (values, width, height), unclamped."""
    return _execute_global_calc(op.base_calc, op, frame)


def _execute_global_calc(calc: BaseCalc, op: OperatorSpec, frame: Frame):
    if isinstance(calc, GlobalOp):
        if calc.name == "histogram":
            return _histogram(op, frame)
        return _hough_lines(op, frame)
    if isinstance(calc, Rank):
        if not op.output_area.is_local:
            raise DimensionError(
                f"operator {op.id} declares no concrete output dimensions"
            )
        ordered = sorted(frame.pixels)
        value = _statistic(calc.statistic, ordered)
        n = op.output_area.x * op.output_area.y
        return [value] * n, op.output_area.x, op.output_area.y
    if isinstance(calc, Composite):
        results = [_execute_global_calc(s, op, frame) for s in calc.stages]
        dims = {(w, h) for _, w, h in results}
        if len(dims) != 1:
            raise DimensionError(
                f"operator {op.id}: composite stages disagree on output dimensions"
            )
        (w, h) = dims.pop()
        return _combine(calc.combine, [list(v) for v, _, _ in results]), w, h
    raise DimensionError(
        f"operator {op.id}: base_calc kind does not support a global input_area"
    )


def _histogram(op: OperatorSpec, frame: Frame):
    """Counts per intensity level: a 2^pixres x 1 frame."""
    bins = 1 << frame.pixres
    if not op.output_area.is_local or (op.output_area.x, op.output_area.y) != (bins, 1):
        raise DimensionError(
            f"histogram output_area must be {bins}x1 for {frame.pixres}-bit input"
        )
    counts = [0] * bins
    for v in frame.pixels:
        counts[v] += 1
    return counts, bins, 1


def _hough_lines(op: OperatorSpec, frame: Frame):
    """Line-transform accumulator over the declared output area.

    Pixels at or above half range vote; angles step one degree per output
    column, and the signed distance rho is scaled linearly onto the output
    height.  Distance binning rounds half up.
    """
    if not op.output_area.is_local:
        raise DimensionError(f"operator {op.id} declares no concrete output dimensions")
    out_w, out_h = op.output_area.x, op.output_area.y
    threshold = 1 << (frame.pixres - 1)
    rho_max = math.hypot(frame.width - 1, frame.height - 1)
    angles = min(out_w, 180)
    cos_sin = [
        (math.cos(math.radians(t)), math.sin(math.radians(t))) for t in range(angles)
    ]
    acc = [0] * (out_w * out_h)
    for y in range(frame.height):
        for x in range(frame.width):
            if frame.pixels[y * frame.width + x] < threshold:
                continue
            for t, (c, s) in enumerate(cos_sin):
                rho = x * c + y * s
                if rho_max > 0:
                    bin_y = int((rho + rho_max) / (2 * rho_max) * (out_h - 1) + 0.5)
                else:
                    bin_y = 0
                acc[bin_y * out_w + t] += 1
    return acc, out_w, out_h


def execute_chain(graph: PipelineGraph, sensor_frame: Frame) -> dict[int, Frame]:
    """Propagate one frame through the whole chain; returns a frame per node.

    The chain must have exactly one sensor; the given frame stands in for its
    capture (its geometry may differ from the declared sensor resolution,
    which only matters to the rate analysis).
    """
    sensors = graph.sensors()
    if len(sensors) != 1:
        raise DimensionError(
            f"execute_chain needs exactly one sensor, chain has {len(sensors)}"
        )
    frames: dict[int, Frame] = {sensors[0].id: sensor_frame}
    for nid in graph.topo_order:
        node = graph.node(nid)
        if isinstance(node, SensorSpec):
            continue
        in_edges = graph.in_edges(nid)
        if not in_edges:
            continue  # unreachable node: nothing to execute
        upstream = frames.get(in_edges[0].src)
        if upstream is None:
            continue
        if isinstance(node, SinkSpec):
            frames[nid] = upstream
        else:
            frames[nid] = execute_operator(node, upstream)
    return frames

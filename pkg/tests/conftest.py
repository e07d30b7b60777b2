from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest

from ipol import library
from ipol.hardware import PlatformSpec, ProcessingUnit
from ipol.model import (
    AreaSpec,
    ConnectionSpec,
    OperatorChainSpec,
    OperatorSpec,
    SensorSpec,
    SinkSpec,
    build_graph,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def sobel_chain_bytes() -> bytes:
    return (FIXTURES / "sobel_chain.xml").read_bytes()


@pytest.fixture
def reference_platform_bytes() -> bytes:
    return (FIXTURES / "reference_platform.xml").read_bytes()


def make_sensor(node_id=0, res_x=1920, res_y=1080, pixres=12, fps=30) -> SensorSpec:
    return SensorSpec(id=node_id, res_x=res_x, res_y=res_y, pixres=pixres, fps=Fraction(fps))


def make_sobel_operator(node_id=1) -> OperatorSpec:
    return OperatorSpec(
        id=node_id,
        name="Sobel",
        input_area=AreaSpec.window(3, 3),
        base_calc=library.sobel(),
        output_area=AreaSpec.window(1, 1),
    )


def make_sobel_chain() -> OperatorChainSpec:
    return OperatorChainSpec(
        sensors=(make_sensor(),),
        operators=(make_sobel_operator(),),
        connections=(ConnectionSpec(id=0, src=0, dst=1),),
    )


def linear_chain(sensor: SensorSpec, operators, with_sink=False) -> OperatorChainSpec:
    """Wire sensor -> op -> op -> ... (-> sink) with sequential ids."""
    cons = []
    prev = sensor.id
    for i, op in enumerate(operators):
        cons.append(ConnectionSpec(id=i, src=prev, dst=op.id))
        prev = op.id
    sinks = ()
    if with_sink:
        sink_id = max([sensor.id, *(o.id for o in operators)]) + 1
        sinks = (SinkSpec(id=sink_id, name="display"),)
        cons.append(ConnectionSpec(id=len(cons), src=prev, dst=sink_id))
    return OperatorChainSpec(
        sensors=(sensor,),
        operators=tuple(operators),
        sinks=sinks,
        connections=tuple(cons),
    )


def point_op(node_id: int, calc=None, out_pixres=None) -> OperatorSpec:
    return OperatorSpec(
        id=node_id,
        name=f"point{node_id}",
        input_area=AreaSpec.window(1, 1),
        base_calc=calc if calc is not None else library.identity(),
        output_area=AreaSpec.window(1, 1),
        out_pixres=out_pixres,
    )


def local_op(node_id: int, k: int, calc=None) -> OperatorSpec:
    return OperatorSpec(
        id=node_id,
        name=f"local{node_id}",
        input_area=AreaSpec.window(k, k),
        base_calc=calc if calc is not None else library.median(),
        output_area=AreaSpec.window(1, 1),
    )


def make_unit(
    unit_id="u0",
    kind="cpu",
    clock_hz=10**9,
    ops_per_cycle=1,
    mem_bw=10**12,
    supports_global=True,
    power_weight=1,
) -> ProcessingUnit:
    return ProcessingUnit(
        id=unit_id,
        kind=kind,
        clock_hz=Fraction(clock_hz),
        ops_per_cycle=ops_per_cycle,
        mem_bw=Fraction(mem_bw),
        supports_global=supports_global,
        power_weight=Fraction(power_weight),
    )


def make_platform(*units, interconnect_bw=64 * 10**9) -> PlatformSpec:
    if not units:
        units = (make_unit(),)
    return PlatformSpec(units=tuple(units), interconnect_bw=Fraction(interconnect_bw))


def fixture_platform() -> PlatformSpec:
    return make_platform(
        make_unit("cpu0", "cpu", 3 * 10**9, 4, 100 * 10**9, True, 1),
        make_unit("gpu0", "gpu", 1200 * 10**6, 256, 320 * 10**9, True, 6),
        make_unit("fpga0", "fpga", 200 * 10**6, 64, 10 * 10**9, False, Fraction(1, 2)),
    )


def sobel_graph():
    return build_graph(make_sobel_chain())

from __future__ import annotations

from fractions import Fraction

import pytest

from ipol import library
from ipol.analysis import sensor_stream
from ipol.calc import Composite
from ipol.errors import CapabilityError, OpaqueCalcError
from ipol.hardware import (
    BW_NAIVE,
    BW_REUSE,
    can_host,
    cost_model,
    frame_time,
    io_bits_per_frame,
    ops_per_output_pixel,
)
from ipol.model import AreaSpec, OperatorSpec

from conftest import (
    fixture_platform,
    make_sensor,
    make_sobel_operator,
    make_unit,
    point_op,
)
from test_analysis import hough_op


def test_ops_sobel_composite():
    # two 3x3 kernels at 2 ops per tap, plus one combine op
    assert ops_per_output_pixel(library.sobel(), (3, 3)) == 37


def test_ops_identity_pointwise():
    assert ops_per_output_pixel(library.identity()) == 1


def test_ops_rank_median():
    assert ops_per_output_pixel(library.median(), (3, 3)) == 36


def test_ops_global_named():
    assert ops_per_output_pixel(library.hough_lines()) == 180
    assert ops_per_output_pixel(library.histogram()) == 1


def test_ops_composite_additivity():
    sobel = library.sobel()
    total = sum(ops_per_output_pixel(s, (3, 3)) for s in sobel.stages) + 1
    assert ops_per_output_pixel(sobel, (3, 3)) == total


def test_ops_opaque_raises():
    with pytest.raises(OpaqueCalcError):
        ops_per_output_pixel(Composite(stages=(), combine="last"))


def test_io_bits_per_frame_models():
    op = make_sobel_operator()
    s = sensor_stream(make_sensor())
    reuse = io_bits_per_frame(op, s, BW_REUSE)
    naive = io_bits_per_frame(op, s, BW_NAIVE)
    assert reuse == Fraction(746_496_000 + 746_496_000, 30) == 49_766_400
    assert naive == Fraction(6_718_464_000 + 746_496_000, 30)


def test_frame_time_sobel_on_fixture_fpga():
    platform = fixture_platform()
    ft = frame_time(make_sobel_operator(), platform.unit("fpga0"), sensor_stream(make_sensor()))
    # compute bound: 1920*1080 pixels * 37 ops / (200 MHz * 64 lanes)
    assert ft == Fraction(2_073_600 * 37, 200_000_000 * 64)
    assert ft == Fraction(5994, 1_000_000)  # 5.994 ms < 33.3 ms frame budget
    # the I/O side alone would be 49,766,400 bits / 10 Gbit/s
    assert ft > Fraction(49_766_400, 10**10)


def test_frame_time_single_pixel_identity():
    unit = make_unit(clock_hz=10**9, ops_per_cycle=1, mem_bw=10**15)
    s = sensor_stream(make_sensor(res_x=1, res_y=1, pixres=1, fps=1))
    assert frame_time(point_op(1), unit, s) == Fraction(1, 10**9)


def test_frame_time_halves_when_clock_doubles():
    s = sensor_stream(make_sensor())
    op = make_sobel_operator()
    slow = make_unit(clock_hz=10**8, mem_bw=10**15)
    fast = make_unit(clock_hz=2 * 10**8, mem_bw=10**15)
    assert frame_time(op, slow, s) == 2 * frame_time(op, fast, s)


def test_frame_time_monotone_in_resources():
    s = sensor_stream(make_sensor())
    op = make_sobel_operator()
    base = make_unit(clock_hz=10**8, ops_per_cycle=2, mem_bw=10**9)
    for better in (
        make_unit(clock_hz=2 * 10**8, ops_per_cycle=2, mem_bw=10**9),
        make_unit(clock_hz=10**8, ops_per_cycle=4, mem_bw=10**9),
        make_unit(clock_hz=10**8, ops_per_cycle=2, mem_bw=2 * 10**9),
    ):
        assert frame_time(op, better, s) <= frame_time(op, base, s)


def test_frame_time_is_max_of_components():
    s = sensor_stream(make_sensor())
    op = make_sobel_operator()
    unit = make_unit(clock_hz=10**8, ops_per_cycle=2, mem_bw=10**9)
    cost = cost_model(op, s, BW_NAIVE)
    compute = Fraction(cost.output_pixels_per_frame * cost.ops_per_output_pixel) / (
        unit.clock_hz * unit.ops_per_cycle
    )
    io = cost.io_bits_per_frame / unit.mem_bw
    assert frame_time(op, unit, s) == max(compute, io)
    assert frame_time(op, unit, s, overlap=False) == compute + io


def test_can_host_rules():
    fpga_no_global = make_unit("f", "fpga", supports_global=False)
    gpu = make_unit("g", "gpu")
    cpu = make_unit("c", "cpu")
    assert can_host(hough_op(), fpga_no_global) is False
    assert can_host(hough_op(), cpu) is True
    assert can_host(make_sobel_operator(), fpga_no_global) is True
    assert can_host(make_sobel_operator(), gpu) is True
    opaque_op = point_op(1, Composite(stages=(), combine="last"))
    assert can_host(opaque_op, gpu) is False
    assert can_host(opaque_op, cpu) is True


def test_frame_time_refuses_incapable_unit():
    fpga_no_global = make_unit("f", "fpga", supports_global=False)
    with pytest.raises(CapabilityError):
        frame_time(hough_op(), fpga_no_global, sensor_stream(make_sensor()))


def test_opaque_operator_costs_one_op_per_pixel_on_cpu():
    opaque_op = point_op(1, Composite(stages=(), combine="last"))
    s = sensor_stream(make_sensor(res_x=10, res_y=10, pixres=8, fps=1))
    unit = make_unit(clock_hz=100, ops_per_cycle=1, mem_bw=10**12)
    assert frame_time(opaque_op, unit, s) == Fraction(100, 100)

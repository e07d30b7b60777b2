from __future__ import annotations

from fractions import Fraction

import pytest

from ipol import library
from ipol.analysis import (
    bandwidth_requirements,
    chain_report,
    classify,
    propagate_rates,
    sensor_stream,
    stream,
)
from ipol.errors import UnderspecifiedError
from ipol.model import (
    AreaSpec,
    ConnectionSpec,
    OperatorChainSpec,
    OperatorSpec,
    build_graph,
)

from conftest import (
    linear_chain,
    make_sensor,
    make_sobel_chain,
    make_sobel_operator,
    point_op,
    sobel_graph,
)


def hough_op(node_id=1, out_w=256, out_h=256, out_pixres=16) -> OperatorSpec:
    return OperatorSpec(
        id=node_id,
        name="HoughLines",
        input_area=AreaSpec.whole_frame(),
        base_calc=library.hough_lines(),
        output_area=AreaSpec.window(out_w, out_h),
        out_pixres=out_pixres,
    )


def test_sensor_stream_listing_values():
    s = sensor_stream(make_sensor())
    assert s.pixel_rate == 62_208_000
    assert s.bit_rate == 746_496_000


def test_sensor_stream_unit_sensor():
    s = sensor_stream(make_sensor(res_x=1, res_y=1, pixres=1, fps=1))
    assert s.pixel_rate == 1
    assert s.bit_rate == 1


def test_sensor_stream_vga():
    s = sensor_stream(make_sensor(res_x=640, res_y=480, pixres=8, fps=60))
    assert s.pixel_rate == 18_432_000


def test_propagate_rates_listing_chain():
    streams = propagate_rates(sobel_graph())
    s = streams[0]
    assert (s.width, s.height, s.pixres, s.fps) == (1920, 1080, 12, 30)


def test_propagate_identity_point_operator():
    chain = linear_chain(make_sensor(), [point_op(1), point_op(2)])
    streams = propagate_rates(build_graph(chain))
    assert streams[1] == streams[0]


def test_propagate_hough_output_rate():
    chain = linear_chain(make_sensor(), [hough_op(1), point_op(2, out_pixres=16)])
    streams = propagate_rates(build_graph(chain))
    out = streams[1]  # edge hough -> point
    assert (out.width, out.height, out.pixres) == (256, 256, 16)
    assert out.bit_rate == 31_457_280


def test_propagate_global_without_dims_is_underspecified():
    op = OperatorSpec(
        id=1,
        name="mystery",
        input_area=AreaSpec.whole_frame(),
        base_calc=library.histogram(),
        output_area=AreaSpec.whole_frame(),
    )
    graph = build_graph(linear_chain(make_sensor(), [op, point_op(2)]))
    with pytest.raises(UnderspecifiedError):
        propagate_rates(graph)


def test_bandwidth_sobel_oracle_values():
    report = bandwidth_requirements(make_sobel_operator(), sensor_stream(make_sensor()))
    assert report.naive_input_bw == 6_718_464_000
    assert report.reuse_input_bw == 746_496_000
    assert report.line_buffer_bits == 2 * 1920 * 12 == 46_080
    assert report.window_buffer_bits == 108
    assert report.output_bw == 746_496_000
    assert report.op_class == "local"


def test_bandwidth_point_operator_degenerate():
    s = stream(123, 45, 10, Fraction(7, 3))
    report = bandwidth_requirements(point_op(1), s)
    assert report.naive_input_bw == report.reuse_input_bw == s.bit_rate
    assert report.line_buffer_bits == 0


def test_bandwidth_hough_full_frame_buffer():
    report = bandwidth_requirements(hough_op(), sensor_stream(make_sensor()))
    assert report.naive_input_bw == report.reuse_input_bw == 746_496_000
    assert report.line_buffer_bits == 1920 * 1080 * 12 == 24_883_200


def test_classify_examples():
    assert classify(make_sobel_operator()) == "local"
    assert classify(point_op(1, library.threshold(128))) == "point"
    assert classify(hough_op()) == "global"
    complex_op = OperatorSpec(
        id=1,
        name="post",
        input_area=AreaSpec.whole_frame(),
        base_calc=library.Composite(
            stages=(library.hough_lines(),), combine="last"
        ),
        output_area=AreaSpec.window(180, 256),
        out_pixres=16,
    )
    assert classify(complex_op) == "complex"


def test_chain_report_listing_totals():
    report = chain_report(sobel_graph())
    assert report.total_reuse_input_bw == 746_496_000
    assert report.total_output_bw == 746_496_000
    assert report.bottleneck_operator_id == 1


def test_chain_report_empty_operator_list():
    graph = build_graph(
        OperatorChainSpec(
            sensors=(make_sensor(),),
            connections=(),
        )
    )
    report = chain_report(graph)
    assert report.operator_reports == ()
    assert report.bottleneck_operator_id is None
    assert report.edge_streams == {}


def test_chain_report_additivity():
    sobel = make_sobel_operator(1)
    thresh = point_op(2, library.threshold(100))
    chain = linear_chain(make_sensor(), [sobel, thresh])
    graph = build_graph(chain)
    combined = chain_report(graph)

    alone_sobel = bandwidth_requirements(sobel, sensor_stream(make_sensor()))
    sobel_out = propagate_rates(graph)[1]
    alone_thresh = bandwidth_requirements(thresh, sobel_out)
    assert combined.total_naive_input_bw == (
        alone_sobel.naive_input_bw + alone_thresh.naive_input_bw
    )
    assert combined.total_reuse_input_bw == (
        alone_sobel.reuse_input_bw + alone_thresh.reuse_input_bw
    )


def test_window_growth_monotonicity():
    s = sensor_stream(make_sensor())
    for k, k_next in [(1, 2), (2, 3), (3, 4), (5, 6)]:
        small = bandwidth_requirements(_rank_op(k, k), s)
        wide = bandwidth_requirements(_rank_op(k_next, k), s)
        tall = bandwidth_requirements(_rank_op(k, k_next), s)
        assert wide.naive_input_bw > small.naive_input_bw
        assert tall.naive_input_bw > small.naive_input_bw
        assert tall.line_buffer_bits > small.line_buffer_bits
        assert wide.reuse_input_bw == small.reuse_input_bw
        assert tall.reuse_input_bw == small.reuse_input_bw


def _rank_op(kx: int, ky: int) -> OperatorSpec:
    return OperatorSpec(
        id=9,
        name="rank",
        input_area=AreaSpec.window(kx, ky),
        base_calc=library.median(),
        output_area=AreaSpec.window(1, 1),
    )


def test_fps_linearity():
    base = make_sensor(fps=30)
    scaled = make_sensor(fps=Fraction(30) * 7)
    op = make_sobel_operator()
    r1 = bandwidth_requirements(op, sensor_stream(base))
    r7 = bandwidth_requirements(op, sensor_stream(scaled))
    assert r7.naive_input_bw == 7 * r1.naive_input_bw
    assert r7.reuse_input_bw == 7 * r1.reuse_input_bw
    assert r7.output_bw == 7 * r1.output_bw
    assert r7.line_buffer_bits == r1.line_buffer_bits
    assert r7.window_buffer_bits == r1.window_buffer_bits


def test_rates_are_exact_fractions():
    s = sensor_stream(make_sensor(fps=Fraction(30000, 1001)))
    assert isinstance(s.pixel_rate, Fraction)
    assert s.pixel_rate == Fraction(1920 * 1080 * 30000, 1001)

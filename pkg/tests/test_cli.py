from __future__ import annotations

import json
from pathlib import Path

import pytest

from ipol.cli import main

from conftest import FIXTURES


@pytest.fixture
def chain_path() -> str:
    return str(FIXTURES / "sobel_chain.xml")


@pytest.fixture
def platform_path() -> str:
    return str(FIXTURES / "reference_platform.xml")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_listing_fixture(capsys, chain_path):
    code, out, _ = run(capsys, "validate", chain_path)
    assert code == 0
    assert "errors=0" in out
    assert "warnings=1" in out
    assert "unconnected" in out


def test_validate_cycle_exits_1(capsys, tmp_path, chain_path):
    doc = Path(chain_path).read_text().replace(
        '<con id="0"><out>0</out><in>1</in></con>',
        '<con id="0"><out>0</out><in>1</in></con>'
        '<con id="1"><out>1</out><in>2</in></con>'
        '<con id="2"><out>2</out><in>1</in></con>',
    ).replace(
        "<connections",
        """<image_operator id="2">
  <type>Operator</type>
  <name>Copy</name>
  <input_area><x>1</x><y>1</y></input_area>
  <base_calc><pointwise><expr>p</expr></pointwise></base_calc>
  <output_area><x>1</x><y>1</y></output_area>
</image_operator>
<connections""",
    )
    bad = tmp_path / "cycle.xml"
    bad.write_text(doc)
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 1
    assert "cycle" in err


def test_validate_missing_file_exits_3(capsys):
    code, _, err = run(capsys, "validate", "no/such/file.xml")
    assert code == 3


def test_validate_malformed_xml_exits_3(capsys, tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_bytes(b"<operatorchain><oops")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 3


def test_analyze_reports_exact_reuse_bandwidth(capsys, chain_path):
    code, out, _ = run(capsys, "analyze", chain_path)
    assert code == 0
    assert "format_version=1" in out
    assert "reuse_input_bw=746496000" in out
    assert "op.1.naive_input_bw=6718464000" in out
    assert "op.1.line_buffer_bits=46080" in out
    assert "bottleneck_operator_id=1" in out


def test_analyze_human_megabits(capsys, chain_path):
    code, out, _ = run(capsys, "analyze", chain_path, "--human")
    assert code == 0
    assert "711.914 Mbit/s" in out


def test_analyze_json_same_keys(capsys, chain_path):
    code, out, _ = run(capsys, "analyze", chain_path, "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["format_version"] == 1
    assert payload["op.1.reuse_input_bw"] == 746496000


def test_analyze_invalid_chain_exits_1(capsys, tmp_path, chain_path):
    doc = Path(chain_path).read_text().replace(
        "<connections",
        """<image_operator id="2">
  <type>Sensor</type>
  <res><x>8</x><y>8</y></res>
  <pixres>8</pixres>
  <fps>1</fps>
</image_operator>
<connections""",
    ).replace(
        '<con id="0"><out>0</out><in>1</in></con>',
        '<con id="0"><out>0</out><in>1</in></con>'
        '<con id="1"><out>2</out><in>1</in></con>',
    )
    bad = tmp_path / "fanin.xml"
    bad.write_text(doc)
    code, out, err = run(capsys, "analyze", str(bad))
    assert code == 1
    assert "reuse_input_bw" not in out


def test_map_fixture_picks_fpga(capsys, chain_path, platform_path):
    code, out, _ = run(capsys, "map", chain_path, platform_path)
    assert code == 0
    assert "assign.1=fpga0" in out
    assert "feasible=true" in out
    assert "heuristic=false" in out


def test_map_unreachable_target_exits_2(capsys, chain_path, platform_path):
    code, out, _ = run(capsys, "map", chain_path, platform_path, "--target-fps", "10000")
    assert code == 2
    assert "feasible=false" in out
    assert "infeasible.1=" in out


def test_map_exhaustive_guard_exits_4(capsys, tmp_path, platform_path):
    # 21 operators x 3 units = 3^21 > 10^6 candidate assignments
    ops = []
    cons = ['<con id="0"><out>0</out><in>1</in></con>']
    for i in range(1, 22):
        ops.append(
            f"""<image_operator id="{i}">
  <type>Operator</type>
  <name>Copy{i}</name>
  <input_area><x>1</x><y>1</y></input_area>
  <base_calc><pointwise><expr>p</expr></pointwise></base_calc>
  <output_area><x>1</x><y>1</y></output_area>
</image_operator>"""
        )
        if i > 1:
            cons.append(f'<con id="{i - 1}"><out>{i - 1}</out><in>{i}</in></con>')
    doc = f"""<operatorchain>
<image_operator id="0">
  <type>Sensor</type>
  <res><x>32</x><y>32</y></res>
  <pixres>8</pixres>
  <fps>30</fps>
</image_operator>
{''.join(ops)}
<connections id="0">{''.join(cons)}</connections>
</operatorchain>"""
    big = tmp_path / "big.xml"
    big.write_text(doc)
    code, _, err = run(capsys, "map", str(big), platform_path, "--exhaustive")
    assert code == 4
    assert "10" in err  # the refusal names the bound


def test_map_usage_error_exits_4(capsys, chain_path):
    code, _, _ = run(capsys, "map", chain_path)  # missing platform argument
    assert code == 4


def test_simulate_auto_map_sensor_limited(capsys, chain_path, platform_path):
    code, out, _ = run(
        capsys, "simulate", chain_path, platform_path, "--auto-map", "--frames", "100"
    )
    assert code == 0
    assert "achieved_fps=30" in out
    assert "dropped_frames=0" in out


def test_simulate_frames_below_warmup_exits_4(capsys, chain_path, platform_path):
    code, _, _ = run(
        capsys, "simulate", chain_path, platform_path, "--auto-map", "--frames", "3"
    )
    assert code == 4


def test_simulate_needs_exactly_one_mapping_source(capsys, chain_path, platform_path):
    code, _, _ = run(capsys, "simulate", chain_path, platform_path)
    assert code == 4


def test_simulate_replays_saved_mapping(capsys, tmp_path, chain_path, platform_path):
    code, mapping_out, _ = run(capsys, "map", chain_path, platform_path)
    assert code == 0
    mapping_file = tmp_path / "mapping.txt"
    mapping_file.write_text(mapping_out)
    code, out, _ = run(
        capsys,
        "simulate",
        chain_path,
        platform_path,
        "--mapping",
        str(mapping_file),
        "--frames",
        "50",
    )
    assert code == 0
    assert "achieved_fps=30" in out


def test_simulate_functional_dump_matches_golden(capsys, tmp_path, chain_path, platform_path):
    dump = tmp_path / "frames"
    code, out, _ = run(
        capsys,
        "simulate",
        chain_path,
        platform_path,
        "--auto-map",
        "--frames",
        "20",
        "--input",
        str(FIXTURES / "step5x5.pgm"),
        "--dump-frames",
        str(dump),
        "--quiet",
    )
    assert code == 0
    golden = (FIXTURES / "step5x5_sobel_golden.pgm").read_bytes()
    assert (dump / "node_1.pgm").read_bytes() == golden
    assert (dump / "node_0.pgm").read_bytes() == (FIXTURES / "step5x5.pgm").read_bytes()


def test_reports_are_byte_stable(capsys, chain_path, platform_path):
    first = run(capsys, "analyze", chain_path)
    second = run(capsys, "analyze", chain_path)
    assert first == second
    sim1 = run(capsys, "simulate", chain_path, platform_path, "--auto-map", "--frames", "30")
    sim2 = run(capsys, "simulate", chain_path, platform_path, "--auto-map", "--frames", "30")
    assert sim1 == sim2

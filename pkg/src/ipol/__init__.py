"""Toolchain for image processing operator chains.

Parse and validate chain documents, derive exact data rates and
memory-bandwidth requirements, map operators onto heterogeneous processing
units, and check mappings with a deterministic discrete-event simulation
plus a pixel-exact functional executor.
"""

from .analysis import (
    AnalysisReport,
    BandwidthReport,
    StreamSpec,
    bandwidth_requirements,
    chain_report,
    classify,
    propagate_rates,
    sensor_stream,
)
from .calc import Composite, Conv2d, GlobalOp, Pointwise, Rank, opaque
from .errors import IpolError
from .executor import Frame, execute_chain, execute_operator
from .frameio import read_frame, write_frame
from .hardware import (
    PlatformSpec,
    ProcessingUnit,
    can_host,
    frame_time,
    ops_per_output_pixel,
)
from .mapping import (
    Constraints,
    Infeasible,
    Mapping,
    evaluate_mapping,
    search_mapping,
)
from .model import (
    AreaSpec,
    ConnectionSpec,
    OperatorChainSpec,
    OperatorSpec,
    PipelineGraph,
    SensorSpec,
    SinkSpec,
    ValidationReport,
    build_graph,
    validate,
)
from .parser import parse_base_calc, parse_ipol, parse_platform, serialize_ipol
from .simulate import SimConfig, SimReport, simulate

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "AreaSpec",
    "BandwidthReport",
    "Composite",
    "ConnectionSpec",
    "Constraints",
    "Conv2d",
    "Frame",
    "GlobalOp",
    "Infeasible",
    "IpolError",
    "Mapping",
    "OperatorChainSpec",
    "OperatorSpec",
    "PipelineGraph",
    "PlatformSpec",
    "Pointwise",
    "ProcessingUnit",
    "Rank",
    "SensorSpec",
    "SimConfig",
    "SimReport",
    "SinkSpec",
    "StreamSpec",
    "ValidationReport",
    "bandwidth_requirements",
    "build_graph",
    "can_host",
    "chain_report",
    "classify",
    "evaluate_mapping",
    "execute_chain",
    "execute_operator",
    "frame_time",
    "opaque",
    "ops_per_output_pixel",
    "parse_base_calc",
    "parse_ipol",
    "parse_platform",
    "propagate_rates",
    "read_frame",
    "search_mapping",
    "sensor_stream",
    "serialize_ipol",
    "simulate",
    "validate",
    "write_frame",
]

"""Assignment of operators to processing units.

`evaluate_mapping` scores a given total assignment: sustainable frame rate
(units serialize their operators; a shared interconnect budget caps
inter-unit traffic), per-unit utilization at the demanded rate, and an
energy proxy (power weight x utilization, summed).  `search_mapping` finds
the cheapest feasible assignment: exhaustively when the space is small
enough, otherwise with a deterministic greedy seed plus single-operator
hill climbing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import analysis, hardware
from .errors import CapabilityError
from .hardware import PlatformSpec
from .model import OperatorSpec, PipelineGraph

EXHAUSTIVE_LIMIT = 10**6


@dataclass(frozen=True)
class Constraints:
    target_fps: Fraction | None = None  # None: the sensor rate
    bandwidth_model: str = hardware.BW_AUTO
    honor_interconnect: bool = True
    overlap: bool = True

    def __post_init__(self):
        if self.target_fps is not None:
            object.__setattr__(self, "target_fps", Fraction(self.target_fps))
            if self.target_fps <= 0:
                raise ValueError("target_fps must be positive")


@dataclass(frozen=True)
class Mapping:
    """A scored total assignment of operators to units."""

    assignment: tuple[tuple[int, str], ...]  # (operator id, unit id), sorted
    predicted_fps: Fraction
    energy_proxy: Fraction
    per_unit_utilization: tuple[tuple[str, Fraction], ...]
    heuristic: bool = False

    def unit_of(self, op_id: int) -> str:
        return dict(self.assignment)[op_id]

    def as_dict(self) -> dict[int, str]:
        return dict(self.assignment)

    def units_used(self) -> int:
        return len({u for _, u in self.assignment})


@dataclass(frozen=True)
class OperatorDiagnosis:
    operator_id: int
    reason: str
    best_unit: str | None = None
    best_alone_fps: Fraction | None = None


@dataclass(frozen=True)
class Infeasible:
    """No assignment meets the target; one diagnosis per operator."""

    target_fps: Fraction
    per_operator: tuple[OperatorDiagnosis, ...]


def chain_fps(graph: PipelineGraph) -> Fraction:
    """The demanded frame rate: the fastest sensor in the chain."""
    return max(s.fps for s in graph.sensors())


class _Evaluator:
    """Shared precomputation for scoring many assignments of one instance."""

    def __init__(self, graph, platform, *, bandwidth_model, overlap, honor_interconnect):
        self.graph = graph
        self.platform = platform
        self.bandwidth_model = bandwidth_model
        self.overlap = overlap
        self.honor_interconnect = honor_interconnect
        self.edge_streams = analysis.propagate_rates(graph)
        self.inputs = analysis.input_streams(graph, self.edge_streams)
        self.ops = sorted(graph.operators(), key=lambda o: o.id)
        self.sensor_fps = chain_fps(graph)
        self._ft_cache: dict[tuple[int, str], Fraction] = {}

    def frame_time(self, op: OperatorSpec, unit_id: str) -> Fraction:
        key = (op.id, unit_id)
        if key not in self._ft_cache:
            self._ft_cache[key] = hardware.frame_time(
                op,
                self.platform.unit(unit_id),
                self.inputs[op.id],
                bandwidth_model=self.bandwidth_model,
                overlap=self.overlap,
            )
        return self._ft_cache[key]

    def hostable_units(self, op: OperatorSpec) -> list[str]:
        return [u.id for u in self.platform.units if hardware.can_host(op, u)]

    def evaluate(self, assignment: dict[int, str]) -> Mapping:
        for op in self.ops:
            if op.id not in assignment:
                raise CapabilityError(f"operator {op.id} is unassigned")
        load: dict[str, Fraction] = {}
        util: dict[str, Fraction] = {}
        energy = Fraction(0)
        for op in self.ops:
            unit_id = assignment[op.id]
            ft = self.frame_time(op, unit_id)  # CapabilityError if the unit cannot host
            fps = self.inputs[op.id].fps
            load[unit_id] = load.get(unit_id, Fraction(0)) + ft
            util[unit_id] = util.get(unit_id, Fraction(0)) + ft * fps
            energy += self.platform.unit(unit_id).power_weight * ft * fps

        if load:
            predicted = min(Fraction(1) / total for total in load.values())
        else:
            predicted = self.sensor_fps

        if self.honor_interconnect:
            crossing_bw = Fraction(0)
            for con in self.graph.edges:
                src, dst = self.graph.node(con.src), self.graph.node(con.dst)
                if not isinstance(src, OperatorSpec) or not isinstance(dst, OperatorSpec):
                    continue
                if assignment[src.id] != assignment[dst.id]:
                    crossing_bw += self.edge_streams[con.id].bit_rate
            if crossing_bw > self.platform.interconnect_bw:
                cap = self.sensor_fps * self.platform.interconnect_bw / crossing_bw
                predicted = min(predicted, cap)

        return Mapping(
            assignment=tuple(sorted(assignment.items())),
            predicted_fps=predicted,
            energy_proxy=energy,
            per_unit_utilization=tuple(sorted(util.items())),
        )

    def rank_key(self, mapping: Mapping, target: Fraction):
        """Total order: feasibility shortfall, energy, units used, assignment."""
        shortfall = max(Fraction(0), target - mapping.predicted_fps)
        return (shortfall, mapping.energy_proxy, mapping.units_used(), mapping.assignment)


def evaluate_mapping(
    graph: PipelineGraph,
    platform: PlatformSpec,
    assignment: dict[int, str],
    *,
    bandwidth_model: str = hardware.BW_AUTO,
    overlap: bool = True,
    honor_interconnect: bool = True,
) -> Mapping:
    """Score one total, capability-respecting assignment."""
    ev = _Evaluator(
        graph,
        platform,
        bandwidth_model=bandwidth_model,
        overlap=overlap,
        honor_interconnect=honor_interconnect,
    )
    return ev.evaluate(dict(assignment))


def search_space_size(graph: PipelineGraph, platform: PlatformSpec) -> int:
    return len(platform.units) ** len(graph.operators())


def search_mapping(
    graph: PipelineGraph,
    platform: PlatformSpec,
    constraints: Constraints | None = None,
) -> Mapping | Infeasible:
    """Cheapest feasible mapping, or an Infeasible diagnosis.

    Within EXHAUSTIVE_LIMIT candidate assignments the search enumerates all
    of them, so the result is the global optimum under the tie order
    (energy, units used, lexicographic assignment).  Larger instances use a
    greedy seed refined by hill climbing and set `heuristic=True`.
    """
    constraints = constraints or Constraints()
    ev = _Evaluator(
        graph,
        platform,
        bandwidth_model=constraints.bandwidth_model,
        overlap=constraints.overlap,
        honor_interconnect=constraints.honor_interconnect,
    )
    target = constraints.target_fps
    if target is None:
        target = ev.sensor_fps

    if not ev.ops:
        return ev.evaluate({})

    hostable = {op.id: ev.hostable_units(op) for op in ev.ops}
    if any(not units for units in hostable.values()):
        return _diagnose(ev, hostable, target)

    if search_space_size(graph, platform) <= EXHAUSTIVE_LIMIT:
        best = _exhaustive(ev, hostable, target)
    else:
        best = _hill_climb(ev, hostable, target)

    if best is None or best.predicted_fps < target:
        return _diagnose(ev, hostable, target)
    return best


def _exhaustive(ev: _Evaluator, hostable, target) -> Mapping | None:
    op_ids = [op.id for op in ev.ops]
    best = None
    best_key = None
    for combo in itertools.product(*(hostable[i] for i in op_ids)):
        mapping = ev.evaluate(dict(zip(op_ids, combo)))
        if mapping.predicted_fps < target:
            continue
        key = ev.rank_key(mapping, target)
        if best_key is None or key < best_key:
            best, best_key = mapping, key
    return best


def _hill_climb(ev: _Evaluator, hostable, target) -> Mapping:
    # Greedy seed in topological order: cheapest unit that keeps the mapping
    # as feasible as possible so far.
    topo_ops = [
        nid for nid in ev.graph.topo_order
        if isinstance(ev.graph.node(nid), OperatorSpec)
    ]
    assignment: dict[int, str] = {}
    for op_id in topo_ops:
        op = ev.graph.node(op_id)
        best_unit = None
        best_key = None
        for unit_id in hostable[op_id]:
            trial = dict(assignment)
            trial[op_id] = unit_id
            partial = _partial_key(ev, trial, target)
            if best_key is None or partial < best_key:
                best_key, best_unit = partial, unit_id
        assignment[op_id] = best_unit

    current = ev.evaluate(assignment)
    current_key = ev.rank_key(current, target)
    improved = True
    while improved:
        improved = False
        for op in ev.ops:
            for unit_id in hostable[op.id]:
                if unit_id == current.unit_of(op.id):
                    continue
                trial = current.as_dict()
                trial[op.id] = unit_id
                candidate = ev.evaluate(trial)
                key = ev.rank_key(candidate, target)
                if key < current_key:
                    current, current_key = candidate, key
                    improved = True
    return Mapping(
        assignment=current.assignment,
        predicted_fps=current.predicted_fps,
        energy_proxy=current.energy_proxy,
        per_unit_utilization=current.per_unit_utilization,
        heuristic=True,
    )


def _partial_key(ev: _Evaluator, partial: dict[int, str], target):
    load: dict[str, Fraction] = {}
    energy = Fraction(0)
    for op_id, unit_id in partial.items():
        op = ev.graph.node(op_id)
        ft = ev.frame_time(op, unit_id)
        load[unit_id] = load.get(unit_id, Fraction(0)) + ft
        energy += ev.platform.unit(unit_id).power_weight * ft * ev.inputs[op_id].fps
    predicted = min((Fraction(1) / t for t in load.values()), default=target)
    shortfall = max(Fraction(0), target - predicted)
    return (shortfall, energy)


def _diagnose(ev: _Evaluator, hostable, target) -> Infeasible:
    entries = []
    for op in ev.ops:
        units = hostable[op.id]
        if not units:
            entries.append(
                OperatorDiagnosis(op.id, "no unit can host this operator")
            )
            continue
        best_unit = None
        best_fps = None
        for unit_id in units:
            fps = Fraction(1) / ev.frame_time(op, unit_id)
            if best_fps is None or (fps, unit_id) > (best_fps, best_unit):
                best_fps, best_unit = fps, unit_id
        if best_fps < target:
            reason = (
                f"fastest unit sustains {float(best_fps):.3f} fps, "
                f"below the {float(target):.3f} fps target"
            )
        else:
            reason = (
                f"schedulable alone at {float(best_fps):.3f} fps; "
                "contention with other operators binds"
            )
        entries.append(OperatorDiagnosis(op.id, reason, best_unit, best_fps))
    return Infeasible(target_fps=target, per_operator=tuple(entries))

"""Continuous-time chase-escape dynamics on a Gilbert graph.

An S node becomes infected at rate lambda_i times its infected-neighbor
count; an I node becomes a white knight at rate lambda_w times its
knight-neighbor count; W is absorbing.  Direct Gillespie with cached
per-node reaction counts; the per-edge exponential-clock construction
agrees in law by memorylessness.

run() executes on the selected backend kernel; init_state()/step() expose
an instrumented per-event view (always pure Python) for invariant checks
and debugging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from . import _engine
from .errors import AbsorbedError, ParameterError
from .geometry import GilbertGraph, Mark, Topology

_BIG_EVENTS = 2**62
_MARK_W = Mark.WHITE_KNIGHT.value


class NodeState(IntEnum):
    S = 0
    I = 1
    W = 2


class OutcomeClass(Enum):
    EXTINCTION = "extinction"
    LOCAL_SURVIVAL = "local_survival"
    GLOBAL_PROXY = "global_proxy"


class StopReason(Enum):
    ABSORBED = "absorbed"
    BOUNDARY = "boundary"
    CAP = "cap"


_STOP_BY_CODE = {
    _engine.STOP_ABSORBED: StopReason.ABSORBED,
    _engine.STOP_BOUNDARY: StopReason.BOUNDARY,
    _engine.STOP_CAP: StopReason.CAP,
}

_TRANSITION = {_engine.KIND_INFECT: "S->I", _engine.KIND_PATCH: "I->W"}


@dataclass(frozen=True)
class RateParams:
    """Infection rate lambda_i >= 0 and patch rate lambda_w > 0.

    Time can be rescaled so lambda_w = 1 without loss of generality; the
    parameter stays explicit for rescaling-equivalence checks.
    """

    lambda_i: float
    lambda_w: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.lambda_i) or self.lambda_i < 0:
            raise ParameterError(f"lambda_i must be finite and >= 0, got {self.lambda_i}")
        if not math.isfinite(self.lambda_w) or self.lambda_w <= 0:
            raise ParameterError(f"lambda_w must be finite and > 0, got {self.lambda_w}")


@dataclass(frozen=True)
class StopPolicy:
    """Finite-volume stopping rules.

    boundary_censoring stops a run once an infected node sits within radius
    of a box face (the geometric global-survival proxy); the caps are the
    fallback proxy and a termination guarantee.  At least one cap must be
    finite.
    """

    max_events: int | None = 10_000_000
    max_infected: int | None = None
    max_time: float | None = None
    boundary_censoring: bool = True

    def __post_init__(self):
        if self.max_events is None and self.max_infected is None and self.max_time is None:
            raise ParameterError("at least one stopping cap must be finite")


@dataclass(frozen=True)
class SimOutcome:
    """Terminal classification and trajectory metrics of one run."""

    outcome: OutcomeClass
    total_ever_infected: int
    extinction_time: float | None
    max_displacement: float
    events: int
    stop_reason: StopReason

    def to_record(self) -> dict:
        return {
            "class": self.outcome.value,
            "total_ever_infected": self.total_ever_infected,
            "extinction_time": self.extinction_time,
            "max_displacement": self.max_displacement,
            "events": self.events,
            "stop_reason": self.stop_reason.value,
        }


@dataclass(frozen=True)
class EventRecord:
    node: int
    transition: str  # "S->I" or "I->W"
    time: float
    dt: float


def classify(stop_reason: StopReason, infected_count: int) -> OutcomeClass:
    """Outcome class from the stop reason and the final infected count."""
    if stop_reason is StopReason.ABSORBED:
        if infected_count < 0:
            raise RuntimeError("negative infected count at absorption")
        return OutcomeClass.EXTINCTION if infected_count == 0 else OutcomeClass.LOCAL_SURVIVAL
    return OutcomeClass.GLOBAL_PROXY


def initial_states(graph: GilbertGraph) -> np.ndarray:
    """Initial condition: origin infected, knights W, everything else S."""
    config = graph.config
    states = np.where(config.marks == _MARK_W,
                      np.int8(NodeState.W), np.int8(NodeState.S)).astype(np.int8)
    states[config.origin_index] = NodeState.I
    return states


def displacement_from_origin(graph: GilbertGraph) -> np.ndarray:
    """Euclidean distance of every node to the origin node (torus metric
    on the torus)."""
    config = graph.config
    delta = config.positions - config.positions[config.origin_index]
    if config.box.topology is Topology.TORUS:
        side = config.box.side
        delta = delta - side * np.round(delta / side)
    return np.sqrt((delta * delta).sum(axis=1))


def boundary_mask(graph: GilbertGraph) -> np.ndarray:
    """Nodes within radius of a box face (empty on the torus)."""
    config = graph.config
    if config.box.topology is Topology.TORUS:
        return np.zeros(graph.n_nodes, dtype=np.uint8)
    shell = config.box.side / 2.0 - graph.radius
    return (np.abs(config.positions).max(axis=1) >= shell).astype(np.uint8)


def _resolve_caps(policy: StopPolicy) -> tuple[int, int, float]:
    max_events = policy.max_events if policy.max_events is not None else _BIG_EVENTS
    max_infected = policy.max_infected if policy.max_infected is not None else _BIG_EVENTS
    max_time = policy.max_time if policy.max_time is not None else math.inf
    return int(max_events), int(max_infected), float(max_time)


def _outcome_from_kernel(result) -> SimOutcome:
    stop_code, events, _clock, ext_time, ever, max_disp, infected, _traj = result
    reason = _STOP_BY_CODE[stop_code]
    return SimOutcome(
        outcome=classify(reason, infected),
        total_ever_infected=ever,
        extinction_time=None if math.isnan(ext_time) else ext_time,
        max_displacement=max_disp,
        events=events,
        stop_reason=reason,
    )


class Simulator:
    """Reusable runner: one engine per (graph, policy), many replications."""

    def __init__(self, graph: GilbertGraph, params: RateParams, policy: StopPolicy):
        self.graph = graph
        self.params = params
        self.policy = policy
        censor = (boundary_mask(graph) if policy.boundary_censoring
                  else np.zeros(graph.n_nodes, dtype=np.uint8))
        self._engine = _engine.GillespieEngine(
            graph.indptr, graph.indices, initial_states(graph), censor,
            displacement_from_origin(graph))
        self._caps = _resolve_caps(policy)

    def run(self, rng: np.random.Generator) -> SimOutcome:
        me, mi, mt = self._caps
        result = self._engine.run(self.params.lambda_i, self.params.lambda_w,
                                  me, mi, mt, rng, record=False)
        return _outcome_from_kernel(result)

    def run_recorded(self, rng: np.random.Generator) -> tuple[SimOutcome, list[EventRecord]]:
        me, mi, mt = self._caps
        result = self._engine.run(self.params.lambda_i, self.params.lambda_w,
                                  me, mi, mt, rng, record=True)
        times, nodes, kinds = result[7]
        events = []
        prev = 0.0
        for t, v, k in zip(times.tolist(), nodes.tolist(), kinds.tolist()):
            events.append(EventRecord(node=v, transition=_TRANSITION[k],
                                      time=t, dt=t - prev))
            prev = t
        return _outcome_from_kernel(result), events


def run(graph: GilbertGraph, params: RateParams, policy: StopPolicy,
        rng: np.random.Generator) -> SimOutcome:
    """Run one trajectory to absorption, boundary censoring, or a cap."""
    return Simulator(graph, params, policy).run(rng)


def run_recorded(graph: GilbertGraph, params: RateParams, policy: StopPolicy,
                 rng: np.random.Generator) -> tuple[SimOutcome, list[EventRecord]]:
    """Like run(), also returning the full event list."""
    return Simulator(graph, params, policy).run_recorded(rng)


class DynamicState:
    """Instrumented per-event view of one trajectory (pure backend).

    Exposes the bookkeeping the invariant tests recount from scratch:
    per-node states, cached reaction counts, total rate, clock, and the
    ever-infected set.  Advance with step().
    """

    def __init__(self, graph: GilbertGraph, params: RateParams):
        self.graph = graph
        self.params = params
        pure_engine = _engine.pure.GillespieEngine(
            graph.indptr, graph.indices, initial_states(graph),
            np.zeros(graph.n_nodes, dtype=np.uint8),
            displacement_from_origin(graph))
        self._run = _engine.make_stepper(pure_engine, params.lambda_i, params.lambda_w)
        self.ever_infected = {int(v) for v in np.flatnonzero(initial_states(graph) == NodeState.I)}

    @property
    def state(self) -> np.ndarray:
        return self._run.state.copy()

    @property
    def clock(self) -> float:
        return self._run.clock

    @property
    def total_rate(self) -> float:
        return self._run.total_rate()

    @property
    def infected_count(self) -> int:
        return self._run.infected

    @property
    def total_ever_infected(self) -> int:
        return self._run.ever

    @property
    def infected_neighbor_count(self) -> dict[int, int]:
        st = self._run.state
        return {int(v): int(self._run.inf_nbr[v])
                for v in np.flatnonzero(st == NodeState.S)}

    @property
    def knight_neighbor_count(self) -> dict[int, int]:
        st = self._run.state
        return {int(v): int(self._run.kn_nbr[v])
                for v in np.flatnonzero(st == NodeState.I)}


def init_state(graph: GilbertGraph, params: RateParams | None = None) -> DynamicState:
    """Fresh dynamic state: origin infected, counts computed from scratch."""
    return DynamicState(graph, params if params is not None else RateParams(lambda_i=1.0))


def step(state: DynamicState, rng: np.random.Generator) -> EventRecord:
    """Advance one Gillespie event; raises AbsorbedError at total rate zero."""
    if state.total_rate == 0.0:
        raise AbsorbedError("no enabled transitions")
    before = state._run.clock
    time, node, kind = state._run.attempt(rng, math.inf)
    record = EventRecord(node=node, transition=_TRANSITION[kind],
                         time=time, dt=time - before)
    if record.transition == "S->I":
        state.ever_infected.add(node)
    return record

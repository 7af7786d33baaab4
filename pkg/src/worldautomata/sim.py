"""Fixed-step simulation of world automata on a spatial grid.

One step from sample k to k+1: state variables advance by explicit Euler using
the values at k; inputs are read at k+1; algebraic laws settle in dependency
order; guards are checked on the settled state. Scheduled input actions fire
first, then locally controlled actions in priority order, each leaf firing at
most one controlled action per step. An action only fires when its effect
changes the state. Every firing cuts the current trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .builtins import GLOBAL_DEFAULTS, make_functions
from .execution import Execution
from .expr import evaluate
from .grid import SpatialGrid
from .model import WorldAutomaton
from .network import Network, Node, StepState
from .schedule import SignalSpec, Stimulus
from .trajectory import Trajectory, lattice_index
from .types import EnumType, GridMapType, Key, Vec2Type


class UnscheduledInput(ValueError):
    pass


class ConfigError(ValueError):
    pass


Chooser = Callable[[float, Sequence[Key]], int]


def sample_time(k: int, dt: float) -> float:
    # rounding keeps printed event times free of binary noise such as 0.30000000000000004
    return round(k * dt, 12)


def first_choice(t: float, candidates: Sequence[Key]) -> int:
    return 0


@dataclass(frozen=True)
class SimConfig:
    grid: SpatialGrid = field(default_factory=SpatialGrid)
    dt: float = 0.1
    horizon: float = 5.0
    stimulus: Stimulus = field(default_factory=Stimulus)
    params: Mapping[str, Any] = field(default_factory=dict)
    bindings: Mapping[str, str] = field(default_factory=dict)
    pin_neutral: bool = False
    seed: int = 0
    target_size: float = 1.0
    decay: float = 0.1

    @property
    def steps(self) -> int:
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        try:
            return lattice_index(self.horizon, self.dt)
        except ValueError:
            raise ConfigError(f"horizon {self.horizon} is not a multiple of dt {self.dt}") from None

    def with_(self, **changes) -> "SimConfig":
        from dataclasses import replace

        return replace(self, **changes)

    def functions(self):
        return make_functions(self.bindings, self.target_size, self.decay)

    def env(self):
        env = dict(GLOBAL_DEFAULTS)
        env.update(self.params)
        return env


@dataclass(frozen=True)
class Event:
    time: float
    action: Key
    paths: Tuple[str, ...]


class InputSource:
    """Values of the root's external inputs at each sample, from a stimulus."""

    def __init__(self, net: Network, cfg: SimConfig):
        self.net, self.cfg = net, cfg
        root = net.root
        self.specs: Dict[Key, Optional[SignalSpec]] = {}
        missing = []
        for key in sorted(root.U):
            spec = cfg.stimulus.signal(key)
            if spec is None and not cfg.pin_neutral:
                missing.append(str(key))
            self.specs[key] = spec
        if missing:
            raise UnscheduledInput(f"inputs without a schedule: {', '.join(missing)} (schedule them or pin them to neutral)")
        times = {}
        for key, ts in cfg.stimulus.actions:
            if key not in root.I:
                raise ConfigError(f"{key} is not an input action of {root.name}")
            for t in ts:
                k = lattice_index(t, cfg.dt)
                times.setdefault(k, []).append(key)
        self.action_times = times

    def values(self, t: float) -> Dict[Key, Any]:
        out = {}
        for key, spec in self.specs.items():
            decl = self.net.root.var(key)
            if spec is None:
                out[key] = self.net.neutral_value(decl.type, decl.is_world)
            elif isinstance(decl.type, GridMapType):
                out[key] = self.net.empty_map()
            else:
                out[key] = spec.value(t, decl.type, self.net.grid, decl.is_world)
        return out


@dataclass
class Row:
    k: int
    state: StepState


class SimResult:
    def __init__(self, wa, cfg, net, rows, cuts, events):
        self.wa: WorldAutomaton = wa
        self.config: SimConfig = cfg
        self.network: Network = net
        self.rows: List[Row] = rows
        self.cuts: List[Tuple[int, Key]] = cuts  # (row index of the post state, action)
        self.events: List[Event] = events

    @cached_property
    def execution(self) -> Execution:
        return build_execution(self.network, self.rows, self.cuts, self.config.dt)

    @cached_property
    def component_executions(self) -> Dict[Tuple[int, ...], Execution]:
        from .decompose import decompose_execution

        return decompose_execution(self.execution, self.wa, self.config, network=self.network)

    def event_log(self) -> List[Tuple[float, str, str]]:
        return [(e.time, str(e.action), ",".join(e.paths)) for e in self.events]

    def final_state(self) -> Dict[Key, Any]:
        return self.network.root_valuation(self.rows[-1].state)


def trajectory_from_states(net: Network, states: Sequence[StepState], dt: float, path=()) -> Trajectory:
    wa, view = net.views[path]
    schema = {v.key: v.type for v in wa.variables}
    world = frozenset(v.key for v in wa.variables if v.is_world)
    data = {}
    for key in sorted(schema):
        column = [net.signal_value(view[key], s) for s in states]
        st = schema[key]
        if isinstance(st, (EnumType, GridMapType)):
            shape = np.shape(column[0]) if isinstance(st, EnumType) else ()
            arr = np.empty((len(column),) + shape, dtype=object)
            for i, v in enumerate(column):
                if isinstance(st, GridMapType):
                    arr[i] = None
                    arr[i] = v
                else:
                    arr[i] = v
        elif isinstance(st, Vec2Type):
            arr = np.asarray(column, dtype=float)
        else:
            arr = np.asarray(column, dtype=st.field_dtype)
        data[key] = arr
    return Trajectory(dt, len(states), schema, data, world)


def build_execution(net: Network, rows: Sequence[Row], cuts: Sequence[Tuple[int, Key]], dt: float, path=()) -> Execution:
    pieces, actions = [], []
    start = 0
    for post, action in cuts:
        pieces.append(trajectory_from_states(net, [r.state for r in rows[start:post]], dt, path))
        actions.append(action)
        start = post
    pieces.append(trajectory_from_states(net, [r.state for r in rows[start:]], dt, path))
    return Execution(pieces, actions, dt)


def simulate(
    wa: WorldAutomaton,
    cfg: SimConfig,
    chooser: Chooser = first_choice,
    network: Optional[Network] = None,
    record_choices: Optional[list] = None,
) -> SimResult:
    """Run `wa` for cfg.horizon seconds. `record_choices` collects (time, candidates) at every choice point."""
    net = network or Network(wa, cfg.grid, cfg.functions(), cfg.env())
    n_steps = cfg.steps
    inputs = InputSource(net, cfg)
    dt = cfg.dt

    init = net.initial_nodes()
    ext0 = inputs.values(0.0)
    before = StepState(dict(init), ext0, 0.0, None)
    state = StepState(dict(init), ext0, 0.0, before)
    net.settle(state)
    rows = [Row(0, state)]
    cuts: List[Tuple[int, Key]] = []
    events: List[Event] = []

    def fire(k: int, state: StepState) -> StepState:
        t = sample_time(k, dt)
        for action in inputs.action_times.get(k, []):
            eff = net.input_effects(action, state)
            state = net.apply(state, eff)
            rows.append(Row(k, state))
            cuts.append((len(rows) - 1, action))
            events.append(Event(t, action, tuple(l.label for l in net.participants.get(action, []))))
        fired_leaves = set()
        while True:
            candidates = []
            for action in net.controlled:
                leaves = net.participants.get(action, [])
                if any(l.path in fired_leaves for l in leaves):
                    continue
                eff = net.controlled_effects(action, state)
                if eff is None or not net.is_effective(eff, state):
                    continue
                candidates.append((action, eff, leaves))
            if not candidates:
                return state
            idx = 0
            if len(candidates) > 1:
                keys = [c[0] for c in candidates]
                if record_choices is not None:
                    record_choices.append((t, keys))
                idx = chooser(t, keys)
            action, eff, leaves = candidates[idx]
            state = net.apply(state, eff)
            rows.append(Row(k, state))
            cuts.append((len(rows) - 1, action))
            events.append(Event(t, action, tuple(l.label for l in leaves)))
            fired_leaves.update(l.path for l in leaves)

    state = fire(0, state)
    for k in range(1, n_steps + 1):
        t = sample_time(k, dt)
        nodes = net.advance(state, dt)
        nxt = StepState(nodes, inputs.values(t), t, state)
        net.settle(nxt)
        rows.append(Row(k, nxt))
        state = fire(k, nxt)
    return SimResult(wa, cfg, net, rows, cuts, events)


def regenerate(
    net: Network,
    tau: Trajectory,
    hint: Optional[Mapping[Node, Any]] = None,
    start: Optional[StepState] = None,
) -> Tuple[Trajectory, List[StepState]]:
    """The trajectory the dynamics produce from fstate(tau) under tau's inputs.

    Time restarts at 0, and no discrete transition is taken.
    """
    dt = tau.dt
    if start is None:
        start = net.load(tau.fstate(), 0.0, hint=hint)
        start.prev = None
    else:
        start = StepState(dict(start.nodes), start.ext, 0.0, None)
    states = [start]
    state = start
    input_keys = [k for k in net.root.U]
    for k in range(1, tau.n):
        t = sample_time(k, dt)
        nodes = net.advance(state, dt)
        ext = {key: tau.value(key, k) for key in input_keys}
        nxt = StepState(nodes, ext, t, state)
        net.settle(nxt)
        states.append(nxt)
        state = nxt
    return trajectory_from_states(net, states, dt), states


def initial_state_ok(wa: WorldAutomaton) -> Optional[bool]:
    """Whether the initial valuation satisfies the state predicate; None if undecidable here."""
    try:
        cfg = SimConfig(grid=SpatialGrid(nx=1, ny=1), pin_neutral=True, horizon=0.0)
        net = Network(wa, cfg.grid, cfg.functions(), cfg.env())
        init = net.initial_nodes()
        state = StepState(dict(init), {k: net.neutral_value(wa.var(k).type, wa.var(k).is_world) for k in wa.U}, 0.0)
        leaf = net.leaves[0]
        value = evaluate(wa.states, net.context(leaf, state))
        return bool(np.all(value))
    except Exception:
        return None

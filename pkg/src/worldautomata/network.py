"""Flattening a composite automaton into leaf instances wired together by signals.

Every atomic automaton in the composition tree becomes a leaf identified by its
path (child indices from the root). Each leaf input is bound to a signal: another
leaf's variable, an external input of the root, a constant, the algebra neutral,
or the algebra combination of several signals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from .algebra import DEFAULT_ALGEBRA, AlgebraUndefined, PerturbationAlgebra
from .expr import Context, EvalError, evaluate, references
from .grid import SpatialGrid
from .model import Direction, LawForm, TransitionRule, VariableDecl, WorldAutomaton
from .trajectory import values_equal
from .types import AngleType, EnumType, GridMapType, Key, StaticType, Vec2Type, wrap_angle

Path = Tuple[int, ...]


@dataclass(frozen=True)
class Node:
    path: Path
    key: Key


@dataclass(frozen=True)
class Ext:
    key: Key


@dataclass(frozen=True, eq=False)
class Const:
    value: Any
    type: StaticType
    world: bool


@dataclass(frozen=True, eq=False)
class Neutral:
    type: StaticType
    world: bool


@dataclass(frozen=True, eq=False)
class Comb:
    type: StaticType
    parts: Tuple[Any, ...]


Signal = Union[Node, Ext, Const, Neutral, Comb]


class AlgebraicCycle(ValueError):
    pass


class StateNotRecoverable(ValueError):
    """A leaf state variable is invisible in the trajectory and no hint supplies it."""


def signal_nodes(sig) -> set:
    if isinstance(sig, Node):
        return {sig}
    if isinstance(sig, Comb):
        out = set()
        for p in sig.parts:
            out |= signal_nodes(p)
        return out
    return set()


class Leaf:
    def __init__(self, path: Path, wa: WorldAutomaton, bindings: Dict[Key, Any], env: Mapping[str, Any]):
        self.path = path
        self.wa = wa
        self.bindings = bindings
        self.inputs = wa.U
        self.decls = {v.key: v for v in wa.variables}
        names: Dict[str, Optional[Key]] = {}
        for v in wa.variables:
            names[v.name] = None if v.name in names else v.key
        self._by_name = names
        self.laws = {}
        for key in wa.X | wa.Y:
            law = wa.law_for(key)
            if law is not None:
                self.laws[key] = law
        self.rules: Dict[Key, List[TransitionRule]] = {}
        for r in wa.transitions:
            self.rules.setdefault(r.action, []).append(r)
        self.params = dict(env)
        self.params.update({k: v for k, v in wa.params.items() if v is not None})
        self.literals = wa.literals

    @property
    def label(self) -> str:
        return ".".join(map(str, self.path)) or "root"

    def lookup(self, name: str, level: Optional[int]) -> Key:
        if level is not None:
            key = Key(name, level)
            if key in self.decls:
                return key
            raise KeyError(key)
        key = self._by_name.get(name, False)
        if key is False:
            raise KeyError(name)
        if key is None:
            raise KeyError(f"{name} is ambiguous in {self.wa.name}")
        return key

    def node(self, key: Key) -> Node:
        return Node(self.path, key)


class StepState:
    """Values of every leaf variable and every external input at one sample."""

    __slots__ = ("nodes", "ext", "t", "prev")

    def __init__(self, nodes, ext, t, prev=None):
        self.nodes = nodes
        self.ext = ext
        self.t = t
        self.prev = prev

    def copy(self) -> "StepState":
        return StepState(dict(self.nodes), self.ext, self.t, self.prev)


class Network:
    def __init__(
        self,
        wa: WorldAutomaton,
        grid: SpatialGrid,
        functions: Mapping[str, Callable],
        env: Optional[Mapping[str, Any]] = None,
        algebra: PerturbationAlgebra = DEFAULT_ALGEBRA,
    ):
        self.root = wa
        self.grid = grid
        self.functions = functions
        self.env = dict(env or {})
        self.algebra = algebra
        self.leaves: List[Leaf] = []
        self.views: Dict[Path, Tuple[WorldAutomaton, Dict[Key, Any]]] = {}
        self._bind(wa, (), {k: Ext(k) for k in wa.U})
        self.leaf_at = {leaf.path: leaf for leaf in self.leaves}
        self._classify()
        self._order_algebraic()
        self._collect_actions()

    # -- construction ----------------------------------------------------------
    def _produced(self, wa: WorldAutomaton, path: Path) -> Dict[Key, Any]:
        own = wa.X | wa.Y
        if wa.composite is None:
            return {k: Node(path, k) for k in own}
        b = wa.composite.binding
        parts = [self._produced(p, path + (i,)) for i, p in enumerate(wa.composite.parts)]
        out = {}
        for k in own:
            if b.kind == "parallel" and k in b.shared:
                out[k] = Comb(wa.var(k).type, (parts[0][k], parts[1][k]))
            else:
                for p in parts:
                    if k in p:
                        out[k] = p[k]
                        break
                else:
                    raise KeyError(f"no component produces {k}")
        return out

    def _bind(self, wa: WorldAutomaton, path: Path, inputs: Dict[Key, Any]):
        produced = self._produced(wa, path)
        view = {k: inputs[k] for k in wa.U}
        view.update(produced)
        self.views[path] = (wa, view)
        if wa.composite is None:
            self.leaves.append(Leaf(path, wa, {k: inputs[k] for k in wa.U}, self.env))
            return
        b = wa.composite.binding
        parts = wa.composite.parts
        if b.kind == "parallel":
            for i, part in enumerate(parts):
                child = {k: inputs[k] if k in inputs else produced[k] for k in part.U}
                self._bind(part, path + (i,), child)
        elif b.kind == "inplace":
            outer, inner = parts
            inner_out = self._produced(inner, path + (1,))
            child1 = {}
            for k in outer.U:
                if k in b.shared:
                    child1[k] = Comb(outer.var(k).type, (inputs[k], inner_out[k]))
                elif k in inputs:
                    child1[k] = inputs[k]
                else:
                    child1[k] = produced[k]
            child3 = {}
            for k in inner.U:
                if k in inputs:
                    child3[k] = inputs[k]
                elif k in produced:
                    child3[k] = produced[k]
                else:
                    decl = inner.var(k)
                    child3[k] = Neutral(decl.type, decl.is_world)
            self._bind(outer, path + (0,), child1)
            self._bind(inner, path + (1,), child3)
        elif b.kind == "closed":
            (part,) = parts
            child = dict(inputs)
            for k, value in b.closures:
                decl = part.var(k)
                child[k] = Const(value, decl.type, decl.is_world)
            self._bind(part, path + (0,), child)
        else:
            raise ValueError(f"unknown composite kind {b.kind}")

    def _classify(self):
        self.kind: Dict[Node, str] = {}
        self.decl: Dict[Node, VariableDecl] = {}
        self.owner: Dict[Node, Leaf] = {}
        for leaf in self.leaves:
            for v in leaf.wa.variables:
                if v.direction is Direction.INPUT:
                    continue
                n = leaf.node(v.key)
                self.decl[n] = v
                self.owner[n] = leaf
                law = leaf.laws.get(v.key)
                if law is None:
                    self.kind[n] = "hold"
                elif law.form is LawForm.ALGEBRAIC:
                    self.kind[n] = "alg"
                elif law.form is LawForm.ODE:
                    self.kind[n] = "ode"
                else:
                    self.kind[n] = "bound"
        self.state_nodes = [n for n, k in self.kind.items() if k != "alg"]

    def _law_deps(self, leaf: Leaf, key: Key) -> set:
        law = leaf.laws[key]
        exprs = [law.expr] + ([law.at] if law.at is not None else [])
        out = set()
        for e in exprs:
            for name, level, is_prev in references(e):
                if is_prev:
                    continue
                try:
                    k = leaf.lookup(name, level)
                except KeyError:
                    continue
                if k in leaf.inputs:
                    out |= signal_nodes(leaf.bindings[k])
                else:
                    out.add(leaf.node(k))
        return out

    def _order_algebraic(self):
        alg = [n for n, k in self.kind.items() if k == "alg"]
        index = {n: i for i, n in enumerate(alg)}
        deps = {n: {d for d in self._law_deps(self.owner[n], n.key) if self.kind.get(d) == "alg"} for n in alg}
        order, done = [], set()
        remaining = list(alg)
        while remaining:
            progress = False
            for n in list(remaining):
                if deps[n] <= done:
                    order.append(n)
                    done.add(n)
                    remaining.remove(n)
                    progress = True
            if not progress:
                names = ", ".join(f"{self.owner[n].wa.name}.{n.key}" for n in sorted(remaining, key=index.get))
                raise AlgebraicCycle(f"algebraic laws depend on each other in a cycle: {names}")
        self.alg_order = order

    def _collect_actions(self):
        self.participants: Dict[Key, List[Leaf]] = {}
        controlled: List[Key] = []
        for leaf in self.leaves:
            for a in leaf.wa.actions:
                self.participants.setdefault(a.key, []).append(leaf)
                if a.kind.value != "input" and a.key not in controlled:
                    controlled.append(a.key)
        self.controlled = controlled

    # -- values ------------------------------------------------------------------
    def expand(self, st: StaticType, value, world: bool):
        if not world:
            if isinstance(st, GridMapType):
                return self.empty_map() if value is None else value
            return st.coerce(value)
        shape = self.grid.shape
        if isinstance(st, Vec2Type):
            return np.broadcast_to(np.asarray(value, dtype=float), shape + (2,)).copy()
        if st.field_dtype is object:
            arr = np.empty(shape, dtype=object)
            arr[...] = value
            return arr
        return np.full(shape, st.coerce(value), dtype=st.field_dtype)

    def empty_map(self):
        return np.empty(self.grid.shape, dtype=object)

    def neutral_value(self, st: StaticType, world: bool):
        try:
            v = self.algebra.neutral(st)
        except AlgebraUndefined:
            v = st.default()
        return self.expand(st, v, world)

    def signal_value(self, sig, state: StepState):
        if isinstance(sig, Node):
            return state.nodes[sig]
        if isinstance(sig, Ext):
            return state.ext[sig.key]
        if isinstance(sig, Const):
            return self.expand(sig.type, sig.value, sig.world)
        if isinstance(sig, Neutral):
            return self.neutral_value(sig.type, sig.world)
        if isinstance(sig, Comb):
            values = [self.signal_value(p, state) for p in sig.parts]
            alg = self.algebra.for_type(sig.type)
            out = values[0]
            for v in values[1:]:
                out = alg.combine(out, v)
            return out
        raise TypeError(sig)

    def leaf_value(self, leaf: Leaf, key: Key, state: StepState):
        if key in leaf.inputs:
            return self.signal_value(leaf.bindings[key], state)
        return state.nodes[leaf.node(key)]

    def view_value(self, path: Path, key: Key, state: StepState):
        return self.signal_value(self.views[path][1][key], state)

    def context(self, leaf: Leaf, state: StepState) -> Context:
        prev = state.prev if state.prev is not None else state

        def current(name, level):
            return self.leaf_value(leaf, leaf.lookup(name, level), state)

        def previous(name, level):
            return self.leaf_value(leaf, leaf.lookup(name, level), prev)

        return Context(self.grid, state.t, current, previous, leaf.params, leaf.literals, self.functions)

    def coerce(self, decl: VariableDecl, value):
        st = decl.type
        if decl.is_world:
            shape = self.grid.shape
            if isinstance(st, Vec2Type):
                return np.broadcast_to(np.asarray(value, dtype=float), shape + (2,)).copy()
            if st.field_dtype is object:
                arr = np.empty(shape, dtype=object)
                arr[...] = value
                if isinstance(st, EnumType):
                    bad = set(arr.ravel().tolist()) - set(st.variants)
                    if bad:
                        raise EvalError(f"{decl.key} takes values {sorted(map(str, bad))} outside {st.name}")
                return arr
            arr = np.broadcast_to(np.asarray(value), shape).astype(st.field_dtype)
            if isinstance(st, AngleType):
                arr = wrap_angle(arr)
            return arr
        if isinstance(st, GridMapType):
            return value
        if isinstance(value, np.ndarray) and value.ndim == 2:
            raise EvalError(f"automaton variable {decl.key} received a spatial field")
        try:
            return st.coerce(value)
        except (TypeError, ValueError) as exc:
            raise EvalError(f"{decl.key}: {exc}") from None

    # -- dynamics ----------------------------------------------------------------
    def initial_nodes(self) -> Dict[Node, Any]:
        out = {}
        for n, decl in self.decl.items():
            leaf = self.owner[n]
            if decl.init is not None:
                ctx = Context(self.grid, 0.0, _no_vars, _no_vars, leaf.params, leaf.literals, self.functions)
                out[n] = self.coerce(decl, evaluate(decl.init, ctx))
            elif isinstance(decl.type, GridMapType):
                out[n] = self.empty_map()
            else:
                out[n] = self.expand(decl.type, decl.type.default(), decl.is_world)
        return out

    def eval_alg(self, n: Node, state: StepState):
        leaf = self.owner[n]
        law = leaf.laws[n.key]
        ctx = self.context(leaf, state)
        value = evaluate(law.expr, ctx)
        decl = self.decl[n]
        if law.at is not None:
            prev = state.prev if state.prev is not None else state
            base = prev.nodes[n]
            base = self.empty_map() if base is None else np.array(base, dtype=object, copy=True)
            cell = self.grid.cell_of(np.asarray(evaluate(law.at, ctx), dtype=float))
            if cell is not None:
                base[cell] = value
            return base
        return self.coerce(decl, value)

    def settle(self, state: StepState, only: Optional[set] = None):
        for n in self.alg_order:
            if only is None or n in only:
                state.nodes[n] = self.eval_alg(n, state)

    def advance(self, state: StepState, dt: float) -> Dict[Node, Any]:
        """State-node values one step after `state` (explicit Euler)."""
        out = dict(state.nodes)
        for n in self.state_nodes:
            kind = self.kind[n]
            if kind == "hold":
                continue
            leaf = self.owner[n]
            law = leaf.laws[n.key]
            ctx = self.context(leaf, state)
            if kind == "ode":
                rate = evaluate(law.expr, ctx)
            else:
                bound = abs(float(evaluate(law.expr, ctx)))
                rate = 0.0 if law.control is None else evaluate(law.control, ctx)
                rate = np.clip(rate, -bound, bound)
            decl = self.decl[n]
            out[n] = self.coerce(decl, np.add(state.nodes[n], np.multiply(dt, rate)))
        return out

    # -- transitions ---------------------------------------------------------------
    def _rule_effects(self, leaf: Leaf, action: Key, state: StepState):
        """Effects of the first rule whose guard holds; None if rules exist and none holds."""
        rules = leaf.rules.get(action)
        if not rules:
            return {}
        ctx = self.context(leaf, state)
        for rule in rules:
            g = evaluate(rule.guard, ctx)
            if isinstance(g, np.ndarray):
                if g.ndim:
                    raise EvalError(f"guard of {action} in {leaf.wa.name} is a field, not a truth value")
                g = bool(g)
            if g:
                out = {}
                for target, e in rule.effects:
                    key = leaf.wa.resolve(target)
                    out[leaf.node(key)] = self.coerce(leaf.decls[key], evaluate(e, ctx))
                return out
        return None

    def controlled_effects(self, action: Key, state: StepState):
        """Joint effect of a locally controlled action, or None when some participant refuses."""
        joint = {}
        for leaf in self.participants.get(action, []):
            eff = self._rule_effects(leaf, action, state)
            if eff is None:
                return None
            joint.update(eff)
        return joint

    def input_effects(self, action: Key, state: StepState):
        joint = {}
        for leaf in self.participants.get(action, []):
            eff = self._rule_effects(leaf, action, state)
            if eff:
                joint.update(eff)
        return joint

    def is_effective(self, effects: Mapping[Node, Any], state: StepState) -> bool:
        for n, v in effects.items():
            if not values_equal(self.decl[n].type, state.nodes[n], v, 0.0):
                return True
        return False

    def apply(self, state: StepState, effects: Mapping[Node, Any]) -> StepState:
        post = state.copy()
        post.nodes.update(effects)
        self.settle(post)
        return post

    # -- loading a state back from a trajectory valuation ----------------------------
    def load(
        self,
        valuation: Mapping[Key, Any],
        t: float,
        prev: Optional[StepState] = None,
        same_time: Optional[StepState] = None,
        hint: Optional[Mapping[Node, Any]] = None,
        initial: Optional[Mapping[Node, Any]] = None,
        dt: Optional[float] = None,
    ) -> StepState:
        """Rebuild the leaf-level state from a valuation of the root's variables.

        `prev` is the final state one step earlier and `same_time` an earlier
        state at the same instant (before an action). Leaf variables the root
        does not expose are recomputed: algebraic ones by settling, state ones
        from `hint`, `same_time`, `initial`, or by advancing `prev` one step.
        """
        _, view = self.views[()]
        ext, nodes = {}, {}
        for key, sig in view.items():
            if key not in valuation:
                continue
            if isinstance(sig, Ext):
                ext[key] = valuation[key]
            elif isinstance(sig, Node):
                nodes[sig] = valuation[key]
        state = StepState(nodes, ext, t, prev)
        missing = [n for n in self.decl if n not in nodes]
        if missing:
            stepped = None
            settle = set()
            for n in missing:
                if hint is not None and n in hint:
                    nodes[n] = hint[n]
                elif self.kind[n] == "alg":
                    settle.add(n)
                elif same_time is not None:
                    nodes[n] = same_time.nodes[n]
                elif initial is not None:
                    nodes[n] = initial[n]
                elif prev is not None and dt is not None:
                    if stepped is None:
                        stepped = self.advance(prev, dt)
                    nodes[n] = stepped[n]
                else:
                    raise StateNotRecoverable(f"{self.owner[n].wa.name}.{n.key} is not visible and has its own dynamics")
            self.settle(state, only=settle)
        return state

    def root_valuation(self, state: StepState, path: Path = ()) -> Dict[Key, Any]:
        wa, view = self.views[path]
        return {k: self.signal_value(sig, state) for k, sig in view.items()}


def _no_vars(name, level):
    raise KeyError(name)

"""World automata: leveled variables and actions, transitions and dynamics."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .builtins import BUILTIN_NAMES, GLOBAL_DEFAULTS
from .expr import (
    CONSTANTS,
    SPECIAL,
    TRUE,
    Call,
    Expr,
    functions_called,
    references,
    rename_symbols,
    shift_levels,
)
from .types import EnumType, GridMapType, Key, StaticType


class VarClass(str, Enum):
    WORLD = "world"
    AUTOMATON = "automaton"


class Direction(str, Enum):
    INPUT = "input"
    INNER = "internal"
    OUTPUT = "output"


class ActionKind(str, Enum):
    INPUT = "input"
    HIDDEN = "internal"
    OUTPUT = "output"


class LawForm(str, Enum):
    ALGEBRAIC = "algebraic"
    ODE = "ode"
    BOUND = "bound"


class DynamicsClass(str, Enum):
    PIECEWISE_CONSTANT = "piecewise-constant"
    SAMPLED = "sampled"


SET_NAMES = {
    (VarClass.WORLD, Direction.INPUT): "U_w",
    (VarClass.WORLD, Direction.INNER): "X_w",
    (VarClass.WORLD, Direction.OUTPUT): "Y_w",
    (VarClass.AUTOMATON, Direction.INPUT): "U_a",
    (VarClass.AUTOMATON, Direction.INNER): "X_a",
    (VarClass.AUTOMATON, Direction.OUTPUT): "Y_a",
}
ACTION_SET_NAMES = {ActionKind.INPUT: "I", ActionKind.HIDDEN: "H", ActionKind.OUTPUT: "O"}


@dataclass(frozen=True)
class VariableDecl:
    name: str
    level: int
    klass: VarClass
    direction: Direction
    type: StaticType
    init: Optional[Expr] = None

    @property
    def key(self) -> Key:
        return Key(self.name, self.level)

    @property
    def is_world(self) -> bool:
        return self.klass is VarClass.WORLD

    @property
    def set_name(self) -> str:
        return SET_NAMES[(self.klass, self.direction)]


@dataclass(frozen=True)
class ActionDecl:
    name: str
    level: int
    kind: ActionKind

    @property
    def key(self) -> Key:
        return Key(self.name, self.level)


@dataclass(frozen=True)
class TransitionRule:
    action: Key
    guard: Expr = TRUE
    effects: Tuple[Tuple[str, Expr], ...] = ()


@dataclass(frozen=True)
class DynamicsLaw:
    target: str
    form: LawForm
    expr: Expr
    control: Optional[Expr] = None  # rate actually applied by a BOUND law
    at: Optional[Expr] = None  # point index of a map write, e.g. m_p(s_fp, t)
    level: Optional[int] = None


@dataclass(frozen=True)
class CompositeBinding:
    kind: str  # "parallel" | "inplace" | "closed"
    shared: FrozenSet[Key] = frozenset()  # combined world outputs, or C13 for inplacement
    action_sync: FrozenSet[Key] = frozenset()
    dropped: FrozenSet[Key] = frozenset()  # inner level-1 world outputs nobody reads
    zeroed: FrozenSet[Key] = frozenset()  # inner world inputs pinned to neutral
    closures: Tuple[Tuple[Key, Any], ...] = ()


@dataclass(frozen=True)
class Composite:
    binding: CompositeBinding
    parts: Tuple["WorldAutomaton", ...]


@dataclass(frozen=True)
class WorldAutomaton:
    name: str
    variables: Tuple[VariableDecl, ...] = ()
    actions: Tuple[ActionDecl, ...] = ()
    transitions: Tuple[TransitionRule, ...] = ()
    laws: Tuple[DynamicsLaw, ...] = ()
    params: Mapping[str, Any] = field(default_factory=dict)
    param_types: Mapping[str, StaticType] = field(default_factory=dict)
    states: Expr = TRUE
    enums: Mapping[str, EnumType] = field(default_factory=dict)
    composite: Optional[Composite] = None

    # -- symbol sets --------------------------------------------------------
    def keys(self, klass: Optional[VarClass] = None, direction: Optional[Direction] = None) -> FrozenSet[Key]:
        return frozenset(
            v.key
            for v in self.variables
            if (klass is None or v.klass is klass) and (direction is None or v.direction is direction)
        )

    @property
    def U_w(self):
        return self.keys(VarClass.WORLD, Direction.INPUT)

    @property
    def X_w(self):
        return self.keys(VarClass.WORLD, Direction.INNER)

    @property
    def Y_w(self):
        return self.keys(VarClass.WORLD, Direction.OUTPUT)

    @property
    def U_a(self):
        return self.keys(VarClass.AUTOMATON, Direction.INPUT)

    @property
    def X_a(self):
        return self.keys(VarClass.AUTOMATON, Direction.INNER)

    @property
    def Y_a(self):
        return self.keys(VarClass.AUTOMATON, Direction.OUTPUT)

    @property
    def U(self):
        return self.keys(direction=Direction.INPUT)

    @property
    def X(self):
        return self.keys(direction=Direction.INNER)

    @property
    def Y(self):
        return self.keys(direction=Direction.OUTPUT)

    @property
    def V(self):
        return self.keys()

    @property
    def W(self):
        return self.keys(VarClass.WORLD)

    def action_keys(self, kind: Optional[ActionKind] = None) -> FrozenSet[Key]:
        return frozenset(a.key for a in self.actions if kind is None or a.kind is kind)

    @property
    def I(self):
        return self.action_keys(ActionKind.INPUT)

    @property
    def H(self):
        return self.action_keys(ActionKind.HIDDEN)

    @property
    def O(self):
        return self.action_keys(ActionKind.OUTPUT)

    @property
    def A(self):
        return self.action_keys()

    @property
    def E(self):
        return self.I | self.O

    @property
    def Z(self):
        return self.U | self.Y

    @property
    def max_level(self) -> int:
        levels = [v.level for v in self.variables] + [a.level for a in self.actions]
        return max(levels, default=0)

    @property
    def is_composite(self) -> bool:
        return self.composite is not None

    def var(self, key: Key) -> VariableDecl:
        for v in self.variables:
            if v.key == key:
                return v
        raise KeyError(key)

    def action(self, key: Key) -> ActionDecl:
        for a in self.actions:
            if a.key == key:
                return a
        raise KeyError(key)

    def resolve(self, name: str, level: Optional[int] = None) -> Key:
        """Key of the variable an expression means by `name` (and optional level)."""
        if level is not None:
            key = Key(name, level)
            if any(v.key == key for v in self.variables):
                return key
            raise KeyError(key)
        hits = {v.key for v in self.variables if v.name == name}
        if len(hits) == 1:
            return next(iter(hits))
        if not hits:
            raise KeyError(name)
        raise KeyError(f"{name} is ambiguous across levels {sorted(k.level for k in hits)}")

    def law_for(self, key: Key) -> Optional[DynamicsLaw]:
        for law in self.laws:
            try:
                if self.resolve(law.target, law.level) == key:
                    return law
            except KeyError:
                continue
        return None

    def dynamics_class(self, key: Key) -> DynamicsClass:
        law = self.law_for(key)
        decl = self.var(key)
        if law is None and decl.direction is not Direction.INPUT:
            return DynamicsClass.PIECEWISE_CONSTANT
        return DynamicsClass.SAMPLED

    @property
    def literals(self) -> Dict[str, str]:
        out = {}
        for st in self.enums.values():
            for v in st.variants:
                out[v] = v
        return out

    def signature(self):
        """External interface used by comparability: inputs, outputs and external actions."""
        ext = {}
        for v in self.variables:
            if v.direction is not Direction.INNER:
                ext[v.key] = (v.klass, v.direction, v.type)
        acts = {a.key: a.kind for a in self.actions if a.kind is not ActionKind.HIDDEN}
        return ext, acts


# --------------------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    clause: str
    symbols: Tuple[str, ...]
    message: str

    def __str__(self):
        sym = ", ".join(self.symbols)
        return f"[{self.clause}] {self.message}" + (f" ({sym})" if sym else "")


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, clause, symbols, message):
        self.violations.append(Violation(clause, tuple(str(s) for s in symbols), message))

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "ok" if self.ok else "\n".join(str(v) for v in self.violations)


def validate(wa: WorldAutomaton) -> ValidationReport:
    report = ValidationReport()
    _check_disjointness(wa, report)
    for v in wa.variables:
        if v.level < 0:
            report.add("level", [v.key], "levels are natural numbers")
        if v.is_world and v.direction is Direction.INNER and v.level == 0:
            report.add("X_w[0]", [v.key], "must be empty: level 0 is the outside world, it holds no internal world variables")
    for a in wa.actions:
        if a.level < 0:
            report.add("level", [a.key], "levels are natural numbers")
    for st in wa.enums.values():
        for msg in st.problems():
            report.add("type", [st.name], msg)
    if wa.composite is None:
        _check_atomic(wa, report)
    else:
        _check_composite(wa, report)
    return report


def _check_disjointness(wa: WorldAutomaton, report: ValidationReport):
    seen: Dict[Key, VariableDecl] = {}
    for v in wa.variables:
        other = seen.get(v.key)
        if other is None:
            seen[v.key] = v
            continue
        a, b = other.set_name, v.set_name
        if a == b:
            report.add("unique", [v.key], f"{v.key} declared twice in {a}")
        else:
            pair = "/".join(sorted([a, b], key=_set_order))
            report.add("disjoint", [v.key], f"{pair} overlap")
    seen_a: Dict[Key, ActionDecl] = {}
    for a in wa.actions:
        other = seen_a.get(a.key)
        if other is None:
            seen_a[a.key] = a
            continue
        x, y = ACTION_SET_NAMES[other.kind], ACTION_SET_NAMES[a.kind]
        if x == y:
            report.add("unique", [a.key], f"action {a.key} declared twice")
        else:
            report.add("disjoint", [a.key], f"{'/'.join(sorted([x, y], key='IHO'.index))} overlap")
    clash = {v.name for v in wa.variables} & {a.name for a in wa.actions}
    if clash:
        report.add("unique", sorted(clash), "names used by both a variable and an action")


def _set_order(name: str) -> int:
    return ["U_w", "X_w", "Y_w", "U_a", "X_a", "Y_a"].index(name)


def known_names(wa: WorldAutomaton) -> set:
    return {v.name for v in wa.variables} | set(wa.params) | set(wa.literals) | set(CONSTANTS) | SPECIAL | set(GLOBAL_DEFAULTS)


def _check_refs(wa: WorldAutomaton, e: Expr, where: str, report: ValidationReport):
    names = known_names(wa)
    for name, level, _ in references(e):
        if level is not None:
            if Key(name, level) not in wa.V:
                report.add("declared", [f"{name}@{level}"], f"{where} references undeclared variable")
        elif name not in names:
            report.add("declared", [name], f"{where} references undeclared symbol")
    for fn in functions_called(e):
        if fn not in BUILTIN_NAMES:
            report.add("declared", [fn], f"{where} calls unknown function")


def _check_atomic(wa: WorldAutomaton, report: ValidationReport):
    law_count: Dict[Key, int] = {}
    for law in wa.laws:
        try:
            key = wa.resolve(law.target, law.level)
        except KeyError:
            report.add("declared", [law.target], "law for undeclared variable")
            continue
        decl = wa.var(key)
        if decl.direction is Direction.INPUT:
            report.add("law", [key], "input variables carry no dynamics law")
        law_count[key] = law_count.get(key, 0) + 1
        if law.at is not None and not isinstance(decl.type, GridMapType) and decl.is_world:
            report.add("law", [key], "point-indexed law on a world variable")
        where = f"law for {key}"
        _check_refs(wa, law.expr, where, report)
        if law.control is not None:
            _check_refs(wa, law.control, where, report)
        if law.at is not None:
            _check_refs(wa, law.at, where, report)
    for key, n in law_count.items():
        if n > 1:
            report.add("law", [key], f"{n} laws for one variable")

    declared_actions = wa.A
    inner = wa.X
    for rule in wa.transitions:
        if rule.action not in declared_actions:
            report.add("declared", [rule.action], "transition for undeclared action")
        _check_refs(wa, rule.guard, f"guard of {rule.action}", report)
        for target, e in rule.effects:
            try:
                key = wa.resolve(target)
            except KeyError:
                report.add("declared", [target], f"effect of {rule.action} assigns undeclared variable")
                continue
            if key not in inner:
                report.add("effect", [key], f"effect of {rule.action} assigns a non-inner variable")
            _check_refs(wa, e, f"effect of {rule.action}", report)

    for v in wa.variables:
        if v.init is not None:
            if v.direction is Direction.INPUT:
                report.add("initial", [v.key], "input variables take no initial value")
            _check_refs(wa, v.init, f"initializer of {v.key}", report)
    _check_refs(wa, wa.states, "state predicate", report)
    _check_initial_in_states(wa, report)


def _check_initial_in_states(wa: WorldAutomaton, report: ValidationReport):
    if wa.states == TRUE:
        return
    if any(val is None for val in wa.params.values()):
        return  # template: parameters not yet bound
    from .sim import initial_state_ok  # local import: sim depends on model

    ok = initial_state_ok(wa)
    if ok is False:
        report.add("Theta", [wa.name], "the initial valuation lies outside the state set Q")


def _check_composite(wa: WorldAutomaton, report: ValidationReport):
    for part in wa.composite.parts:
        sub = validate(part)
        for v in sub.violations:
            report.violations.append(Violation(v.clause, v.symbols, f"in {part.name}: {v.message}"))
    binding = wa.composite.binding
    if binding.kind == "inplace":
        for key in binding.shared:
            if key.level != 1:
                report.add("C13", [key], "captured world variables live at level 1")


# --------------------------------------------------------------------------- transformations


def level_lift(wa: WorldAutomaton, by: int = 1) -> WorldAutomaton:
    """Every variable and action level raised by `by`; expressions are untouched
    except for explicitly level-qualified references, which move along."""
    composite = None
    if wa.composite is not None:
        b = wa.composite.binding
        composite = Composite(
            replace(
                b,
                shared=frozenset(k.lifted(by) for k in b.shared),
                action_sync=frozenset(k.lifted(by) for k in b.action_sync),
                dropped=frozenset(k.lifted(by) for k in b.dropped),
                zeroed=frozenset(k.lifted(by) for k in b.zeroed),
                closures=tuple((k.lifted(by), v) for k, v in b.closures),
            ),
            tuple(level_lift(p, by) for p in wa.composite.parts),
        )
    return replace(
        wa,
        variables=tuple(
            replace(v, level=v.level + by, init=None if v.init is None else shift_levels(v.init, by))
            for v in wa.variables
        ),
        actions=tuple(replace(a, level=a.level + by) for a in wa.actions),
        transitions=tuple(
            TransitionRule(
                r.action.lifted(by),
                shift_levels(r.guard, by),
                tuple((t, shift_levels(e, by)) for t, e in r.effects),
            )
            for r in wa.transitions
        ),
        laws=tuple(
            replace(
                law,
                expr=shift_levels(law.expr, by),
                control=None if law.control is None else shift_levels(law.control, by),
                at=None if law.at is None else shift_levels(law.at, by),
                level=None if law.level is None else law.level + by,
            )
            for law in wa.laws
        ),
        states=shift_levels(wa.states, by),
        composite=composite,
    )


def objects_at_levels(wa: WorldAutomaton, lo: int, hi: Optional[int] = None):
    """Variables and actions whose level lies in [lo, hi]; hi=None leaves the range open."""
    if hi is not None and lo > hi:
        return frozenset(), frozenset()

    def inside(level):
        return level >= lo and (hi is None or level <= hi)

    return (
        frozenset(v for v in wa.variables if inside(v.level)),
        frozenset(a for a in wa.actions if inside(a.level)),
    )


class RenameClash(ValueError):
    def __init__(self, identifier: str, message: str):
        super().__init__(message)
        self.identifier = identifier


def rename(wa: WorldAutomaton, mapping: Mapping[str, str]) -> WorldAutomaton:
    """Consistently rename variables and actions (all levels) and every reference to them."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return wa
    symbols = {v.name for v in wa.variables} | {a.name for a in wa.actions}
    _check_rename(symbols, mapping)
    return _rename(wa, mapping)


def _check_rename(symbols: Iterable[str], mapping: Mapping[str, str]):
    symbols = set(symbols)
    targets: Dict[str, str] = {}
    for src, dst in mapping.items():
        if src not in symbols:
            continue
        if dst in targets:
            raise RenameClash(dst, f"rename maps both {targets[dst]} and {src} to {dst}")
        targets[dst] = src
        if dst in symbols and dst not in mapping:
            raise RenameClash(dst, f"rename target {dst} clashes with an existing symbol")


def _rename(wa: WorldAutomaton, mapping: Mapping[str, str]) -> WorldAutomaton:
    def n(name):
        return mapping.get(name, name)

    def k(key):
        return Key(n(key.name), key.level)

    composite = None
    if wa.composite is not None:
        b = wa.composite.binding
        composite = Composite(
            replace(
                b,
                shared=frozenset(map(k, b.shared)),
                action_sync=frozenset(map(k, b.action_sync)),
                dropped=frozenset(map(k, b.dropped)),
                zeroed=frozenset(map(k, b.zeroed)),
                closures=tuple((k(key), v) for key, v in b.closures),
            ),
            tuple(_rename(p, mapping) for p in wa.composite.parts),
        )
    return replace(
        wa,
        variables=tuple(
            replace(v, name=n(v.name), init=None if v.init is None else rename_symbols(v.init, mapping))
            for v in wa.variables
        ),
        actions=tuple(replace(a, name=n(a.name)) for a in wa.actions),
        transitions=tuple(
            TransitionRule(
                k(r.action),
                rename_symbols(r.guard, mapping),
                tuple((n(t), rename_symbols(e, mapping)) for t, e in r.effects),
            )
            for r in wa.transitions
        ),
        laws=tuple(
            replace(
                law,
                target=n(law.target),
                expr=rename_symbols(law.expr, mapping),
                control=None if law.control is None else rename_symbols(law.control, mapping),
                at=None if law.at is None else rename_symbols(law.at, mapping),
            )
            for law in wa.laws
        ),
        states=rename_symbols(wa.states, mapping),
        composite=composite,
    )


def bind_params(wa: WorldAutomaton, values: Mapping[str, Any], name: Optional[str] = None) -> WorldAutomaton:
    params = dict(wa.params)
    params.update(values)
    return replace(wa, params=params, name=name or wa.name)

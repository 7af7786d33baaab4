"""Compatibility checks, parallel composition, inplacement and input closing."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .algebra import DEFAULT_ALGEBRA, AlgebraUndefined
from .model import (
    ActionDecl,
    ActionKind,
    Composite,
    CompositeBinding,
    Direction,
    VarClass,
    VariableDecl,
    WorldAutomaton,
    level_lift,
    objects_at_levels,
)
from .types import Key


@dataclass
class CompatibilityReport:
    violations: List[Tuple[str, Tuple[str, ...]]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def compatible(self) -> bool:
        return not self.violations

    def add(self, clause, symbols, note: str = ""):
        syms = tuple(sorted(str(s) for s in symbols))
        if syms:
            self.violations.append((str(clause), syms))
            if note:
                self.notes.append(f"clause {clause}: {note}")

    def __bool__(self):
        return self.compatible

    def __str__(self):
        if self.compatible:
            return "compatible"
        return "; ".join(f"clause {c}: {', '.join(s)}" for c, s in self.violations)


class IncompatibleError(ValueError):
    def __init__(self, report: CompatibilityReport, what: str):
        super().__init__(f"{what}: {report}")
        self.report = report


def _keys(decls) -> set:
    return {d.key for d in decls}


def _shared_world_outputs(a1: WorldAutomaton, a2: WorldAutomaton) -> set:
    out = set()
    for k in a1.Y_w & a2.Y_w:
        if k.level == 0 and a1.var(k).type == a2.var(k).type:
            out.add(k)
    return out


def _check_kinds(a1: WorldAutomaton, a2: WorldAutomaton, report: CompatibilityReport):
    """A symbol present on both sides must mean the same thing on both."""
    bad_class, bad_type = [], []
    for k in a1.V & a2.V:
        d1, d2 = a1.var(k), a2.var(k)
        if d1.klass is not d2.klass:
            bad_class.append(k)
        elif d1.type != d2.type:
            bad_type.append(k)
    report.add("kind", bad_class, "world and automaton variable share a name")
    report.add("type", bad_type, "shared symbol with different static types")
    report.add("kind", a1.V & a2.A | a1.A & a2.V, "variable and action share a name")


def parallel_compatible(a1: WorldAutomaton, a2: WorldAutomaton, strict: bool = False) -> CompatibilityReport:
    r = CompatibilityReport()
    v1, act1 = objects_at_levels(a1, 1)
    v2, act2 = objects_at_levels(a2, 1)
    r.add(1, _keys(v1) & _keys(v2) | _keys(act1) & _keys(act2), "inner levels must be disjoint")
    r.add(2, (a1.U_w | a2.U_w) & (a1.Y_w | a2.Y_w))
    r.add(3, a1.H & a2.A | a2.H & a1.A)
    r.add(4, a1.X & a2.V | a2.X & a1.V)
    r.add(5, a1.O & a2.O)
    shared = set() if strict else _shared_world_outputs(a1, a2)
    r.add(6, (a1.Y & a2.Y) - shared)
    _check_kinds(a1, a2, r)
    for k in shared:
        try:
            DEFAULT_ALGEBRA.for_type(a1.var(k).type)
        except AlgebraUndefined:
            r.add("algebra", [k], "shared world output has no perturbation algebra")
    return r


def inplace_compatible(outer: WorldAutomaton, inner: WorldAutomaton) -> CompatibilityReport:
    a1, a3 = outer, level_lift(inner)
    r = CompatibilityReport()
    v1, act1 = objects_at_levels(a1, 2)
    v3, act3 = objects_at_levels(a3, 2)
    r.add(1, _keys(v1) & _keys(v3) | _keys(act1) & _keys(act3), "levels 2 and deeper must be disjoint")
    r.add(2, a1.Y_w & a3.Y_w)
    r.add(3, a1.H & a3.A | a3.H & a1.A)
    r.add(4, a1.X & a3.V | a3.X & a1.V)
    r.add(5, a1.O & a3.O)
    r.add(6, a1.Y & a3.Y)
    _check_kinds(a1, a3, r)
    for k in a1.U_w & a3.Y_w:
        if k not in a3.V or k not in a1.V:
            continue
        if a1.var(k).type != a3.var(k).type:
            continue  # already reported as a type clash
        try:
            DEFAULT_ALGEBRA.for_type(a1.var(k).type)
        except AlgebraUndefined:
            r.add("algebra", [k], "captured world variable has no perturbation algebra")
    return r


def _merge_enums(*parts: WorldAutomaton) -> Dict:
    out = {}
    for p in parts:
        out.update(p.enums)
    return out


def _dedupe(decls):
    seen, out = set(), []
    for d in decls:
        if d.key not in seen:
            seen.add(d.key)
            out.append(d)
    return tuple(out)


def _compose_actions(parts: List[WorldAutomaton]) -> Tuple[ActionDecl, ...]:
    """Union of action declarations; an input matched by an output becomes that output."""
    out: Dict[Key, ActionDecl] = {}
    for p in parts:
        for a in p.actions:
            if a.key not in out or a.kind is ActionKind.OUTPUT:
                out[a.key] = a
    return tuple(out.values())


def parallel(a1: WorldAutomaton, a2: WorldAutomaton, strict: bool = False, name: Optional[str] = None) -> WorldAutomaton:
    report = parallel_compatible(a1, a2, strict)
    if not report.compatible:
        raise IncompatibleError(report, f"{a1.name} and {a2.name} are not compatible")
    shared = frozenset(set() if strict else _shared_world_outputs(a1, a2))
    Y_a = a1.Y_a | a2.Y_a
    variables = []
    for p in (a1, a2):
        for v in p.variables:
            if v.klass is VarClass.AUTOMATON and v.direction is Direction.INPUT and v.key in Y_a:
                continue
            variables.append(v)
    variables = _dedupe(variables)
    return WorldAutomaton(
        name=name or f"{a1.name} || {a2.name}",
        variables=variables,
        actions=_compose_actions([a1, a2]),
        enums=_merge_enums(a1, a2),
        composite=Composite(
            CompositeBinding("parallel", shared=shared, action_sync=frozenset(a1.A & a2.A)),
            (a1, a2),
        ),
    )


def inplace(outer: WorldAutomaton, inner: WorldAutomaton, name: Optional[str] = None) -> WorldAutomaton:
    report = inplace_compatible(outer, inner)
    if not report.compatible:
        raise IncompatibleError(report, f"{inner.name} is not inplace compatible with {outer.name}")
    a1, a3 = outer, level_lift(inner)
    c13 = frozenset(a1.U_w & a3.Y_w)
    Y_a = a1.Y_a | a3.Y_a
    variables = []
    for v in a1.variables:
        if v.klass is VarClass.AUTOMATON and v.direction is Direction.INPUT and v.key in Y_a:
            continue
        variables.append(v)
    for v in a3.variables:
        if v.klass is VarClass.WORLD:
            if v.level >= 2:
                variables.append(v)
            continue
        if v.direction is Direction.INPUT and v.key in Y_a:
            continue
        variables.append(v)
    variables = _dedupe(variables)
    V = {v.key for v in variables}
    dropped = frozenset(k for k in a3.Y_w if k.level == 1 and k not in c13)
    zeroed = frozenset(k for k in a3.U_w if k not in V)
    return WorldAutomaton(
        name=name or f"{outer.name}[{inner.name}]",
        variables=variables,
        actions=_compose_actions([a1, a3]),
        enums=_merge_enums(a1, a3),
        composite=Composite(
            CompositeBinding(
                "inplace",
                shared=c13,
                action_sync=frozenset(a1.A & a3.A),
                dropped=dropped,
                zeroed=zeroed,
            ),
            (a1, a3),
        ),
    )


def dropped_outputs(wa: WorldAutomaton) -> frozenset:
    """Inner world outputs an inplacement discards because the outer world never reads them."""
    if wa.composite is None or wa.composite.binding.kind != "inplace":
        return frozenset()
    return wa.composite.binding.dropped


def close_inputs(wa: WorldAutomaton, values: Mapping[Key, Any], name: Optional[str] = None) -> WorldAutomaton:
    """Harness: feed the given inputs from constant sources, removing them from the interface."""
    closures = {}
    for key, value in values.items():
        if key not in wa.U:
            raise KeyError(f"{key} is not an input of {wa.name}")
        closures[key] = wa.var(key).type.coerce(value)
    variables = tuple(v for v in wa.variables if v.key not in closures)
    label = ", ".join(f"{k}={v}" for k, v in sorted(closures.items()))
    return WorldAutomaton(
        name=name or f"{wa.name} with {label}",
        variables=variables,
        actions=wa.actions,
        enums=dict(wa.enums),
        composite=Composite(
            CompositeBinding("closed", closures=tuple(sorted(closures.items()))),
            (wa,),
        ),
    )


def unit() -> WorldAutomaton:
    """The automaton with no variables and no actions."""
    return WorldAutomaton(name="Unit")


def leaves(wa: WorldAutomaton) -> List[WorldAutomaton]:
    if wa.composite is None:
        return [wa]
    out = []
    for p in wa.composite.parts:
        out.extend(leaves(p))
    return out

"""Deterministic printing of documents and automata.

Documents and atomic automata print as re-parseable source. A composite
automaton prints as an interface view: its own variable and action sets,
followed by the transitions and laws of each component.
"""
from __future__ import annotations

import math
from typing import Iterable, List, Optional, Union

import numpy as np

from ..composition import leaves
from ..expr import BoolLit, Expr, Name, Num, VecLit, format_expr
from ..model import ActionKind, Direction, LawForm, VarClass, WorldAutomaton
from ..types import ANGLE, EnumType, StaticType
from .ast import (
    ActionSpec,
    AutomatonDecl,
    Inplace,
    Instance,
    Law,
    Par,
    ParamDecl,
    Rule,
    Scenario,
    SourceDocument,
    TypeDecl,
    TypeRef,
    VarDecl,
)

IND = "  "


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _group(items, key):
    out, last = [], object()
    for it in items:
        k = key(it)
        if out and k == last:
            out[-1][1].append(it)
        else:
            out.append((k, [it]))
        last = k
    return out


def print_type(td: TypeDecl) -> str:
    if td.modular:
        return f"type {td.name} = Real mod 2pi"
    s = f"type {td.name} = {{{', '.join(td.variants)}}}"
    if td.neutral is not None:
        s += f" neutral {td.neutral}"
    return s


def _var(vd: VarDecl) -> str:
    s = f"{vd.name}: {vd.type.name}"
    if vd.init is not None:
        s += f" := {format_expr(vd.init)}"
    return s


def print_automaton_decl(ad: AutomatonDecl) -> str:
    lines = [f"worldautomaton {ad.name}"]
    if ad.params:
        ps = []
        for p in ad.params:
            s = f"{p.name}: {p.type.name}"
            if p.default is not None:
                s += f" = {format_expr(p.default)}"
            ps.append(s)
        lines[0] += f" ({', '.join(ps)})"
    for (klass, level), block in _group(ad.variables, lambda v: (v.klass, v.level)):
        lines.append(f"{IND}{klass} variables LEVEL {level}")
        for direction, group in _group(block, lambda v: v.direction):
            lines.append(f"{IND * 2}{direction} " + ", ".join(_var(v) for v in group))
    for level, block in _group(ad.actions, lambda a: a.level):
        lines.append(f"{IND}actions LEVEL {level}")
        for kind, group in _group(block, lambda a: a.kind):
            lines.append(f"{IND * 2}{kind} " + ", ".join(a.name for a in group))
    if ad.rules:
        lines.append(f"{IND}transitions")
        for r in ad.rules:
            head = f"{IND * 2}{r.kind} {r.action}" + (f"@{r.level}" if r.level is not None else "")
            lines.append(head)
            if r.guard is not None:
                lines.append(f"{IND * 3}pre {format_expr(r.guard)}")
            if r.effects:
                lines.append(f"{IND * 3}eff " + " ".join(f"{t} = {format_expr(e)};" for t, e in r.effects))
    if ad.laws:
        lines.append(f"{IND}trajectories")
        for law in ad.laws:
            lines.append(f"{IND * 2}{_law(law)}")
    if ad.states is not None:
        lines.append(f"{IND}states {format_expr(ad.states)}")
    lines.append("end")
    return "\n".join(lines)


def _law(law: Law) -> str:
    lhs = law.target + (f"@{law.level}" if law.level is not None else "")
    if law.form in ("ode", "bound"):
        lhs += "'"
    if law.at is not None:
        lhs += f"({format_expr(law.at)})"
    if law.form == "bound":
        s = f"{lhs} <= {format_expr(law.expr)}"
        if law.control is not None:
            s += f" control {format_expr(law.control)}"
        return s + ";"
    return f"{lhs} = {format_expr(law.expr)};"


def print_sys(node, prec: int = 0) -> str:
    if isinstance(node, Instance):
        s = node.name
        if node.has_parens or node.args or node.kwargs:
            parts = [format_expr(a) for a in node.args] + [f"{k} = {format_expr(e)}" for k, e in node.kwargs]
            s += f"({', '.join(parts)})"
        if node.suffix is not None:
            s += f" as {node.suffix}"
        return s
    if isinstance(node, Par):
        s = f"{print_sys(node.left, 0)} || {print_sys(node.right, 1)}"
        return f"({s})" if prec > 0 else s
    if isinstance(node, Inplace):
        return f"{print_sys(node.outer, 1)}[{print_sys(node.inner, 0)}]"
    raise TypeError(node)


def print_scenario(sc: Scenario) -> str:
    lines = ["scenario"]
    if sc.grid is not None:
        g = sc.grid
        lines.append(f"{IND}grid [{_num(g.x0)}, {_num(g.x1)}] x [{_num(g.y0)}, {_num(g.y1)}] cells {g.nx} x {g.ny}")
    if sc.dt is not None:
        lines.append(f"{IND}dt {_num(sc.dt)}")
    if sc.horizon is not None:
        lines.append(f"{IND}horizon {_num(sc.horizon)}")
    for name, e in sc.params:
        lines.append(f"{IND}param {name} = {format_expr(e)}")
    for fn, alt in sc.bindings:
        lines.append(f"{IND}bind {fn} = {alt}")
    for name, v in sc.options:
        lines.append(f"{IND}option {name} = {_num(v)}")
    if sc.system is not None:
        lines.append(f"{IND}system {print_sys(sc.system)}")
    for inp, out in sc.links:
        lines.append(f"{IND}link {inp} = {out}")
    for name, level, e in sc.closes:
        lines.append(f"{IND}close {name}@{level} = {format_expr(e)}")
    for s in sc.inputs:
        head = f"{IND}input {s.var}@{s.level}"
        if s.default is not None:
            head += f" default {format_expr(s.default)}"
        lines.append(head)
        for p in s.pulses:
            part = ("ramp " if p.ramp else "value ") + format_expr(p.value)
            if p.ramp and p.offset is not None:
                part += f" offset {format_expr(p.offset)}"
            if p.cells is not None:
                part += " at cells " + ", ".join(f"({r}, {c})" for r, c in p.cells)
            if p.region is not None:
                part += " in square(" + ", ".join(format_expr(x) for x in p.region) + ")"
            if p.start is not None:
                part += (" after " if p.strict else " from ") + _num(p.start)
            if p.until is not None:
                part += f" until {_num(p.until)}"
            lines.append(f"{IND * 2}{part}")
    for f in sc.fires:
        lines.append(f"{IND}fire {f.action}@{f.level} at " + ", ".join(_num(t) for t in f.times))
    if sc.pin_neutral:
        lines.append(f"{IND}pin neutral")
    lines.append("end")
    return "\n".join(lines)


def print_document(doc: SourceDocument) -> str:
    chunks = []
    if doc.types:
        chunks.append("\n".join(print_type(t) for t in doc.types))
    chunks.extend(print_automaton_decl(a) for a in doc.automata)
    if doc.scenario is not None:
        chunks.append(print_scenario(doc.scenario))
    return "\n\n".join(chunks) + "\n"


# -- automata back to source ----------------------------------------------------------


def type_name(st: StaticType) -> str:
    return "Real^2" if st.name == "Real^2" else st.name


def _value_expr(v) -> Expr:
    if isinstance(v, (bool, np.bool_)):
        return BoolLit(bool(v))
    if isinstance(v, str):
        return Name(v)
    if isinstance(v, (tuple, list, np.ndarray)):
        return VecLit(Num(float(v[0])), Num(float(v[1])))
    return Num(float(v))


def automaton_decl(wa: WorldAutomaton) -> AutomatonDecl:
    klass = {VarClass.WORLD: "world", VarClass.AUTOMATON: "local"}
    params = tuple(
        ParamDecl(n, TypeRef(type_name(st)), None if wa.params.get(n) is None else _value_expr(wa.params[n]))
        for n, st in wa.param_types.items()
    )
    variables = tuple(
        VarDecl(v.name, v.level, klass[v.klass], v.direction.value, TypeRef(type_name(v.type)), v.init) for v in wa.variables
    )
    actions = tuple(ActionSpec(a.name, a.level, a.kind.value) for a in wa.actions)
    kinds = {a.key: a.kind.value for a in wa.actions}
    rules = tuple(
        Rule(kinds.get(r.action, "internal"), r.action.name, r.action.level, r.guard, r.effects) for r in wa.transitions
    )
    laws = tuple(Law(l.target, l.level, l.form.value, l.expr, l.control, l.at) for l in wa.laws)
    states = None if wa.states == BoolLit(True) else wa.states
    return AutomatonDecl(wa.name, params, variables, actions, rules, laws, states)


def _enum_decls(enums: Iterable[EnumType]) -> List[TypeDecl]:
    return [TypeDecl(st.name, st.variants, st.neutral) for st in sorted(enums, key=lambda s: s.name)]


def print_automaton(wa: WorldAutomaton) -> str:
    if wa.composite is None:
        types = _enum_decls(wa.enums.values())
        return print_document(SourceDocument(tuple(types), (automaton_decl(wa),)))
    return print_interface(wa)


def print_interface(wa: WorldAutomaton) -> str:
    """Interface view of a composite; comment lines mark it as a view, not source."""
    lines = [f"# composite view of {wa.name}", f"worldautomaton {wa.name}"]
    klass = {VarClass.WORLD: "world", VarClass.AUTOMATON: "local"}
    order = {Direction.INNER: 0, Direction.INPUT: 1, Direction.OUTPUT: 2}
    blocks = sorted({(v.klass is VarClass.AUTOMATON, v.level) for v in wa.variables})
    for is_local, level in blocks:
        lines.append(f"{IND}{'local' if is_local else 'world'} variables LEVEL {level}")
        group = [v for v in wa.variables if (v.klass is VarClass.AUTOMATON) == is_local and v.level == level]
        for d in sorted({v.direction for v in group}, key=order.get):
            names = ", ".join(
                f"{v.name}: {type_name(v.type)}" + (f" := {format_expr(v.init)}" if v.init is not None else "")
                for v in group
                if v.direction is d
            )
            lines.append(f"{IND * 2}{d.value} {names}")
    if wa.actions:
        for level in sorted({a.level for a in wa.actions}):
            lines.append(f"{IND}actions LEVEL {level}")
            for kind in ActionKind:
                names = [a.name for a in wa.actions if a.level == level and a.kind is kind]
                if names:
                    lines.append(f"{IND * 2}{kind.value} {', '.join(names)}")
    parts = leaves(wa)
    rules = [(p, r) for p in parts for r in p.transitions]
    if rules:
        lines.append(f"{IND}transitions")
        for p, r in rules:
            lines.append(f"{IND * 2}{r.action}    # {p.name}")
            lines.append(f"{IND * 3}pre {format_expr(r.guard)}")
            if r.effects:
                lines.append(f"{IND * 3}eff " + " ".join(f"{t} = {format_expr(e)};" for t, e in r.effects))
    laws = [(p, l) for p in parts for l in p.laws]
    if laws:
        lines.append(f"{IND}trajectories")
        for p, l in laws:
            law = Law(l.target, l.level, l.form.value, l.expr, l.control, l.at)
            lines.append(f"{IND * 2}{_law(law)}    # {p.name}")
    b = wa.composite.binding
    if b.closures:
        lines.append(f"{IND}# closed inputs: " + ", ".join(f"{k} = {v}" for k, v in b.closures))
    lines.append("end")
    return "\n".join(lines) + "\n"


def pretty(obj: Union[SourceDocument, WorldAutomaton]) -> str:
    if isinstance(obj, SourceDocument):
        return print_document(obj)
    return print_automaton(obj)

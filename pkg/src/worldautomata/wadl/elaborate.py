"""From a parsed document to world automata and a simulation configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..builtins import GLOBAL_DEFAULTS
from ..composition import IncompatibleError, close_inputs, inplace, parallel
from ..expr import CONSTANTS, Context, EvalError, Expr, evaluate
from ..grid import Region, SpatialGrid
from ..model import (
    ActionDecl,
    ActionKind,
    Direction,
    DynamicsLaw,
    LawForm,
    RenameClash,
    TransitionRule,
    VarClass,
    VariableDecl,
    WorldAutomaton,
    bind_params,
    rename,
    validate,
)
from ..builtins import make_functions
from ..expr import TRUE
from ..schedule import Pulse, Ramp, SignalSpec, Stimulus
from ..sim import SimConfig
from ..types import BUILTIN_TYPES, AngleType, EnumType, GridMapType, Key, StaticType, Vec2Type
from .ast import Diagnostic, Inplace, Instance, Par, Pos, SourceDocument
from .parser import WadlError, parse_document

KLASS = {"world": VarClass.WORLD, "local": VarClass.AUTOMATON}
DIRECTION = {"input": Direction.INPUT, "internal": Direction.INNER, "output": Direction.OUTPUT}
ACTION_KIND = {"input": ActionKind.INPUT, "internal": ActionKind.HIDDEN, "output": ActionKind.OUTPUT}
FORM = {"algebraic": LawForm.ALGEBRAIC, "ode": LawForm.ODE, "bound": LawForm.BOUND}


@dataclass
class Elaboration:
    document: SourceDocument
    types: Dict[str, StaticType]
    automata: Dict[str, WorldAutomaton]  # declared automata with their default parameters
    system: Optional[WorldAutomaton] = None
    config: Optional[SimConfig] = None
    diagnostics: List[Diagnostic] = field(default_factory=list)


class _Fail(Exception):
    def __init__(self, message: str, pos: Optional[Pos]):
        super().__init__(message)
        self.pos = pos or Pos(1, 1)


class Elaborator:
    def __init__(self, doc: SourceDocument):
        self.doc = doc
        self.diags: List[Diagnostic] = []
        self.types: Dict[str, StaticType] = dict(BUILTIN_TYPES)
        self.enums: Dict[str, EnumType] = {}
        self.automata: Dict[str, WorldAutomaton] = {}
        self.decl_pos: Dict[str, Pos] = {}

    def report(self, message: str, pos: Optional[Pos], severity: str = "error"):
        pos = pos or Pos(1, 1)
        line, col = max(pos.line, 1), max(pos.col, 1)
        self.diags.append(Diagnostic(severity, message, line, col, self.doc.file))

    # -- types ---------------------------------------------------------------------
    def declare_types(self):
        for td in self.doc.types:
            if td.modular:
                st: StaticType = AngleType(td.name)
            else:
                st = EnumType(td.name, td.variants, td.neutral)
                for msg in st.problems():
                    self.report(msg, td.pos)
                self.enums[td.name] = st
            if td.name in self.types and td.name not in BUILTIN_TYPES:
                self.report(f"type {td.name} declared twice", td.pos)
            self.types[td.name] = st

    def resolve_type(self, name: str, pos: Pos) -> StaticType:
        st = self.types.get(name)
        if st is None:
            raise _Fail(f"unknown type {name}", pos)
        return st

    @property
    def literals(self) -> Dict[str, str]:
        return {v: v for st in self.enums.values() for v in st.variants}

    def constant(self, e: Expr, st: Optional[StaticType], pos: Pos, env: Optional[Mapping] = None):
        """Value of a closed expression, as stored in parameter maps."""
        params = dict(GLOBAL_DEFAULTS)
        params.update(env or {})

        def no_vars(name, level):
            raise KeyError(name)

        ctx = Context(SpatialGrid(nx=1, ny=1), 0.0, no_vars, no_vars, params, self.literals, make_functions())
        try:
            v = evaluate(e, ctx)
        except EvalError as exc:
            raise _Fail(str(exc), self.locate(exc, pos)) from None
        return self.to_param(v, st, pos)

    def to_param(self, v, st: Optional[StaticType], pos: Pos):
        if st is None:
            if isinstance(v, np.ndarray):
                return tuple(float(x) for x in v)
            return v
        try:
            if isinstance(st, Vec2Type):
                arr = st.coerce(v)
                return (float(arr[0]), float(arr[1]))
            if isinstance(st, EnumType):
                if not isinstance(v, str):
                    raise TypeError(f"expected a {st.name} value, got {v!r}")
                return st.coerce(v)
            if isinstance(st, AngleType):
                return float(v)
            if isinstance(v, str) or isinstance(v, np.ndarray):
                raise TypeError(f"expected a {st.name} value, got {v!r}")
            return st.coerce(v)
        except (TypeError, ValueError) as exc:
            raise _Fail(str(exc), pos) from None

    def locate(self, exc: Exception, pos: Pos) -> Pos:
        """Best-effort position of the symbol named in an unresolved-symbol message."""
        msg = str(exc)
        prefix = "unresolved symbol "
        if not msg.startswith(prefix):
            return pos
        sym = msg[len(prefix):].split("@")[0]
        lines = self.doc.text.split("\n")
        for ln in range(max(pos.line, 1) - 1, len(lines)):
            start = pos.col - 1 if ln == pos.line - 1 else 0
            j = lines[ln].find(sym, max(start, 0))
            if j >= 0:
                return Pos(ln + 1, j + 1)
        return pos

    # -- automata ------------------------------------------------------------------
    def declare_automata(self):
        for ad in self.doc.automata:
            if ad.name in self.automata:
                self.report(f"worldautomaton {ad.name} declared twice", ad.pos)
                continue
            try:
                wa = self.build(ad)
            except _Fail as exc:
                self.report(str(exc), exc.pos)
                continue
            self.automata[ad.name] = wa
            self.decl_pos[ad.name] = ad.pos
            for v in validate(wa).violations:
                self.report(f"{ad.name}: {v}", self._violation_pos(ad, v))

    def _violation_pos(self, ad, v) -> Pos:
        for sym in v.symbols:
            name = sym.split("@")[0]
            for vd in ad.variables:
                if vd.name == name:
                    return vd.pos
            for law in ad.laws:
                if law.target == name:
                    return law.pos
            for r in ad.rules:
                if r.action == name:
                    return r.pos
        return ad.pos

    def build(self, ad) -> WorldAutomaton:
        params, ptypes = {}, {}
        for p in ad.params:
            st = self.resolve_type(p.type.name, p.pos)
            ptypes[p.name] = st
            params[p.name] = None if p.default is None else self.constant(p.default, st, p.pos, params)
        variables = []
        used_enums = {}
        for vd in ad.variables:
            st = self.resolve_type(vd.type.name, vd.pos)
            if isinstance(st, EnumType):
                used_enums[st.name] = st
            variables.append(VariableDecl(vd.name, vd.level, KLASS[vd.klass], DIRECTION[vd.direction], st, vd.init))
        for st in ptypes.values():
            if isinstance(st, EnumType):
                used_enums[st.name] = st
        actions = [ActionDecl(a.name, a.level, ACTION_KIND[a.kind]) for a in ad.actions]
        rules = []
        for r in ad.rules:
            levels = [a.level for a in actions if a.name == r.action]
            if r.level is not None:
                level = r.level
            elif len(levels) == 1:
                level = levels[0]
            elif not levels:
                raise _Fail(f"transition for undeclared action {r.action}", r.pos)
            else:
                raise _Fail(f"action {r.action} exists at several levels; write {r.action}@<level>", r.pos)
            key = Key(r.action, level)
            kinds = [a.kind for a in actions if a.key == key]
            if kinds and kinds[0] is not ACTION_KIND[r.kind]:
                raise _Fail(f"transition kind {r.kind} does not match the declaration of {key}", r.pos)
            rules.append(TransitionRule(key, r.guard if r.guard is not None else TRUE, r.effects))
        laws = []
        for law in ad.laws:
            at = law.at
            if at is not None:
                # a sampling position only matters for maps; elsewhere it is notation
                decl = [v for v in variables if v.name == law.target and (law.level is None or v.level == law.level)]
                if decl and not isinstance(decl[0].type, GridMapType):
                    at = None
            laws.append(DynamicsLaw(law.target, FORM[law.form], law.expr, law.control, at, law.level))
        return WorldAutomaton(
            name=ad.name,
            variables=tuple(variables),
            actions=tuple(actions),
            transitions=tuple(rules),
            laws=tuple(laws),
            params=params,
            param_types=ptypes,
            states=ad.states if ad.states is not None else TRUE,
            enums=used_enums,
        )

    # -- composition ---------------------------------------------------------------
    def instantiate(self, inst: Instance) -> WorldAutomaton:
        wa = self.automata.get(inst.name)
        if wa is None:
            raise _Fail(f"unknown worldautomaton {inst.name}", inst.pos)
        names = list(wa.param_types)
        if len(inst.args) > len(names):
            raise _Fail(f"{inst.name} takes {len(names)} parameters, {len(inst.args)} given", inst.pos)
        values = {}
        for name, e in zip(names, inst.args):
            values[name] = self.constant(e, wa.param_types[name], inst.pos)
        for name, e in inst.kwargs:
            if name not in wa.param_types:
                raise _Fail(f"{inst.name} has no parameter {name}", inst.pos)
            if name in values:
                raise _Fail(f"parameter {name} given twice", inst.pos)
            values[name] = self.constant(e, wa.param_types[name], inst.pos)
        missing = [n for n in names if n not in values and wa.params.get(n) is None]
        if missing:
            raise _Fail(f"{inst.name} needs a value for {', '.join(missing)}", inst.pos)
        out = bind_params(wa, values)
        if inst.suffix is not None:
            local = [v.name for v in wa.variables if v.klass is VarClass.AUTOMATON] + [a.name for a in wa.actions]
            mapping = {n: f"{n}_{inst.suffix}" for n in dict.fromkeys(local)}
            out = rename(out, mapping)
            out = bind_params(out, {}, name=f"{wa.name}_{inst.suffix}")
        return out

    def compose(self, node, links: Mapping[str, str]) -> WorldAutomaton:
        if isinstance(node, Instance):
            wa = self.instantiate(node)
            own = {k: v for k, v in links.items() if any(d.name == k and d.direction is Direction.INPUT for d in wa.variables)}
            if own:
                try:
                    wa = rename(wa, own)
                except RenameClash as exc:
                    raise _Fail(str(exc), node.pos) from None
            return wa
        if isinstance(node, Par):
            a, b = self.compose(node.left, links), self.compose(node.right, links)
            try:
                return parallel(a, b)
            except IncompatibleError as exc:
                raise _Fail(str(exc), node.pos) from None
        if isinstance(node, Inplace):
            a, b = self.compose(node.outer, links), self.compose(node.inner, links)
            try:
                return inplace(a, b)
            except IncompatibleError as exc:
                raise _Fail(str(exc), node.pos) from None
        raise TypeError(node)

    def scenario(self) -> Tuple[Optional[WorldAutomaton], Optional[SimConfig]]:
        sc = self.doc.scenario
        if sc is None:
            return None, None
        system = None
        if sc.system is not None:
            system = self.compose(sc.system, dict(sc.links))
            if sc.closes:
                values = {}
                for name, level, e in sc.closes:
                    key = Key(name, level)
                    if key not in system.U:
                        raise _Fail(f"close: {key} is not an input of {system.name}", sc.pos)
                    values[key] = self.constant(e, system.var(key).type, sc.pos)
                system = close_inputs(system, values)
            for v in validate(system).violations:
                self.report(f"{system.name}: {v}", sc.pos)
        g = sc.grid
        grid = SpatialGrid(g.x0, g.x1, g.y0, g.y1, g.nx, g.ny) if g is not None else SpatialGrid()
        params = {name: self.constant(e, None, sc.pos) for name, e in sc.params}
        opts = dict(sc.options)
        for k in opts:
            if k not in ("target_size", "decay", "seed"):
                raise _Fail(f"unknown option {k}", sc.pos)
        signals = []
        for s in sc.inputs:
            signals.append(self.signal(s, system, params))
        actions = tuple((Key(f.action, f.level), tuple(f.times)) for f in sc.fires)
        cfg = SimConfig(
            grid=grid,
            dt=sc.dt if sc.dt is not None else 0.1,
            horizon=sc.horizon if sc.horizon is not None else 5.0,
            stimulus=Stimulus("scenario", tuple(signals), actions),
            params=params,
            bindings=dict(sc.bindings),
            pin_neutral=sc.pin_neutral,
            seed=int(opts.get("seed", 0)),
            target_size=float(opts.get("target_size", 1.0)),
            decay=float(opts.get("decay", 0.1)),
        )
        try:
            cfg.steps
            cfg.functions()
        except (ValueError, KeyError) as exc:
            raise _Fail(str(exc).strip('"'), sc.pos) from None
        return system, cfg

    def signal(self, s, system: Optional[WorldAutomaton], env) -> SignalSpec:
        key = Key(s.var, s.level)
        st = None
        if system is not None:
            if key not in system.U:
                raise _Fail(f"input {key} is not an input of {system.name}", s.pos)
            st = system.var(key).type
        default = None if s.default is None else self.constant(s.default, st, s.pos, env)
        pulses = []
        for p in s.pulses:
            if p.ramp:
                offset = 0.0 if p.offset is None else float(self.constant(p.offset, None, s.pos, env))
                value: Any = Ramp(float(self.constant(p.value, None, s.pos, env)), offset)
            else:
                value = self.constant(p.value, st, s.pos, env)
            region = None
            if p.region is not None:
                center = self.constant(p.region[0], None, s.pos, env)
                size = float(self.constant(p.region[1], None, s.pos, env))
                angle = float(self.constant(p.region[2], None, s.pos, env))
                region = Region((float(center[0]), float(center[1])), angle, size)
            start = 0.0 if p.start is None else p.start
            pulses.append(Pulse(value, start, p.until, p.cells, region, p.strict))
        return SignalSpec(key, default, tuple(pulses))

    def run(self) -> Elaboration:
        self.declare_types()
        self.declare_automata()
        system = cfg = None
        if not self.diags:
            try:
                system, cfg = self.scenario()
            except _Fail as exc:
                self.report(str(exc), exc.pos)
        return Elaboration(self.doc, self.types, self.automata, system, cfg, self.diags)


def elaborate(doc: SourceDocument) -> Elaboration:
    """Raises WadlError when the document has semantic errors."""
    result = Elaborator(doc).run()
    errors = [d for d in result.diagnostics if d.severity == "error"]
    if errors:
        raise WadlError(errors)
    return result


def check_document(text: str, file: str = "<input>") -> Tuple[Optional[Elaboration], List[Diagnostic]]:
    """Parse and elaborate, collecting every diagnostic instead of raising."""
    doc, diags = parse_document(text, file)
    if doc is None:
        return None, diags
    try:
        result = Elaborator(doc).run()
    except Exception as exc:  # keep the front end total
        return None, [Diagnostic("error", f"internal error: {exc}", 1, 1, file)]
    return result, result.diagnostics


def load(path) -> Elaboration:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    result, diags = check_document(text, str(path))
    if result is None or any(d.severity == "error" for d in diags):
        raise WadlError(diags)
    return result

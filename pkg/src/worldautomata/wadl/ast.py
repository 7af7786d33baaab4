"""Syntax tree of a .wadl document. Source positions never take part in equality."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from ..expr import Expr


@dataclass(frozen=True)
class Pos:
    line: int = 0
    col: int = 0


def _pos():
    return field(default_factory=Pos, compare=False, repr=False)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    column: int
    file: str = "<input>"

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class TypeRef:
    name: str  # "Real", "Real^2", "Color", ...


@dataclass(frozen=True)
class TypeDecl:
    name: str
    variants: Tuple[str, ...] = ()
    neutral: Optional[str] = None
    modular: bool = False  # Real mod 2pi
    pos: Pos = _pos()


@dataclass(frozen=True)
class ParamDecl:
    name: str
    type: TypeRef
    default: Optional[Expr] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class VarDecl:
    name: str
    level: int
    klass: str  # world | local
    direction: str  # input | internal | output
    type: TypeRef
    init: Optional[Expr] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class ActionSpec:
    name: str
    level: int
    kind: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Rule:
    kind: str
    action: str
    level: Optional[int]
    guard: Optional[Expr]
    effects: Tuple[Tuple[str, Expr], ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Law:
    target: str
    level: Optional[int]
    form: str  # algebraic | ode | bound
    expr: Expr
    control: Optional[Expr] = None
    at: Optional[Expr] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class AutomatonDecl:
    name: str
    params: Tuple[ParamDecl, ...] = ()
    variables: Tuple[VarDecl, ...] = ()
    actions: Tuple[ActionSpec, ...] = ()
    rules: Tuple[Rule, ...] = ()
    laws: Tuple[Law, ...] = ()
    states: Optional[Expr] = None
    pos: Pos = _pos()


# -- composition expressions ------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    name: str
    args: Tuple[Expr, ...] = ()
    kwargs: Tuple[Tuple[str, Expr], ...] = ()
    suffix: Optional[str] = None
    has_parens: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class Par:
    left: "SysExpr"
    right: "SysExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Inplace:
    outer: "SysExpr"
    inner: "SysExpr"
    pos: Pos = _pos()


SysExpr = Union[Instance, Par, Inplace]


@dataclass(frozen=True)
class PulseSpec:
    value: Expr
    ramp: bool = False  # value is the rate; offset is the level at `start`
    offset: Optional[Expr] = None
    cells: Optional[Tuple[Tuple[int, int], ...]] = None
    region: Optional[Tuple[Expr, Expr, Expr]] = None  # center, size, angle
    start: Optional[float] = None
    until: Optional[float] = None
    strict: bool = False


@dataclass(frozen=True)
class InputSched:
    var: str
    level: int
    default: Optional[Expr]
    pulses: Tuple[PulseSpec, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class FireSched:
    action: str
    level: int
    times: Tuple[float, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class GridSpec:
    x0: float = 0.0
    x1: float = 10.0
    y0: float = 0.0
    y1: float = 10.0
    nx: int = 32
    ny: int = 32


@dataclass(frozen=True)
class Scenario:
    grid: Optional[GridSpec] = None
    dt: Optional[float] = None
    horizon: Optional[float] = None
    params: Tuple[Tuple[str, Expr], ...] = ()
    bindings: Tuple[Tuple[str, str], ...] = ()
    options: Tuple[Tuple[str, float], ...] = ()  # target_size, decay, seed
    system: Optional[SysExpr] = None
    links: Tuple[Tuple[str, str], ...] = ()
    closes: Tuple[Tuple[str, int, Expr], ...] = ()
    inputs: Tuple[InputSched, ...] = ()
    fires: Tuple[FireSched, ...] = ()
    pin_neutral: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class SourceDocument:
    types: Tuple[TypeDecl, ...] = ()
    automata: Tuple[AutomatonDecl, ...] = ()
    scenario: Optional[Scenario] = None
    file: str = field(default="<input>", compare=False)
    text: str = field(default="", compare=False, repr=False)

    def automaton(self, name: str) -> Optional[AutomatonDecl]:
        for a in self.automata:
            if a.name == name:
                return a
        return None

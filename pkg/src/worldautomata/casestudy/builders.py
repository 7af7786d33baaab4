"""Programmatic construction of the case-study automata.

These are built directly from expression trees, independently of the DSL, so
that DSL-elaborated scenarios can be compared against them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from ..composition import close_inputs, inplace, parallel
from ..expr import Abs, At, Binary, BoolLit, Call, Cond, Exists, Name, Num, Prev, Unary, VecLit
from ..model import (
    ActionDecl,
    ActionKind,
    Direction,
    DynamicsLaw,
    LawForm,
    TransitionRule,
    VarClass,
    VariableDecl,
    WorldAutomaton,
    rename,
)
from ..types import ANGLE, BOOL, GRIDMAP, REAL, VEC2, EnumType, Key, color_type

COLOR = color_type()
TASK = EnumType("Task", ("S", "C", "E"))
ASSIGNMENT = EnumType("Assignment", ("free", "competing", "committed"))
NEUTRAL = "green"

W, A = VarClass.WORLD, VarClass.AUTOMATON
IN, INNER, OUT = Direction.INPUT, Direction.INNER, Direction.OUTPUT


@dataclass(frozen=True)
class CaseStudyParams:
    k_max: float = 1.0
    p_s: float = 0.5
    p_e: float = 0.9
    eta: float = 0.5
    target_color: str = "χ2"
    target_pose: Tuple[float, float] = (5.5, 5.5)
    target_heading: float = 0.0
    uav_color: str = "χ2"
    uav_position: Tuple[float, float] = (5.5, 4.5)
    uav_velocity: Tuple[float, float] = (0.0, 0.0)
    uav_heading: float = math.pi / 2
    footprint_offset: float = 1.0

    def problems(self) -> list:
        out = []
        if not 0.0 <= self.p_s <= self.p_e <= 1.0:
            out.append("need 0 <= p_s <= p_e <= 1")
        if self.k_max <= 0:
            out.append("k_max must be positive")
        for c in (self.target_color, self.uav_color):
            if c not in COLOR.variants:
                out.append(f"unknown color {c!r}")
        return out

    def check(self):
        bad = self.problems()
        if bad:
            raise ValueError("; ".join(bad))

    def globals(self) -> dict:
        return {"k_max": self.k_max, "p_s": self.p_s, "p_e": self.p_e, "η": self.eta, "eta": self.eta}


def _v(name, level, klass, direction, st, init=None) -> VariableDecl:
    return VariableDecl(name, level, klass, direction, st, init)


def _vec(xy) -> VecLit:
    return VecLit(Num(float(xy[0])), Num(float(xy[1])))


def _eq(a, b):
    return Binary("==", a, b)


def _and(*xs):
    out = xs[0]
    for x in xs[1:]:
        out = Binary("and", out, x)
    return out


def _or(*xs):
    out = xs[0]
    for x in xs[1:]:
        out = Binary("or", out, x)
    return out


def _exists_k_reached(heading: str, center: str):
    region = Call("f", (Name(heading), Name(center)))
    return Exists("p", region, Binary(">=", Name("k"), Name("k_max")))


def build_target(params: CaseStudyParams = CaseStudyParams(), idt: float = 1.0, name: str = "Target") -> WorldAutomaton:
    params.check()
    in_footprint = Binary("in", Name("p"), Call("f", (Name("φ"), Name("p_T"))))
    return WorldAutomaton(
        name=name,
        variables=(
            _v("k", 0, W, IN, REAL),
            _v("ξ", 0, W, OUT, COLOR),
            _v("φ", 0, A, INNER, ANGLE, Name("phi0")),
            _v("p_T", 0, A, INNER, VEC2, Name("pT0")),
            _v("Fail", 0, A, INNER, BOOL, BoolLit(False)),
        ),
        actions=(ActionDecl("delete", 0, ActionKind.HIDDEN),),
        transitions=(TransitionRule(Key("delete", 0), _exists_k_reached("φ", "p_T"), (("Fail", BoolLit(True)),)),),
        laws=(
            DynamicsLaw("ξ", LawForm.ALGEBRAIC, Cond(_and(in_footprint, Unary("not", Name("Fail"))), Name("T_C"), Name(NEUTRAL))),
        ),
        params={"IDT": idt, "T_C": params.target_color, "phi0": params.target_heading, "pT0": tuple(params.target_pose)},
        param_types={"IDT": REAL, "T_C": COLOR, "phi0": ANGLE, "pT0": VEC2},
        enums={"Color": COLOR},
    )


def build_target_alt(params: CaseStudyParams = CaseStudyParams(), idt: float = 1.0) -> WorldAutomaton:
    """Target written with a positive liveness flag instead of Fail."""
    params.check()
    in_footprint = Binary("in", Name("p"), Call("f", (Name("φ"), Name("p_T"))))
    return WorldAutomaton(
        name="TargetAlt",
        variables=(
            _v("k", 0, W, IN, REAL),
            _v("ξ", 0, W, OUT, COLOR),
            _v("φ", 0, A, INNER, ANGLE, Name("phi0")),
            _v("p_T", 0, A, INNER, VEC2, Name("pT0")),
            _v("Alive", 0, A, INNER, BOOL, BoolLit(True)),
        ),
        actions=(ActionDecl("delete", 0, ActionKind.HIDDEN),),
        transitions=(TransitionRule(Key("delete", 0), _exists_k_reached("φ", "p_T"), (("Alive", BoolLit(False)),)),),
        laws=(DynamicsLaw("ξ", LawForm.ALGEBRAIC, Cond(Unary("not", _and(Name("Alive"), in_footprint)), Name(NEUTRAL), Name("T_C"))),),
        params={"IDT": idt, "T_C": params.target_color, "phi0": params.target_heading, "pT0": tuple(params.target_pose)},
        param_types={"IDT": REAL, "T_C": COLOR, "phi0": ANGLE, "pT0": VEC2},
        enums={"Color": COLOR},
    )


def build_field(name: str = "Field") -> WorldAutomaton:
    # ξ carries the colors written by inhabitants, so it is typed Color here.
    return WorldAutomaton(
        name=name,
        variables=(
            _v("C", 1, W, INNER, COLOR),
            _v("K", 1, W, INNER, REAL, Num(0.0)),
            _v("ξ", 1, W, IN, COLOR),
            _v("e", 1, W, IN, BOOL),
            _v("k", 1, W, OUT, REAL),
            _v("c", 1, W, OUT, COLOR),
        ),
        laws=(
            DynamicsLaw("C", LawForm.ALGEBRAIC, Name("ξ")),
            DynamicsLaw("K", LawForm.ODE, Cond(Name("e"), Num(1.0), Num(0.0))),
            DynamicsLaw("c", LawForm.ALGEBRAIC, Name("C")),
            DynamicsLaw("k", LawForm.ALGEBRAIC, Name("K")),
        ),
        enums={"Color": COLOR},
    )


def build_field_alt() -> WorldAutomaton:
    """Field without the internal color copy; the compression integrates a doubled rate halved."""
    return WorldAutomaton(
        name="FieldAlt",
        variables=(
            _v("K", 1, W, INNER, REAL, Num(0.0)),
            _v("ξ", 1, W, IN, COLOR),
            _v("e", 1, W, IN, BOOL),
            _v("k", 1, W, OUT, REAL),
            _v("c", 1, W, OUT, COLOR),
        ),
        laws=(
            DynamicsLaw("K", LawForm.ODE, Binary("/", Cond(Name("e"), Num(2.0), Num(0.0)), Num(2.0))),
            DynamicsLaw("c", LawForm.ALGEBRAIC, Name("ξ")),
            DynamicsLaw("k", LawForm.ALGEBRAIC, Name("K")),
        ),
        enums={"Color": COLOR},
    )


def build_falsefield(params: CaseStudyParams = CaseStudyParams(), chi: Optional[str] = None) -> WorldAutomaton:
    params.check()
    chi = params.target_color if chi is None else chi
    in_footprint = Binary("in", Name("p"), Call("f", (Name("θ"), Name("fp"))))
    return WorldAutomaton(
        name="FalseField",
        variables=(
            _v("fC", 1, W, INNER, COLOR),
            _v("fK", 1, W, INNER, REAL, Num(0.0)),
            _v("e", 1, W, IN, BOOL),
            _v("c", 1, W, OUT, COLOR),
            _v("k", 1, W, OUT, REAL),
            _v("θ", 1, A, INNER, ANGLE, Name("theta0")),
            _v("fp", 1, A, INNER, VEC2, Name("fp0")),
            _v("Del", 1, A, INNER, BOOL, BoolLit(False)),
            _v("χ", 1, A, INNER, COLOR, Name("chi0")),
        ),
        actions=(ActionDecl("change", 1, ActionKind.HIDDEN),),
        transitions=(TransitionRule(Key("change", 1), _exists_k_reached("θ", "fp"), (("Del", BoolLit(True)),)),),
        laws=(
            DynamicsLaw("fC", LawForm.ALGEBRAIC, Cond(_and(in_footprint, Unary("not", Name("Del"))), Name("χ"), Name(NEUTRAL))),
            DynamicsLaw("fK", LawForm.ODE, Cond(Name("e"), Num(1.0), Num(0.0))),
            DynamicsLaw("c", LawForm.ALGEBRAIC, Name("fC")),
            DynamicsLaw("k", LawForm.ALGEBRAIC, Name("fK")),
        ),
        params={"theta0": params.target_heading, "fp0": tuple(params.target_pose), "chi0": chi},
        param_types={"theta0": ANGLE, "fp0": VEC2, "chi0": COLOR},
        enums={"Color": COLOR},
    )


UAV_LOCALS = (
    "p_U", "v", "ψ", "tk", "assign", "s_fp",
    "Pin_t", "Pin_φ", "cost_in",
    "P_t", "P_φ", "cost", "m_p", "m_t", "m_k", "m_φ", "m_a",
    "search", "confirm", "compete", "commit", "engage",
)  # fmt: skip


def build_uav(params: CaseStudyParams = CaseStudyParams(), idu: float = 1.0, name: str = "UAV", **overrides) -> WorldAutomaton:
    params.check()
    sfp = Name("s_fp")
    seen = At("c", sfp)
    p = dict(
        IDU=idu,
        T_U=params.uav_color,
        pU0=tuple(params.uav_position),
        v0=tuple(params.uav_velocity),
        psi0=params.uav_heading,
        d_fp=params.footprint_offset,
        omega=0.0,
    )
    p.update(overrides)
    S, C, E = (Name(x) for x in TASK.variants)
    free, competing, committed = (Name(x) for x in ASSIGNMENT.variants)
    rules = (
        TransitionRule(
            Key("search", 0),
            _or(
                Binary("<=", At("P_t", sfp), Name("p_s")),
                Binary(">", Name("cost"), Name("cost_in")),
                _eq(seen, Name(NEUTRAL)),
            ),
            (("tk", S), ("assign", free)),
        ),
        TransitionRule(
            Key("confirm", 0),
            _and(_eq(Name("tk"), S), Binary(">", At("P_t", sfp), Name("p_s")), Binary("!=", seen, Name(NEUTRAL))),
            (("tk", C),),
        ),
        TransitionRule(
            Key("compete", 0),
            _and(_eq(Name("tk"), C), _eq(seen, Name("T_U"))),
            (("assign", competing),),
        ),
        TransitionRule(
            Key("commit", 0),
            _and(_eq(Name("assign"), competing), Binary("<=", Name("cost"), Call("min", (Name("cost_in"),)))),
            (("assign", committed),),
        ),
        TransitionRule(
            Key("engage", 0),
            _and(_eq(Name("assign"), committed), Binary(">", At("P_t", sfp), Name("p_e"))),
            (("tk", E),),
        ),
    )
    heading = VecLit(Call("cos", (Name("ψ"),)), Call("sin", (Name("ψ"),)))
    laws = (
        DynamicsLaw("p_U", LawForm.ODE, Name("v")),
        DynamicsLaw("ψ", LawForm.BOUND, Name("η"), control=Name("omega")),
        DynamicsLaw("v", LawForm.ODE, _vec((0.0, 0.0))),
        DynamicsLaw("s_fp", LawForm.ALGEBRAIC, Binary("+", Name("p_U"), Binary("*", Name("d_fp"), heading))),
        DynamicsLaw("e", LawForm.ALGEBRAIC, Cond(_eq(Name("tk"), E), BoolLit(True), BoolLit(False))),
        # broadcasts from other UAVs are heard one sample late, which also breaks the P_t loop between linked UAVs
        DynamicsLaw("P_φ", LawForm.ALGEBRAIC, Call("g", (Prev("P_φ"), Prev("Pin_φ"), seen, Name("ψ")))),
        DynamicsLaw("m_φ", LawForm.ALGEBRAIC, Call("update", (At("P_φ", sfp),)), at=sfp),
        DynamicsLaw("P_t", LawForm.ALGEBRAIC, Call("h", (Prev("P_t"), Prev("Pin_t"), seen))),
        DynamicsLaw("m_p", LawForm.ALGEBRAIC, Call("update", (At("P_t", sfp),)), at=sfp),
        DynamicsLaw("cost", LawForm.ALGEBRAIC, Call("r", (Abs(Binary("-", Name("p_U"), sfp)),))),
        DynamicsLaw("m_k", LawForm.ALGEBRAIC, Call("update", (seen,)), at=sfp),
        DynamicsLaw("m_t", LawForm.ALGEBRAIC, Call("update", (Name("tk"),)), at=sfp),
        DynamicsLaw("m_a", LawForm.ALGEBRAIC, Call("update", (Name("assign"),)), at=sfp),
    )
    return WorldAutomaton(
        name=name,
        variables=(
            _v("c", 0, W, IN, COLOR),
            _v("e", 0, W, OUT, BOOL, BoolLit(False)),
            _v("p_U", 0, A, INNER, VEC2, Name("pU0")),
            _v("v", 0, A, INNER, VEC2, Name("v0")),
            _v("ψ", 0, A, INNER, ANGLE, Name("psi0")),
            _v("tk", 0, A, INNER, TASK, S),
            _v("assign", 0, A, INNER, ASSIGNMENT, free),
            _v("s_fp", 0, A, INNER, VEC2),
            _v("Pin_t", 0, A, IN, REAL),
            _v("Pin_φ", 0, A, IN, REAL),
            _v("cost_in", 0, A, IN, REAL),
            _v("P_t", 0, A, OUT, REAL, Num(0.0)),
            _v("P_φ", 0, A, OUT, REAL, Num(0.0)),
            _v("cost", 0, A, OUT, REAL),
            _v("m_p", 0, A, OUT, GRIDMAP),
            _v("m_t", 0, A, OUT, GRIDMAP),
            _v("m_k", 0, A, OUT, GRIDMAP),
            _v("m_φ", 0, A, OUT, GRIDMAP),
            _v("m_a", 0, A, OUT, GRIDMAP),
        ),
        actions=tuple(ActionDecl(a, 0, ActionKind.HIDDEN) for a in ("search", "confirm", "engage", "compete", "commit")),
        transitions=rules,
        laws=laws,
        params=p,
        param_types={"IDU": REAL, "T_U": COLOR, "pU0": VEC2, "v0": VEC2, "psi0": ANGLE, "d_fp": REAL, "omega": REAL},
        enums={"Color": COLOR, "Task": TASK, "Assignment": ASSIGNMENT},
    )


def uav_instance(uav: WorldAutomaton, suffix: str, links: Sequence[Tuple[str, str]] = ()) -> WorldAutomaton:
    """Rename every local symbol of a UAV with `_<suffix>`, then point inputs at other instances' outputs."""
    mapping = {n: f"{n}_{suffix}" for n in UAV_LOCALS}
    for inp, src in links:
        mapping[inp] = src
    return rename(uav, mapping)


def two_uavs(params: CaseStudyParams, offsets: Tuple[float, float] = (1.0, 1.5)) -> WorldAutomaton:
    """Two UAVs over the same cell that hear each other's cost and presence estimate."""
    u1 = build_uav(params, 1.0, name="UAV_1", d_fp=offsets[0])
    # the second UAV sits further back along the same heading so both footprints hit the target
    x, y = params.uav_position
    u2 = build_uav(params, 2.0, name="UAV_2", d_fp=offsets[1], pU0=(x, y - (offsets[1] - offsets[0])))
    a = uav_instance(u1, "1", [("cost_in", "cost_2"), ("Pin_t", "P_t_2"), ("Pin_φ", "P_φ_2")])
    b = uav_instance(u2, "2", [("cost_in", "cost_1"), ("Pin_t", "P_t_1"), ("Pin_φ", "P_φ_1")])
    return parallel(a, b, name="UAV_1 || UAV_2")


def field_target(params: CaseStudyParams = CaseStudyParams(), alt_field=False, alt_target=False) -> WorldAutomaton:
    outer = build_field_alt() if alt_field else build_field()
    inner = build_target_alt(params) if alt_target else build_target(params)
    return inplace(outer, inner)


def harnessed(wa: WorldAutomaton) -> WorldAutomaton:
    """Close the level-1 world input ξ with constant green, when it is an input."""
    key = Key("ξ", 1)
    if key not in wa.U:
        return wa
    return close_inputs(wa, {key: NEUTRAL})

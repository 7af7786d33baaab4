import dataclasses

import pytest

from worldautomata.casestudy.builders import CaseStudyParams, build_falsefield, build_field, build_target, build_uav
from worldautomata.expr import Name, Num
from worldautomata.model import (
    ActionDecl,
    ActionKind,
    Direction,
    DynamicsLaw,
    LawForm,
    RenameClash,
    VarClass,
    VariableDecl,
    WorldAutomaton,
    level_lift,
    objects_at_levels,
    rename,
    validate,
)
from worldautomata.types import BOOL, REAL, Key

P = CaseStudyParams()


@pytest.mark.parametrize("build", [lambda: build_target(P), build_field, lambda: build_falsefield(P), lambda: build_uav(P)])
def test_case_study_automata_validate(build):
    report = validate(build())
    assert report.ok, str(report)


def test_symbol_sets_of_field():
    f = build_field()
    assert f.U_w == {Key("ξ", 1), Key("e", 1)}
    assert f.Y_w == {Key("k", 1), Key("c", 1)}
    assert f.X_w == {Key("C", 1), Key("K", 1)}
    assert not f.A
    assert f.Z == f.U | f.Y


def test_world_internal_at_level_zero_is_rejected():
    bad = WorldAutomaton(
        "Bad",
        (VariableDecl("w", 0, VarClass.WORLD, Direction.INNER, REAL, Num(0.0)), VariableDecl("y", 0, VarClass.WORLD, Direction.OUTPUT, REAL)),
        laws=(DynamicsLaw("y", LawForm.ALGEBRAIC, Name("w")),),
    )
    report = validate(bad)
    assert not report.ok
    assert any(v.clause == "X_w[0]" and v.symbols == ("w@0",) for v in report.violations)


def test_name_used_twice_is_rejected():
    wa = WorldAutomaton(
        "Twice",
        (VariableDecl("x", 0, VarClass.AUTOMATON, Direction.INNER, REAL, Num(0.0)),),
        (ActionDecl("x", 0, ActionKind.HIDDEN),),
    )
    assert not validate(wa).ok


def test_level_lift_twice():
    u = build_uav(P)
    twice = level_lift(level_lift(u))
    assert twice == level_lift(u, 2)
    assert {v.level for v in twice.variables} == {2}
    assert {a.level for a in twice.actions} == {2}
    assert validate(twice).ok


def test_level_lift_moves_rules_and_keys():
    t = level_lift(build_target(P))
    assert t.U_w == {Key("k", 1)}
    assert t.transitions[0].action == Key("delete", 1)


def test_objects_at_levels():
    assert objects_at_levels(build_uav(P), 1) == (frozenset(), frozenset())
    variables, actions = objects_at_levels(build_field(), 1, 1)
    assert len(variables) == 6 and not actions
    assert objects_at_levels(build_field(), 2, 1) == (frozenset(), frozenset())


def test_rename_identity_is_noop():
    u = build_uav(P)
    assert rename(u, {}) is u
    assert rename(u, {"c": "c"}) is u


def test_rename_updates_every_reference():
    u = rename(build_uav(P), {"e": "e_1", "tk": "tk_1"})
    assert Key("e_1", 0) in u.Y_w and Key("e", 0) not in u.V
    law = u.law_for(Key("e_1", 0))
    assert law is not None and "tk_1" in repr(law.expr)
    assert all("tk" not in t or t == "tk_1" for r in u.transitions for t, _ in r.effects)
    assert validate(u).ok


def test_rename_clash():
    with pytest.raises(RenameClash) as info:
        rename(build_uav(P), {"c": "e"})
    assert info.value.identifier == "e"
    with pytest.raises(RenameClash):
        rename(build_uav(P), {"c": "z", "e": "z"})


def test_output_without_law_is_piecewise_constant():
    f = build_field()
    held = dataclasses.replace(f, laws=tuple(law for law in f.laws if law.target != "k"))
    assert validate(held).ok
    assert held.dynamics_class(Key("k", 1)).value != f.dynamics_class(Key("k", 1)).value


def test_signature_ignores_internals():
    a = build_field()
    b = dataclasses.replace(a, variables=a.variables + (VariableDecl("z", 1, VarClass.WORLD, Direction.INNER, BOOL),))
    assert a.signature() == b.signature()

import numpy as np
import pytest

from worldautomata.casestudy.builders import CaseStudyParams, build_field, build_target, build_uav, field_target, harnessed, two_uavs, uav_instance
from worldautomata.composition import (
    IncompatibleError,
    close_inputs,
    dropped_outputs,
    inplace,
    inplace_compatible,
    leaves,
    parallel,
    parallel_compatible,
)
from worldautomata.decompose import check_coupling
from worldautomata.expr import At, Cond, Name, Num, VecLit
from worldautomata.grid import SpatialGrid
from worldautomata.model import (
    ActionDecl,
    ActionKind,
    Direction,
    DynamicsLaw,
    LawForm,
    VarClass,
    VariableDecl,
    WorldAutomaton,
    validate,
)
from worldautomata.schedule import Pulse, SignalSpec, Stimulus
from worldautomata.sim import SimConfig, simulate
from worldautomata.types import BOOL, REAL, Key

P = CaseStudyParams()
ORIGIN = VecLit(Num(0.5), Num(0.5))
W, A = VarClass.WORLD, VarClass.AUTOMATON
IN, INNER, OUT = Direction.INPUT, Direction.INNER, Direction.OUTPUT


def leaf(name, variables, laws=(), actions=()):
    return WorldAutomaton(name, tuple(VariableDecl(*v) for v in variables), tuple(actions), (), tuple(laws))


def test_uavs_sharing_names_violate_output_clause():
    report = parallel_compatible(build_uav(P), build_uav(P))
    clauses = {c for c, _ in report.violations}
    assert "6" in clauses
    six = dict(report.violations)["6"]
    assert "P_t@0" in six
    # the common world output e@0 superposes, so it is not a violation
    assert "e@0" not in six


def test_renamed_uavs_compose():
    pair = two_uavs(P)
    assert validate(pair).ok
    assert Key("e", 0) in pair.composite.binding.shared
    # the linked automaton inputs are now driven by the other UAV's outputs
    assert Key("cost_in_1", 0) not in pair.U and Key("cost_2", 0) in pair.Y


def test_hidden_action_clash_is_clause_three():
    a = leaf("A", [("x", 0, A, INNER, REAL, Num(0.0))], actions=[ActionDecl("go", 0, ActionKind.HIDDEN)])
    b = leaf("B", [("y", 0, A, INNER, REAL, Num(0.0))], actions=[ActionDecl("go", 0, ActionKind.INPUT)])
    report = parallel_compatible(a, b)
    assert ("3", ("go@0",)) in report.violations
    with pytest.raises(IncompatibleError) as info:
        parallel(a, b)
    assert "clause 3" in str(info.value)


def test_world_input_and_output_across_parallel_parts():
    a = leaf("A", [("w", 0, W, OUT, REAL)], [DynamicsLaw("w", LawForm.ALGEBRAIC, Num(1.0))])
    b = leaf("B", [("w", 0, W, IN, REAL)])
    assert ("2", ("w@0",)) in parallel_compatible(a, b).violations


def test_strict_mode_forbids_shared_world_outputs():
    a = leaf("A", [("w", 0, W, OUT, REAL)], [DynamicsLaw("w", LawForm.ALGEBRAIC, Num(1.0))])
    b = leaf("B", [("w", 0, W, OUT, REAL)], [DynamicsLaw("w", LawForm.ALGEBRAIC, Num(2.0))])
    assert parallel_compatible(a, b).compatible
    assert not parallel_compatible(a, b, strict=True).compatible


def test_input_actions_matched_by_outputs_become_outputs():
    a = leaf("A", [("x", 0, A, INNER, REAL, Num(0.0))], actions=[ActionDecl("ping", 0, ActionKind.OUTPUT)])
    b = leaf("B", [("y", 0, A, INNER, REAL, Num(0.0))], actions=[ActionDecl("ping", 0, ActionKind.INPUT), ActionDecl("pong", 0, ActionKind.INPUT)])
    ab = parallel(a, b)
    # I = (I1 ∪ I2) \ O
    assert ab.I == {Key("pong", 0)}
    assert ab.O == {Key("ping", 0)}


def test_field_target_interface():
    ft = field_target(P)
    assert ft.composite.binding.kind == "inplace"
    assert ft.composite.binding.shared == {Key("ξ", 1)}
    # ξ@1 stays an input: what comes from outside combines with the target's colors
    assert ft.U == {Key("ξ", 1), Key("e", 1)}
    assert ft.Y == {Key("c", 1), Key("k", 1)}
    assert Key("delete", 1) in ft.H
    assert not dropped_outputs(ft)


def test_inplace_rejects_colliding_deep_levels():
    deep = leaf("Deep", [("q", 2, W, INNER, REAL, Num(0.0))])
    inner = leaf("Inner", [("q", 1, W, INNER, REAL, Num(0.0))])
    assert not inplace_compatible(deep, inner).compatible


def test_close_inputs_removes_them():
    ft = harnessed(field_target(P))
    assert ft.U == {Key("e", 1)}
    with pytest.raises(KeyError):
        close_inputs(ft, {Key("ξ", 1): "green"})


def test_leaves_in_order():
    names = [x.name for x in leaves(inplace(harnessed(field_target(P)), two_uavs(P)))]
    assert names == ["Field", "Target", "UAV_1", "UAV_2"]


def test_uav_instance_links_inputs():
    u = uav_instance(build_uav(P), "7", [("cost_in", "cost_8")])
    assert Key("cost_8", 0) in u.U_a and Key("cost_7", 0) in u.Y_a


def test_uncaptured_inner_inputs_are_neutral():
    outer = leaf("Outer", [("o", 1, W, OUT, REAL)], [DynamicsLaw("o", LawForm.ALGEBRAIC, Num(3.0))])
    inner = leaf(
        "Inner",
        [("s", 0, W, IN, BOOL), ("n", 0, A, INNER, REAL, Num(0.0)), ("d", 0, W, OUT, REAL)],
        [DynamicsLaw("n", LawForm.ODE, Cond(At("s", ORIGIN), Num(1.0), Num(0.0))), DynamicsLaw("d", LawForm.ALGEBRAIC, Name("n"))],
    )
    wa = inplace(outer, inner)
    b = wa.composite.binding
    assert b.zeroed == {Key("s", 1)}
    assert b.dropped == {Key("d", 1)}
    assert wa.U == frozenset()
    grid = SpatialGrid(nx=3, ny=3)
    res = simulate(wa, SimConfig(grid=grid, horizon=1.0))
    inner_run = res.component_executions[(1,)].flatten()
    assert not inner_run.data[Key("s", 1)].any()
    assert np.all(inner_run.data[Key("n", 1)] == 0.0)
    assert not check_coupling(wa, res.component_executions)


def test_fed_inner_input_sees_outer_output():
    outer = leaf("Outer", [("o", 1, W, OUT, REAL)], [DynamicsLaw("o", LawForm.ALGEBRAIC, Num(3.0))])
    inner = leaf("Inner", [("o", 0, W, IN, REAL), ("n", 0, A, INNER, REAL, Num(0.0))], [DynamicsLaw("n", LawForm.ODE, At("o", ORIGIN))])
    wa = inplace(outer, inner)
    res = simulate(wa, SimConfig(grid=SpatialGrid(nx=2, ny=2), horizon=1.0))
    n = res.execution.flatten().data[Key("n", 1)]
    assert n[-1] == pytest.approx(3.0)


def test_parallel_world_outputs_superpose():
    a = leaf("A", [("w", 0, W, OUT, REAL)], [DynamicsLaw("w", LawForm.ALGEBRAIC, Num(1.0))])
    b = leaf("B", [("w", 0, W, OUT, REAL)], [DynamicsLaw("w", LawForm.ALGEBRAIC, Num(2.5))])
    res = simulate(parallel(a, b), SimConfig(grid=SpatialGrid(nx=2, ny=2), horizon=0.2))
    assert np.all(res.execution.flatten().data[Key("w", 0)] == 3.5)
    assert not check_coupling(parallel(a, b), res.component_executions)


def test_engage_system_validates():
    wa = inplace(harnessed(field_target(P)), build_uav(P))
    assert validate(wa).ok
    assert Key("e", 1) in wa.composite.binding.shared


def test_color_collision_raises_during_simulation():
    from worldautomata.algebra import EnumCollision

    ft = field_target(P)
    xi = SignalSpec(Key("ξ", 1), "green", (Pulse("χ1", 0.0, cells=((5, 5),)),))
    stim = Stimulus("collide", (xi, SignalSpec(Key("e", 1), False)))
    with pytest.raises(EnumCollision):
        simulate(ft, SimConfig(grid=SpatialGrid(nx=10, ny=10), horizon=0.2, stimulus=stim))


def test_unit_target_alone_validates():
    assert validate(build_target(P)).ok and validate(build_field()).ok

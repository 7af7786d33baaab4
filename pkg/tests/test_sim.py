import math

import numpy as np
import pytest

from randomized import random_composite, random_stimulus
from worldautomata.casestudy.builders import CaseStudyParams, build_field, build_target, build_uav
from worldautomata.casestudy.experiments import K1, default_config, target_cell
from worldautomata.export import sample_rows
from worldautomata.expr import Binary, BoolLit, Name, Num
from worldautomata.grid import SpatialGrid
from worldautomata.model import ActionDecl, ActionKind, Direction, DynamicsLaw, LawForm, TransitionRule, VarClass, VariableDecl, WorldAutomaton
from worldautomata.schedule import Pulse, Ramp, SignalSpec, Stimulus
from worldautomata.sim import ConfigError, SimConfig, UnscheduledInput, sample_time, simulate
from worldautomata.types import REAL, Key

P = CaseStudyParams()


def field_cfg(*pulses, horizon=3.0):
    cfg = default_config(P, horizon)
    stim = Stimulus("f", (SignalSpec(Key("e", 1), False, pulses), SignalSpec(Key("ξ", 1), "green")))
    return cfg.with_(stimulus=stim)


def test_field_ramps_where_e_holds():
    cfg = field_cfg(Pulse(True, 1.0, cells=((5, 5),)))
    res = simulate(build_field(), cfg)
    _, post = sample_rows(res.execution)
    k = post[K1]
    t = np.arange(31) * 0.1
    assert np.allclose(k[:, 5, 5], np.maximum(0.0, t - 1.0))
    assert np.all(k[:, 0, 0] == 0.0)
    assert not res.events


def test_field_copies_colors_through():
    cfg = field_cfg()
    stim = cfg.stimulus.with_signal(SignalSpec(Key("ξ", 1), "green", (Pulse("χ3", 0.5, 1.0, cells=((2, 3),)),)))
    res = simulate(build_field(), cfg.with_(stimulus=stim))
    c = res.execution.flatten().data[Key("c", 1)]
    assert c[5, 2, 3] == "χ3" and c[10, 2, 3] == "green" and c[5, 0, 0] == "green"


def test_target_paints_its_footprint():
    cfg = default_config(P, 1.0).with_(stimulus=Stimulus("k", (SignalSpec(Key("k", 0), 0.0),)))
    res = simulate(build_target(P), cfg)
    xi = res.execution.flatten().data[Key("ξ", 0)]
    star = target_cell(P, cfg.grid)
    assert xi[0][star] == P.target_color
    assert np.all(xi == xi[0])
    assert set(xi[0].ravel()) == {"green", P.target_color}


def test_target_deletes_once_k_reaches_k_max():
    cfg = default_config(P, 3.0)
    star = target_cell(P, cfg.grid)
    stim = Stimulus("k", (SignalSpec(Key("k", 0), 0.0, (Pulse(Ramp(1.0), 0.5, cells=(star,)),)),))
    res = simulate(build_target(P), cfg.with_(stimulus=stim))
    assert [(e.time, e.action.name) for e in res.events] == [(1.5, "delete")]
    _, post = sample_rows(res.execution)
    assert np.all(post[Key("ξ", 0)][15:] == "green")


def test_unscheduled_input_is_an_error():
    with pytest.raises(UnscheduledInput, match="ξ@1"):
        simulate(build_field(), default_config(P).with_(stimulus=Stimulus("e", (SignalSpec(Key("e", 1), False),))))


def test_pin_neutral_fills_gaps():
    res = simulate(build_field(), default_config(P, 0.5).with_(pin_neutral=True))
    assert np.all(res.execution.flatten().data[Key("c", 1)] == "green")


def test_horizon_must_be_on_the_lattice():
    with pytest.raises(ConfigError):
        simulate(build_field(), default_config(P, 0.55).with_(pin_neutral=True))
    with pytest.raises(ConfigError):
        simulate(build_field(), default_config(P).with_(dt=0.0, pin_neutral=True))


@pytest.mark.parametrize("seed", range(6))
def test_simulation_is_deterministic(seed):
    grid = SpatialGrid(nx=4, ny=4)
    wa = random_composite(seed, grid)
    cfg = SimConfig(grid=grid, horizon=1.5, stimulus=random_stimulus(seed, wa, grid, 1.5), target_size=3.0)
    a, b = simulate(wa, cfg), simulate(wa, cfg)
    assert a.event_log() == b.event_log()
    assert a.execution.equals(b.execution, 0.0)


def test_uav_holds_still_without_commands():
    cfg = default_config(P, 1.0).with_(pin_neutral=True)
    res = simulate(build_uav(P), cfg)
    tau = res.execution.flatten()
    assert np.allclose(tau.data[Key("p_U", 0)], P.uav_position)
    assert np.allclose(tau.data[Key("s_fp", 0)][0], (5.5, 5.5))
    assert tau.data[Key("ψ", 0)][0] == pytest.approx(math.pi / 2)


def counter(kind=ActionKind.HIDDEN):
    x = Key("x", 0)
    return WorldAutomaton(
        "Counter",
        (VariableDecl("x", 0, VarClass.AUTOMATON, Direction.INNER, REAL, Num(0.0)), VariableDecl("n", 0, VarClass.AUTOMATON, Direction.OUTPUT, REAL, Num(0.0))),
        (ActionDecl("tick", 0, kind), ActionDecl("tock", 0, ActionKind.HIDDEN)),
        (
            TransitionRule(Key("tick", 0), Binary(">=", Name("x"), Num(0.5)) if kind is ActionKind.HIDDEN else BoolLit(True), (("x", Num(0.0)), ("n", Binary("+", Name("n"), Num(1.0))))),
            TransitionRule(Key("tock", 0), Binary(">=", Name("x"), Num(0.5)), (("x", Num(0.0)),)),
        ),
        (DynamicsLaw(x.name, LawForm.ODE, Num(1.0)),),
    )


def test_one_controlled_action_per_step_and_choice_points():
    choices = []
    res = simulate(counter(), SimConfig(grid=SpatialGrid(nx=1, ny=1), horizon=1.0), record_choices=choices)
    assert [e.action.name for e in res.events] == ["tick", "tick"]
    assert [t for t, _ in choices] == [0.5, 1.0]
    other = simulate(counter(), SimConfig(grid=SpatialGrid(nx=1, ny=1), horizon=1.0), chooser=lambda t, c: len(c) - 1)
    assert [e.action.name for e in other.events] == ["tock", "tock"]
    assert other.final_state()[Key("n", 0)] == 0.0


def test_input_actions_fire_when_scheduled():
    wa = counter(ActionKind.INPUT)
    stim = Stimulus("ticks", actions=((Key("tick", 0), (0.2, 0.7)),))
    res = simulate(wa, SimConfig(grid=SpatialGrid(nx=1, ny=1), horizon=1.0, stimulus=stim))
    ticks = [e.time for e in res.events if e.action.name == "tick"]
    assert ticks == [0.2, 0.7]
    with pytest.raises(ConfigError):
        simulate(wa, SimConfig(grid=SpatialGrid(nx=1, ny=1), horizon=1.0, stimulus=Stimulus("bad", actions=((Key("tock", 0), (0.1,)),))))


def test_sample_time_rounding():
    assert sample_time(3, 0.1) == 0.3

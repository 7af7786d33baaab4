"""Acceptance suite, one group of tests per numbered criterion.

Run with pytest (a summary line per criterion is printed at the end) or
directly: ``python tests/test_acceptance.py``.
"""
import dataclasses
import random
import sys
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from randomized import random_composite, random_stimulus, random_trajectory  # noqa: E402
from worldautomata.axioms import check_trajectory_axioms  # noqa: E402
from worldautomata.casestudy.builders import (  # noqa: E402
    CaseStudyParams,
    build_falsefield,
    build_field,
    build_field_alt,
    build_target,
    build_target_alt,
    build_uav,
    field_target,
    harnessed,
    two_uavs,
)
from worldautomata.casestudy.experiments import (  # noqa: E402
    C1,
    E1,
    K1,
    default_battery,
    default_config,
    e_schedule,
    engage_config,
    engage_system,
    run_engage_scenario,
    run_equivalence_experiment,
    target_cell,
)
from worldautomata.composition import inplace  # noqa: E402
from worldautomata.decompose import check_coupling  # noqa: E402
from worldautomata.execution import align_paddings, pad, trace  # noqa: E402
from worldautomata.export import sample_rows  # noqa: E402
from worldautomata.expr import Cond, Name, Num  # noqa: E402
from worldautomata.grid import SpatialGrid  # noqa: E402
from worldautomata.model import LawForm, level_lift, validate  # noqa: E402
from worldautomata.refinement import implements_bounded  # noqa: E402
from worldautomata.schedule import Pulse, Ramp, SignalSpec, Stimulus  # noqa: E402
from worldautomata.sim import SimConfig, simulate  # noqa: E402
from worldautomata.types import Key  # noqa: E402
from worldautomata.wadl.elaborate import load  # noqa: E402
from worldautomata.wadl.parser import parse_document  # noqa: E402
from worldautomata.wadl.printer import print_document  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "worldautomata" / "casestudy" / "fixtures"
P = CaseStudyParams()
MIN_FAMILY = 20
GRID4 = SpatialGrid(nx=4, ny=4)


def criterion(n, title):
    return pytest.mark.criterion(n, title)


# -- shared runs ---------------------------------------------------------------------------


def grow_family(wa, cfg, stimuli):
    """Simulate under successive stimuli until the runs hold at least MIN_FAMILY trajectories."""
    results, members = [], 0
    for stim in stimuli:
        res = simulate(wa, cfg.with_(stimulus=stim))
        results.append(res)
        members += len(res.execution.trajectories)
        if members >= MIN_FAMILY:
            return results
    raise AssertionError(f"{wa.name}: stimuli ran out with only {members} trajectories")


def _random_family(seed):
    wa = random_composite(seed, GRID4)
    cfg = SimConfig(grid=GRID4, dt=0.1, horizon=1.5, target_size=3.0)
    stims = (random_stimulus(1000 * seed + j, wa, GRID4, 1.5) for j in range(500))
    return wa, grow_family(wa, cfg, stims)


def _e_stimuli(extra=()):
    cfg = default_config(P)
    star = target_cell(P, cfg.grid)
    stims = list(default_battery(P, cfg.grid))
    for i in range(40):
        cells = (star,) if i % 3 else ((i % 10, (3 * i) % 10),)
        stims.append(e_schedule(f"e {i}", Pulse(True, round(0.1 * i, 10), cells=cells)))
    for s in stims:
        for spec in extra:
            s = s.with_signal(spec)
        yield s


def _case_study_families():
    out = []
    ft = harnessed(field_target(P))
    out.append((ft, grow_family(ft, default_config(P), _e_stimuli())))

    bare = field_target(P)
    xi = SignalSpec(Key("ξ", 1), "green", (Pulse("χ1", 0.5, 2.0, cells=((1, 1), (8, 2))),))
    out.append((bare, grow_family(bare, default_config(P), _e_stimuli((xi,)))))

    for mode in ("single", "two"):
        wa = engage_system(P, mode)
        base = engage_config(P, mode)
        stims = [base.stimulus] + [s.with_signal(base.stimulus.signal(Key("cost_in", 1))) if mode == "single" else s for s in _e_stimuli()]
        out.append((wa, grow_family(wa, base, stims)))

    pair = two_uavs(P)
    cfg = default_config(P, 3.0)
    star = target_cell(P, cfg.grid)
    colors = (
        Stimulus(f"color {t}", (SignalSpec(Key("c", 0), "green", (Pulse("χ2", t, t + 1.5, cells=(star,)),)),))
        for t in np.arange(0.0, 3.0, 0.1).round(10)
    )
    out.append((pair, grow_family(pair, cfg, colors)))
    return out


@lru_cache(maxsize=None)
def families():
    fams = [_random_family(seed) for seed in range(50)]
    return fams + _case_study_families()


# -- 1 -----------------------------------------------------------------------------------


@criterion(1, "projection commutes with restrict, suffix and concatenation")
def test_projection_commutes():
    checked = 0
    for seed in range(1000):
        tau = random_trajectory(seed)
        rng = random.Random(seed)
        keys = rng.sample(sorted(tau.keys), rng.randint(0, len(tau.keys)))
        t = rng.randrange(tau.n) * tau.dt
        assert tau.restrict(t).project(keys) == tau.project(keys).restrict(t), seed
        assert tau.suffix(t).project(keys) == tau.project(keys).suffix(t), seed
        other = random_trajectory(seed + 10**6, dict(tau.schema), tau.world)
        assert tau.concat(other).project(keys) == tau.project(keys).concat(other.project(keys)), seed
        checked += 1
    assert checked >= 1000


# -- 2 and 3 ---------------------------------------------------------------------------


@criterion(2, "composites validate and satisfy T1/T2/T3 on families of 20+ trajectories")
def test_closure_of_composites():
    fams = families()
    assert len(fams) >= 55
    for wa, results in fams:
        assert validate(wa).ok, f"{wa.name}: {validate(wa)}"
        assert sum(len(r.execution.trajectories) for r in results) >= MIN_FAMILY
        report = check_trajectory_axioms(results, suffix_stride=3, max_concats=10)
        assert report.ok, f"{wa.name}: {report}"


@criterion(3, "coupling equations hold on every simulated composite execution")
def test_coupling_equations():
    kinds = set()
    for wa, results in families():
        kinds.add(wa.composite.binding.kind)
        for res in results:
            problems = check_coupling(wa, res.component_executions)
            assert not problems, f"{wa.name}: {problems[:3]}"
    assert {"parallel", "inplace"} <= kinds


# -- 4 -----------------------------------------------------------------------------------


@criterion(4, "Field[Target] and FalseField agree on c and k")
def test_equivalence_experiment():
    battery = default_battery(P)
    assert len(battery) >= 10
    report = run_equivalence_experiment(P, battery=battery)
    assert report.forward and report.backward, str(report)
    assert all(d.value == 0.0 for d in report.deviations), report.table()
    assert report.ramp and all(ok for _, ok in report.ramp), str(report)


@criterion(4, "Field[Target] and FalseField agree on c and k")
def test_both_internal_actions_fire_at_three():
    cfg = default_config(P)
    star = target_cell(P, cfg.grid)
    stim = e_schedule("t_e = 2", Pulse(True, 2.0, cells=(star,)))
    for wa in (harnessed(field_target(P)), build_falsefield(P)):
        res = simulate(wa, cfg.with_(stimulus=stim))
        assert [(e.time, e.action.name) for e in res.events] in ([(3.0, "delete")], [(3.0, "change")])
        _, post = sample_rows(res.execution)
        assert np.all(post[C1][30:, star[0], star[1]] == "green")
        assert post[C1][29, star[0], star[1]] == P.target_color


# -- 5 -----------------------------------------------------------------------------------


@criterion(5, "engage scenario narrative")
def test_engage_order():
    report = run_engage_scenario(P, mode="single")
    assert report.passed, str(report)
    names = [a for _, a in report.events()]
    order = [names.index(a) for a in ("confirm", "compete", "commit", "engage", "delete")]
    assert order == sorted(order)


@criterion(5, "engage scenario narrative")
def test_wrong_color_never_competes():
    report = run_engage_scenario(P, mode="wrong_color")
    assert report.passed, str(report)
    assert "compete" not in [a for _, a in report.events()]


@criterion(5, "engage scenario narrative")
def test_two_uavs_one_commits():
    report = run_engage_scenario(P, mode="two")
    assert report.passed, str(report)
    commits = {a for _, a in report.events() if a.startswith("commit")}
    assert len(commits) == 1


# -- 6 -----------------------------------------------------------------------------------


def _level1_battery():
    """e and ξ schedules for automata whose interface is Field's."""
    xi = SignalSpec(Key("ξ", 1), "green", (Pulse("χ1", 0.3, 1.8, cells=((0, 0), (2, 7))),))
    return [s.with_signal(xi) for s in default_battery(P)]


def _k_battery():
    """k ramps for a lone Target; the starts and the footprint differ per stimulus."""
    cfg = default_config(P)
    star = target_cell(P, cfg.grid)
    out = [Stimulus("k zero", (SignalSpec(Key("k", 0), 0.0),))]
    for t in (0.0, 0.5, 1.5, 2.5, 4.5):
        out.append(Stimulus(f"k ramp {t}", (SignalSpec(Key("k", 0), 0.0, (Pulse(Ramp(1.0), t, cells=(star,)),)),)))
    out.append(Stimulus("k elsewhere", (SignalSpec(Key("k", 0), 0.0, (Pulse(Ramp(2.0), 0.0, cells=((1, 1),)),)),)))
    out.append(Stimulus("k step", (SignalSpec(Key("k", 0), 0.0, (Pulse(5.0, 1.2),)),)))
    out.append(Stimulus("k below", (SignalSpec(Key("k", 0), 0.0, (Pulse(0.99, 0.0),)),)))
    out.append(Stimulus("k pulse", (SignalSpec(Key("k", 0), 0.0, (Pulse(Ramp(1.0), 1.0, 1.5, cells=(star,)),)),)))
    return out


def _leq(a1, a2, battery, cfg=None):
    cfg = cfg or default_config(P)
    verdict = implements_bounded(a1, a2, battery, cfg.horizon, cfg=cfg)
    assert verdict, f"{a1.name} <= {a2.name}: {verdict.summary()}"
    return verdict


@criterion(6, "substitutivity of bounded implementation")
def test_outer_substitution():
    battery = _level1_battery()
    cfg = default_config(P).with_(stimulus=battery[0])
    A1, A2, B = build_field(), build_field_alt(), build_target(P)
    _leq(A1, A2, battery, cfg)
    _leq(inplace(A1, B), inplace(A2, B), battery, cfg)


@criterion(6, "substitutivity of bounded implementation")
def test_outer_substitution_with_false_field():
    # Field[Target] with ξ held green implements FalseField; both then host the UAV
    A1, A2, B = harnessed(field_target(P)), build_falsefield(P), build_uav(P)
    _leq(A1, A2, default_battery(P))
    cfg = engage_config(P, "single")
    stims = [s.with_signal(cfg.stimulus.signal(Key("cost_in", 1))) for s in default_battery(P)]
    _leq(inplace(A1, B), inplace(A2, B), stims, cfg)


@criterion(6, "substitutivity of bounded implementation")
def test_inner_substitution():
    B1, B2 = build_target(P), build_target_alt(P)
    _leq(B1, B2, _k_battery())
    A = build_field()
    _leq(inplace(A, B1), inplace(A, B2), _level1_battery())


@criterion(6, "substitutivity of bounded implementation")
def test_level_up():
    B1, B2 = build_target(P), build_target_alt(P)
    battery = _k_battery()
    _leq(B1, B2, battery)
    _leq(level_lift(B1), level_lift(B2), [s.lifted() for s in battery])


@criterion(6, "substitutivity of bounded implementation")
def test_substitution_check_is_not_vacuous():
    fast = build_field_alt()
    laws = tuple(
        dataclasses.replace(law, expr=Cond(Name("e"), Num(2.0), Num(0.0))) if law.target == "K" else law for law in fast.laws
    )
    fast = dataclasses.replace(fast, name="FastField", laws=laws)
    assert fast.law_for(Key("K", 1)).form is LawForm.ODE
    cfg = default_config(P)
    verdict = implements_bounded(build_field(), fast, _level1_battery(), cfg.horizon, cfg=cfg)
    assert not verdict
    verdict = implements_bounded(inplace(build_field(), build_target(P)), inplace(fast, build_target(P)), _level1_battery(), cfg.horizon, cfg=cfg)
    assert not verdict


# -- 7 -----------------------------------------------------------------------------------


def _padding_runs():
    runs = []
    for wa, results in families()[:10] + families()[-5:]:
        runs.extend((wa, r) for r in results[:3])
    return runs


@criterion(7, "paddings preserve traces and align")
def test_random_paddings_keep_the_trace():
    rng = random.Random(7)
    runs = _padding_runs()
    for i in range(150):
        wa, res = runs[i % len(runs)]
        alpha = res.execution
        spots = [rng.randint(0, alpha.steps) * alpha.dt for _ in range(rng.randint(1, 6))]
        padded = pad(alpha, spots)
        assert len(padded.trajectories) == len(alpha.trajectories) + len(spots)
        assert padded.padding_ok()
        t0, t1 = trace(alpha, wa), trace(padded, wa)
        assert t0.actions == t1.actions
        assert len(t0.trajectories) == len(t1.trajectories)
        assert all(a == b for a, b in zip(t0.trajectories, t1.trajectories)), wa.name


@criterion(7, "paddings preserve traces and align")
def test_align_paddings_equal_lengths():
    rng = random.Random(11)
    checked = 0
    for wa, results in families():
        execs = [r.execution for r in results]
        for _ in range(2):
            group = rng.sample(execs, min(len(execs), rng.randint(2, 4)))
            group = [pad(e, [rng.randint(0, e.steps) * e.dt]) if rng.random() < 0.5 else e for e in group]
            aligned = align_paddings(group)
            lengths = [[t.n for t in e.trajectories] for e in aligned]
            assert all(ls == lengths[0] for ls in lengths), wa.name
            for before, after in zip(group, aligned):
                assert after.padding_ok()
                assert trace(after, wa).matches(trace(before, wa), 0.0)
            checked += 1
    assert checked >= 100


# -- 8 -----------------------------------------------------------------------------------

FIGURES = ("target.wadl", "field.wadl", "falsefield.wadl", "uav.wadl", "field_target.wadl")
SCENARIOS = ("field_target.wadl", "engage.wadl", "two_uavs.wadl")


@criterion(8, "DSL sources parse, elaborate, round-trip and match the builders")
@pytest.mark.parametrize("name", FIGURES + ("engage.wadl", "two_uavs.wadl"))
def test_sources_round_trip(name):
    text = (FIXTURES / name).read_text(encoding="utf-8")
    doc, diags = parse_document(text, name)
    assert doc is not None and not diags, [str(d) for d in diags]
    again, diags = parse_document(print_document(doc), name)
    assert not diags and again == doc
    assert print_document(again) == print_document(doc)
    elab = load(FIXTURES / name)
    assert elab.system is not None and validate(elab.system).ok


def _programmatic(name):
    return {
        "field_target.wadl": harnessed(field_target(P)),
        "engage.wadl": inplace(harnessed(field_target(P)), build_uav(P)),
        "two_uavs.wadl": inplace(harnessed(field_target(P)), two_uavs(P)),
    }[name]


@criterion(8, "DSL sources parse, elaborate, round-trip and match the builders")
@pytest.mark.parametrize("name", SCENARIOS)
def test_dsl_traces_match_builders(name):
    elab = load(FIXTURES / name)
    built = _programmatic(name)
    stims = [elab.config.stimulus] + [s.with_signal(elab.config.stimulus.signal(Key("cost_in", 1))) if elab.config.stimulus.signal(Key("cost_in", 1)) else s for s in default_battery(P)[:6]]
    for stim in stims:
        cfg = elab.config.with_(stimulus=stim)
        ra, rb = simulate(elab.system, cfg), simulate(built, cfg)
        ta, tb = trace(ra.execution, elab.system), trace(rb.execution, built)
        assert ta.first_divergence(tb, 1e-9) is None, (name, stim.name, ta.first_divergence(tb, 1e-9))
        assert [(e.time, e.action) for e in ra.events] == [(e.time, e.action) for e in rb.events]
        _, pa = sample_rows(ra.execution)
        _, pb = sample_rows(rb.execution)
        for key in (C1, K1):
            if pa[key].dtype == object:
                assert np.array_equal(pa[key], pb[key])
            else:
                assert np.max(np.abs(pa[key] - pb[key])) <= 1e-9


# -- 9 -----------------------------------------------------------------------------------


def ramp_error(dt, t_e=2.0, horizon=4.0):
    """Max |K(t, p*) - max(0, t - t_e)| on the lattice, e switched on strictly after t_e."""
    cfg = default_config(P, horizon).with_(dt=dt)
    star = target_cell(P, cfg.grid)
    stim = Stimulus("ramp", (SignalSpec(E1, False, (Pulse(True, t_e, cells=(star,), strict=True),)), SignalSpec(Key("ξ", 1), "green")))
    res = simulate(build_field(), cfg.with_(stimulus=stim))
    _, post = sample_rows(res.execution)
    k = post[K1][:, star[0], star[1]]
    t = np.arange(len(k)) * dt
    return float(np.max(np.abs(k - np.maximum(0.0, t - t_e))))


@criterion(9, "K-ramp error halves with dt")
def test_ramp_convergence():
    errors = [ramp_error(dt) for dt in (0.1, 0.05, 0.025)]
    assert all(e > 0 for e in errors), errors
    for coarse, fine in zip(errors, errors[1:]):
        assert 1.6 <= coarse / fine <= 2.4, errors


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

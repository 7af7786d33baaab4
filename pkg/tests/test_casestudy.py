import dataclasses
from pathlib import Path

import pytest

from worldautomata.casestudy.builders import CaseStudyParams, build_target, harnessed, field_target
from worldautomata.casestudy.experiments import (
    ENGAGE_ORDER,
    default_battery,
    run_engage_scenario,
    run_equivalence_experiment,
)
from worldautomata.schedule import dump_battery, load_battery, stimulus_from_json, stimulus_to_json

P = CaseStudyParams()
FIXTURES = Path(__file__).resolve().parents[1] / "src" / "worldautomata" / "casestudy" / "fixtures"


def test_params_checked():
    assert P.problems() == []
    bad = dataclasses.replace(P, p_s=0.95)
    assert bad.problems() == ["need 0 <= p_s <= p_e <= 1"]
    with pytest.raises(ValueError):
        build_target(dataclasses.replace(P, target_color="purple"))


def test_battery_has_enough_schedules():
    battery = default_battery(P)
    assert len(battery) >= 10
    assert len({s.name for s in battery}) == len(battery)


def test_battery_json_round_trip(tmp_path):
    battery = default_battery(P)
    for s in battery:
        assert stimulus_from_json(stimulus_to_json(s)) == s
    path = tmp_path / "b.json"
    dump_battery(battery, path)
    assert load_battery(path) == battery
    assert load_battery(FIXTURES / "battery.json") == battery


def test_equivalence_report():
    report = run_equivalence_experiment(P)
    assert report.passed
    text = str(report)
    assert "Field[Target] <= FalseField: pass" in text
    assert "FalseField <= Field[Target]: pass" in text
    assert "c@1" in report.table() and "k@1" in report.table()


def test_wrong_false_field_color_diverges_at_start():
    report = run_equivalence_experiment(P, chi="χ3")
    assert not report.passed
    assert report.forward.counterexample.time == 0.0
    assert report.ramp == []


def test_engage_narrative_events():
    report = run_engage_scenario(P)
    assert report.passed, str(report)
    firsts = {}
    for t, a in report.events():
        firsts.setdefault(a, t)
    times = [firsts[a] for a in ENGAGE_ORDER]
    assert times == sorted(times)
    assert firsts["commit"] == pytest.approx(firsts["compete"] + 0.1)


def test_engage_modes():
    assert run_engage_scenario(P, mode="wrong_color").passed
    two = run_engage_scenario(P, mode="two")
    assert two.passed, str(two)
    assert "commit_2" not in [a for _, a in two.events()]


def test_harness_is_idempotent():
    once = harnessed(field_target(P))
    assert harnessed(once) is once

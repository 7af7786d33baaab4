import csv
import json

import numpy as np
import pytest

from worldautomata.casestudy.builders import CaseStudyParams, field_target, harnessed
from worldautomata.casestudy.experiments import default_config, e_schedule, engage_config, engage_system, target_cell
from worldautomata.export import FORMAT_VERSION, read_csv, read_json, same_values, sample_rows, to_csv, to_json, trace_document, write_trace
from worldautomata.schedule import Pulse
from worldautomata.sim import simulate
from worldautomata.types import Key

P = CaseStudyParams()


@pytest.fixture(scope="module")
def ft_run():
    cfg = default_config(P)
    stim = e_schedule("e", Pulse(True, 2.0, cells=(target_cell(P, cfg.grid),)))
    return simulate(harnessed(field_target(P)), cfg.with_(stimulus=stim))


@pytest.fixture(scope="module")
def engage_run():
    return simulate(engage_system(P), engage_config(P, "single"))


def test_sample_rows_take_post_action_values(ft_run):
    keys, post = sample_rows(ft_run.execution)
    flat = ft_run.execution.flatten()
    c = Key("c", 1)
    assert post[c][30, 5, 5] == "green"
    assert flat.data[c][30, 5, 5] == P.target_color
    assert keys == sorted(keys, key=lambda k: (k.level, k.name))


def test_json_document(ft_run):
    doc = json.loads(to_json(ft_run))
    assert doc["format"] == FORMAT_VERSION
    assert doc["dt"] == 0.1 and len(doc["rows"]) == 51
    assert doc["events"] == [{"t": 3.0, "action": "delete", "level": 1}]
    names = {(v["name"], v["level"]) for v in doc["variables"]}
    assert ("Fail", 1) in names and ("c", 1) in names
    c = doc["rows"][0]["values"]["c@1"]
    assert len(c) == 10 and len(c[0]) == 10
    assert doc == trace_document(ft_run)


def test_csv_columns(ft_run):
    text = to_csv(ft_run)
    header = next(line for line in text.splitlines() if not line.startswith("#"))
    cols = next(csv.reader([header]))
    assert cols[0] == "t"
    assert "c@1[0,0]" in cols and "c@1[9,9]" in cols
    assert "p_T@1.x" in cols and "p_T@1.y" in cols
    assert len(text.splitlines()) - sum(1 for line in text.splitlines() if line.startswith("#")) == 52


@pytest.mark.parametrize("which", ["ft_run", "engage_run"])
def test_json_and_csv_carry_the_same_values(which, request, tmp_path):
    res = request.getfixturevalue(which)
    js = write_trace(res, tmp_path / "a.json", "json")
    cs = write_trace(res, tmp_path / "a.csv", "csv")
    meta_j, rows_j = read_json(js)
    meta_c, rows_c = read_csv(cs)
    assert meta_j == meta_c
    assert same_values(rows_j, rows_c)


def test_floats_round_trip_exactly(engage_run, tmp_path):
    _, rows = read_csv(write_trace(engage_run, tmp_path / "e.csv", "csv"))
    _, post = sample_rows(engage_run.execution)
    p = post[Key("p_U", 1)]
    assert np.array_equal(np.array([r["p_U@1"] for r in rows]), p)


def test_same_values_detects_change():
    a = [{"t": [0.0], "x@0": [1.0, float("nan")]}]
    b = [{"t": [0.0], "x@0": [1.0, float("nan")]}]
    assert same_values(a, b)
    b[0]["x@0"][0] = 2.0
    assert not same_values(a, b)


def test_unknown_format(ft_run, tmp_path):
    with pytest.raises(ValueError):
        write_trace(ft_run, tmp_path / "x", "xml")

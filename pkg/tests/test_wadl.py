from pathlib import Path

import pytest

from worldautomata.casestudy.builders import (
    CaseStudyParams,
    build_falsefield,
    build_field,
    build_field_alt,
    build_target,
    build_uav,
    field_target,
    harnessed,
    two_uavs,
)
from worldautomata.composition import inplace
from worldautomata.wadl.elaborate import check_document, load
from worldautomata.wadl.lexer import tokenize
from worldautomata.wadl.parser import WadlError, parse, parse_document
from worldautomata.wadl.printer import pretty, print_automaton, print_document, print_interface

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "worldautomata" / "casestudy" / "fixtures"
P = CaseStudyParams()
FIELD = (FIXTURES / "field.wadl").read_text(encoding="utf-8")


def errors(text):
    _, diags = check_document(text, "x.wadl")
    return [str(d) for d in diags]


def test_field_parses():
    doc = parse(FIELD)
    (field,) = doc.automata
    assert field.name == "Field"
    assert len(field.laws) == 4
    assert not field.actions and not field.rules
    assert doc.scenario is not None


def test_field_elaborates_to_builder():
    elab = load(FIXTURES / "field.wadl")
    assert elab.automata["Field"] == build_field()
    assert elab.config.dt == 0.1 and elab.config.horizon == 5.0
    assert elab.config.grid.shape == (10, 10)


@pytest.mark.parametrize(
    "name, built",
    [
        ("target.wadl", lambda: build_target(P)),
        ("falsefield.wadl", lambda: build_falsefield(P)),
        ("uav.wadl", lambda: build_uav(P)),
        ("field_target.wadl", lambda: harnessed(field_target(P))),
        ("engage.wadl", lambda: inplace(harnessed(field_target(P)), build_uav(P))),
        ("two_uavs.wadl", lambda: inplace(harnessed(field_target(P)), two_uavs(P))),
    ],
)
def test_scenario_systems_equal_builders(name, built):
    elab = load(FIXTURES / name)
    a, b = elab.system, built()
    assert a.variables == b.variables
    assert a.actions == b.actions
    assert [p.name for p in _leaves(a)] == [p.name for p in _leaves(b)]
    for x, y in zip(_leaves(a), _leaves(b)):
        assert (x.variables, x.transitions, x.laws, dict(x.params)) == (y.variables, y.transitions, y.laws, dict(y.params))


def _leaves(wa):
    from worldautomata.composition import leaves

    return leaves(wa)


@pytest.mark.parametrize("build", [build_field, build_field_alt, lambda: build_target(P), lambda: build_falsefield(P), lambda: build_uav(P)])
def test_print_then_parse_gives_back_the_automaton(build):
    wa = build()
    elab, diags = check_document(print_automaton(wa))
    assert not diags
    assert elab.automata[wa.name] == wa


def test_pretty_printing_is_a_fixed_point():
    doc = parse((FIXTURES / "two_uavs.wadl").read_text(encoding="utf-8"))
    once = print_document(doc)
    assert print_document(parse(once)) == once
    assert pretty(doc) == once


def test_unclosed_paren_reported_at_opener():
    text = FIELD.replace("k(t, p) = K(t, p).", "k(t, p) = (K(t, p)")
    (msg,) = errors(text)
    assert msg == "x.wadl:14:15: error: unclosed '('"


def test_missing_paren_inside_law():
    (msg,) = errors(FIELD.replace("K̇(t, p) = e(t, p) ? 1 : 0;", "K̇(t, p) = (e(t, p) ? 1 : 0;"))
    assert msg == "x.wadl:12:32: error: expected ')', found ';'"


def test_unknown_literal():
    assert errors(FIELD.replace("default green", "default χ9")) == ["x.wadl:22:21: error: unresolved symbol χ9"]


def test_undeclared_reference_in_law():
    (msg,) = errors(FIELD.replace("c(t, p) = C(t, p);", "c(t, p) = D(t, p);"))
    assert "undeclared symbol (D)" in msg and msg.startswith("x.wadl:")


def test_bad_character():
    assert errors(FIELD.replace("dt 0.1", "dt 0.1 $")) == ["x.wadl:19:10: error: unexpected character '$'"]


def test_unknown_system():
    assert errors(FIELD.replace("system Field", "system Nope")) == ["x.wadl:21:10: error: unknown worldautomaton Nope"]


def test_unrenamed_uavs_report_clause_six_at_the_operator():
    text = (FIXTURES / "two_uavs.wadl").read_text(encoding="utf-8").replace(" as 1", "").replace(" as 2", "")
    (msg,) = errors(text)
    assert msg.startswith("x.wadl:89:56: error: UAV and UAV are not compatible")
    assert "clause 6: P_t@0" in msg


def test_level_zero_world_internal_is_a_diagnostic():
    (msg,) = [m for m in errors((FIXTURES / "bad.wadl").read_text(encoding="utf-8"))]
    assert "X_w[0]" in msg and "w@0" in msg


def test_load_raises_on_errors(tmp_path):
    p = tmp_path / "bad.wadl"
    p.write_text(FIELD.replace("system Field", "system Nope"), encoding="utf-8")
    with pytest.raises(WadlError):
        load(p)


def test_parse_document_collects_instead_of_raising():
    doc, diags = parse_document("worldautomaton", "y.wadl")
    assert doc is None and diags and diags[0].file == "y.wadl"


def test_unicode_and_ascii_operators_agree():
    uni = FIELD.replace("K̇(t, p) = e(t, p) ? 1 : 0;", "K̇(t, p) = ¬e(t, p) ∧ true ? 0 : 1;")
    asc = FIELD.replace("K̇(t, p) = e(t, p) ? 1 : 0;", "K'(t, p) = not e(t, p) and true ? 0 : 1;")
    a, _ = check_document(uni)
    b, _ = check_document(asc)
    assert a.automata["Field"] == b.automata["Field"]


def test_lexer_keeps_greek_and_subscripts():
    kinds = [(t.kind, t.text) for t in tokenize("χ2 P_φ ψ'")][:4]
    assert kinds[0][1] == "χ2" and kinds[1][1] == "P_φ" and kinds[2][1] == "ψ"


def test_interface_listing_of_composite():
    text = print_interface(load(FIXTURES / "engage.wadl").system)
    assert "input e: Bool" in text
    assert "delete@1    # Target" in text
    assert "# closed inputs: ξ@1 = green" in text

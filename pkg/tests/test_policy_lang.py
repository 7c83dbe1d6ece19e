"""Parser and renderer tests, including the sample-document transcription."""

from __future__ import annotations

import random

import pytest

from homegate.policy_lang import (
    ClauseAst,
    ConditionAst,
    ConditionForm,
    PolicyLangError,
    PolicySource,
    parse_condition,
    parse_policy_set,
    render_clause,
    render_policy_set,
)

SAMPLE_DOC = """\
@U1
restrict :: ~ : thermostat_1 : temperature notin [60-70] ;
restrict :: U3 : coffeemaker : ~ ;
location :: U3 : bulb_3 : location in [Home] ;
demand :: U4 : bulb_4 : ~ ;
restrict :: U4 : lock_1 : time notin [6:00am-9:00pm] ;
@U2
restrict :: ~ : thermostat_1 : temperature notin [75-80] ;
demand :: U3 : bulb_3 : time in [7:00pm-7:00am] ;
demand :: U4 : lock_1, lock_4 : ~ ;
"""


def test_restrict_all_users_thermostat_clause():
    clauses, diags = parse_policy_set(
        "@U1\nrestrict :: ~ : thermostat_1 : temperature notin [60-70] ;")
    assert diags == []
    assert clauses == [ClauseAst(
        owner="U1", action="restrict", targets=(), devices=("thermostat_1",),
        conditions=(ConditionAst("temperature", ConditionForm.NUMERIC, False, 60, 70),),
    )]


def test_empty_document():
    assert parse_policy_set("") == ([], [])


def test_midnight_wrapping_time_window():
    clauses, diags = parse_policy_set(
        "@U2\ndemand :: U3 : bulb_3 : time in [7:00pm-7:00am] ;")
    assert diags == []
    (c,) = clauses
    assert c.owner == "U2"
    assert c.targets == ("U3",)
    (cond,) = c.conditions
    assert cond.form is ConditionForm.TIME
    assert (cond.low, cond.high) == (19 * 60, 7 * 60)   # 7:00pm .. 7:00am


def test_sample_document_parses_clean():
    clauses, diags = parse_policy_set(PolicySource(SAMPLE_DOC, origin="sample"))
    assert diags == []
    assert len(clauses) == 8
    assert [c.owner for c in clauses] == ["U1"] * 5 + ["U2"] * 3
    assert clauses[2].action == "location"
    assert clauses[7].devices == ("lock_1", "lock_4")


def test_comments_are_ignored():
    clauses, diags = parse_policy_set(
        "# household policy\n@U1  # the owner\ndemand :: ~ : bulb_1 : ~ ; # lights\n")
    assert diags == []
    assert len(clauses) == 1


# -- rendering ---------------------------------------------------------------


def test_render_round_trip_matches_surface_form():
    text = "@U1\nrestrict :: ~ : thermostat_1 : temperature notin [60-70] ;"
    (c,), _ = parse_policy_set(text)
    assert render_clause(c) == "restrict :: ~ : thermostat_1 : temperature notin [60-70] ;"


def test_render_empty_conditions_as_tilde():
    (c,), _ = parse_policy_set("@U1\ndemand :: U4 : bulb_4 : ~ ;")
    assert render_clause(c).endswith(": ~ ;")


def test_render_joins_devices_with_comma():
    (c,), _ = parse_policy_set("@U2\ndemand :: U4 : lock_1, lock_4 : ~ ;")
    assert "lock_1, lock_4" in render_clause(c)
    reparsed, diags = parse_policy_set("@U2\n" + render_clause(c))
    assert diags == [] and reparsed == [c]


def test_round_trip_whole_sample():
    clauses, _ = parse_policy_set(SAMPLE_DOC)
    rendered = render_policy_set(clauses)
    reparsed, diags = parse_policy_set(rendered)
    assert diags == []
    assert reparsed == clauses


# -- parse_condition ----------------------------------------------------------


def test_condition_numeric_exclusion():
    cond = parse_condition("temperature notin [60-70]")
    assert cond == ConditionAst("temperature", ConditionForm.NUMERIC, False, 60, 70)


def test_condition_membership():
    cond = parse_condition("location in [Home]")
    assert cond == ConditionAst("location", ConditionForm.TOKEN, True, token="Home")


def test_condition_inverted_interval_rejected():
    with pytest.raises(PolicyLangError):
        parse_condition("temperature in [70-60]")


def test_condition_time_wrap_allowed_but_zero_length_rejected():
    cond = parse_condition("time in [9:00pm-6:00am]")
    assert (cond.low, cond.high) == (21 * 60, 6 * 60)
    with pytest.raises(PolicyLangError):
        parse_condition("time in [9:00pm-9:00pm]")


def test_condition_trailing_garbage_rejected():
    with pytest.raises(PolicyLangError):
        parse_condition("temperature in [60-70] extra")


# -- diagnostics --------------------------------------------------------------


def test_clause_before_header_is_diagnosed():
    clauses, diags = parse_policy_set("demand :: ~ : bulb_1 : ~ ;")
    assert clauses == []
    assert len(diags) == 1
    assert "header" in diags[0].message


def test_unknown_action_keyword():
    clauses, diags = parse_policy_set("@U1\nallow :: ~ : bulb_1 : ~ ;")
    assert clauses == []
    assert "unknown action" in diags[0].message
    assert diags[0].line == 2 and diags[0].column == 1


def test_unterminated_clause():
    clauses, diags = parse_policy_set("@U1\ndemand :: ~ : bulb_1 : ~")
    assert clauses == []
    assert any("';'" in d.message for d in diags)


def test_rejected_clause_does_not_stop_parsing():
    doc = ("@U1\n"
           "demand :: ~ : bulb_1 : temperature in [70-60] ;\n"
           "demand :: ~ : bulb_2 : ~ ;\n")
    clauses, diags = parse_policy_set(doc)
    assert len(clauses) == 1
    assert clauses[0].devices == ("bulb_2",)
    assert len(diags) == 1 and "inverted" in diags[0].message


def test_diagnostics_empty_iff_nothing_rejected():
    good, diags = parse_policy_set(SAMPLE_DOC)
    assert diags == []
    _, bad_diags = parse_policy_set("@U1\ndemand :: ~ : bulb_1 : temperature in [60-] ;")
    assert bad_diags


# -- properties ----------------------------------------------------------------


def test_document_order_preserved():
    clauses, _ = parse_policy_set(SAMPLE_DOC)
    devices = [c.devices[0] for c in clauses]
    assert devices == ["thermostat_1", "coffeemaker", "bulb_3", "bulb_4", "lock_1",
                       "thermostat_1", "bulb_3", "lock_1"]


def test_parsing_is_pure():
    assert parse_policy_set(SAMPLE_DOC) == parse_policy_set(SAMPLE_DOC)


def random_clause_ast(rng: random.Random) -> ClauseAst:
    action = rng.choice(["demand", "restrict", "location"])
    targets = tuple(rng.sample(["U1", "U2", "U3", "U4"], k=rng.randrange(0, 3)))
    devices = tuple(rng.sample(["bulb_1", "lock_1", "thermostat_1", "camera_1"],
                               k=rng.randrange(1, 3)))
    conds = []
    picks = rng.sample(["numeric", "time", "token"], k=rng.randrange(0, 3))
    for kind in picks:
        if kind == "numeric":
            lo = rng.randrange(0, 80)
            conds.append(ConditionAst("temperature", ConditionForm.NUMERIC,
                                      rng.random() < 0.5, lo, lo + rng.randrange(0, 20)))
        elif kind == "time":
            start = rng.randrange(0, 1440)
            end = (start + rng.randrange(1, 1439)) % 1440
            conds.append(ConditionAst("time", ConditionForm.TIME,
                                      rng.random() < 0.5, start, end))
        else:
            conds.append(ConditionAst("location", ConditionForm.TOKEN, True,
                                      token=rng.choice(["Home", "Away"])))
    return ClauseAst("U1", action, targets, devices, tuple(conds))


def test_generated_round_trip_corpus():
    rng = random.Random(20260809)
    for _ in range(100):
        ast = random_clause_ast(rng)
        text = f"@{ast.owner}\n{render_clause(ast)}"
        reparsed, diags = parse_policy_set(text)
        assert diags == []
        assert reparsed == [ast]

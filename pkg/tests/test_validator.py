import pytest

from homeplan.dsl import ActionCall, Plan, parse_plan
from homeplan.validator import Code, validate


def codes(text):
    return validate(parse_plan(text)).codes()


def test_pickup_without_focus():
    assert codes("Pickup()") == [(0, Code.PICKUP_WITHOUT_FOCUS)]


def test_cereal_sequence_is_clean():
    assert codes("Move_To('kitchen'); Search_Object('cereal',''); Pickup(); Place_On('table')") == []


def test_answer_without_source():
    assert codes("Answer()") == [(0, Code.ANSWER_WITHOUT_SOURCE)]


def test_double_hold():
    assert codes("Search_Object('apple',''); Pickup(); Pickup()") == [(2, Code.DOUBLE_HOLD)]


def test_empty_plan_is_valid():
    assert validate(Plan()).ok


@pytest.mark.parametrize(
    "text, expected",
    [
        ("Fly_To('moon')", [(0, Code.UNKNOWN_ACTION)]),
        ("Pickup('x')", [(0, Code.ARITY_MISMATCH), (0, Code.PICKUP_WITHOUT_FOCUS)]),
        ("Move_To()", [(0, Code.ARITY_MISMATCH)]),
        ("Place_On('table')", [(0, Code.PLACE_WITHOUT_HELD)]),
        ("Place_Next('cup')", [(0, Code.PLACE_WITHOUT_HELD)]),
        ("Pour_In('bowl')", [(0, Code.POUR_WITHOUT_HELD)]),
        ("Give_To()", [(0, Code.GIVE_WITHOUT_HELD), (0, Code.GIVE_WITHOUT_FOCUS)]),
        ("Follow()", [(0, Code.FOLLOW_WITHOUT_FOCUS)]),
        ("Ask_Name()", [(0, Code.ASK_NAME_WITHOUT_FOCUS)]),
        ("Search_Object('cup',''); Move_To('kitchen'); Pickup()", [(2, Code.PICKUP_WITHOUT_FOCUS)]),
        ("Search_Object('cup',''); Pickup(); Move_To('kitchen'); Give_To()", [(3, Code.GIVE_WITHOUT_FOCUS)]),
        ("Search_Object('cup',''); Pickup(); Place_On('t'); Place_On('t')", [(3, Code.PLACE_WITHOUT_HELD)]),
        ("What_Time(); New_Request(); Answer()", [(2, Code.ANSWER_WITHOUT_SOURCE)]),
        ("Search_Person('','x'); New_Request(); Follow()", [(2, Code.FOLLOW_WITHOUT_FOCUS)]),
        ("Search_Person('','x'); Follow(); Follow(); Ask_Name(); Answer(); Answer()", []),
        ("Vision_Ask('what color'); Answer()", []),
        ("Count_Object('cup', ''); Answer()", []),
        ("What_Tomorrow(); Answer()", []),
        ("fly(); Answer(); pickup()", [(0, Code.UNKNOWN_ACTION), (1, Code.ANSWER_WITHOUT_SOURCE), (2, Code.PICKUP_WITHOUT_FOCUS)]),
    ],
)
def test_rules(text, expected):
    assert codes(text) == expected


def test_report_is_in_step_order():
    report = validate(parse_plan("Answer(); Pickup(); Follow(); Give_To()"))
    steps = [e.step for e in report.errors]
    assert steps == sorted(steps)


def test_case_insensitive_names():
    assert codes("search_object('cup',''); PICKUP()") == []


def test_render_mentions_code():
    text = validate(Plan((ActionCall("Answer"),))).render()
    assert "AnswerWithoutSource" in text and "step 0" in text


def test_every_fixture_gold_plan_validates(fixture_records, shot_records):
    for record in list(fixture_records) + list(shot_records):
        report = validate(parse_plan(record.gold_plan))
        assert report.ok, (record.id, report.render())

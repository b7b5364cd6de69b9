import json

import pytest

from homeplan.schema import ArgKind, Register, schema_registry

from table_oracle import rows

ROWS = rows()


def test_exactly_21_unique_actions(registry):
    assert len(registry) == 21
    assert len({n.lower() for n in registry}) == 21


def test_names_and_order_match_table(registry):
    assert list(registry) == [r["name"] for r in ROWS]


@pytest.mark.parametrize("row", ROWS, ids=[r["name"] for r in ROWS])
def test_row_fidelity(registry, row):
    schema = registry[row["name"]]
    assert schema.arity == len(row["params"])
    assert schema.signature == row["signature"]
    assert schema.description == row["description"]
    for param, kind in zip(row["params"], schema.arg_kinds):
        if param.endswith("°"):
            assert kind is ArgKind.OBJECT_NAME
        elif param.endswith("*"):
            assert kind in (ArgKind.VLM_QUERY, ArgKind.PERSON_DESC)
        else:
            assert kind in (ArgKind.LITERAL, ArgKind.LOCATION_NAME)


@pytest.mark.parametrize("name", ["pickup", "PICKUP", "Pickup", "pIcKuP"])
def test_case_insensitive_lookup(registry, name):
    assert registry[name].canonical_name == "Pickup"
    assert name in registry


def test_pickup_effects(registry):
    s = registry["Pickup"]
    assert (s.arity, s.reads, s.writes) == (0, {Register.FOCUS}, {Register.HELD})


def test_search_person_kinds(registry):
    s = registry["Search_Person"]
    assert s.arity == 2
    assert s.arg_kinds == (ArgKind.OBJECT_NAME, ArgKind.PERSON_DESC)


def test_what_time_writes_answer(registry):
    s = registry["What_Time"]
    assert s.arity == 0 and s.writes == {Register.ANSWER} and not s.reads


@pytest.mark.parametrize(
    "name, reads, writes, clears",
    [
        ("Search_Object", set(), {"Focus"}, set()),
        ("Search_Person", set(), {"Focus"}, set()),
        ("Place_On", {"Held"}, set(), {"Held"}),
        ("Place_Next", {"Held"}, set(), {"Held"}),
        ("Pour_In", {"Held"}, set(), {"Held"}),
        ("Give_To", {"Held", "Focus"}, set(), {"Held"}),
        ("Vision_Ask", set(), {"Answer"}, set()),
        ("Count_Person", set(), {"Answer"}, set()),
        ("Count_Object", set(), {"Answer"}, set()),
        ("What_Day", set(), {"Answer"}, set()),
        ("What_Tomorrow", set(), {"Answer"}, set()),
        ("Answer", {"Answer"}, set(), set()),
        ("Follow", {"Focus"}, set(), set()),
        ("Move_To", set(), set(), {"Focus"}),
        ("Respond", set(), set(), set()),
        ("Open", set(), set(), set()),
        ("Close", set(), set(), set()),
    ],
)
def test_register_effects(registry, name, reads, writes, clears):
    s = registry[name]
    assert {r.value for r in s.reads} == reads
    assert {r.value for r in s.writes} == writes
    assert {r.value for r in s.clears} == clears


def test_unknown_lookup(registry):
    assert registry.get("Fly_To") is None
    assert registry.canonical("Fly_To") == "Fly_To"
    with pytest.raises(KeyError):
        registry["Fly_To"]


def test_registry_is_cached_and_immutable(registry):
    assert schema_registry() is registry
    with pytest.raises(Exception):
        registry.schemas[0].canonical_name = "x"


def test_json_export(registry):
    doc = json.loads(registry.dumps())
    assert [a["name"] for a in doc["actions"]] == list(registry)
    by_name = {a["name"]: a for a in doc["actions"]}
    assert by_name["Give_To"]["reads"] == ["Focus", "Held"]
    assert by_name["Count_Object"]["arg_kinds"] == ["ObjectName", "VlmQuery"]

import datetime as dt
import json

import pytest

from homeplan.world import (
    HeldByPerson,
    HeldByRobot,
    Inside,
    OnSurface,
    WorldFileError,
    check_invariants,
    load_scenario,
    load_world,
    object_room,
    resting_surface,
    scenario_from_dict,
    scenario_to_dict,
)


def write(tmp_path, doc, name="world.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_minimal_world(tmp_path):
    world = load_world(write(tmp_path, {"rooms": ["kitchen"]}))
    assert world.rooms == ("kitchen",)
    assert world.objects == {}


def test_minimal_world_robot_defaults(tmp_path):
    _, robot = load_scenario(write(tmp_path, {"rooms": ["kitchen", "hall"]}))
    assert robot.room == "kitchen" and robot.held is None and robot.request_queue == ()


def test_object_on_unknown_surface_names_it():
    doc = {"rooms": ["kitchen"], "objects": {"cup_1": {"name": "cup", "place": {"surface": "ghost_table"}}}}
    with pytest.raises(WorldFileError, match="ghost_table") as info:
        scenario_from_dict(doc)
    assert "cup_1" in str(info.value)


@pytest.mark.parametrize(
    "doc, fragment",
    [
        ({"rooms": ["k"], "garage": 1}, "garage"),
        ({}, "rooms"),
        ({"rooms": ["k"], "doors": {"d": {"room": "k", "state": "ajar"}}}, "doors.d.state"),
        ({"rooms": ["k"], "surfaces": {"t": "nowhere"}}, "nowhere"),
        ({"rooms": ["k"], "persons": {"p": {"name": "P", "room": "attic"}}}, "attic"),
        ({"rooms": ["k"], "persons": {"p": {"name": "P", "room": "k", "path": ["k", "roof"]}}}, "roof"),
        ({"rooms": ["k"], "objects": {"a": {"name": "a", "place": {"held_by": "nobody"}}}}, "nobody"),
        ({"rooms": ["k"], "objects": {"a": {"name": "a", "place": {"inside": "b"}}}}, "'b'"),
        (
            {"rooms": ["k"], "objects": {"a": {"name": "a", "place": {"inside": "b"}}, "b": {"name": "b", "place": {"inside": "a"}}}},
            "cycle",
        ),
        (
            {"rooms": ["k"], "objects": {"a": {"name": "a", "place": {"held_by": "robot"}}, "b": {"name": "b", "place": {"held_by": "robot"}}}},
            "more than one",
        ),
        ({"rooms": ["k"], "clock": "yesterday"}, "clock"),
        ({"rooms": ["k"], "robot": {"room": "moon"}}, "moon"),
        ({"rooms": ["k"], "objects": {"a": {"name": "a", "place": {"surface": "t", "inside": "b"}}}}, "objects.a.place"),
    ],
)
def test_load_errors(doc, fragment):
    with pytest.raises(WorldFileError, match=fragment.replace(".", r"\.")):
        scenario_from_dict(doc)


def test_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(WorldFileError, match="nope.json"):
        load_scenario(missing)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{rooms: [")
    with pytest.raises(WorldFileError, match="invalid JSON"):
        load_scenario(path)


def test_bundled_house(house):
    world, robot = house
    assert set(world.rooms) >= {"kitchen", "living_room"}
    assert world.objects["cereal_1"].place == OnSurface("kitchen_counter")
    assert world.surfaces["kitchen_counter"].room == "kitchen"
    assert any(s.room == "living_room" and s.name == "table" for s in world.surfaces.values())
    assert world.clock == dt.datetime(2024, 7, 20, 14, 30)
    assert robot.memory["name"] == "Lucio"
    assert check_invariants(world, robot) == []


def test_object_room_and_surface_through_containment(house):
    world, _ = house
    world.objects["spoon_1"] = world.objects["spoon_1"].__class__("spoon", frozenset(), Inside("bowl_1"))
    assert object_room(world, "spoon_1") == "kitchen"
    assert resting_surface(world, "spoon_1") == "kitchen_table"


def test_held_objects_have_no_room(house):
    world, _ = house
    obj = world.objects["apple_1"]
    world.objects["apple_1"] = obj.__class__(obj.name, obj.tags, HeldByRobot())
    assert object_room(world, "apple_1") is None
    world.objects["apple_1"] = obj.__class__(obj.name, obj.tags, HeldByPerson("p_alex"))
    assert object_room(world, "apple_1") == "living_room"


def test_round_trip_through_dict(house):
    world, robot = house
    again, robot_again = scenario_from_dict(json.loads(json.dumps(scenario_to_dict(world, robot))))
    assert again == world
    assert robot_again == robot


def test_copy_is_independent(house):
    world, robot = house
    w2, r2 = world.copy(), robot.copy()
    w2.objects.pop("cup_1")
    r2.memory["name"] = "Other"
    r2.room = "kitchen"
    assert "cup_1" in world.objects
    assert robot.memory["name"] == "Lucio" and robot.room == "living_room"


def test_surface_shorthand():
    world, _ = scenario_from_dict({"rooms": ["k"], "surfaces": {"counter": "k"}})
    assert world.surfaces["counter"].name == "counter"

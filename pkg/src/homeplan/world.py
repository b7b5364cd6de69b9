"""World and robot state, plus the JSON world-file loader."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import jsonschema

# --- places ----------------------------------------------------------------


@dataclass(frozen=True)
class OnSurface:
    surface: str


@dataclass(frozen=True)
class HeldByRobot:
    pass


@dataclass(frozen=True)
class HeldByPerson:
    person: str


@dataclass(frozen=True)
class Inside:
    container: str


Place = Union[OnSurface, HeldByRobot, HeldByPerson, Inside]


@dataclass(frozen=True)
class EntityRef:
    kind: str  # "object" | "person"
    id: str

    @classmethod
    def object(cls, oid: str) -> "EntityRef":
        return cls("object", oid)

    @classmethod
    def person(cls, pid: str) -> "EntityRef":
        return cls("person", pid)


# --- entities --------------------------------------------------------------


@dataclass(frozen=True)
class Surface:
    room: str
    name: str


@dataclass(frozen=True)
class Door:
    room: str
    state: str  # "open" | "closed"


@dataclass(frozen=True)
class WorldObject:
    name: str
    tags: frozenset[str]
    place: Place


@dataclass(frozen=True)
class Person:
    name: str
    tags: frozenset[str]
    room: str
    path: tuple[str, ...] | None = None


def norm_label(text: str) -> str:
    """Lowercase and join words with underscores: 'Living Room' -> 'living_room'."""
    return "_".join(text.strip().lower().split())


@dataclass
class WorldState:
    rooms: tuple[str, ...]
    surfaces: dict[str, Surface] = field(default_factory=dict)
    doors: dict[str, Door] = field(default_factory=dict)
    objects: dict[str, WorldObject] = field(default_factory=dict)
    persons: dict[str, Person] = field(default_factory=dict)
    clock: dt.datetime = dt.datetime(2024, 1, 1, 12, 0)

    def copy(self) -> "WorldState":
        # Entities are immutable, so copying the containers is a full snapshot.
        return replace(
            self,
            surfaces=dict(self.surfaces),
            doors=dict(self.doors),
            objects=dict(self.objects),
            persons=dict(self.persons),
        )

    def held_by_robot(self) -> list[str]:
        return sorted(oid for oid, o in self.objects.items() if isinstance(o.place, HeldByRobot))


@dataclass
class RobotState:
    room: str
    held: str | None = None
    focus: EntityRef | None = None
    answer: str | None = None
    memory: dict[str, str] = field(default_factory=dict)
    request_queue: tuple[str, ...] = ()

    def copy(self) -> "RobotState":
        return replace(self, memory=dict(self.memory))


def object_room(world: WorldState, oid: str, _seen: frozenset[str] = frozenset()) -> str | None:
    """Room an object is in, or None when it is in the robot's gripper (directly or nested)."""
    if oid in _seen:
        return None
    obj = world.objects.get(oid)
    if obj is None:
        return None
    place = obj.place
    if isinstance(place, OnSurface):
        surface = world.surfaces.get(place.surface)
        return surface.room if surface else None
    if isinstance(place, HeldByPerson):
        person = world.persons.get(place.person)
        return person.room if person else None
    if isinstance(place, Inside):
        return object_room(world, place.container, _seen | {oid})
    return None


def resting_surface(world: WorldState, oid: str) -> str | None:
    """Surface an object ultimately rests on, following containment."""
    seen = set()
    while oid not in seen:
        seen.add(oid)
        obj = world.objects.get(oid)
        if obj is None:
            return None
        if isinstance(obj.place, OnSurface):
            return obj.place.surface
        if isinstance(obj.place, Inside):
            oid = obj.place.container
            continue
        return None
    return None


def check_invariants(world: WorldState, robot: RobotState | None = None) -> list[str]:
    problems = []
    rooms = set(world.rooms)
    for sid, surface in world.surfaces.items():
        if surface.room not in rooms:
            problems.append(f"surface {sid!r} is in unknown room {surface.room!r}")
    for did, door in world.doors.items():
        if door.room not in rooms:
            problems.append(f"door {did!r} is in unknown room {door.room!r}")
        if door.state not in ("open", "closed"):
            problems.append(f"door {did!r} has bad state {door.state!r}")
    for pid, person in world.persons.items():
        if person.room not in rooms:
            problems.append(f"person {pid!r} is in unknown room {person.room!r}")
        for room in person.path or ():
            if room not in rooms:
                problems.append(f"person {pid!r} path visits unknown room {room!r}")
    for oid, obj in world.objects.items():
        place = obj.place
        if isinstance(place, OnSurface) and place.surface not in world.surfaces:
            problems.append(f"object {oid!r} is on unknown surface {place.surface!r}")
        elif isinstance(place, HeldByPerson) and place.person not in world.persons:
            problems.append(f"object {oid!r} is held by unknown person {place.person!r}")
        elif isinstance(place, Inside):
            if place.container not in world.objects:
                problems.append(f"object {oid!r} is inside unknown object {place.container!r}")
    problems += _containment_cycles(world)
    held = world.held_by_robot()
    if len(held) > 1:
        problems.append(f"robot holds more than one object: {held}")
    if robot is not None:
        if robot.room not in rooms:
            problems.append(f"robot is in unknown room {robot.room!r}")
        if held != ([robot.held] if robot.held else []):
            problems.append(f"robot.held={robot.held!r} disagrees with objects held by robot {held}")
        if robot.focus is not None:
            focus = robot.focus
            if focus.kind == "object":
                obj = world.objects.get(focus.id)
                if obj is None:
                    problems.append(f"focus refers to unknown object {focus.id!r}")
                elif object_room(world, focus.id) not in (robot.room, None):
                    # None: the object is in (or nested inside something in) the gripper
                    problems.append(f"focused object {focus.id!r} is not in the robot's room")
            else:
                person = world.persons.get(focus.id)
                if person is None:
                    problems.append(f"focus refers to unknown person {focus.id!r}")
                elif person.room != robot.room:
                    problems.append(f"focused person {focus.id!r} is not in the robot's room")
    return problems


def _containment_cycles(world: WorldState) -> list[str]:
    problems = []
    for start in sorted(world.objects):
        seen = [start]
        oid = start
        while True:
            place = world.objects[oid].place
            if not isinstance(place, Inside) or place.container not in world.objects:
                break
            oid = place.container
            if oid in seen:
                if oid == start:
                    problems.append(f"containment cycle through {' -> '.join(seen + [oid])}")
                break
            seen.append(oid)
    return problems


# --- loading ---------------------------------------------------------------


class WorldFileError(ValueError):
    pass


_ID = {"type": "string", "minLength": 1}
_TAGS = {"type": "array", "items": _ID}
_PLACE = {
    "type": "object",
    "oneOf": [
        {"required": ["surface"]},
        {"required": ["held_by"]},
        {"required": ["inside"]},
    ],
    "properties": {"surface": _ID, "held_by": _ID, "inside": _ID},
    "additionalProperties": False,
}

WORLD_SCHEMA = {
    "type": "object",
    "required": ["rooms"],
    "additionalProperties": False,
    "properties": {
        "rooms": {"type": "array", "items": _ID, "minItems": 1, "uniqueItems": True},
        "surfaces": {
            "type": "object",
            "additionalProperties": {
                "oneOf": [
                    _ID,
                    {
                        "type": "object",
                        "required": ["room"],
                        "properties": {"room": _ID, "name": _ID},
                        "additionalProperties": False,
                    },
                ]
            },
        },
        "doors": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["room"],
                "properties": {"room": _ID, "state": {"enum": ["open", "closed"]}},
                "additionalProperties": False,
            },
        },
        "objects": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["name", "place"],
                "properties": {"name": _ID, "tags": _TAGS, "place": _PLACE},
                "additionalProperties": False,
            },
        },
        "persons": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["name", "room"],
                "properties": {
                    "name": _ID,
                    "tags": _TAGS,
                    "room": _ID,
                    "path": {"type": "array", "items": _ID, "minItems": 1},
                },
                "additionalProperties": False,
            },
        },
        "clock": {"type": "string"},
        "robot": {
            "type": "object",
            "properties": {
                "room": _ID,
                "memory": {"type": "object", "additionalProperties": _ID},
                "request_queue": {"type": "array", "items": {"type": "string"}},
            },
            "additionalProperties": False,
        },
    },
}


def _place_from_json(raw: dict) -> Place:
    if "surface" in raw:
        return OnSurface(raw["surface"])
    if "inside" in raw:
        return Inside(raw["inside"])
    if raw["held_by"] == "robot":
        return HeldByRobot()
    return HeldByPerson(raw["held_by"])


def _place_to_json(place: Place) -> dict:
    if isinstance(place, OnSurface):
        return {"surface": place.surface}
    if isinstance(place, Inside):
        return {"inside": place.container}
    if isinstance(place, HeldByPerson):
        return {"held_by": place.person}
    return {"held_by": "robot"}


def _tags(raw) -> frozenset[str]:
    return frozenset(t.lower() for t in raw or ())


def scenario_from_dict(doc: dict, source: str = "<world>") -> tuple[WorldState, RobotState]:
    try:
        jsonschema.validate(doc, WORLD_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise WorldFileError(f"{source}: {where}: {exc.message}") from None

    clock = dt.datetime(2024, 1, 1, 12, 0)
    if "clock" in doc:
        try:
            clock = dt.datetime.fromisoformat(doc["clock"])
        except ValueError:
            raise WorldFileError(f"{source}: clock: not an ISO 8601 date-time: {doc['clock']!r}") from None

    surfaces = {}
    for sid, raw in doc.get("surfaces", {}).items():
        if isinstance(raw, str):
            surfaces[sid] = Surface(room=raw, name=sid)
        else:
            surfaces[sid] = Surface(room=raw["room"], name=raw.get("name", sid))

    world = WorldState(
        rooms=tuple(doc["rooms"]),
        surfaces=surfaces,
        doors={did: Door(raw["room"], raw.get("state", "closed")) for did, raw in doc.get("doors", {}).items()},
        objects={
            oid: WorldObject(norm_label(raw["name"]), _tags(raw.get("tags")), _place_from_json(raw["place"]))
            for oid, raw in doc.get("objects", {}).items()
        },
        persons={
            pid: Person(
                raw["name"],
                _tags(raw.get("tags")),
                raw["room"],
                tuple(raw["path"]) if "path" in raw else None,
            )
            for pid, raw in doc.get("persons", {}).items()
        },
        clock=clock,
    )

    raw_robot = doc.get("robot", {})
    held = world.held_by_robot()
    robot = RobotState(
        room=raw_robot.get("room", world.rooms[0]),
        held=held[0] if len(held) == 1 else None,
        memory=dict(raw_robot.get("memory", {})),
        request_queue=tuple(raw_robot.get("request_queue", ())),
    )

    problems = check_invariants(world, robot if len(held) <= 1 else None)
    if problems:
        raise WorldFileError(f"{source}: " + "; ".join(problems))
    return world, robot


def load_scenario(path) -> tuple[WorldState, RobotState]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise WorldFileError(f"{path}: cannot read world file: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorldFileError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return scenario_from_dict(doc, str(path))


def load_world(path) -> WorldState:
    return load_scenario(path)[0]


def scenario_to_dict(world: WorldState, robot: RobotState) -> dict:
    """Inverse of :func:`scenario_from_dict` (focus and answer are not persisted)."""
    return {
        "rooms": list(world.rooms),
        "surfaces": {sid: {"room": s.room, "name": s.name} for sid, s in world.surfaces.items()},
        "doors": {did: {"room": d.room, "state": d.state} for did, d in world.doors.items()},
        "objects": {
            oid: {"name": o.name, "tags": sorted(o.tags), "place": _place_to_json(o.place)}
            for oid, o in world.objects.items()
        },
        "persons": {
            pid: {
                "name": p.name,
                "tags": sorted(p.tags),
                "room": p.room,
                **({"path": list(p.path)} if p.path else {}),
            }
            for pid, p in world.persons.items()
        },
        "clock": world.clock.isoformat(timespec="minutes"),
        "robot": {"room": robot.room, "memory": dict(robot.memory), "request_queue": list(robot.request_queue)},
    }

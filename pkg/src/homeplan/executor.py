"""Step-by-step execution of plans against a world.

Every action checks all of its preconditions before touching state, so a
failed step leaves the world and robot exactly as they were. Execution halts
at the first failed step.
"""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field, replace

from homeplan import perception
from homeplan.dsl import ActionCall, Plan, print_call
from homeplan.schema import schema_registry
from homeplan.world import (
    EntityRef,
    HeldByPerson,
    HeldByRobot,
    Inside,
    OnSurface,
    RobotState,
    WorldState,
    norm_label,
    object_room,
    resting_surface,
)


class Fail(str, enum.Enum):
    UNKNOWN_ACTION = "UnknownAction"
    ARITY_MISMATCH = "ArityMismatch"
    UNKNOWN_LOCATION = "UnknownLocation"
    NOT_FOUND = "NotFound"
    NO_FOCUS = "NoFocus"
    HAND_FULL = "HandFull"
    FOCUS_NOT_OBJECT = "FocusNotObject"
    FOCUS_NOT_PERSON = "FocusNotPerson"
    NO_HELD = "NoHeld"
    UNKNOWN_SURFACE = "UnknownSurface"
    UNKNOWN_DOOR = "UnknownDoor"
    ALREADY_IN_STATE = "AlreadyInState"
    NO_ANSWER = "NoAnswer"
    NO_PATH = "NoPath"
    EMPTY_QUEUE = "EmptyQueue"


# Failures caused by an unset focus/held/answer register. These are exactly
# the failures the static validator can predict.
REGISTER_FAILURES = frozenset({Fail.NO_FOCUS, Fail.HAND_FULL, Fail.NO_HELD, Fail.NO_ANSWER})

DATE_FORMAT = "%Y-%m-%d"
TIME_FORMAT = "%H:%M"


@dataclass(frozen=True)
class StepOutcome:
    action: ActionCall
    status: str  # "ok" or a Fail value
    utterance: str | None = None
    state_delta: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def failure(self) -> Fail | None:
        return None if self.ok else Fail(self.status)


@dataclass
class ExecutionTrace:
    steps: list[StepOutcome] = field(default_factory=list)
    halted_at: int | None = None

    @property
    def completed(self) -> bool:
        return self.halted_at is None

    @property
    def final_status(self) -> str:
        return "Completed" if self.completed else f"HaltedAt({self.halted_at})"

    def utterances(self) -> list[str]:
        return [s.utterance for s in self.steps if s.utterance is not None]

    def render(self) -> str:
        lines = []
        for i, step in enumerate(self.steps):
            status = "ok" if step.ok else f"FAILED {step.status}"
            line = f"[{i}] {print_call(step.action)} -> {status}"
            if step.state_delta:
                line += f": {step.state_delta}"
            lines.append(line)
            if step.utterance is not None:
                lines.append(f"    says: {step.utterance}")
        lines.append(self.final_status)
        return "\n".join(lines)


class _Failed(Exception):
    def __init__(self, code: Fail, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


def _need(condition: bool, code: Fail, detail: str) -> None:
    if not condition:
        raise _Failed(code, detail)


def _held(robot: RobotState) -> str:
    _need(robot.held is not None, Fail.NO_HELD, "not holding anything")
    return robot.held


def _focus(robot: RobotState, kind: str) -> str:
    _need(robot.focus is not None, Fail.NO_FOCUS, "nothing in focus")
    code = Fail.FOCUS_NOT_OBJECT if kind == "object" else Fail.FOCUS_NOT_PERSON
    _need(robot.focus.kind == kind, code, f"focus is a {robot.focus.kind}, not a {kind}")
    return robot.focus.id


def _move_object(world: WorldState, oid: str, place) -> None:
    world.objects[oid] = replace(world.objects[oid], place=place)


# --- actions ---------------------------------------------------------------
# Each handler mutates (world, robot) in place only after all checks pass and
# returns (utterance, delta).


def _move_to(world, robot, location):
    target = norm_label(location)
    rooms = {norm_label(r): r for r in world.rooms}
    _need(target in rooms, Fail.UNKNOWN_LOCATION, f"no room called {location!r}")
    robot.room = rooms[target]
    robot.focus = None
    return None, f"robot in {robot.room}"


def _search_object(world, robot, name, desc):
    found = perception.find_objects(world, robot.room, name, desc)
    _need(bool(found), Fail.NOT_FOUND, f"no object matching name={name!r} desc={desc!r} in {robot.room}")
    robot.focus = EntityRef.object(found[0])
    return None, f"focus on object {found[0]}"


def _search_person(world, robot, name, desc):
    found = perception.find_persons(world, robot.room, name, desc)
    _need(bool(found), Fail.NOT_FOUND, f"no person matching name={name!r} desc={desc!r} in {robot.room}")
    robot.focus = EntityRef.person(found[0])
    return None, f"focus on person {found[0]}"


def _pickup(world, robot):
    _need(robot.focus is not None, Fail.NO_FOCUS, "nothing in focus")
    _need(robot.held is None, Fail.HAND_FULL, f"already holding {robot.held}")
    oid = _focus(robot, "object")
    _move_object(world, oid, HeldByRobot())
    robot.held = oid
    return None, f"holding {oid}"


def _pick_surface(world, room, label):
    wanted = norm_label(label)
    for sid in sorted(world.surfaces):
        surface = world.surfaces[sid]
        if surface.room == room and wanted in (norm_label(sid), norm_label(surface.name)):
            return sid
    return None


def _place_on(world, robot, placement):
    oid = _held(robot)
    sid = _pick_surface(world, robot.room, placement)
    _need(sid is not None, Fail.UNKNOWN_SURFACE, f"no surface {placement!r} in {robot.room}")
    _move_object(world, oid, OnSurface(sid))
    robot.held = None
    return None, f"{oid} on {sid}"


def _place_next(world, robot, name):
    oid = _held(robot)
    anchors = [o for o in perception.find_objects(world, robot.room, name) if resting_surface(world, o)]
    _need(bool(anchors), Fail.NOT_FOUND, f"no {name!r} on a surface in {robot.room}")
    sid = resting_surface(world, anchors[0])
    _move_object(world, oid, OnSurface(sid))
    robot.held = None
    return None, f"{oid} on {sid} next to {anchors[0]}"


def _give_to(world, robot):
    oid = _held(robot)
    pid = _focus(robot, "person")
    _move_object(world, oid, HeldByPerson(pid))
    robot.held = None
    return None, f"{oid} given to {pid}"


def _pour_in(world, robot, container):
    oid = _held(robot)
    found = perception.find_objects(world, robot.room, container)
    _need(bool(found), Fail.NOT_FOUND, f"no container {container!r} in {robot.room}")
    _move_object(world, oid, Inside(found[0]))
    robot.held = None
    return None, f"{oid} inside {found[0]}"


def _toggle(world, robot, door_id, state):
    did = door_id.strip()
    door = world.doors.get(did)
    _need(door is not None and door.room == robot.room, Fail.UNKNOWN_DOOR, f"no door {door_id!r} in {robot.room}")
    _need(door.state != state, Fail.ALREADY_IN_STATE, f"{did} is already {state}")
    world.doors[did] = replace(door, state=state)
    return None, f"{did} {state}"


def _vision_ask(world, robot, question):
    robot.answer = perception.vision_ask(world, robot.room, question, robot.focus)
    return None, f"answer={robot.answer!r}"


def _answer(world, robot):
    _need(robot.answer is not None, Fail.NO_ANSWER, "no answer stored")
    return robot.answer, ""


def _respond(world, robot, request):
    return perception.respond_from_memory(robot.memory, request), ""


def _follow(world, robot):
    pid = _focus(robot, "person")
    person = world.persons[pid]
    _need(bool(person.path), Fail.NO_PATH, f"{pid} has nowhere to go")
    # Person and robot walk the scripted path together; the path is used up.
    world.persons[pid] = replace(person, room=person.path[-1], path=None)
    robot.room = person.path[-1]
    return None, "followed via " + " -> ".join(person.path)


def _new_request(world, robot):
    _need(bool(robot.request_queue), Fail.EMPTY_QUEUE, "no pending requests")
    request, robot.request_queue = robot.request_queue[0], robot.request_queue[1:]
    robot.focus = None
    robot.answer = None
    return request, "new request"


def _count_person(world, robot, desc):
    robot.answer = str(perception.count_entities(world, robot.room, "person", desc))
    return None, f"answer={robot.answer!r}"


def _count_object(world, robot, name, desc):
    robot.answer = str(perception.count_entities(world, robot.room, "object", desc, name=name))
    return None, f"answer={robot.answer!r}"


def _ask_name(world, robot):
    pid = _focus(robot, "person")
    robot.answer = world.persons[pid].name
    return None, f"answer={robot.answer!r}"


def _clock_answer(fmt, days=0):
    def handler(world, robot):
        robot.answer = (world.clock + dt.timedelta(days=days)).strftime(fmt)
        return None, f"answer={robot.answer!r}"

    return handler


HANDLERS = {
    "Respond": _respond,
    "Move_To": _move_to,
    "Pour_In": _pour_in,
    "Search_Object": _search_object,
    "Search_Person": _search_person,
    "Pickup": _pickup,
    "Place_On": _place_on,
    "Place_Next": _place_next,
    "Give_To": _give_to,
    "Open": lambda w, r, x: _toggle(w, r, x, "open"),
    "Close": lambda w, r, x: _toggle(w, r, x, "closed"),
    "Vision_Ask": _vision_ask,
    "Answer": _answer,
    "Follow": _follow,
    "New_Request": _new_request,
    "Count_Person": _count_person,
    "Count_Object": _count_object,
    "Ask_Name": _ask_name,
    "What_Time": _clock_answer(TIME_FORMAT),
    "What_Day": _clock_answer(DATE_FORMAT),
    "What_Tomorrow": _clock_answer(DATE_FORMAT, days=1),
}


def apply_step(world: WorldState, robot: RobotState, call: ActionCall) -> StepOutcome:
    """Execute one call in place. On failure nothing is modified."""
    schema = schema_registry().get(call.name)
    if schema is None:
        return StepOutcome(call, Fail.UNKNOWN_ACTION.value, None, f"{call.name!r} is not a known action")
    if len(call.args) != schema.arity:
        return StepOutcome(
            call, Fail.ARITY_MISMATCH.value, None, f"expected {schema.arity} argument(s), got {len(call.args)}"
        )
    try:
        utterance, delta = HANDLERS[schema.canonical_name](world, robot, *call.args)
    except _Failed as exc:
        return StepOutcome(call, exc.code.value, None, exc.detail)
    return StepOutcome(call, "ok", utterance, delta)


def execute_plan(
    world: WorldState, robot: RobotState, plan: Plan
) -> tuple[WorldState, RobotState, ExecutionTrace]:
    """Run ``plan`` on copies of the inputs; the inputs are never modified."""
    world, robot = world.copy(), robot.copy()
    trace = ExecutionTrace()
    for index, call in enumerate(plan):
        outcome = apply_step(world, robot, call)
        trace.steps.append(outcome)
        if not outcome.ok:
            trace.halted_at = index
            break
    return world, robot, trace


def summarize(world: WorldState, robot: RobotState) -> str:
    focus = f"{robot.focus.kind}:{robot.focus.id}" if robot.focus else "-"
    lines = [
        f"robot: room={robot.room} held={robot.held or '-'} focus={focus} answer={robot.answer!r}",
    ]
    for oid in sorted(world.objects):
        obj = world.objects[oid]
        where = object_room(world, oid) or robot.room
        lines.append(f"  {oid} ({obj.name}): {_place_text(obj.place)} [{where}]")
    for did in sorted(world.doors):
        lines.append(f"  door {did}: {world.doors[did].state}")
    return "\n".join(lines)


def _place_text(place) -> str:
    if isinstance(place, OnSurface):
        return f"on {place.surface}"
    if isinstance(place, Inside):
        return f"inside {place.container}"
    if isinstance(place, HeldByPerson):
        return f"held by {place.person}"
    return "in gripper"

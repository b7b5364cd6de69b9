"""Random plan generators shared by the property tests and the fuzz script."""

from __future__ import annotations

import random

from homeplan.dsl import ActionCall, Plan
from homeplan.schema import ArgKind, Registry, schema_registry
from homeplan.world import WorldState

# Characters that stress the lexer: quotes, escapes, separators, parens, unicode.
_TRICKY = "'\\,;()\n\t \"°*éß漢"
_PLAIN = "abcdefghijklmnopqrstuvwxyz_-0123456789 "


def random_text(rng: random.Random, max_len: int = 12) -> str:
    alphabet = _PLAIN * 3 + _TRICKY
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, max_len)))


def random_schema_plan(rng: random.Random, max_steps: int = 8, registry: Registry | None = None) -> Plan:
    """A plan of table actions with correct arity and arbitrary string arguments."""
    registry = registry or schema_registry()
    schemas = registry.schemas
    steps = []
    for _ in range(rng.randint(0, max_steps)):
        schema = rng.choice(schemas)
        steps.append(ActionCall(schema.canonical_name, tuple(random_text(rng) for _ in range(schema.arity))))
    return Plan(tuple(steps))


def world_vocabulary(world: WorldState) -> dict[ArgKind, list[str]]:
    """Argument pools per kind drawn from a world, plus a few words that match nothing."""
    tags = sorted({t for o in world.objects.values() for t in o.tags} | {t for p in world.persons.values() for t in p.tags})
    object_names = sorted({o.name for o in world.objects.values()})
    person_names = sorted({p.name for p in world.persons.values()})
    places = sorted(set(world.rooms) | set(world.surfaces) | {s.name for s in world.surfaces.values()})
    bogus = ["unicorn", "garage", "purple"]
    return {
        ArgKind.LITERAL: object_names + sorted(world.doors) + ["who are you", "hello"] + bogus,
        ArgKind.LOCATION_NAME: places + bogus,
        ArgKind.OBJECT_NAME: object_names + person_names + ["", ""] + bogus,
        ArgKind.PERSON_DESC: tags + ["", "", "wearing black t-shirt", "holding cup"] + bogus,
        ArgKind.VLM_QUERY: tags + ["", "what color is it", "how many cups", "what posture"] + bogus,
    }


def _fragment(rng: random.Random, world: WorldState) -> list[ActionCall]:
    """A short coherent episode: go to an object, pick it up, then carry it somewhere."""
    from homeplan.world import object_room

    visible = [(oid, object_room(world, oid)) for oid in sorted(world.objects)]
    visible = [(oid, room) for oid, room in visible if room is not None]
    if not visible:
        return [ActionCall("Move_To", (rng.choice(world.rooms),))]
    oid, room = rng.choice(visible)
    steps = [
        ActionCall("Move_To", (room,)),
        ActionCall("Search_Object", (world.objects[oid].name, "")),
        ActionCall("Pickup"),
    ]
    target = rng.choice(world.rooms)
    steps.append(ActionCall("Move_To", (target,)))
    surfaces = [s.name for s in world.surfaces.values() if s.room == target]
    persons = [p.name for p in world.persons.values() if p.room == target]
    options = []
    if surfaces:
        options.append([ActionCall("Place_On", (rng.choice(surfaces),))])
    if persons:
        options.append([ActionCall("Search_Person", (rng.choice(persons), "")), ActionCall("Give_To")])
    others = sorted({o.name for o in world.objects.values()})
    options.append([ActionCall("Pour_In", (rng.choice(others),))])
    return steps + rng.choice(options)


def random_world_plan(
    rng: random.Random,
    vocab: dict[ArgKind, list[str]],
    max_steps: int = 10,
    registry: Registry | None = None,
    world: WorldState | None = None,
) -> Plan:
    """A well-formed plan whose arguments mostly refer to things in the world.

    Action choice is biased toward the search/pickup/place chain. Given a
    ``world``, coherent fetch-and-carry fragments are spliced in so that
    long successful runs are common.
    """
    registry = registry or schema_registry()
    schemas = registry.schemas
    chain = [registry[n] for n in ("Move_To", "Search_Object", "Search_Person", "Pickup", "Place_On", "Give_To")]
    steps: list[ActionCall] = []
    target = rng.randint(0, max_steps)
    while len(steps) < target:
        if world is not None and rng.random() < (0.4 if not steps else 0.15):
            steps.extend(_fragment(rng, world))
            continue
        schema = rng.choice(chain) if rng.random() < 0.5 else rng.choice(schemas)
        args = tuple(rng.choice(vocab[kind]) for kind in schema.arg_kinds)
        steps.append(ActionCall(schema.canonical_name, args))
    return Plan(tuple(steps))

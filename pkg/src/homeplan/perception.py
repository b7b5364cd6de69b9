"""Deterministic stand-ins for the detector and vision-language model.

Descriptions are matched by token subset: a query matches an entity when
every content token of the query is one of the entity's tags. Results are
always ordered by entity id.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Mapping

from homeplan.world import EntityRef, HeldByPerson, WorldState, norm_label, object_room

STOPWORDS = frozenset({"a", "an", "the", "is", "who", "with", "wearing", "person", "people", "someone"})

_NON_TOKEN = re.compile(r"[^a-z0-9_\-]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, keep internal hyphens ('t-shirt')."""
    words = _NON_TOKEN.sub(" ", text.lower()).split()
    return [w for w in (w.strip("-") for w in words) if w]


@dataclass(frozen=True)
class DescQuery:
    raw: str
    tokens: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", frozenset(tokenize(self.raw)) - STOPWORDS)

    @classmethod
    def of(cls, query: "DescQuery | str | None") -> "DescQuery":
        if isinstance(query, DescQuery):
            return query
        return cls(query or "")


def match_description(tags, query: DescQuery | str) -> bool:
    return DescQuery.of(query).tokens <= set(tags)


@lru_cache(maxsize=None)
def attribute_categories() -> Mapping[str, frozenset[str]]:
    raw = json.loads(resources.files("homeplan.data").joinpath("attributes.json").read_text(encoding="utf-8"))
    return {key: frozenset(values) for key, values in raw.items()}


# --- entity views ----------------------------------------------------------


def object_tags(world: WorldState, oid: str) -> frozenset[str]:
    obj = world.objects[oid]
    return obj.tags | {obj.name}


def person_tags(world: WorldState, pid: str) -> frozenset[str]:
    """Static tags plus {holding, <name>} for every object the person holds."""
    tags = set(world.persons[pid].tags)
    for obj in world.objects.values():
        if isinstance(obj.place, HeldByPerson) and obj.place.person == pid:
            tags |= {"holding", obj.name}
    return frozenset(tags)


def find_objects(world: WorldState, room: str, name: str | None = "", query: DescQuery | str = "") -> list[str]:
    """Visible objects in ``room``; objects in the robot's gripper are never visible."""
    label = norm_label(name or "")
    query = DescQuery.of(query)
    return [
        oid
        for oid in sorted(world.objects)
        if object_room(world, oid) == room
        and (not label or world.objects[oid].name == label)
        and match_description(object_tags(world, oid), query)
    ]


def find_persons(world: WorldState, room: str, name: str | None = "", query: DescQuery | str = "") -> list[str]:
    wanted = (name or "").strip().lower()
    query = DescQuery.of(query)
    return [
        pid
        for pid in sorted(world.persons)
        if world.persons[pid].room == room
        and (not wanted or world.persons[pid].name.lower() == wanted)
        and match_description(person_tags(world, pid), query)
    ]


def count_entities(world: WorldState, room: str, kind: str, query: DescQuery | str = "", name: str = "") -> int:
    if kind == "person":
        return len(find_persons(world, room, name, query))
    if kind == "object":
        return len(find_objects(world, room, name, query))
    raise ValueError(f"kind must be 'object' or 'person', not {kind!r}")


# --- vision questions ------------------------------------------------------

UNKNOWN = "unknown"
_CATEGORY_ALIASES = {"colour": "color", "clothes": "clothing", "pose": "posture"}
_PERSON_NOUNS = {"people", "persons", "person", "guests", "humans"}


def _tags_of(world: WorldState, ref: EntityRef) -> frozenset[str]:
    if ref.kind == "person":
        return person_tags(world, ref.id)
    return object_tags(world, ref.id)


def _subject_in_scene(world: WorldState, room: str, words: list[str]) -> EntityRef | None:
    mentioned = set(words) | {w[:-1] for w in words if w.endswith("s")}
    for oid in find_objects(world, room):
        if world.objects[oid].name in mentioned:
            return EntityRef.object(oid)
    persons = find_persons(world, room)
    if persons and mentioned & (_PERSON_NOUNS | {"he", "she", "they", "man", "woman"}):
        return EntityRef.person(persons[0])
    return None


def vision_ask(world: WorldState, room: str, question: str, target: EntityRef | None = None) -> str:
    """Answer a templated question about ``target``, or about the scene in ``room``.

    Supported forms are ``what <color|clothing|posture> ...`` and
    ``how many <noun> ...``; anything else answers ``"unknown"``.
    """
    words = tokenize(question)
    categories = attribute_categories()

    if len(words) >= 2 and words[0] == "what":
        key = _CATEGORY_ALIASES.get(words[1], words[1])
        if key not in categories:
            return UNKNOWN
        subject = target or _subject_in_scene(world, room, words[2:])
        if subject is None:
            return UNKNOWN
        found = sorted(_tags_of(world, subject) & categories[key])
        return " and ".join(found) if found else UNKNOWN

    if len(words) >= 3 and words[:2] == ["how", "many"]:
        noun = words[2]
        if noun in _PERSON_NOUNS:
            vocabulary = frozenset().union(*categories.values())
            query = " ".join(w for w in words[3:] if w in vocabulary)
            return str(count_entities(world, room, "person", query))
        label = norm_label(noun)
        if not any(o.name == label for o in world.objects.values()) and label.endswith("s"):
            label = label[:-1]
        return str(count_entities(world, room, "object", "", name=label))

    return UNKNOWN


# --- memory-grounded responses ---------------------------------------------


@dataclass(frozen=True)
class MemoryProfile:
    entries: Mapping[str, str]

    def __post_init__(self) -> None:
        for key, value in self.entries.items():
            if not key or not str(value).strip():
                raise ValueError(f"memory entry {key!r} must have a non-empty key and value")


FALLBACK = "I'm not sure about that."

TOPIC_PRIORITY = ("name", "role", "origin", "capabilities", "achievements", "favorite_color")

SYNONYMS = {
    "who": "name",
    "name": "name",
    "called": "name",
    "role": "role",
    "job": "role",
    "from": "origin",
    "country": "origin",
    "originate": "origin",
    "origin": "origin",
    "do": "capabilities",
    "capabilities": "capabilities",
    "skills": "capabilities",
    "achievements": "achievements",
    "achieved": "achievements",
    "accomplished": "achievements",
    "color": "favorite_color",
    "colour": "favorite_color",
    "favorite": "favorite_color",
}

TEMPLATES = {
    "name": "I am {name}.",
    "name+role": "I am {name}, a {role}.",
    "role": "I am a {role}.",
    "origin": "I originate from {origin}.",
    "capabilities": "I can help you with {capabilities}.",
    "achievements": "My achievements include {achievements}.",
    "favorite_color": "My favorite color is {favorite_color}.",
}


def _sentence(topic: str, entries: Mapping[str, str]) -> str:
    if topic == "name" and "role" in entries:
        return TEMPLATES["name+role"].format(**entries)
    if topic in TEMPLATES:
        return TEMPLATES[topic].format(**{topic: entries[topic]})
    return f"My {topic.replace('_', ' ')} is {entries[topic]}."


def respond_from_memory(memory: MemoryProfile | Mapping[str, str], request: str) -> str:
    entries = memory.entries if isinstance(memory, MemoryProfile) else memory
    words = tokenize(request)
    topics = {SYNONYMS[w] for w in words if w in SYNONYMS}
    topics |= {w for w in words if w in entries}
    topics |= {key for key in entries if "_" in key and all(part in words for part in key.split("_"))}
    order = [t for t in TOPIC_PRIORITY if t in entries] + sorted(set(entries) - set(TOPIC_PRIORITY))
    for topic in order:
        if topic in topics:
            return _sentence(topic, entries)
    return FALLBACK

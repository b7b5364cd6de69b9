"""Machine-readable action table for the household plan language.

Each action carries its arity, the kind of each argument, and its effect on
the robot's three implicit registers (focus, held object, answer).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping


class ArgKind(str, enum.Enum):
    LITERAL = "Literal"
    LOCATION_NAME = "LocationName"
    OBJECT_NAME = "ObjectName"  # detector-resolved argument
    PERSON_DESC = "PersonDesc"  # VLM-resolved description of a person
    VLM_QUERY = "VlmQuery"  # VLM-resolved free text


class Register(str, enum.Enum):
    FOCUS = "Focus"
    HELD = "Held"
    ANSWER = "Answer"


@dataclass(frozen=True)
class ActionSchema:
    canonical_name: str
    params: tuple[str, ...]
    arg_kinds: tuple[ArgKind, ...]
    description: str
    reads: frozenset[Register] = frozenset()
    writes: frozenset[Register] = frozenset()
    clears: frozenset[Register] = frozenset()

    def __post_init__(self) -> None:
        if len(self.params) != len(self.arg_kinds):
            raise ValueError(f"{self.canonical_name}: params and arg_kinds differ in length")

    @property
    def arity(self) -> int:
        return len(self.arg_kinds)

    @property
    def signature(self) -> str:
        marked = []
        for param, kind in zip(self.params, self.arg_kinds):
            if kind is ArgKind.OBJECT_NAME:
                param += "°"
            elif kind in (ArgKind.VLM_QUERY, ArgKind.PERSON_DESC):
                param += "*"
            marked.append(param)
        return f"{self.canonical_name}({', '.join(marked)})"

    def to_json(self) -> dict:
        return {
            "name": self.canonical_name,
            "arity": self.arity,
            "params": list(self.params),
            "arg_kinds": [k.value for k in self.arg_kinds],
            "description": self.description,
            "reads": sorted(r.value for r in self.reads),
            "writes": sorted(r.value for r in self.writes),
            "clears": sorted(r.value for r in self.clears),
        }


F, H, A = Register.FOCUS, Register.HELD, Register.ANSWER
L, LOC, OBJ, PD, VQ = (
    ArgKind.LITERAL,
    ArgKind.LOCATION_NAME,
    ArgKind.OBJECT_NAME,
    ArgKind.PERSON_DESC,
    ArgKind.VLM_QUERY,
)


def _s(name, params, kinds, description, reads=(), writes=(), clears=()):
    return ActionSchema(
        canonical_name=name,
        params=tuple(params),
        arg_kinds=tuple(kinds),
        description=description,
        reads=frozenset(reads),
        writes=frozenset(writes),
        clears=frozenset(clears),
    )


# Row order follows the published action table.
_SCHEMAS = (
    _s("Respond", ["request"], [L], "Respond to user"),
    _s("Move_To", ["location"], [LOC], "Move to a location", clears=[F]),
    _s("Pour_In", ["object"], [L], "Pour object into a container", reads=[H], clears=[H]),
    _s("Search_Object", ["name", "desc."], [OBJ, VQ], "Search for an object", writes=[F]),
    _s("Search_Person", ["name", "desc."], [OBJ, PD], "Search for a person", writes=[F]),
    _s("Pickup", [], [], "Pickup an object", reads=[F], writes=[H]),
    _s("Place_On", ["placement"], [LOC], "Place picked up object on placement", reads=[H], clears=[H]),
    _s("Place_Next", ["object"], [L], "Place picked up object next to object", reads=[H], clears=[H]),
    _s("Give_To", [], [], "Give an object to user", reads=[H, F], clears=[H]),
    _s("Open", ["object"], [L], "Open a door"),
    _s("Close", ["object"], [L], "Close a door"),
    _s("Vision_Ask", ["Question"], [VQ], "Ask VLM and return in Answer()", writes=[A]),
    _s("Answer", [], [], "Retrieve answer", reads=[A]),
    _s("Follow", [], [], "Follow a person", reads=[F]),
    _s("New_Request", [], [], "Take a new request", clears=[F, A]),
    _s("Count_Person", ["desc."], [PD], "Count people and return in Answer()", writes=[A]),
    _s("Count_Object", ["name", "desc."], [OBJ, VQ], "Count object and return in Answer()", writes=[A]),
    _s("Ask_Name", [], [], "Ask name and return in Answer()", reads=[F], writes=[A]),
    _s("What_Time", [], [], "Retrieve time", writes=[A]),
    _s("What_Day", [], [], "Retrieve date", writes=[A]),
    _s("What_Tomorrow", [], [], "Retrieve tomorrow date", writes=[A]),
)


class Registry(Mapping[str, ActionSchema]):
    """Immutable, case-insensitive lookup of action schemas."""

    def __init__(self, schemas):
        self._ordered = tuple(schemas)
        by_key = {}
        for schema in self._ordered:
            key = schema.canonical_name.lower()
            if key in by_key:
                raise ValueError(f"duplicate action name {schema.canonical_name!r}")
            by_key[key] = schema
        self._by_key = MappingProxyType(by_key)

    def __getitem__(self, name: str) -> ActionSchema:
        return self._by_key[name.lower()]

    def __contains__(self, name) -> bool:
        return isinstance(name, str) and name.lower() in self._by_key

    def __iter__(self):
        return (s.canonical_name for s in self._ordered)

    def __len__(self) -> int:
        return len(self._ordered)

    def get(self, name, default=None):
        if not isinstance(name, str):
            return default
        return self._by_key.get(name.lower(), default)

    @property
    def schemas(self) -> tuple[ActionSchema, ...]:
        return self._ordered

    def canonical(self, name: str) -> str:
        schema = self.get(name)
        return schema.canonical_name if schema is not None else name

    def to_json(self) -> list[dict]:
        return [s.to_json() for s in self._ordered]

    def dumps(self) -> str:
        return json.dumps({"actions": self.to_json()}, indent=2, ensure_ascii=False) + "\n"


@lru_cache(maxsize=None)
def schema_registry() -> Registry:
    return Registry(_SCHEMAS)

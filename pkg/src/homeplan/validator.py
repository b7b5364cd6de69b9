"""Static plan checking: names, arities and register dataflow.

A single forward pass tracks each register as set or unset. A plan with no
errors is statically valid, which is necessary but not sufficient for it to
execute: the world may still lack the objects, rooms or doors it names.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from homeplan.dsl import Plan
from homeplan.schema import Register, Registry, schema_registry


class Code(str, enum.Enum):
    UNKNOWN_ACTION = "UnknownAction"
    ARITY_MISMATCH = "ArityMismatch"
    PICKUP_WITHOUT_FOCUS = "PickupWithoutFocus"
    PLACE_WITHOUT_HELD = "PlaceWithoutHeld"
    GIVE_WITHOUT_HELD = "GiveWithoutHeld"
    GIVE_WITHOUT_FOCUS = "GiveWithoutFocus"
    ANSWER_WITHOUT_SOURCE = "AnswerWithoutSource"
    FOLLOW_WITHOUT_FOCUS = "FollowWithoutFocus"
    ASK_NAME_WITHOUT_FOCUS = "AskNameWithoutFocus"
    POUR_WITHOUT_HELD = "PourWithoutHeld"
    DOUBLE_HOLD = "DoubleHold"


# (action, register that must be set) -> code raised when it is not
_MISSING_READ = {
    ("Pickup", Register.FOCUS): Code.PICKUP_WITHOUT_FOCUS,
    ("Place_On", Register.HELD): Code.PLACE_WITHOUT_HELD,
    ("Place_Next", Register.HELD): Code.PLACE_WITHOUT_HELD,
    ("Give_To", Register.HELD): Code.GIVE_WITHOUT_HELD,
    ("Give_To", Register.FOCUS): Code.GIVE_WITHOUT_FOCUS,
    ("Answer", Register.ANSWER): Code.ANSWER_WITHOUT_SOURCE,
    ("Follow", Register.FOCUS): Code.FOLLOW_WITHOUT_FOCUS,
    ("Ask_Name", Register.FOCUS): Code.ASK_NAME_WITHOUT_FOCUS,
    ("Pour_In", Register.HELD): Code.POUR_WITHOUT_HELD,
}
# Check order within one step, so reports are stable.
_READ_ORDER = (Register.HELD, Register.FOCUS, Register.ANSWER)


@dataclass(frozen=True)
class Issue:
    step: int
    code: Code
    message: str


@dataclass
class ValidationReport:
    errors: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list[tuple[int, Code]]:
        return [(e.step, e.code) for e in self.errors]

    def render(self) -> str:
        lines = [f"error: step {e.step}: {e.code.value}: {e.message}" for e in self.errors]
        lines += [f"warning: step {w.step}: {w.code.value}: {w.message}" for w in self.warnings]
        return "\n".join(lines)


def validate(plan: Plan, registry: Registry | None = None) -> ValidationReport:
    registry = registry or schema_registry()
    report = ValidationReport()
    state: set[Register] = set()

    for index, call in enumerate(plan):
        schema = registry.get(call.name)
        if schema is None:
            report.errors.append(Issue(index, Code.UNKNOWN_ACTION, f"{call.name!r} is not a known action"))
            continue
        name = schema.canonical_name
        if len(call.args) != schema.arity:
            report.errors.append(
                Issue(
                    index,
                    Code.ARITY_MISMATCH,
                    f"{name} takes {schema.arity} argument(s), got {len(call.args)}",
                )
            )

        if name == "Pickup" and Register.HELD in state:
            report.errors.append(Issue(index, Code.DOUBLE_HOLD, "Pickup while already holding an object"))
        for register in _READ_ORDER:
            if register in schema.reads and register not in state:
                code = _MISSING_READ[(name, register)]
                report.errors.append(Issue(index, code, f"{name} needs {register.value}, which is unset here"))

        state -= schema.clears
        state |= schema.writes

    return report

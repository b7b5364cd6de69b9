"""Household-robot plan language toolchain: parser, validator, world
simulator, planner benchmark harness, and NF4/LoRA quantization math."""

from homeplan.dsl import ActionCall, Plan, PlanSyntaxError, parse_plan, print_canonical
from homeplan.executor import execute_plan
from homeplan.schema import schema_registry
from homeplan.validator import validate

__version__ = "0.1.0"

__all__ = [
    "ActionCall",
    "Plan",
    "PlanSyntaxError",
    "execute_plan",
    "parse_plan",
    "print_canonical",
    "schema_registry",
    "validate",
]

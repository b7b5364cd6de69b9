"""Fuzz the simulator against the static validator.

For each random plan: every step must conserve objects and keep the world
invariants, failed steps must leave state untouched, and register-level
runtime failures must coincide with the validator's first register error.

    python scripts/fuzz_sim.py --plans 20000 --seed 1
"""

from __future__ import annotations

import argparse
import random
from collections import Counter

from homeplan.cli import bundled
from homeplan.dsl import print_canonical
from homeplan.executor import REGISTER_FAILURES, apply_step
from homeplan.fuzz import random_world_plan, world_vocabulary
from homeplan.validator import Code, validate
from homeplan.world import check_invariants, load_scenario

REGISTER_CODES = {c for c in Code if c not in (Code.UNKNOWN_ACTION, Code.ARITY_MISMATCH)}


def check(world, robot, plan) -> tuple[str | None, list[str]]:
    world, robot = world.copy(), robot.copy()
    ids = sorted(world.objects)
    problems, halt, failure = [], None, None
    for index, call in enumerate(plan):
        before = (world.copy(), robot.copy())
        outcome = apply_step(world, robot, call)
        problems += [f"step {index}: {p}" for p in check_invariants(world, robot)]
        if sorted(world.objects) != ids:
            problems.append(f"step {index}: object set changed")
        if not outcome.ok:
            if (world, robot) != before:
                problems.append(f"step {index}: failed step modified state")
            halt, failure = index, outcome.failure
            break
    flagged = [e.step for e in validate(plan).errors if e.code in REGISTER_CODES]
    first = min(flagged) if flagged else None
    if failure in REGISTER_FAILURES and first != halt:
        problems.append(f"runtime {failure.value} at {halt} but validator's first register error is {first}")
    if first is not None and (halt is None or halt > first):
        problems.append(f"validator flags step {first} but execution got to {halt}")
    return (failure.value if failure else "Completed"), problems


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--world", default=str(bundled("house.json")))
    parser.add_argument("--plans", type=int, default=10_000)
    parser.add_argument("--max-steps", type=int, default=12)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    world, robot = load_scenario(args.world)
    vocab = world_vocabulary(world)
    rng = random.Random(args.seed)
    outcomes, bad = Counter(), 0
    for _ in range(args.plans):
        plan = random_world_plan(rng, vocab, args.max_steps, world=world)
        status, problems = check(world, robot, plan)
        outcomes[status] += 1
        if problems:
            bad += 1
            if bad <= 5:
                print("counterexample:\n" + print_canonical(plan))
                print("\n".join("  " + p for p in problems))
    for status, n in outcomes.most_common():
        print(f"{status:<16} {n:>7}")
    print(f"{bad} of {args.plans} plans violated a property")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()

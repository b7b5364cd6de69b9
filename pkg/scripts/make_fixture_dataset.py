"""Generate the bundled benchmark fixture from scenario templates.

Writes ``bench_fixture.jsonl`` (evaluation split) and ``shots.jsonl``
(few-shot split, disjoint ids) into ``src/homeplan/data``. Output is fully
determined by ``--seed``.

    python scripts/make_fixture_dataset.py --records 400 --shots 20
"""

from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

from homeplan.dsl import parse_plan, print_canonical
from homeplan.validator import validate

DATA = Path(__file__).resolve().parents[1] / "src" / "homeplan" / "data"

ROOMS = ["kitchen", "living_room", "bedroom", "hallway", "entrance"]
ROOM_TEXT = {r: r.replace("_", " ") for r in ROOMS}
OBJECTS = {
    "cereal": "kitchen",
    "milk": "kitchen",
    "bowl": "kitchen",
    "spoon": "kitchen",
    "apple": "kitchen",
    "cup": "living_room",
    "remote": "living_room",
    "book": "bedroom",
    "bag": "entrance",
}
SURFACES = {"kitchen": ["counter", "table"], "living_room": ["table", "couch", "tv_stand"], "bedroom": ["nightstand", "shelf"]}
DOORS = {"fridge_door": "kitchen", "bedroom_door": "bedroom", "front_door": "entrance"}
PERSON_DESCS = ["wearing black t-shirt", "wearing red dress", "wearing green jacket", "wearing glasses", "wearing a cap"]
NAMES = ["Alex", "Maria", "Sam", "Jordan", "Taylor", "Chris"]
POSTURES = ["sitting", "standing", "waving"]
COLORS = ["red", "green", "blue", "white", "black"]


def q(text: str) -> str:
    return "'" + text.replace("\\", "\\\\").replace("'", "\\'") + "'"


def call(name: str, *args: str) -> str:
    return f"{name}({', '.join(q(a) for a in args)})"


def simple(rng):
    kind = rng.randrange(3)
    if kind == 0:
        room = rng.choice(ROOMS)
        verb = rng.choice(["go to", "move to", "head to", "navigate to"])
        return f"{verb} the {ROOM_TEXT[room]}", [call("Move_To", room)]
    door, room = rng.choice(sorted(DOORS.items()))
    action = rng.choice(["Open", "Close"])
    return f"{action.lower()} the {door.replace('_', ' ')}", [call("Move_To", room), call(action, door)]


def fetch(rng):
    obj, room = rng.choice(sorted(OBJECTS.items()))
    phrase = rng.choice(["bring me the {o} from the {r}", "fetch the {o} in the {r}", "get me the {o} from the {r}"])
    return phrase.format(o=obj, r=ROOM_TEXT[room]), [
        call("Move_To", room),
        call("Search_Object", obj, " "),
        call("Pickup"),
        call("Move_To", "living_room"),
        call("Search_Person", " ", " "),
        call("Give_To"),
    ]


def deliver(rng):
    obj, room = rng.choice(sorted(OBJECTS.items()))
    target = rng.choice(sorted(SURFACES))
    surface = rng.choice(SURFACES[target])
    steps = [call("Move_To", room), call("Search_Object", obj, " "), call("Pickup")]
    if rng.random() < 0.3:
        anchor = rng.choice([o for o, r in OBJECTS.items() if r == target] or ["cup"])
        instruction = f"put the {obj} from the {ROOM_TEXT[room]} next to the {anchor} in the {ROOM_TEXT[target]}"
        return instruction, steps + [call("Move_To", target), call("Place_Next", anchor)]
    instruction = f"put the {obj} from the {ROOM_TEXT[room]} on the {surface.replace('_', ' ')} in the {ROOM_TEXT[target]}"
    return instruction, steps + [call("Move_To", target), call("Place_On", surface)]


def follow(rng):
    desc = rng.choice(PERSON_DESCS)
    room = rng.choice(ROOMS)
    return f"go to the {ROOM_TEXT[room]} and follow the person {desc}", [
        call("Move_To", room),
        call("Search_Person", " ", desc),
        call("Follow"),
    ]


def meet(rng):
    room = rng.choice(["entrance", "living_room", "hallway"])
    greeting = rng.choice(["nice to meet you", "welcome to the house", "hello, how may I assist you"])
    return f"meet the new guest in the {ROOM_TEXT[room]}, ask their name and say {greeting}", [
        call("Move_To", room),
        call("Search_Person", " ", " "),
        call("Ask_Name"),
        call("Answer"),
        call("Respond", greeting),
    ]


def guide(rng):
    name = rng.choice(NAMES)
    start, dest = rng.sample(ROOMS, 2)
    return f"find {name} in the {ROOM_TEXT[start]} and guide them to the {ROOM_TEXT[dest]}", [
        call("Move_To", start),
        call("Search_Person", name, " "),
        call("Respond", "please follow me"),
        call("Move_To", dest),
    ]


def describe(rng):
    if rng.random() < 0.5:
        obj, room = rng.choice(sorted(OBJECTS.items()))
        question = f"what color is the {obj}"
        return f"go to the {ROOM_TEXT[room]} and tell me {question}", [
            call("Move_To", room),
            call("Search_Object", obj, " "),
            call("Vision_Ask", question),
            call("Answer"),
        ]
    desc = rng.choice(PERSON_DESCS)
    question = rng.choice(["what clothing is the person wearing", "what posture is the person in"])
    return f"look at the person {desc} in the living room and tell me {question}", [
        call("Move_To", "living_room"),
        call("Search_Person", " ", desc),
        call("Vision_Ask", question),
        call("Answer"),
    ]


def count(rng):
    room = rng.choice(ROOMS)
    if rng.random() < 0.5:
        posture = rng.choice(POSTURES)
        return f"how many people are {posture} in the {ROOM_TEXT[room]}", [
            call("Move_To", room),
            call("Count_Person", posture),
            call("Answer"),
        ]
    obj = rng.choice(sorted(OBJECTS))
    color = rng.choice(COLORS + [" "])
    desc_text = "" if color == " " else f"{color} "
    return f"count the {desc_text}{obj}s in the {ROOM_TEXT[room]}", [
        call("Move_To", room),
        call("Count_Object", obj, color),
        call("Answer"),
    ]


def time_query(rng):
    action, phrases = rng.choice(
        [
            ("What_Time", ["what time is it", "tell me the time", "do you know the current time"]),
            ("What_Day", ["what day is it today", "what is today's date", "tell me the date"]),
            ("What_Tomorrow", ["what is the date tomorrow", "what day will it be tomorrow"]),
        ]
    )
    return rng.choice(phrases), [call(action), call("Answer")]


SELF_QUESTIONS = [
    "who are you",
    "what is your name",
    "where are you from",
    "which country do you come from",
    "what can you do",
    "what are your skills",
    "what is your favorite color",
    "tell me about your achievements",
    "what is your role",
]


def self_aware(rng):
    question = rng.choice(SELF_QUESTIONS)
    return question, [call("Respond", question)]


def combined(rng):
    obj, room = rng.choice(sorted(OBJECTS.items()))
    desc = rng.choice(PERSON_DESCS)
    question = rng.choice(SELF_QUESTIONS)
    return f"give the {obj} from the {ROOM_TEXT[room]} to the person {desc} in the living room, then answer: {question}", [
        call("Move_To", room),
        call("Search_Object", obj, " "),
        call("Pickup"),
        call("Move_To", "living_room"),
        call("Search_Person", " ", desc),
        call("Give_To"),
        call("Respond", question),
    ]


CATEGORIES = {
    "Simple": simple,
    "Fetch": fetch,
    "Deliver": deliver,
    "Follow": follow,
    "Meet": meet,
    "Guide": guide,
    "Describe": describe,
    "Count": count,
    "Time": time_query,
    "SelfAware": self_aware,
    "Combined": combined,
}


def make_records(n: int, rng: random.Random, prefix: str) -> list[dict]:
    names = list(CATEGORIES)
    records = []
    for i in range(n):
        category = names[i % len(names)]
        instruction, steps = CATEGORIES[category](rng)
        # Roughly a quarter of gold plans use the single-line comma encoding.
        text = ", ".join(steps) if rng.random() < 0.25 else "\n".join(steps)
        plan = parse_plan(text)
        report = validate(plan)
        assert report.ok, (text, report.render())
        assert print_canonical(plan)
        records.append({"id": f"{prefix}-{i:04d}", "category": category, "instruction": instruction, "gold_plan": text})
    return records


def write_jsonl(path: Path, records: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--records", type=int, default=400)
    parser.add_argument("--shots", type=int, default=20)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", type=Path, default=DATA)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    write_jsonl(args.out / "bench_fixture.jsonl", make_records(args.records, rng, "rec"))
    write_jsonl(args.out / "shots.jsonl", make_records(args.shots, rng, "shot"))
    print(f"wrote {args.records} records and {args.shots} shots to {args.out}")


if __name__ == "__main__":
    main()

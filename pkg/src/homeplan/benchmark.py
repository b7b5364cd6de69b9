"""Dataset loading, plan scoring and per-category accuracy reports."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from homeplan.dsl import Plan, PlanSyntaxError, parse_plan, print_call, print_canonical
from homeplan.planner import DecodeParams, Planner, PlannerError, PlannerRequest, build_system_prompt, generate_plan
from homeplan.schema import Registry, schema_registry

REQUIRED_FIELDS = ("id", "category", "instruction", "gold_plan")


class DatasetError(ValueError):
    pass


class MalformedLine(DatasetError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: malformed record: {reason}")
        self.line_no = line_no


class InvalidGoldPlan(DatasetError):
    def __init__(self, path, line_no: int, errors):
        detail = "; ".join(e.message for e in errors)
        super().__init__(f"{path}:{line_no}: gold plan does not parse: {detail}")
        self.line_no = line_no
        self.errors = list(errors)


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    category: str
    instruction: str
    gold_plan: str
    system: str | None = None
    extra: Mapping = field(default_factory=dict, compare=False, repr=False)


def load_dataset(path, field_map: Mapping[str, str] | None = None) -> list[DatasetRecord]:
    """Read a JSON-Lines dataset.

    ``field_map`` maps our field names to the file's, e.g.
    ``{"gold_plan": "output"}``. Unknown fields are kept in ``extra``.
    """
    field_map = dict(field_map or {})
    path = Path(path)
    records = []
    seen_ids = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(path, line_no, f"invalid JSON ({exc.msg})") from None
            if not isinstance(raw, dict):
                raise MalformedLine(path, line_no, "expected a JSON object")
            values = {}
            for name in REQUIRED_FIELDS + ("system",):
                source = field_map.get(name, name)
                if source in raw:
                    values[name] = raw[source]
            missing = [f for f in REQUIRED_FIELDS if f not in values]
            if missing:
                raise MalformedLine(path, line_no, f"missing field(s) {', '.join(missing)}")
            for name, value in values.items():
                if not isinstance(value, (str, int)) or (name == "system" and not isinstance(value, str)):
                    raise MalformedLine(path, line_no, f"field {name!r} must be a string")
            values = {k: str(v) for k, v in values.items()}
            if not values["category"].strip():
                raise MalformedLine(path, line_no, "empty category")
            if values["id"] in seen_ids:
                raise MalformedLine(path, line_no, f"duplicate id {values['id']!r}")
            seen_ids.add(values["id"])
            try:
                parse_plan(values["gold_plan"])
            except PlanSyntaxError as exc:
                raise InvalidGoldPlan(path, line_no, exc.errors) from None
            used = {field_map.get(n, n) for n in values}
            records.append(DatasetRecord(**values, extra={k: v for k, v in raw.items() if k not in used}))
    return records


# --- scoring ---------------------------------------------------------------


@dataclass(frozen=True)
class MatchResult:
    exact: bool
    canonical: bool
    step_matches: int
    step_total: int


def _try_parse(text: str) -> Plan | None:
    try:
        return parse_plan(text)
    except PlanSyntaxError:
        return None


def score_plan(predicted: str, gold: str, registry: Registry | None = None) -> MatchResult:
    gold_plan = parse_plan(gold)
    exact = predicted == gold
    pred_plan = _try_parse(predicted)
    if pred_plan is None:
        return MatchResult(exact, False, 0, len(gold_plan))
    canonical = print_canonical(pred_plan, registry) == print_canonical(gold_plan, registry)
    step_matches = sum(
        print_call(p, registry) == print_call(g, registry) for p, g in zip(pred_plan, gold_plan)
    )
    return MatchResult(exact, canonical, step_matches, len(gold_plan))


# --- running ---------------------------------------------------------------


@dataclass
class CategoryStats:
    n: int = 0
    correct: int = 0
    exact: int = 0
    step_matches: int = 0
    step_total: int = 0
    errors: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 0.0

    @property
    def exact_accuracy(self) -> float:
        return self.exact / self.n if self.n else 0.0

    @property
    def step_accuracy(self) -> float:
        return self.step_matches / self.step_total if self.step_total else 0.0

    def add(self, result: "RecordResult") -> None:
        self.n += 1
        self.correct += result.correct
        self.exact += result.exact
        self.step_matches += result.step_matches
        self.step_total += result.step_total
        self.errors += result.error is not None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "exact": self.exact,
            "exact_accuracy": self.exact_accuracy,
            "step_matches": self.step_matches,
            "step_total": self.step_total,
            "step_accuracy": self.step_accuracy,
            "errors": self.errors,
        }


@dataclass(frozen=True)
class RecordResult:
    id: str
    category: str
    correct: bool
    exact: bool
    step_matches: int
    step_total: int
    error: str | None = None


@dataclass
class BenchReport:
    per_category: dict[str, CategoryStats]
    overall: CategoryStats
    records: list[RecordResult]
    metadata: dict

    @property
    def accuracy(self) -> float:
        return self.overall.accuracy

    def to_json(self) -> dict:
        return {
            "metadata": self.metadata,
            "overall": self.overall.to_json(),
            "per_category": {k: v.to_json() for k, v in sorted(self.per_category.items())},
            "records": [asdict(r) for r in self.records],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["category", "n", "correct", "accuracy", "exact_accuracy", "step_accuracy", "errors"])
        rows = sorted(self.per_category.items()) + [("OVERALL", self.overall)]
        for name, s in rows:
            writer.writerow(
                [name, s.n, s.correct, f"{s.accuracy:.4f}", f"{s.exact_accuracy:.4f}", f"{s.step_accuracy:.4f}", s.errors]
            )
        return buf.getvalue()

    def render_table(self) -> str:
        rows = [(name, s) for name, s in sorted(self.per_category.items())] + [("OVERALL", self.overall)]
        width = max(len("category"), *(len(name) for name, _ in rows))
        header = f"{'category':<{width}}  {'n':>5}  {'correct':>7}  {'accuracy':>8}  {'exact':>7}  {'steps':>7}  {'errors':>6}"
        lines = [header, "-" * len(header)]
        for name, s in rows:
            if name == "OVERALL":
                lines.append("-" * len(header))
            lines.append(
                f"{name:<{width}}  {s.n:>5}  {s.correct:>7}  {s.accuracy:>8.2%}"
                f"  {s.exact_accuracy:>7.2%}  {s.step_accuracy:>7.2%}  {s.errors:>6}"
            )
        return "\n".join(lines)


def _evaluate(backend, record, system_prompt, decode, registry) -> RecordResult:
    prompt = system_prompt if not record.system else f"{system_prompt}\n# Context\n{record.system.strip()}\n"
    try:
        text = generate_plan(backend, PlannerRequest(prompt, record.instruction, decode, record.id)).plan_text
        error = None
    except PlannerError as exc:
        text, error = "", f"{type(exc).__name__}: {exc}"
    match = score_plan(text, record.gold_plan, registry)
    return RecordResult(
        record.id, record.category, match.canonical, match.exact, match.step_matches, match.step_total, error
    )


def run_benchmark(
    backend: Planner,
    records: Sequence[DatasetRecord],
    shots: Sequence[DatasetRecord] = (),
    parallelism: int = 1,
    *,
    memory: Mapping[str, str] | None = None,
    decode: DecodeParams = DecodeParams(),
    seed: int | None = None,
    registry: Registry | None = None,
    timestamp: str | None = None,
) -> BenchReport:
    """Score every record; a record is correct iff its plan matches gold canonically.

    Backend failures count as incorrect and are tallied in the metadata.
    """
    registry = registry or schema_registry()
    overlap = {s.id for s in shots} & {r.id for r in records}
    if overlap:
        raise ValueError(f"shots overlap the evaluation records: {sorted(overlap)[:5]}")
    system_prompt = build_system_prompt(registry, memory, [(s.instruction, s.gold_plan) for s in shots])

    def job(record):
        return _evaluate(backend, record, system_prompt, decode, registry)

    if parallelism <= 1:
        results = [job(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(job, records))  # map keeps record order

    per_category: dict[str, CategoryStats] = {}
    overall = CategoryStats()
    for result in results:
        per_category.setdefault(result.category, CategoryStats()).add(result)
        overall.add(result)

    error_kinds = Counter(r.error.split(":", 1)[0] for r in results if r.error)
    metadata = {
        "backend": getattr(backend, "name", type(backend).__name__),
        "seed": seed,
        "shot_count": len(shots),
        "shot_ids": [s.id for s in shots],
        "decode": asdict(decode),
        "record_count": len(records),
        "backend_errors": sum(error_kinds.values()),
        "backend_error_kinds": dict(sorted(error_kinds.items())),
        "timestamp": timestamp or dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }
    return BenchReport(per_category, overall, results, metadata)


def mask_timestamps(report_json: str) -> str:
    """Replace wall-clock fields so reports from separate runs compare byte-for-byte."""
    doc = json.loads(report_json)
    doc["metadata"]["timestamp"] = "<masked>"
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

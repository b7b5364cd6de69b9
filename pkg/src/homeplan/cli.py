"""Command-line entry point.

    homeplan parse PLAN
    homeplan simulate --world house.json --plan plan.txt
    homeplan bench --backend golden --out reports/
    homeplan repl --world house.json --backend scripted
    homeplan quant-selfcheck
    homeplan schema

Exit status: 0 success, 1 the checked thing failed (parse errors, halted
plan, failed property), 2 usage or input errors. Benchmark accuracy never
affects the exit status.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from homeplan import benchmark
from homeplan.dsl import PlanSyntaxError, parse_plan, print_canonical
from homeplan.executor import execute_plan, summarize
from homeplan.planner import (
    API_KEY_ENV,
    CorruptingPlanner,
    DecodeParams,
    GoldenPlanner,
    PlannerError,
    PlannerRequest,
    RemoteConfig,
    RemotePlanner,
    ScriptedPlanner,
    build_system_prompt,
    generate_plan,
)
from homeplan.schema import schema_registry
from homeplan.validator import validate
from homeplan.world import WorldFileError, load_scenario

BACKENDS = ("golden", "scripted", "corrupt", "remote")


def bundled(name: str) -> Path:
    return Path(str(resources.files("homeplan.data").joinpath(name)))


@dataclass
class RunConfig:
    world: str | None = None
    plan: str | None = None
    dataset: str | None = None
    shots_file: str | None = None
    shots: int = 20
    backend: str = "golden"
    endpoint: str | None = None
    model: str = "default"
    timeout: float = 30.0
    temperature: float = 0.0
    max_tokens: int = 256
    rate: float = 0.25
    script: str | None = None
    parallelism: int = 1
    seed: int = 0
    out: str = "."
    timestamp: str | None = None

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {', '.join(BACKENDS)}")

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "RunConfig":
        """Defaults, then the --config file, then explicit flags (flags win)."""
        values = {}
        if getattr(args, "config", None):
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
            known = {f.name for f in fields(cls)}
            unknown = sorted(set(loaded) - known)
            if unknown:
                raise ValueError(f"unknown config keys: {', '.join(unknown)}")
            values.update(loaded)
        for f in fields(cls):
            flag = getattr(args, f.name, None)
            if flag is not None:
                values[f.name] = flag
        return cls(**values)


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise UsageError(f"{path}: not valid UTF-8") from None


def _load_records(path: str) -> list[benchmark.DatasetRecord]:
    try:
        return benchmark.load_dataset(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    except benchmark.DatasetError as exc:
        raise UsageError(str(exc)) from None


def _load_world(path: str):
    try:
        return load_scenario(path)
    except WorldFileError as exc:
        raise UsageError(str(exc)) from None


def make_backend(cfg: RunConfig, records=()):
    if cfg.backend in ("golden", "corrupt"):
        golden = GoldenPlanner(records)
        return golden if cfg.backend == "golden" else CorruptingPlanner(golden, cfg.rate, cfg.seed)
    if cfg.backend == "scripted":
        script = json.loads(_read(cfg.script or str(bundled("demo_script.json"))))
        return ScriptedPlanner(script)
    if not cfg.endpoint:
        raise UsageError("--backend remote needs --endpoint")
    return RemotePlanner(
        RemoteConfig(endpoint=cfg.endpoint, model=cfg.model, temperature=cfg.temperature, timeout=cfg.timeout)
    )


# --- commands --------------------------------------------------------------


def cmd_parse(cfg: RunConfig, out) -> int:
    if not cfg.plan:
        raise UsageError("no plan file given")
    text = _read(cfg.plan)
    try:
        plan = parse_plan(text)
    except PlanSyntaxError as exc:
        for error in exc.errors:
            print(f"{cfg.plan}:{error.render(text)}", file=out)
        return 1
    canonical = print_canonical(plan)
    if canonical:
        print(canonical, file=out)
    return 0


def cmd_simulate(cfg: RunConfig, out) -> int:
    if not cfg.plan:
        raise UsageError("no plan file given")
    world, robot = _load_world(cfg.world or str(bundled("house.json")))
    text = _read(cfg.plan)
    try:
        plan = parse_plan(text)
    except PlanSyntaxError as exc:
        for error in exc.errors:
            print(f"{cfg.plan}:{error.render(text)}", file=out)
        return 1
    report = validate(plan)
    for issue in report.errors + report.warnings:
        print(f"warning: step {issue.step}: {issue.code.value}: {issue.message}", file=out)
    world, robot, trace = execute_plan(world, robot, plan)
    print(trace.render(), file=out)
    print(summarize(world, robot), file=out)
    if not trace.completed:
        print(f"plan halted at step {trace.halted_at}", file=out)
        return 1
    return 0


def cmd_bench(cfg: RunConfig, out) -> int:
    records = _load_records(cfg.dataset or str(bundled("bench_fixture.jsonl")))
    shots = _load_records(cfg.shots_file or str(bundled("shots.jsonl")))[: cfg.shots] if cfg.shots > 0 else []
    _, robot = _load_world(cfg.world or str(bundled("house.json")))
    backend = make_backend(cfg, records)
    decode = DecodeParams(temperature=cfg.temperature, max_tokens=cfg.max_tokens, seed=cfg.seed)
    try:
        report = benchmark.run_benchmark(
            backend,
            records,
            shots,
            cfg.parallelism,
            memory=robot.memory,
            decode=decode,
            seed=cfg.seed,
            timestamp=cfg.timestamp,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report.dumps(), encoding="utf-8")
    (outdir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    print(report.render_table(), file=out)
    meta = report.metadata
    print(f"backend={meta['backend']} seed={meta['seed']} shots={meta['shot_count']} "
          f"backend_errors={meta['backend_errors']}", file=out)
    print(f"wrote {outdir / 'report.json'} and {outdir / 'report.csv'}", file=out)
    return 0


def cmd_repl(cfg: RunConfig, inp, out) -> int:
    world, robot = _load_world(cfg.world or str(bundled("house.json")))
    records = _load_records(cfg.dataset) if cfg.dataset else []
    backend = make_backend(cfg, records)
    registry = schema_registry()
    decode = DecodeParams(temperature=cfg.temperature, max_tokens=cfg.max_tokens, seed=cfg.seed)
    print("type an instruction, or :quit to leave", file=out)
    while True:
        print("> ", end="", file=out, flush=True)
        line = inp.readline()
        if not line:
            break
        instruction = line.strip()
        if not instruction:
            continue
        if instruction == ":quit":
            break
        system_prompt = build_system_prompt(registry, robot.memory)
        try:
            response = generate_plan(backend, PlannerRequest(system_prompt, instruction, decode))
        except PlannerError as exc:
            print(f"planner error: {exc}", file=out)
            continue
        print("plan:", file=out)
        print(response.plan_text, file=out)
        try:
            plan = parse_plan(response.plan_text)
        except PlanSyntaxError as exc:
            for error in exc.errors:
                print(f"parse error: {error.render(response.plan_text)}", file=out)
            continue
        report = validate(plan)
        if report.errors or report.warnings:
            print(report.render(), file=out)
        world, robot, trace = execute_plan(world, robot, plan)
        print(trace.render(), file=out)
    print("bye", file=out)
    return 0


def cmd_quant_selfcheck(args, out) -> int:
    from homeplan.quant import nf4
    from homeplan.quant.selfcheck import run_selfcheck

    levels = nf4.nf4_codebook()
    if args.inject_fault == "swap-levels":
        levels[[3, 4]] = levels[[4, 3]]
    results = run_selfcheck(levels, seed=args.seed or 0)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name}" + (f"  ({r.detail})" if r.detail else ""), file=out)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties hold", file=out)
    return 0 if failed == 0 else 1


def cmd_schema(args, out) -> int:
    text = schema_registry().dumps()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return 0


# --- argument parsing ------------------------------------------------------


def _common(p: argparse.ArgumentParser, *names: str) -> None:
    if "world" in names:
        p.add_argument("--world", help="world JSON file (default: bundled house.json)")
    if "plan" in names:
        p.add_argument("--plan", help="plan text file")
    if "backend" in names:
        p.add_argument("--config", help="JSON file with RunConfig fields; explicit flags override it")
        p.add_argument("--dataset", help="JSONL dataset (default: bundled fixture)")
        p.add_argument("--backend", choices=BACKENDS)
        p.add_argument("--endpoint", help="chat-completions URL for --backend remote")
        p.add_argument("--model", help="model name sent to the remote endpoint")
        p.add_argument("--timeout", type=float, help="remote request timeout in seconds")
        p.add_argument("--temperature", type=float)
        p.add_argument("--max-tokens", dest="max_tokens", type=int)
        p.add_argument("--rate", type=float, help="corruption probability for --backend corrupt")
        p.add_argument("--script", help="JSON instruction->plan map for --backend scripted")
        p.add_argument("--seed", type=int, help="seed for corruption and decoding (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homeplan", description="Household robot plan toolchain.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a plan file and print its canonical form")
    p.add_argument("plan_file", nargs="?")
    _common(p, "plan")

    p = sub.add_parser("simulate", help="execute a plan in a world")
    _common(p, "world", "plan")

    p = sub.add_parser("bench", help="score a planner backend on a dataset")
    _common(p, "world", "backend")
    p.add_argument("--shots-file", dest="shots_file", help="JSONL few-shot split (default: bundled shots)")
    p.add_argument("--shots", type=int, help="number of shots taken from the start of the shot split (default 20)")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--out", help="directory for report.json and report.csv (default: .)")
    p.add_argument("--timestamp", help="fixed timestamp to record instead of the current time")

    p = sub.add_parser("repl", help="interactive instruction -> plan -> execution loop")
    _common(p, "world", "backend")

    p = sub.add_parser("quant-selfcheck", help="check NF4 / double quantization / adapter math")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", choices=["swap-levels"], help=argparse.SUPPRESS)

    p = sub.add_parser("schema", help="print the action table as JSON")
    p.add_argument("--out")
    return parser


def main(argv=None, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "quant-selfcheck":
            return cmd_quant_selfcheck(args, stdout)
        if args.command == "schema":
            return cmd_schema(args, stdout)
        if args.command == "parse" and args.plan_file and not args.plan:
            args.plan = args.plan_file
        cfg = RunConfig.resolve(args)
        if args.command == "parse":
            return cmd_parse(cfg, stdout)
        if args.command == "simulate":
            return cmd_simulate(cfg, stdout)
        if args.command == "bench":
            return cmd_bench(cfg, stdout)
        return cmd_repl(cfg, stdin, stdout)
    except (UsageError, ValueError) as exc:
        print(f"homeplan {args.command}: error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Planner backends and system-prompt construction.

Backends turn a :class:`PlannerRequest` into plan text. The built-in ones
are a gold-answer lookup, a fixed script, a seeded corrupting wrapper and a
client for any HTTP chat-completions server.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import socket
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

from homeplan.dsl import ActionCall, Plan, PlanSyntaxError, parse_plan, print_canonical
from homeplan.schema import Registry

API_KEY_ENV = "HOMEPLAN_API_KEY"
CORRUPTION_MARKER = "<corrupted>"


class PlannerError(RuntimeError):
    pass


class BackendUnavailable(PlannerError):
    pass


class PlannerTimeout(PlannerError):
    pass


class MissingGoldEntry(PlannerError):
    pass


@dataclass(frozen=True)
class DecodeParams:
    temperature: float = 0.0
    max_tokens: int = 256
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class PlannerRequest:
    system_prompt: str
    instruction: str
    decode: DecodeParams = DecodeParams()
    record_id: str | None = None  # lets seeded backends key randomness per record

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError("instruction must be non-empty")

    @property
    def key(self) -> str:
        return self.record_id if self.record_id is not None else self.instruction


@dataclass(frozen=True)
class PlannerResponse:
    plan_text: str
    latency: float = 0.0
    token_estimate: int | None = None


class Planner(Protocol):
    name: str

    def generate(self, request: PlannerRequest) -> str: ...


def generate_plan(backend: Planner, request: PlannerRequest) -> PlannerResponse:
    start = time.perf_counter()
    text = backend.generate(request)
    return PlannerResponse(
        plan_text=text,
        latency=time.perf_counter() - start,
        token_estimate=len(text.split()) if text else 0,
    )


# --- prompt ----------------------------------------------------------------


def build_system_prompt(
    registry: Registry,
    memory: Mapping[str, str] | None = None,
    shots: Sequence[tuple[str, str]] = (),
) -> str:
    """Deterministic prompt: action list, then memory, then worked examples."""
    lines = ["You are a household robot. Answer every instruction with a plan made of these actions, one per line.", ""]
    lines.append("# Actions")
    lines += [f"{s.signature} - {s.description}" for s in registry.schemas]
    lines.append("(° argument resolved by the object detector, * argument resolved by the vision-language model)")
    lines.append("")
    lines.append("# Memory")
    lines += [f"{key}: {value}" for key, value in (memory or {}).items()]
    if shots:
        lines.append("")
        lines.append("# Examples")
        for i, (instruction, plan) in enumerate(shots, 1):
            lines.append(f"## Example {i}")
            lines.append(f"Instruction: {instruction}")
            lines.append("Plan:")
            lines.append(plan.strip())
    return "\n".join(lines) + "\n"


# --- backends --------------------------------------------------------------


class GoldenPlanner:
    """Returns the gold plan of the dataset record matching the request."""

    name = "golden"

    def __init__(self, records: Iterable):
        self._by_id = {}
        self._by_instruction = {}
        for record in records:
            self._by_id[record.id] = record.gold_plan
            self._by_instruction.setdefault(record.instruction, record.gold_plan)

    def generate(self, request: PlannerRequest) -> str:
        if request.record_id is not None and request.record_id in self._by_id:
            return self._by_id[request.record_id]
        try:
            return self._by_instruction[request.instruction]
        except KeyError:
            raise MissingGoldEntry(f"no gold plan for instruction {request.instruction!r}") from None


class ScriptedPlanner:
    name = "scripted"

    def __init__(self, script: Mapping[str, str]):
        self._script = {self._norm(k): v for k, v in script.items()}

    @staticmethod
    def _norm(text: str) -> str:
        return " ".join(text.lower().split())

    def generate(self, request: PlannerRequest) -> str:
        try:
            return self._script[self._norm(request.instruction)]
        except KeyError:
            raise MissingGoldEntry(f"no scripted plan for {request.instruction!r}") from None


def _record_rng(seed: int, key: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}\x00{key}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def mutate_plan(plan: Plan, rng: random.Random) -> Plan:
    """Apply one mutation (drop, swap or argument replacement) that changes the canonical form."""
    steps = list(plan.steps)
    if not steps:
        return Plan((ActionCall("Respond", (CORRUPTION_MARKER,)),))

    options = ["drop"]
    printed = [print_canonical(Plan((s,))) for s in steps]
    swappable = [(i, j) for i in range(len(steps)) for j in range(i + 1, len(steps)) if printed[i] != printed[j]]
    if swappable:
        options.append("swap")
    replaceable = [(i, k) for i, s in enumerate(steps) for k, a in enumerate(s.args) if a != CORRUPTION_MARKER]
    if replaceable:
        options.append("replace")

    choice = rng.choice(options)
    if choice == "drop":
        del steps[rng.randrange(len(steps))]
    elif choice == "swap":
        i, j = rng.choice(swappable)
        steps[i], steps[j] = steps[j], steps[i]
    else:
        i, k = rng.choice(replaceable)
        args = list(steps[i].args)
        args[k] = CORRUPTION_MARKER
        steps[i] = ActionCall(steps[i].name, tuple(args))
    return Plan(tuple(steps))


class CorruptingPlanner:
    """Wraps another backend and corrupts each record's plan with probability ``rate``.

    Randomness is derived from (seed, record key) only, so results do not
    depend on call order or concurrency.
    """

    def __init__(self, inner: Planner, rate: float, seed: int = 0):
        if not 0.0 <= rate <= 1.0:
            raise ValueError("rate must be in [0, 1]")
        self.inner = inner
        self.rate = rate
        self.seed = seed
        self.name = f"corrupt({inner.name},p={rate},seed={seed})"

    def generate(self, request: PlannerRequest) -> str:
        text = self.inner.generate(request)
        rng = _record_rng(self.seed, request.key)
        if rng.random() >= self.rate:
            return text
        try:
            plan = parse_plan(text)
        except PlanSyntaxError:
            return text
        return print_canonical(mutate_plan(plan, rng))


@dataclass
class RemoteConfig:
    endpoint: str
    model: str = "default"
    temperature: float | None = None
    timeout: float = 30.0
    api_key_env: str = API_KEY_ENV
    extra_headers: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "RemoteConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


class RemotePlanner:
    """Client for an OpenAI-style ``/chat/completions`` endpoint.

    Request body: ``{"model", "messages": [system, user], "temperature",
    "max_tokens"[, "seed"]}``. The plan is ``choices[0].message.content``.
    """

    name = "remote"

    def __init__(self, config: RemoteConfig):
        self.config = config

    def payload(self, request: PlannerRequest) -> dict:
        temperature = self.config.temperature
        if temperature is None:
            temperature = request.decode.temperature
        body = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.instruction},
            ],
            "temperature": temperature,
            "max_tokens": request.decode.max_tokens,
        }
        if request.decode.seed is not None:
            body["seed"] = request.decode.seed
        return body

    def generate(self, request: PlannerRequest) -> str:
        headers = {"Content-Type": "application/json", **self.config.extra_headers}
        key = os.environ.get(self.config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        http_request = urllib.request.Request(
            self.config.endpoint,
            data=json.dumps(self.payload(request)).encode("utf-8"),
            headers=headers,
            method="POST",
        )
        try:
            with urllib.request.urlopen(http_request, timeout=self.config.timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as exc:
            raise BackendUnavailable(f"{self.config.endpoint} answered HTTP {exc.code}") from None
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                raise PlannerTimeout(f"{self.config.endpoint} timed out") from None
            raise BackendUnavailable(f"{self.config.endpoint} unreachable: {exc.reason}") from None
        except (socket.timeout, TimeoutError):
            raise PlannerTimeout(f"{self.config.endpoint} timed out") from None
        except OSError as exc:
            raise BackendUnavailable(f"{self.config.endpoint} unreachable: {exc}") from None
        try:
            return json.loads(raw)["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError):
            raise BackendUnavailable(f"{self.config.endpoint} returned a malformed response") from None

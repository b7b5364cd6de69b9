"""Parser, AST and canonical printer for plan texts.

Grammar::

    plan := sep* (step (sep+ step)*)? sep*
    step := NAME '(' (STRING (',' STRING)*)? ')'
    sep  := ',' | ';' | newline

Strings are single-quoted; ``\\'`` and ``\\\\`` are the only escapes, any
other backslash is kept literally. Whitespace-only string literals denote
the empty argument. Any identifier is accepted as an action name; checking
names against the action table is the validator's job.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

from homeplan.schema import Registry, schema_registry

Span = tuple[int, int]


def _normalize_arg(value: str) -> str:
    return "" if value.strip() == "" else value


@dataclass(frozen=True)
class ActionCall:
    name: str
    args: tuple[str, ...] = ()
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(_normalize_arg(a) for a in self.args))

    def __str__(self) -> str:
        return print_call(self)


@dataclass(frozen=True)
class Plan:
    steps: tuple[ActionCall, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))

    def __iter__(self) -> Iterator[ActionCall]:
        return iter(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, index):
        return self.steps[index]


class ErrorKind(str, enum.Enum):
    UNEXPECTED_TOKEN = "UnexpectedToken"
    UNTERMINATED_STRING = "UnterminatedString"
    MISSING_PAREN = "MissingParen"
    TRAILING_GARBAGE = "TrailingGarbage"


@dataclass(frozen=True)
class ParseError:
    kind: ErrorKind
    message: str
    span: Span

    def render(self, text: str) -> str:
        line, col = line_col(text, self.span[0])
        return f"{line}:{col}: {self.kind.value}: {self.message}"


class PlanSyntaxError(ValueError):
    """Raised by :func:`parse_plan`; carries every diagnosable error."""

    def __init__(self, errors: list[ParseError], text: str = ""):
        self.errors = list(errors)
        self.text = text
        first = self.errors[0]
        more = f" (+{len(self.errors) - 1} more)" if len(self.errors) > 1 else ""
        super().__init__(first.render(text) + more)


def line_col(text: str, offset: int) -> tuple[int, int]:
    """1-based line and column of a character offset."""
    offset = max(0, min(offset, len(text)))
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


# --- lexer -----------------------------------------------------------------

NAME, LPAREN, RPAREN, COMMA, SEMI, NEWLINE, STRING = (
    "NAME", "(", ")", ",", ";", "NEWLINE", "STRING"
)
BAD_STRING, UNTERMINATED, BAD_CHAR, EOF = "BAD_STRING", "UNTERMINATED", "BAD_CHAR", "EOF"

_SEPARATORS = {COMMA, SEMI, NEWLINE}
_PUNCT = {"(": LPAREN, ")": RPAREN, ",": COMMA, ";": SEMI, "\n": NEWLINE}


@dataclass(frozen=True)
class _Token:
    type: str
    value: str
    start: int
    end: int


def _is_name_start(ch: str) -> bool:
    return ch == "_" or ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _is_name_char(ch: str) -> bool:
    return _is_name_start(ch) or ("0" <= ch <= "9")


def _read_quoted(text: str, i: int, quote: str) -> tuple[str, int, bool]:
    """Scan a quoted literal starting at the opening quote.

    Returns (decoded value, end offset, terminated).
    """
    n = len(text)
    j = i + 1
    out = []
    while j < n:
        ch = text[j]
        if ch == "\\" and j + 1 < n and text[j + 1] in (quote, "\\"):
            out.append(text[j + 1])
            j += 2
        elif ch == quote:
            return "".join(out), j + 1, True
        else:
            out.append(ch)
            j += 1
    return "".join(out), n, False


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in _PUNCT:
            tokens.append(_Token(_PUNCT[ch], ch, i, i + 1))
            i += 1
        elif ch.isspace():
            i += 1
        elif _is_name_start(ch):
            j = i + 1
            while j < n and _is_name_char(text[j]):
                j += 1
            tokens.append(_Token(NAME, text[i:j], i, j))
            i = j
        elif ch in ("'", '"'):
            value, j, closed = _read_quoted(text, i, ch)
            if not closed:
                kind = UNTERMINATED
            else:
                kind = STRING if ch == "'" else BAD_STRING
            tokens.append(_Token(kind, value, i, j))
            i = j
        else:
            tokens.append(_Token(BAD_CHAR, ch, i, i + 1))
            i += 1
    tokens.append(_Token(EOF, "", n, n))
    return tokens


# --- parser ----------------------------------------------------------------


def _describe(tok: _Token) -> str:
    if tok.type == EOF:
        return "end of input"
    if tok.type == NEWLINE:
        return "end of line"
    if tok.type == BAD_STRING:
        return "double-quoted string (use single quotes)"
    return repr(tok.value)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.errors: list[ParseError] = []

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.type != EOF:
            self.pos += 1
        return tok

    def error(self, kind: ErrorKind, message: str, start: int, end: int) -> None:
        self.errors.append(ParseError(kind, message, (start, end)))

    def skip_separators(self) -> None:
        while self.tok.type in _SEPARATORS:
            self.advance()

    def recover(self) -> None:
        # Skip the rest of a broken step: up to and including its ')' or up
        # to the next newline/semicolon.
        while self.tok.type not in (EOF, NEWLINE, SEMI):
            if self.advance().type == RPAREN:
                return

    def parse(self) -> Plan:
        steps = []
        self.skip_separators()
        while self.tok.type != EOF:
            if self.tok.type == UNTERMINATED:
                self.unterminated(self.advance())
                continue
            call = self.step()
            if call is not None:
                steps.append(call)
            self.after_step()
        return Plan(tuple(steps))

    def unterminated(self, tok: _Token) -> None:
        self.error(ErrorKind.UNTERMINATED_STRING, "string literal is never closed", tok.start, tok.end)

    def after_step(self) -> None:
        if self.tok.type in _SEPARATORS:
            self.skip_separators()
            return
        if self.tok.type == EOF:
            return
        start = self.tok.start
        end = start
        while self.tok.type not in (EOF, NEWLINE, SEMI, COMMA):
            if self.tok.type == UNTERMINATED:
                break
            end = self.advance().end
        if end > start:
            self.error(
                ErrorKind.TRAILING_GARBAGE,
                "unexpected text after a complete step; steps are separated by ',', ';' or a newline",
                start,
                end,
            )
        self.skip_separators()

    def step(self) -> ActionCall | None:
        name_tok = self.tok
        if name_tok.type != NAME:
            self.error(
                ErrorKind.UNEXPECTED_TOKEN,
                f"expected an action name, found {_describe(name_tok)}",
                name_tok.start,
                name_tok.end,
            )
            self.advance()
            self.recover()
            return None
        self.advance()
        if self.tok.type != LPAREN:
            tok = self.tok
            if tok.type in _SEPARATORS or tok.type == EOF:
                self.error(ErrorKind.MISSING_PAREN, f"expected '(' after {name_tok.value!r}", name_tok.end, name_tok.end)
            else:
                self.error(ErrorKind.UNEXPECTED_TOKEN, f"expected '(' after {name_tok.value!r}, found {_describe(tok)}", tok.start, tok.end)
                self.recover()
            return None
        self.advance()

        args: list[str] = []
        ok = True
        expect_value = self.tok.type != RPAREN
        while True:
            tok = self.tok
            if expect_value:
                if tok.type in (STRING, BAD_STRING):
                    if tok.type == BAD_STRING:
                        ok = False
                        self.error(ErrorKind.UNEXPECTED_TOKEN, f"expected a single-quoted string, found {_describe(tok)}", tok.start, tok.end)
                    args.append(tok.value)
                    self.advance()
                    expect_value = False
                    continue
                if tok.type == UNTERMINATED:
                    self.advance()
                    self.unterminated(tok)
                    return None
            elif tok.type == COMMA:
                self.advance()
                expect_value = True
                continue
            elif tok.type == RPAREN:
                self.advance()
                break
            if tok.type in (NEWLINE, SEMI, EOF):
                self.error(ErrorKind.MISSING_PAREN, f"missing ')' to close {name_tok.value}(", tok.start, tok.start)
                return None
            wanted = "a single-quoted string" if expect_value else "',' or ')'"
            self.error(ErrorKind.UNEXPECTED_TOKEN, f"expected {wanted}, found {_describe(tok)}", tok.start, tok.end)
            if tok.type == UNTERMINATED:
                self.advance()
                self.unterminated(tok)
                return None
            self.recover()
            return None

        if not ok:
            return None
        return ActionCall(name_tok.value, tuple(args), (name_tok.start, self.tokens[self.pos - 1].end))


def parse_plan(text: str) -> Plan:
    """Parse plan text; raise :class:`PlanSyntaxError` listing every error found."""
    parser = _Parser(text)
    plan = parser.parse()
    if parser.errors:
        raise PlanSyntaxError(parser.errors, text)
    return plan


def check_plan(text: str) -> list[ParseError]:
    """Return the parse errors of ``text`` (empty when it parses)."""
    parser = _Parser(text)
    parser.parse()
    return parser.errors


# --- printer ---------------------------------------------------------------


def quote(value: str) -> str:
    return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"


def print_call(call: ActionCall, registry: Registry | None = None) -> str:
    registry = registry or schema_registry()
    return f"{registry.canonical(call.name)}({', '.join(quote(a) for a in call.args)})"


def print_canonical(plan: Plan, registry: Registry | None = None) -> str:
    """One step per line, canonical action casing, no trailing separator."""
    return "\n".join(print_call(call, registry) for call in plan)


def canonicalize(text: str) -> str:
    return print_canonical(parse_plan(text))

"""Textual policy language: tokenizer, parser, and canonical renderer.

A policy document groups clauses under ``@user`` headers::

    @alice
    restrict :: ~ : thermostat_1 : temperature notin [60-70] ;
    demand :: kyle : bulb_3 : time in [7:00pm-7:00am] ;

``~`` is the empty slot (all users / no conditions). Conditions are
numeric intervals (``in``/``notin``), 12-hour time windows that may wrap
midnight, or single-token membership (``location in [Home]``). Rejected
clauses are reported as diagnostics and skipped; parsing continues.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class PolicyLangError(ValueError):
    """Raised by the standalone condition parser on malformed input."""


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: Severity = Severity.ERROR

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity.value}: {self.message}"


@dataclass(frozen=True)
class PolicySource:
    text: str
    origin: str = "<policy>"


class ConditionForm(str, Enum):
    NUMERIC = "numeric"
    TIME = "time"
    TOKEN = "token"


@dataclass(frozen=True)
class ConditionAst:
    """Surface-level condition as written, before domain binding."""

    attribute: str
    form: ConditionForm
    positive: bool = True
    low: int | None = None
    high: int | None = None
    token: str | None = None


@dataclass(frozen=True)
class ClauseAst:
    owner: str
    action: str                      # demand | restrict | location
    targets: tuple[str, ...]         # empty tuple = all users
    devices: tuple[str, ...]
    conditions: tuple[ConditionAst, ...]


ACTIONS = ("demand", "restrict", "location")


# ---------------------------------------------------------------------------
# Time-of-day helpers (12-hour surface form, minutes internally)
# ---------------------------------------------------------------------------

_TIME_RE = re.compile(r"(\d{1,2}):(\d{2})(am|pm)", re.IGNORECASE)


def clock_to_minutes(hour: int, minute: int, half: str) -> int:
    if not (1 <= hour <= 12) or not (0 <= minute <= 59):
        raise PolicyLangError(f"invalid clock time {hour}:{minute:02d}{half}")
    hour = hour % 12
    if half.lower() == "pm":
        hour += 12
    return hour * 60 + minute


def minutes_to_clock(total: int) -> str:
    hour24, minute = divmod(total % 1440, 60)
    half = "am" if hour24 < 12 else "pm"
    hour = hour24 % 12 or 12
    return f"{hour}:{minute:02d}{half}"


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------


class TokKind(str, Enum):
    IDENT = "ident"
    NUMBER = "number"
    TIME = "time"
    DCOLON = "::"
    COLON = ":"
    COMMA = ","
    SEMI = ";"
    TILDE = "~"
    LBRACK = "["
    RBRACK = "]"
    DASH = "-"
    AT = "@"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokKind
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<time>\d{1,2}:\d{2}(?:am|pm))
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<dcolon>::)
  | (?P<sym>[:,;~\[\]\-@])
    """,
    re.VERBOSE | re.IGNORECASE,
)

_SYMBOLS = {
    ":": TokKind.COLON, ",": TokKind.COMMA, ";": TokKind.SEMI, "~": TokKind.TILDE,
    "[": TokKind.LBRACK, "]": TokKind.RBRACK, "-": TokKind.DASH, "@": TokKind.AT,
}


def tokenize(text: str) -> tuple[list[Token], list[ParseDiagnostic]]:
    tokens: list[Token] = []
    diagnostics: list[ParseDiagnostic] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            diagnostics.append(
                ParseDiagnostic(line, col, f"unexpected character {text[pos]!r}")
            )
            pos += 1
            continue
        col = pos - line_start + 1
        if m.lastgroup == "ws" or m.lastgroup == "comment":
            chunk = m.group()
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                line_start = pos + chunk.rindex("\n") + 1
        elif m.lastgroup == "time":
            tokens.append(Token(TokKind.TIME, m.group(), line, col))
        elif m.lastgroup == "number":
            tokens.append(Token(TokKind.NUMBER, m.group(), line, col))
        elif m.lastgroup == "ident":
            tokens.append(Token(TokKind.IDENT, m.group(), line, col))
        elif m.lastgroup == "dcolon":
            tokens.append(Token(TokKind.DCOLON, "::", line, col))
        else:
            tokens.append(Token(_SYMBOLS[m.group()], m.group(), line, col))
        pos = m.end()
    tokens.append(Token(TokKind.EOF, "", line, len(text) - line_start + 1))
    return tokens, diagnostics


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _ClauseError(Exception):
    """Internal: abandon the current clause and resynchronize."""

    def __init__(self, diagnostic: ParseDiagnostic):
        self.diagnostic = diagnostic


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[ParseDiagnostic] = []

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokKind.EOF:
            self.pos += 1
        return tok

    def expect(self, kind: TokKind, what: str) -> Token:
        tok = self.peek()
        if tok.kind is not kind:
            raise _ClauseError(ParseDiagnostic(
                tok.line, tok.column,
                f"expected {what}, found {tok.text!r}" if tok.text
                else f"expected {what}, found end of input",
            ))
        return self.advance()

    def fail(self, tok: Token, message: str) -> "_ClauseError":
        return _ClauseError(ParseDiagnostic(tok.line, tok.column, message))

    # -- grammar -----------------------------------------------------------

    def document(self) -> list[ClauseAst]:
        clauses: list[ClauseAst] = []
        owner: str | None = None
        while self.peek().kind is not TokKind.EOF:
            tok = self.peek()
            if tok.kind is TokKind.AT:
                self.advance()
                name = self.peek()
                if name.kind is not TokKind.IDENT:
                    self.diagnostics.append(ParseDiagnostic(
                        name.line, name.column, "expected user id after '@'"))
                    self.resync()
                    continue
                self.advance()
                owner = name.text
                continue
            try:
                if owner is None:
                    raise self.fail(tok, "clause appears before any '@user' header")
                clauses.append(self.clause(owner))
            except _ClauseError as err:
                self.diagnostics.append(err.diagnostic)
                self.resync()
        return clauses

    def resync(self) -> None:
        """Skip to just past the next ';', or stop at a header/EOF."""
        while True:
            tok = self.peek()
            if tok.kind is TokKind.EOF or tok.kind is TokKind.AT:
                return
            self.advance()
            if tok.kind is TokKind.SEMI:
                return

    def clause(self, owner: str) -> ClauseAst:
        tok = self.peek()
        if tok.kind is not TokKind.IDENT or tok.text not in ACTIONS:
            raise self.fail(
                tok, f"unknown action keyword {tok.text!r} (expected demand, restrict, or location)")
        action = self.advance().text
        self.expect(TokKind.DCOLON, "'::' after action")
        targets = self.ident_list(allow_empty=True, what="target user")
        self.expect(TokKind.COLON, "':' after targets")
        devices = self.ident_list(allow_empty=False, what="device")
        self.expect(TokKind.COLON, "':' after devices")
        conditions = self.condition_list()
        self.expect(TokKind.SEMI, "';' to terminate the clause")
        return ClauseAst(owner, action, targets, devices, conditions)

    def ident_list(self, allow_empty: bool, what: str) -> tuple[str, ...]:
        tok = self.peek()
        if tok.kind is TokKind.TILDE:
            if not allow_empty:
                raise self.fail(tok, f"{what} list cannot be empty")
            self.advance()
            return ()
        names = [self.expect(TokKind.IDENT, what).text]
        while self.peek().kind is TokKind.COMMA:
            self.advance()
            names.append(self.expect(TokKind.IDENT, what).text)
        return tuple(names)

    def condition_list(self) -> tuple[ConditionAst, ...]:
        if self.peek().kind is TokKind.TILDE:
            self.advance()
            return ()
        conds = [self.condition()]
        while self.peek().kind is TokKind.COMMA:
            self.advance()
            conds.append(self.condition())
        return tuple(conds)

    def condition(self) -> ConditionAst:
        attr = self.expect(TokKind.IDENT, "condition attribute")
        op = self.peek()
        if op.kind is not TokKind.IDENT or op.text not in ("in", "notin"):
            raise self.fail(op, f"expected 'in' or 'notin', found {op.text!r}")
        positive = self.advance().text == "in"
        self.expect(TokKind.LBRACK, "'['")
        tok = self.peek()
        if tok.kind is TokKind.TIME:
            start = self.parse_time(self.advance())
            self.expect(TokKind.DASH, "'-' between window bounds")
            end = self.parse_time(self.expect(TokKind.TIME, "window end time"))
            self.expect(TokKind.RBRACK, "']'")
            if start == end:
                raise self.fail(tok, "zero-length time window")
            return ConditionAst(attr.text, ConditionForm.TIME, positive, start, end)
        if tok.kind is TokKind.NUMBER:
            low = int(self.advance().text)
            self.expect(TokKind.DASH, "'-' between interval bounds")
            high = int(self.expect(TokKind.NUMBER, "interval upper bound").text)
            self.expect(TokKind.RBRACK, "']'")
            if low > high:
                raise self.fail(tok, f"inverted interval [{low}-{high}]")
            return ConditionAst(attr.text, ConditionForm.NUMERIC, positive, low, high)
        if tok.kind is TokKind.IDENT:
            if not positive:
                raise self.fail(tok, "'notin' takes an interval, not a set token")
            token = self.advance().text
            self.expect(TokKind.RBRACK, "']'")
            return ConditionAst(attr.text, ConditionForm.TOKEN, True, token=token)
        raise self.fail(tok, f"malformed condition value {tok.text!r}")

    def parse_time(self, tok: Token) -> int:
        m = _TIME_RE.fullmatch(tok.text)
        assert m is not None  # tokenizer guarantees the shape
        try:
            return clock_to_minutes(int(m.group(1)), int(m.group(2)), m.group(3))
        except PolicyLangError as err:
            raise _ClauseError(ParseDiagnostic(tok.line, tok.column, str(err)))


def parse_policy_set(source: PolicySource | str) -> tuple[list[ClauseAst], list[ParseDiagnostic]]:
    """Parse a policy document into clause ASTs plus diagnostics.

    Diagnostics are non-empty iff at least one clause was rejected;
    accepted clauses come back in document order.
    """
    text = source.text if isinstance(source, PolicySource) else source
    tokens, diagnostics = tokenize(text)
    parser = _Parser(tokens)
    clauses = parser.document()
    return clauses, diagnostics + parser.diagnostics


def parse_condition(text: str) -> ConditionAst:
    """Parse a single condition such as ``temperature notin [60-70]``."""
    tokens, tok_diags = tokenize(text)
    if tok_diags:
        raise PolicyLangError(str(tok_diags[0]))
    parser = _Parser(tokens)
    try:
        cond = parser.condition()
    except _ClauseError as err:
        raise PolicyLangError(str(err.diagnostic)) from None
    trailing = parser.peek()
    if trailing.kind is not TokKind.EOF:
        raise PolicyLangError(
            f"{trailing.line}:{trailing.column}: trailing input {trailing.text!r}")
    return cond


# ---------------------------------------------------------------------------
# Renderer
# ---------------------------------------------------------------------------


def render_condition(cond: ConditionAst) -> str:
    op = "in" if cond.positive else "notin"
    if cond.form is ConditionForm.NUMERIC:
        return f"{cond.attribute} {op} [{cond.low}-{cond.high}]"
    if cond.form is ConditionForm.TIME:
        return (f"{cond.attribute} {op} "
                f"[{minutes_to_clock(cond.low)}-{minutes_to_clock(cond.high)}]")
    return f"{cond.attribute} in [{cond.token}]"


def render_clause(clause: ClauseAst) -> str:
    """Canonical single-line form; parse(render(x)) equals x structurally."""
    targets = ", ".join(clause.targets) if clause.targets else "~"
    devices = ", ".join(clause.devices)
    conditions = (
        ", ".join(render_condition(c) for c in clause.conditions)
        if clause.conditions else "~"
    )
    return f"{clause.action} :: {targets} : {devices} : {conditions} ;"


def render_policy_set(clauses: list[ClauseAst]) -> str:
    """Render clauses grouped under their owners' headers, document order."""
    lines: list[str] = []
    current: str | None = None
    for clause in clauses:
        if clause.owner != current:
            current = clause.owner
            lines.append(f"@{current}")
        lines.append(render_clause(clause))
    return "\n".join(lines) + ("\n" if lines else "")

"""RVL, the line-oriented analysis script language: lexer, parser, formatter.

One statement per physical line, no control flow. Comments and blank
lines parse to statements of their own so a script's line numbering is
identical to the saved file. Grammar:

    load NAME = csv("path")
    let NAME = EXPR
    print EXPR
    set_missing TABLE.COL where == NUMBER
    ci diff_means(TABLE.COL by TABLE.COL) level P [label "text"]
    ci_bonf diff_means(TABLE.COL by TABLE.COL) level P k N [label "text"]
    model NAME = lm(RESPONSE ~ PRED [+ PRED ...]) on TABLE
    # comment

EXPR is a number, string, identifier, TABLE.COL reference, call
NAME(EXPR, ...), or formula. Parsing is pure: same bytes, same tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class ParseError(Exception):
    """Syntax error; parsing stops at the first one."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected

    def __str__(self) -> str:
        return f"line {self.line}, col {self.col}: {self.message}"


# --- expression nodes ---------------------------------------------------------


@dataclass(frozen=True)
class NumberLit:
    value: float


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class ColumnRef:
    table: str
    column: str


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


@dataclass(frozen=True)
class Formula:
    response: str
    predictors: tuple[str, ...]

    def __post_init__(self):
        if not self.predictors:
            raise ValueError("formula needs at least one predictor")


Expr = NumberLit | StringLit | Ident | ColumnRef | Call | Formula


# --- statement payloads ---------------------------------------------------------


@dataclass(frozen=True)
class Load:
    name: str
    path: str


@dataclass(frozen=True)
class Let:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Print:
    expr: Expr


@dataclass(frozen=True)
class SetMissing:
    table: str
    column: str
    sentinel: float


@dataclass(frozen=True)
class Ci:
    value: ColumnRef
    group: ColumnRef
    level: float
    k: int = 1
    label: str | None = None
    bonferroni: bool = False


@dataclass(frozen=True)
class Model:
    name: str
    formula: Formula
    table: str


@dataclass(frozen=True)
class Comment:
    text: str  # stripped line including the leading '#'


@dataclass(frozen=True)
class Blank:
    pass


@dataclass(frozen=True)
class Stmt:
    line_no: int
    kind: str  # Load | Let | Print | SetMissing | Ci | CiBonf | Model | Comment | Blank
    payload: object
    span: tuple[int, int] = field(default=(0, 0), compare=False)

    def is_code(self) -> bool:
        return self.kind not in ("Comment", "Blank")


@dataclass(frozen=True)
class Script:
    lines: tuple[Stmt, ...]
    source_name: str = field(default="<script>", compare=False)

    def __len__(self) -> int:
        return len(self.lines)

    def stmt(self, line_no: int) -> Stmt:
        return self.lines[line_no - 1]


# --- lexer ---------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<WS>\s+)
    | (?P<NUMBER>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
    | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<STRING>"[^"\n]*")
    | (?P<EQEQ>==)
    | (?P<EQ>=)
    | (?P<LPAREN>\()
    | (?P<RPAREN>\))
    | (?P<COMMA>,)
    | (?P<DOT>\.)
    | (?P<TILDE>~)
    | (?P<PLUS>\+)
    | (?P<MINUS>-)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int  # 1-based column in the line


def _lex(text: str, line_no: int, col_offset: int = 0) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}", line_no, col_offset + pos + 1
            )
        kind = m.lastgroup
        if kind != "WS":
            toks.append(_Tok(kind, m.group(), col_offset + pos + 1))
        pos = m.end()
    toks.append(_Tok("EOL", "", col_offset + len(text) + 1))
    return toks


class _LineParser:
    """Recursive-descent parser over one line's tokens."""

    def __init__(self, toks: list[_Tok], line_no: int):
        self.toks = toks
        self.pos = 0
        self.line_no = line_no

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def advance(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, expected: tuple[str, ...] = ()) -> ParseError:
        return ParseError(message, self.line_no, self.peek().col, expected)

    def expect(self, kind: str, what: str | None = None) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            want = what or kind.lower()
            got = tok.text or "end of line"
            raise self.fail(f"expected {want}, got {got!r}", (want,))
        return self.advance()

    def keyword(self, word: str) -> _Tok:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.text != word:
            got = tok.text or "end of line"
            raise self.fail(f"expected {word!r}, got {got!r}", (word,))
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.text == word

    def done(self) -> None:
        tok = self.peek()
        if tok.kind != "EOL":
            raise self.fail(f"unexpected trailing input {tok.text!r}", ("end of line",))

    # expressions

    def number(self) -> float:
        neg = False
        if self.peek().kind == "MINUS":
            self.advance()
            neg = True
        tok = self.expect("NUMBER", "number")
        val = float(tok.text)
        return -val if neg else val

    def string(self) -> str:
        tok = self.expect("STRING", "quoted string")
        return tok.text[1:-1]

    def column_ref(self) -> ColumnRef:
        table = self.expect("IDENT", "table name").text
        self.expect("DOT", "'.'")
        if self.peek().kind == "STRING":
            column = self.string()
        else:
            column = self.expect("IDENT", "column name").text
        return ColumnRef(table, column)

    def expr(self) -> Expr:
        tok = self.peek()
        if tok.kind in ("NUMBER", "MINUS"):
            return NumberLit(self.number())
        if tok.kind == "STRING":
            return StringLit(self.string())
        if tok.kind == "IDENT":
            name = self.advance().text
            nxt = self.peek()
            if nxt.kind == "LPAREN":
                return self.call(name)
            if nxt.kind == "DOT":
                self.advance()
                if self.peek().kind == "STRING":
                    return ColumnRef(name, self.string())
                column = self.expect("IDENT", "column name").text
                return ColumnRef(name, column)
            if nxt.kind == "TILDE":
                self.advance()
                return self.formula_tail(name)
            return Ident(name)
        raise self.fail(f"expected expression, got {tok.text or 'end of line'!r}", ("expression",))

    def call(self, name: str) -> Call:
        self.expect("LPAREN", "'('")
        args = []
        if self.peek().kind != "RPAREN":
            args.append(self.expr())
            while self.peek().kind == "COMMA":
                self.advance()
                args.append(self.expr())
        self.expect("RPAREN", "')'")
        return Call(name, tuple(args))

    def formula_tail(self, response: str) -> Formula:
        preds = [self.expect("IDENT", "predictor name").text]
        while self.peek().kind == "PLUS":
            self.advance()
            preds.append(self.expect("IDENT", "predictor name").text)
        return Formula(response, tuple(preds))

    # statements

    def statement(self) -> tuple[str, object]:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.fail(
                f"expected statement keyword, got {tok.text or 'end of line'!r}",
                ("load", "let", "print", "set_missing", "ci", "ci_bonf", "model"),
            )
        word = tok.text
        if word == "load":
            return "Load", self.parse_load()
        if word == "let":
            return "Let", self.parse_let()
        if word == "print":
            return "Print", self.parse_print()
        if word == "set_missing":
            return "SetMissing", self.parse_set_missing()
        if word == "ci":
            return "Ci", self.parse_ci(bonferroni=False)
        if word == "ci_bonf":
            return "CiBonf", self.parse_ci(bonferroni=True)
        if word == "model":
            return "Model", self.parse_model()
        raise self.fail(
            f"unknown statement {word!r}",
            ("load", "let", "print", "set_missing", "ci", "ci_bonf", "model"),
        )

    def parse_load(self) -> Load:
        self.keyword("load")
        name = self.expect("IDENT", "table name").text
        self.expect("EQ", "'='")
        self.keyword("csv")
        self.expect("LPAREN", "'('")
        path = self.string()
        self.expect("RPAREN", "')'")
        self.done()
        return Load(name, path)

    def parse_let(self) -> Let:
        self.keyword("let")
        name = self.expect("IDENT", "name").text
        self.expect("EQ", "'='")
        e = self.expr()
        self.done()
        return Let(name, e)

    def parse_print(self) -> Print:
        self.keyword("print")
        e = self.expr()
        self.done()
        return Print(e)

    def parse_set_missing(self) -> SetMissing:
        self.keyword("set_missing")
        ref = self.column_ref()
        self.keyword("where")
        self.expect("EQEQ", "'=='")
        sentinel = self.number()
        self.done()
        return SetMissing(ref.table, ref.column, sentinel)

    def parse_ci(self, bonferroni: bool) -> Ci:
        self.keyword("ci_bonf" if bonferroni else "ci")
        self.keyword("diff_means")
        self.expect("LPAREN", "'('")
        value = self.column_ref()
        self.keyword("by")
        group = self.column_ref()
        self.expect("RPAREN", "')'")
        self.keyword("level")
        level_col = self.peek().col
        level = self.number()
        if not 0.0 < level < 1.0:
            raise ParseError(
                "confidence level must lie strictly between 0 and 1", self.line_no, level_col
            )
        k = 1
        if bonferroni:
            self.keyword("k")
            ktok = self.expect("NUMBER", "comparison count")
            if not ktok.text.isdigit() or int(ktok.text) < 1:
                raise ParseError(
                    "comparison count k must be a positive integer", self.line_no, ktok.col
                )
            k = int(ktok.text)
        label = None
        if self.at_keyword("label"):
            self.advance()
            label = self.string()
        self.done()
        return Ci(value, group, level, k, label, bonferroni)

    def parse_model(self) -> Model:
        self.keyword("model")
        name = self.expect("IDENT", "model name").text
        self.expect("EQ", "'='")
        self.keyword("lm")
        self.expect("LPAREN", "'('")
        response = self.expect("IDENT", "response name").text
        self.expect("TILDE", "'~'")
        formula = self.formula_tail(response)
        self.expect("RPAREN", "')'")
        self.keyword("on")
        table = self.expect("IDENT", "table name").text
        self.done()
        return Model(name, formula, table)


def _parse_line(raw: str, line_no: int, byte_offset: int) -> Stmt:
    stripped = raw.strip()
    lead = len(raw) - len(raw.lstrip())
    span_off = byte_offset + len(raw[:lead].encode("utf-8"))
    span = (span_off, len(stripped.encode("utf-8")))
    if stripped == "":
        return Stmt(line_no, "Blank", Blank(), (byte_offset, 0))
    if stripped.startswith("#"):
        return Stmt(line_no, "Comment", Comment(stripped), span)
    parser = _LineParser(_lex(stripped, line_no, col_offset=lead), line_no)
    kind, payload = parser.statement()
    return Stmt(line_no, kind, payload, span)


def parse_script(text: str, source_name: str = "<script>") -> Script:
    """Parse a whole script; one Stmt per physical line, first error aborts."""
    stmts = []
    offset = 0
    for i, raw in enumerate(text.splitlines(), start=1):
        stmts.append(_parse_line(raw, i, offset))
        offset += len(raw.encode("utf-8")) + 1
    return Script(tuple(stmts), source_name)


def parse_expr(text: str) -> Expr:
    """Parse a single expression (the session's scratch-line evaluator)."""
    parser = _LineParser(_lex(text.strip(), 1), 1)
    e = parser.expr()
    parser.done()
    return e


def parse_statement(text: str, line_no: int = 1) -> Stmt:
    """Parse one line as a statement; rejects embedded newlines."""
    if "\n" in text or "\r" in text:
        raise ParseError("statement must be a single line", line_no, 1)
    return _parse_line(text, line_no, 0)


# --- formatter -------------------------------------------------------------------


def format_number(v: float) -> str:
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError("non-finite literal cannot be formatted")
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def format_expr(e: Expr) -> str:
    if isinstance(e, NumberLit):
        return format_number(e.value)
    if isinstance(e, StringLit):
        return f'"{e.value}"'
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, ColumnRef):
        col = e.column if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", e.column) else f'"{e.column}"'
        return f"{e.table}.{col}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Formula):
        return f"{e.response} ~ {' + '.join(e.predictors)}"
    raise TypeError(f"not an expression: {e!r}")


def format_stmt(s: Stmt) -> str:
    p = s.payload
    if s.kind == "Blank":
        return ""
    if s.kind == "Comment":
        return p.text
    if s.kind == "Load":
        return f'load {p.name} = csv("{p.path}")'
    if s.kind == "Let":
        return f"let {p.name} = {format_expr(p.expr)}"
    if s.kind == "Print":
        return f"print {format_expr(p.expr)}"
    if s.kind == "SetMissing":
        ref = format_expr(ColumnRef(p.table, p.column))
        return f"set_missing {ref} where == {format_number(p.sentinel)}"
    if s.kind in ("Ci", "CiBonf"):
        head = "ci_bonf" if p.bonferroni else "ci"
        out = (
            f"{head} diff_means({format_expr(p.value)} by {format_expr(p.group)})"
            f" level {format_number(p.level)}"
        )
        if p.bonferroni:
            out += f" k {p.k}"
        if p.label is not None:
            out += f' label "{p.label}"'
        return out
    if s.kind == "Model":
        return f"model {p.name} = lm({format_expr(p.formula)}) on {p.table}"
    raise TypeError(f"unknown statement kind {s.kind!r}")


def format_script(s: Script) -> str:
    """Canonical text: single spaces, no trailing whitespace, LF endings."""
    if not s.lines:
        return ""
    return "\n".join(format_stmt(st) for st in s.lines) + "\n"

"""Syntax of the analyzed language: AST, parser, printer, labels, fields.

The language is a small C-like imperative language over word-sized values:
assignments, field-list mallocs, frees, if/else, while, and asserts.  All
cells are one word; a field is an offset in word units.  ``e->f`` is sugar
for ``(*e).f`` and is stored desugared.

Statements are labeled with unique integers in pre-order; blocks are plain
statement tuples.  Labels do not take part in structural equality, so
``parse(pretty(p)) == p`` holds for any well-labeled program.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Sequence

from .errors import ParseError, UnknownFieldError
from .symbols import Sym

# Word size in address units; all cells are one word and addresses are
# word-aligned.
WORD = 4

# Display name of the designated zero-offset field.
ZERO_FIELD = "∅"  # ∅


# ---------------------------------------------------------------------------
# Field layout


class FieldTable:
    """Program-wide mapping from field names to word offsets.

    Every malloc field list and every inductive-definition rule registers its
    fields at consecutive offsets in declaration order.  A name must resolve
    to the same offset everywhere in one program; conflicting declarations
    are rejected.
    """

    def __init__(self) -> None:
        self._offsets: dict[str, int] = {ZERO_FIELD: 0}

    def register_block(self, names: Sequence[str]) -> None:
        for i, name in enumerate(names):
            self.register(name, i)

    def register(self, name: str, offset: int) -> None:
        prev = self._offsets.get(name)
        if prev is not None and prev != offset:
            raise ParseError(
                f"field {name!r} declared at offset {offset} but previously at {prev}", 0, 0
            )
        self._offsets[name] = offset

    def offset(self, name: str) -> int:
        try:
            return self._offsets[name]
        except KeyError:
            raise UnknownFieldError(name) from None

    def known(self, name: str) -> bool:
        return name in self._offsets

    def names(self) -> list[str]:
        return sorted(self._offsets)

    def name_at(self, offset: int) -> str:
        """Best-effort display name for an offset (rendering only)."""
        named = sorted(n for n, o in self._offsets.items() if o == offset and n != ZERO_FIELD)
        if len(named) == 1:
            return named[0]
        if offset == 0:
            return ZERO_FIELD
        return f"+{offset}"


# ---------------------------------------------------------------------------
# Expressions and locations

BINOPS = ("+", "-", "==", "!=", "<", "<=", ">", ">=")


class LocExpr:
    __slots__ = ()


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Var(LocExpr):
    name: str


@dataclass(frozen=True)
class FieldOf(LocExpr):
    base: LocExpr
    field: str


@dataclass(frozen=True)
class Deref(LocExpr):
    addr: "Expr"


@dataclass(frozen=True)
class AddrNode(LocExpr):
    """Symbolic-only base case: the cell whose address is a graph node.

    Never produced by the parser; substituted for program variables when an
    assignment is handed to the abstract layers.
    """

    sym: Sym


@dataclass(frozen=True)
class Loc(Expr):
    loc: LocExpr


@dataclass(frozen=True)
class AddrOf(Expr):
    loc: LocExpr


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr


def arrow(base: Expr, fld: str) -> LocExpr:
    """The ``e->f`` sugar: (*e).f."""
    return FieldOf(Deref(base), fld)


# ---------------------------------------------------------------------------
# Statements


@dataclass(eq=True)
class Stmt:
    label: int = field(default=-1, compare=False, kw_only=True)


@dataclass(eq=True)
class Assign(Stmt):
    loc: LocExpr
    expr: Expr


@dataclass(eq=True)
class Malloc(Stmt):
    loc: LocExpr
    fields: tuple[str, ...]


@dataclass(eq=True)
class Free(Stmt):
    loc: LocExpr


@dataclass(eq=True)
class If(Stmt):
    cond: Expr
    then_body: tuple[Stmt, ...]
    else_body: tuple[Stmt, ...]


@dataclass(eq=True)
class While(Stmt):
    cond: Expr
    body: tuple[Stmt, ...]


@dataclass(eq=True)
class Assert(Stmt):
    cond: Expr


@dataclass(eq=True)
class Program:
    variables: tuple[str, ...]
    body: tuple[Stmt, ...]
    field_table: FieldTable = field(compare=False, default_factory=FieldTable)

    def __post_init__(self) -> None:
        assign_labels(self)

    @property
    def exit_label(self) -> int:
        return self._exit_label

    def statements(self) -> Iterator[Stmt]:
        yield from walk_statements(self.body)

    def stmt_at(self, label: int) -> Stmt:
        return self._by_label[label]

    def labels(self) -> list[int]:
        return sorted(self._by_label)


def walk_statements(body: Sequence[Stmt]) -> Iterator[Stmt]:
    for s in body:
        yield s
        if isinstance(s, If):
            yield from walk_statements(s.then_body)
            yield from walk_statements(s.else_body)
        elif isinstance(s, While):
            yield from walk_statements(s.body)


def assign_labels(program: Program) -> None:
    """Number statements in pre-order and index them on the program."""
    counter = 0
    by_label: dict[int, Stmt] = {}

    def walk(body: Sequence[Stmt]) -> None:
        nonlocal counter
        for s in body:
            s.label = counter
            by_label[counter] = s
            counter += 1
            if isinstance(s, If):
                walk(s.then_body)
                walk(s.else_body)
            elif isinstance(s, While):
                walk(s.body)

    walk(program.body)
    program._by_label = by_label  # type: ignore[attr-defined]
    program._exit_label = counter  # type: ignore[attr-defined]


# ---------------------------------------------------------------------------
# Lexer


_PUNCT = (
    "==", "!=", "<=", ">=", "->",  # two-char first
    "=", "<", ">", "+", "-", "*", "&", "!", ".", ",", ";", "(", ")", "{", "}",
)

_KEYWORDS = {"var", "malloc", "free", "if", "else", "while", "assert"}


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'int', 'punct', 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser

# Binding powers for binary operators (higher binds tighter).
_BIN_POWER = {"==": 10, "!=": 10, "<": 20, "<=": 20, ">": 20, ">=": 20, "+": 30, "-": 30}
_POSTFIX_POWER = 50  # '.' and '->'
_PREFIX_POWER = 40  # '!', '*', '&', unary '-'


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    # -- token helpers

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    def at_keyword(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text == word

    def expect_punct(self, text: str) -> Token:
        t = self.next()
        if t.kind != "punct" or t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or t.kind!r}", t.line, t.col)
        return t

    def expect_ident(self) -> Token:
        t = self.next()
        if t.kind != "ident" or t.text in _KEYWORDS:
            raise ParseError(f"expected identifier, found {t.text or t.kind!r}", t.line, t.col)
        return t

    # -- expressions

    def expr(self, min_power: int = 0) -> Expr:
        left = self.prefix()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in (".", "->"):
                self.next()
                fld = self.expect_ident().text
                if t.text == ".":
                    loc = self.as_loc(left, t)
                    left = Loc(FieldOf(loc, fld))
                else:
                    left = Loc(arrow(left, fld))
                continue
            if t.kind == "punct" and t.text in _BIN_POWER and _BIN_POWER[t.text] >= min_power:
                self.next()
                right = self.expr(_BIN_POWER[t.text] + 1)
                left = BinOp(t.text, left, right)
                continue
            return left

    def prefix(self) -> Expr:
        t = self.peek()
        if t.kind == "punct" and t.text == "(":
            self.next()
            e = self.expr()
            self.expect_punct(")")
            return e
        if t.kind == "punct" and t.text == "!":
            self.next()
            return Not(self.expr(_PREFIX_POWER))
        if t.kind == "punct" and t.text == "*":
            self.next()
            return Loc(Deref(self.expr(_PREFIX_POWER)))
        if t.kind == "punct" and t.text == "&":
            self.next()
            inner = self.expr(_PREFIX_POWER)
            return AddrOf(self.as_loc(inner, t))
        if t.kind == "punct" and t.text == "-":
            self.next()
            lit = self.next()
            if lit.kind != "int":
                raise ParseError("'-' is only supported on integer literals", lit.line, lit.col)
            return IntLit(-int(lit.text))
        if t.kind == "int":
            self.next()
            return IntLit(int(t.text))
        if t.kind == "ident" and t.text not in _KEYWORDS:
            self.next()
            return Loc(Var(t.text))
        raise ParseError(f"expected expression, found {t.text or t.kind!r}", t.line, t.col)

    def as_loc(self, e: Expr, t: Token) -> LocExpr:
        if isinstance(e, Loc):
            return e.loc
        raise ParseError("expected a memory location", t.line, t.col)

    # -- statements

    def block(self) -> tuple[Stmt, ...]:
        self.expect_punct("{")
        stmts: list[Stmt] = []
        while not self.at_punct("}"):
            stmts.append(self.statement())
        self.expect_punct("}")
        return tuple(stmts)

    def statement(self) -> Stmt:
        t = self.peek()
        if self.at_keyword("if"):
            self.next()
            self.expect_punct("(")
            cond = self.expr()
            self.expect_punct(")")
            then_body = self.block()
            kw = self.next()
            if not (kw.kind == "ident" and kw.text == "else"):
                raise ParseError("expected 'else'", kw.line, kw.col)
            else_body = self.block()
            return If(cond, then_body, else_body)
        if self.at_keyword("while"):
            self.next()
            self.expect_punct("(")
            cond = self.expr()
            self.expect_punct(")")
            body = self.block()
            return While(cond, body)
        if self.at_keyword("assert"):
            self.next()
            self.expect_punct("(")
            cond = self.expr()
            self.expect_punct(")")
            self.expect_punct(";")
            return Assert(cond)
        if self.at_keyword("free"):
            self.next()
            self.expect_punct("(")
            target = self.expr()
            loc = self.as_loc(target, t)
            self.expect_punct(")")
            self.expect_punct(";")
            return Free(loc)
        # assignment or malloc
        lhs_expr = self.expr()
        loc = self.as_loc(lhs_expr, t)
        self.expect_punct("=")
        if self.at_keyword("malloc"):
            self.next()
            self.expect_punct("{")
            fields = [self.expect_ident().text]
            while self.at_punct(","):
                self.next()
                fields.append(self.expect_ident().text)
            self.expect_punct("}")
            self.expect_punct(";")
            if len(set(fields)) != len(fields):
                raise ParseError("duplicate field in malloc", t.line, t.col)
            return Malloc(loc, tuple(fields))
        rhs = self.expr()
        self.expect_punct(";")
        return Assign(loc, rhs)

    def program(self) -> Program:
        variables: list[str] = []
        while self.at_keyword("var"):
            self.next()
            variables.append(self.expect_ident().text)
            while self.at_punct(","):
                self.next()
                variables.append(self.expect_ident().text)
            self.expect_punct(";")
        body: list[Stmt] = []
        while self.peek().kind != "eof":
            body.append(self.statement())
        if len(set(variables)) != len(variables):
            raise ParseError("duplicate variable declaration", 1, 1)
        return Program(tuple(variables), tuple(body))


def parse_program(text: str, layout: Mapping[str, int] | None = None) -> Program:
    """Parse a program; raises :class:`ParseError` with line/column on bad input.

    ``layout`` optionally pre-seeds field offsets for programs that use
    fields never declared by a malloc or an inductive definition.
    """
    program = _Parser(tokenize(text)).program()
    table = program.field_table
    if layout:
        for name, off in layout.items():
            table.register(name, off)
    for s in program.statements():
        if isinstance(s, Malloc):
            table.register_block(s.fields)
    _check_variables(program)
    return program


def _check_variables(program: Program) -> None:
    declared = set(program.variables)

    def loc_vars(loc: LocExpr) -> Iterator[str]:
        if isinstance(loc, Var):
            yield loc.name
        elif isinstance(loc, FieldOf):
            yield from loc_vars(loc.base)
        elif isinstance(loc, Deref):
            yield from exp_vars(loc.addr)

    def exp_vars(e: Expr) -> Iterator[str]:
        if isinstance(e, (Loc, AddrOf)):
            yield from loc_vars(e.loc)
        elif isinstance(e, BinOp):
            yield from exp_vars(e.left)
            yield from exp_vars(e.right)
        elif isinstance(e, Not):
            yield from exp_vars(e.arg)

    for s in program.statements():
        used: list[str] = []
        if isinstance(s, (Assign,)):
            used = [*loc_vars(s.loc), *exp_vars(s.expr)]
        elif isinstance(s, (Malloc, Free)):
            used = list(loc_vars(s.loc))
        elif isinstance(s, (If, While, Assert)):
            used = list(exp_vars(s.cond))
        for name in used:
            if name not in declared:
                raise ParseError(f"undeclared variable {name!r}", 1, 1)


def used_fields(program: Program) -> frozenset[str]:
    """All field names appearing in locations/expressions of the program."""
    out: set[str] = set()

    def loc(l: LocExpr) -> None:
        if isinstance(l, FieldOf):
            out.add(l.field)
            loc(l.base)
        elif isinstance(l, Deref):
            exp(l.addr)

    def exp(e: Expr) -> None:
        if isinstance(e, (Loc, AddrOf)):
            loc(e.loc)
        elif isinstance(e, BinOp):
            exp(e.left)
            exp(e.right)
        elif isinstance(e, Not):
            exp(e.arg)

    for s in program.statements():
        if isinstance(s, Assign):
            loc(s.loc)
            exp(s.expr)
        elif isinstance(s, (Malloc, Free)):
            loc(s.loc)
        elif isinstance(s, (If, While, Assert)):
            exp(s.cond)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Pretty printer

_PAREN_ATOM = 100


def _print_exp(e: Expr, power: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value) if e.value >= 0 else f"(-{-e.value})" if power > 0 else f"-{-e.value}"
    if isinstance(e, Loc):
        return _print_loc(e.loc, power)
    if isinstance(e, AddrOf):
        s = "&" + _print_loc(e.loc, _PREFIX_POWER)
        return f"({s})" if power > _PREFIX_POWER else s
    if isinstance(e, Not):
        s = "!" + _print_exp(e.arg, _PREFIX_POWER)
        return f"({s})" if power > _PREFIX_POWER else s
    if isinstance(e, BinOp):
        mine = _BIN_POWER[e.op]
        s = f"{_print_exp(e.left, mine)} {e.op} {_print_exp(e.right, mine + 1)}"
        return f"({s})" if mine < power else s
    raise TypeError(f"cannot print {e!r}")


def _print_loc(loc: LocExpr, power: int = 0) -> str:
    if isinstance(loc, Var):
        return loc.name
    if isinstance(loc, AddrNode):
        return f"<{loc.sym}>"
    if isinstance(loc, FieldOf):
        if isinstance(loc.base, Deref):
            return f"{_print_exp(loc.base.addr, _POSTFIX_POWER + 1)}->{loc.field}"
        return f"{_print_loc(loc.base, _POSTFIX_POWER)}.{loc.field}"
    if isinstance(loc, Deref):
        s = "*" + _print_exp(loc.addr, _PREFIX_POWER + 1)
        return f"({s})" if power > _PREFIX_POWER else s
    raise TypeError(f"cannot print {loc!r}")


def pretty_print(program: Program) -> str:
    lines: list[str] = []
    if program.variables:
        lines.append("var " + ", ".join(program.variables) + ";")

    def stmt(s: Stmt, indent: int) -> None:
        pad = "  " * indent
        if isinstance(s, Assign):
            lines.append(f"{pad}{_print_loc(s.loc)} = {_print_exp(s.expr)};")
        elif isinstance(s, Malloc):
            lines.append(f"{pad}{_print_loc(s.loc)} = malloc{{{', '.join(s.fields)}}};")
        elif isinstance(s, Free):
            lines.append(f"{pad}free({_print_loc(s.loc)});")
        elif isinstance(s, Assert):
            lines.append(f"{pad}assert({_print_exp(s.cond)});")
        elif isinstance(s, If):
            lines.append(f"{pad}if ({_print_exp(s.cond)}) {{")
            for t in s.then_body:
                stmt(t, indent + 1)
            lines.append(f"{pad}}} else {{")
            for t in s.else_body:
                stmt(t, indent + 1)
            lines.append(f"{pad}}}")
        elif isinstance(s, While):
            lines.append(f"{pad}while ({_print_exp(s.cond)}) {{")
            for t in s.body:
                stmt(t, indent + 1)
            lines.append(f"{pad}}}")
        else:
            raise TypeError(f"cannot print {s!r}")

    for s in program.body:
        stmt(s, 0)
    return "\n".join(lines) + "\n"

"""Symbolic variables and the value-level expressions ranged over them.

Symbolic variables (nodes of shape graphs, dimensions of numeric elements)
are identified by a globally ordered integer index.  A ``SymbolSupply`` is a
monotone source of fresh indices: it never re-issues one.  Supplies are
passed around explicitly; there is no ambient global counter.

``NumExpr`` is the small expression language the numeric layer consumes:
symbols and integer constants combined with arithmetic and comparisons.
Comparisons evaluate to 0/1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping


@dataclass(frozen=True, order=True)
class Sym:
    """An opaque symbolic variable, ordered and hashed by its index."""

    index: int
    hint: str = field(default="v", compare=False)

    def __str__(self) -> str:
        return f"{self.hint}{self.index}"

    def __repr__(self) -> str:
        return str(self)


class SymbolSupply:
    """Monotone fresh-symbol source; never re-issues an index."""

    def __init__(self, start: int = 0):
        self._next = start

    def fresh(self, hint: str = "v") -> Sym:
        sym = Sym(self._next, hint)
        self._next += 1
        return sym

    def reserve_above(self, syms: Iterable[Sym]) -> None:
        """Bump the counter past every index in ``syms``."""
        for s in syms:
            if s.index >= self._next:
                self._next = s.index + 1

    @property
    def next_index(self) -> int:
        return self._next


# ---------------------------------------------------------------------------
# Value-level expressions.

ARITH_OPS = ("+", "-")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")

# Negation table for comparison operators.
NEGATED = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


class NumExpr:
    """Base class for value-level expressions over symbolic variables."""

    __slots__ = ()


@dataclass(frozen=True)
class SymVal(NumExpr):
    sym: Sym

    def __str__(self) -> str:
        return str(self.sym)


@dataclass(frozen=True)
class Const(NumExpr):
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class NumBin(NumExpr):
    op: str
    left: NumExpr
    right: NumExpr

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class NumNot(NumExpr):
    arg: NumExpr

    def __str__(self) -> str:
        return f"!{self.arg}"


def eval_numexpr(e: NumExpr, nu: Mapping[Sym, int]) -> int:
    """Evaluate ``e`` under a total valuation; booleans are 0/1."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, SymVal):
        return nu[e.sym]
    if isinstance(e, NumNot):
        return 0 if eval_numexpr(e.arg, nu) != 0 else 1
    if isinstance(e, NumBin):
        a = eval_numexpr(e.left, nu)
        b = eval_numexpr(e.right, nu)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "==":
            return int(a == b)
        if e.op == "!=":
            return int(a != b)
        if e.op == "<":
            return int(a < b)
        if e.op == "<=":
            return int(a <= b)
        if e.op == ">":
            return int(a > b)
        if e.op == ">=":
            return int(a >= b)
        raise ValueError(f"unknown operator {e.op!r}")
    raise TypeError(f"not a NumExpr: {e!r}")


def numexpr_syms(e: NumExpr) -> frozenset[Sym]:
    if isinstance(e, SymVal):
        return frozenset((e.sym,))
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, NumNot):
        return numexpr_syms(e.arg)
    if isinstance(e, NumBin):
        return numexpr_syms(e.left) | numexpr_syms(e.right)
    raise TypeError(f"not a NumExpr: {e!r}")


def subst_numexpr(e: NumExpr, mapping: Mapping[Sym, Sym]) -> NumExpr:
    """Replace every symbol by its image under ``mapping`` (total on syms of e)."""
    if isinstance(e, SymVal):
        return SymVal(mapping[e.sym])
    if isinstance(e, Const):
        return e
    if isinstance(e, NumNot):
        return NumNot(subst_numexpr(e.arg, mapping))
    if isinstance(e, NumBin):
        return NumBin(e.op, subst_numexpr(e.left, mapping), subst_numexpr(e.right, mapping))
    raise TypeError(f"not a NumExpr: {e!r}")

"""Numeric abstract layer over a declared set of symbolic variables.

Two instances share one method surface:

* :class:`IntervalElem` — non-relational intervals, the default instance.
* :class:`DiffBoundElem` — intervals plus difference bounds ``x - y <= c``,
  for properties that need order relations between symbols.

An element is parametrized by its dimension set; every operation preserves
the invariant that constraints mention exactly those dimensions.  All
elements are immutable; operations return new elements.

Method-to-interface map (the transfer functions expect exactly these):
``top``/``is_bottom``, ``assign``, ``guard``, ``new_dim``, ``drop_dim``,
``rename``, ``included_in`` (inclusion test), ``join``, ``widen``, and
``accepts`` (direct concretization membership, used by the test oracles).

``rename(phi)`` maps *output* dimensions to input dimensions: the result is
defined over ``out_dims`` (default: the keys of ``phi``) and constrains each
output ``x`` like the input constrained ``phi[x]``; output dimensions
without an image are unconstrained.  For every valuation ``nu`` of the
input, ``nu ∘ phi`` satisfies the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InternalError
from .symbols import (
    CMP_OPS,
    NEGATED,
    Const,
    NumBin,
    NumExpr,
    NumNot,
    Sym,
    SymVal,
    eval_numexpr,
)

INF = math.inf
NEG_INF = -math.inf

Bound = float  # int or ±math.inf


# ---------------------------------------------------------------------------
# Intervals


@dataclass(frozen=True)
class Itv:
    lo: Bound
    hi: Bound

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise InternalError(f"bad interval [{self.lo}, {self.hi}]")

    def contains(self, v: int) -> bool:
        return self.lo <= v <= self.hi

    def is_top(self) -> bool:
        return self.lo == NEG_INF and self.hi == INF

    def add(self, other: Itv) -> Itv:
        return Itv(self.lo + other.lo, self.hi + other.hi)

    def sub(self, other: Itv) -> Itv:
        return Itv(self.lo - other.hi, self.hi - other.lo)

    def hull(self, other: Itv) -> Itv:
        return Itv(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, other: Itv) -> Itv | None:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return None if lo > hi else Itv(lo, hi)

    def widen(self, other: Itv) -> Itv:
        return Itv(
            self.lo if self.lo <= other.lo else NEG_INF,
            self.hi if other.hi <= self.hi else INF,
        )

    def render(self) -> str:
        if self.is_top():
            return "⊤"  # ⊤
        lo = "-∞" if self.lo == NEG_INF else str(int(self.lo))
        hi = "+∞" if self.hi == INF else str(int(self.hi))
        return f"[{lo},{hi}]"


TOP_ITV = Itv(NEG_INF, INF)


def _cmp_itv(op: str, a: Itv, b: Itv) -> Itv:
    """Interval of the 0/1 value of ``a op b``."""

    def certain(true_when: bool, false_when: bool) -> Itv:
        if true_when:
            return Itv(1, 1)
        if false_when:
            return Itv(0, 0)
        return Itv(0, 1)

    if op == "==":
        return certain(
            a.lo == a.hi == b.lo == b.hi, a.hi < b.lo or b.hi < a.lo
        )
    if op == "!=":
        return certain(a.hi < b.lo or b.hi < a.lo, a.lo == a.hi == b.lo == b.hi)
    if op == "<":
        return certain(a.hi < b.lo, a.lo >= b.hi)
    if op == "<=":
        return certain(a.hi <= b.lo, a.lo > b.hi)
    if op == ">":
        return certain(a.lo > b.hi, a.hi <= b.lo)
    if op == ">=":
        return certain(a.lo >= b.hi, a.hi < b.lo)
    raise InternalError(f"unknown comparison {op!r}")


def eval_itv(e: NumExpr, env: Mapping[Sym, Itv]) -> Itv:
    """Sound interval evaluation; unsupported shapes evaluate to top."""
    if isinstance(e, Const):
        return Itv(e.value, e.value)
    if isinstance(e, SymVal):
        return env[e.sym]
    if isinstance(e, NumNot):
        inner = eval_itv(e.arg, env)
        if inner.lo > 0 or inner.hi < 0:
            return Itv(0, 0)
        if inner.lo == inner.hi == 0:
            return Itv(1, 1)
        return Itv(0, 1)
    if isinstance(e, NumBin):
        a = eval_itv(e.left, env)
        b = eval_itv(e.right, env)
        if e.op == "+":
            return a.add(b)
        if e.op == "-":
            return a.sub(b)
        if e.op in CMP_OPS:
            return _cmp_itv(e.op, a, b)
    return TOP_ITV


def _atoms(e: NumExpr, truth: bool) -> list[tuple[str, NumExpr, NumExpr]]:
    """Flatten a guard expression into comparison atoms asserting it is true."""
    if isinstance(e, NumNot):
        return _atoms(e.arg, not truth)
    if isinstance(e, NumBin) and e.op in CMP_OPS:
        op = e.op if truth else NEGATED[e.op]
        return [(op, e.left, e.right)]
    # truthiness of an arithmetic expression or a bare symbol
    op = "!=" if truth else "=="
    return [(op, e, Const(0))]


class IntervalElem:
    """One interval per dimension; bottom is represented explicitly."""

    __slots__ = ("dims", "_itv")

    def __init__(self, dims: Iterable[Sym], itv: dict[Sym, Itv] | None):
        self.dims = frozenset(dims)
        if itv is not None and set(itv) != self.dims:
            raise InternalError("interval map does not cover dims")
        self._itv = itv

    # -- constructors

    @classmethod
    def top(cls, dims: Iterable[Sym]) -> IntervalElem:
        dims = frozenset(dims)
        return cls(dims, {s: TOP_ITV for s in dims})

    @classmethod
    def bottom(cls, dims: Iterable[Sym]) -> IntervalElem:
        return cls(dims, None)

    @classmethod
    def of(cls, bounds: Mapping[Sym, tuple[Bound, Bound]]) -> IntervalElem:
        return cls(bounds.keys(), {s: Itv(lo, hi) for s, (lo, hi) in bounds.items()})

    # -- basic queries

    def is_bottom(self) -> bool:
        return self._itv is None

    def interval(self, sym: Sym) -> Itv:
        if self._itv is None:
            raise InternalError("interval() on bottom")
        return self._itv[sym]

    def accepts(self, nu: Mapping[Sym, int]) -> bool:
        if self._itv is None:
            return False
        return all(self._itv[s].contains(nu[s]) for s in self.dims)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, IntervalElem)
            and self.dims == other.dims
            and self._itv == other._itv
        )

    def __hash__(self) -> int:
        return hash((self.dims, None if self._itv is None else tuple(sorted(self._itv.items()))))

    # -- transfer functions

    def assign(self, target: Sym, e: NumExpr) -> IntervalElem:
        if target not in self.dims:
            raise InternalError(f"assign target {target} not a dimension")
        if self._itv is None:
            return self
        out = dict(self._itv)
        out[target] = eval_itv(e, self._itv)
        return IntervalElem(self.dims, out)

    def guard(self, e: NumExpr) -> IntervalElem:
        if self._itv is None:
            return self
        itv = dict(self._itv)
        for op, left, right in _atoms(e, True):
            if not self._refine(op, left, right, itv):
                return IntervalElem.bottom(self.dims)
        return IntervalElem(self.dims, itv)

    def _refine(self, op: str, left: NumExpr, right: NumExpr, itv: dict[Sym, Itv]) -> bool:
        """Narrow ``itv`` so that ``left op right`` can hold; False means empty."""
        lsym = left.sym if isinstance(left, SymVal) else None
        rsym = right.sym if isinstance(right, SymVal) else None
        lv = itv[lsym] if lsym else eval_itv(left, itv)
        rv = itv[rsym] if rsym else eval_itv(right, itv)
        if lsym is None and rsym is None:
            # no dimension to refine; just check satisfiability when constant
            if lv.lo == lv.hi and rv.lo == rv.hi:
                return bool(eval_numexpr(NumBin(op, Const(int(lv.lo)), Const(int(rv.lo))), {}))
            return True
        new_l, new_r = lv, rv
        if op == "==":
            met = lv.meet(rv)
            if met is None:
                return False
            new_l = new_r = met
        elif op == "!=":
            new_l = _prune_ne(lv, rv)
            new_r = _prune_ne(rv, lv)
            if new_l is None or new_r is None:
                return False
        elif op in ("<", "<="):
            k = 1 if op == "<" else 0
            nl = lv.meet(Itv(NEG_INF, rv.hi - k))
            nr = rv.meet(Itv(lv.lo + k, INF))
            if nl is None or nr is None:
                return False
            new_l, new_r = nl, nr
        elif op in (">", ">="):
            k = 1 if op == ">" else 0
            nl = lv.meet(Itv(rv.lo + k, INF))
            nr = rv.meet(Itv(NEG_INF, lv.hi - k))
            if nl is None or nr is None:
                return False
            new_l, new_r = nl, nr
        if lsym:
            itv[lsym] = new_l
        if rsym:
            itv[rsym] = new_r
        return True

    def new_dim(self, sym: Sym) -> IntervalElem:
        if sym in self.dims:
            raise InternalError(f"dimension {sym} already present")
        dims = self.dims | {sym}
        if self._itv is None:
            return IntervalElem(dims, None)
        out = dict(self._itv)
        out[sym] = TOP_ITV
        return IntervalElem(dims, out)

    def drop_dim(self, sym: Sym) -> IntervalElem:
        if sym not in self.dims:
            raise InternalError(f"dimension {sym} not present")
        dims = self.dims - {sym}
        if self._itv is None:
            return IntervalElem(dims, None)
        out = {s: v for s, v in self._itv.items() if s != sym}
        return IntervalElem(dims, out)

    def rename(self, phi: Mapping[Sym, Sym], out_dims: Iterable[Sym] | None = None) -> IntervalElem:
        dims = frozenset(out_dims) if out_dims is not None else frozenset(phi)
        if self._itv is None:
            return IntervalElem(dims, None)
        out: dict[Sym, Itv] = {}
        for x in dims:
            src = phi.get(x)
            if src is not None and src not in self.dims:
                raise InternalError(f"rename image {src} outside dims")
            out[x] = self._itv[src] if src is not None else TOP_ITV
        return IntervalElem(dims, out)

    # -- lattice operations

    def _check_dims(self, other: IntervalElem) -> None:
        if self.dims != other.dims:
            raise InternalError("dimension mismatch")

    def included_in(self, other: IntervalElem) -> bool:
        """True implies the concretization of self is a subset of other's."""
        self._check_dims(other)
        if self._itv is None:
            return True
        if other._itv is None:
            return False
        return all(
            other._itv[s].lo <= self._itv[s].lo and self._itv[s].hi <= other._itv[s].hi
            for s in self.dims
        )

    def join(self, other: IntervalElem) -> IntervalElem:
        self._check_dims(other)
        if self._itv is None:
            return other
        if other._itv is None:
            return self
        return IntervalElem(self.dims, {s: self._itv[s].hull(other._itv[s]) for s in self.dims})

    def widen(self, other: IntervalElem) -> IntervalElem:
        self._check_dims(other)
        if self._itv is None:
            return other
        if other._itv is None:
            return self
        return IntervalElem(self.dims, {s: self._itv[s].widen(other._itv[s]) for s in self.dims})

    def render(self) -> str:
        if self._itv is None:
            return "⊥"  # ⊥
        parts = [f"{s}∈{self._itv[s].render()}" for s in sorted(self.dims)]
        return "{" + ", ".join(parts) + "}"

    def __repr__(self) -> str:
        return f"IntervalElem({self.render()})"


def _prune_ne(v: Itv, other: Itv) -> Itv | None:
    """Refine ``v`` under ``v != other`` when other is a single constant."""
    if other.lo != other.hi:
        return v
    c = other.lo
    if v.lo == v.hi == c:
        return None
    if v.lo == c:
        return Itv(c + 1, v.hi)
    if v.hi == c:
        return Itv(v.lo, c - 1)
    return v


# ---------------------------------------------------------------------------
# Difference bounds


class DiffBoundElem:
    """Intervals plus closed difference bounds ``x - y <= c``.

    Internally a sparse difference-bound matrix over ``dims`` plus a zero
    row/column (key ``None``): ``m[x, None]`` is the upper bound of ``x`` and
    ``m[None, x]`` is the negated lower bound.  Elements are closed on
    construction except immediately after widening (closing a widened
    element would defeat termination); queries close a copy on demand.
    """

    __slots__ = ("dims", "_m", "_closed")

    def __init__(
        self,
        dims: Iterable[Sym],
        m: dict[tuple[Sym | None, Sym | None], Bound] | None,
        closed: bool = False,
    ):
        self.dims = frozenset(dims)
        self._m = m
        self._closed = closed

    @classmethod
    def top(cls, dims: Iterable[Sym]) -> DiffBoundElem:
        return cls(dims, {}, closed=True)

    @classmethod
    def bottom(cls, dims: Iterable[Sym]) -> DiffBoundElem:
        return cls(dims, None, closed=True)

    @classmethod
    def of(
        cls,
        dims: Iterable[Sym],
        bounds: Mapping[tuple[Sym | None, Sym | None], Bound] = (),
        intervals: Mapping[Sym, tuple[Bound, Bound]] = (),
    ) -> DiffBoundElem:
        m: dict[tuple[Sym | None, Sym | None], Bound] = dict(bounds)
        for s, (lo, hi) in dict(intervals).items():
            if hi != INF:
                m[(s, None)] = min(m.get((s, None), INF), hi)
            if lo != NEG_INF:
                m[(None, s)] = min(m.get((None, s), INF), -lo)
        return cls(dims, m)._close()

    # -- closure

    def _keys(self) -> list[Sym | None]:
        return [None, *sorted(self.dims)]

    def _close(self) -> DiffBoundElem:
        if self._m is None:
            return DiffBoundElem(self.dims, None, closed=True)
        keys = self._keys()
        m = dict(self._m)

        def get(i: Sym | None, j: Sym | None) -> Bound:
            return 0 if i == j else m.get((i, j), INF)

        for k in keys:
            for i in keys:
                ik = get(i, k)
                if ik == INF:
                    continue
                for j in keys:
                    kj = get(k, j)
                    if kj == INF:
                        continue
                    if ik + kj < get(i, j):
                        m[(i, j)] = ik + kj
        for i in keys:
            if m.get((i, i), 0) < 0:
                return DiffBoundElem(self.dims, None, closed=True)
        m = {k: v for k, v in m.items() if v != INF and k[0] != k[1]}
        return DiffBoundElem(self.dims, m, closed=True)

    def _closed_m(self) -> dict[tuple[Sym | None, Sym | None], Bound] | None:
        elem = self if self._closed else self._close()
        return elem._m

    def bound(self, x: Sym | None, y: Sym | None) -> Bound:
        """Tightest derivable bound on x - y (None stands for 0)."""
        m = self._closed_m()
        if m is None:
            raise InternalError("bound() on bottom")
        return 0 if x == y else m.get((x, y), INF)

    # -- queries

    def is_bottom(self) -> bool:
        return self._closed_m() is None

    def interval(self, sym: Sym) -> Itv:
        m = self._closed_m()
        if m is None:
            raise InternalError("interval() on bottom")
        hi = m.get((sym, None), INF)
        neg_lo = m.get((None, sym), INF)
        return Itv(-neg_lo, hi)

    def accepts(self, nu: Mapping[Sym, int]) -> bool:
        if self._m is None:
            return False

        def val(k: Sym | None) -> int:
            return 0 if k is None else nu[k]

        return all(val(x) - val(y) <= c for (x, y), c in self._m.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiffBoundElem):
            return False
        return self.dims == other.dims and self._closed_m() == other._closed_m()

    def __hash__(self) -> int:
        m = self._closed_m()
        return hash((self.dims, None if m is None else tuple(sorted(m.items(), key=repr))))

    # -- transfer functions

    def assign(self, target: Sym, e: NumExpr) -> DiffBoundElem:
        if target not in self.dims:
            raise InternalError(f"assign target {target} not a dimension")
        m = self._closed_m()
        if m is None:
            return self
        # havoc the target, then constrain by the (linear) right-hand side
        out = {k: v for k, v in m.items() if target not in k}
        shift = _linear_form(e)
        if shift is not None and shift[0] != target:
            src, c = shift
            if src is None:
                out[(target, None)] = c
                out[(None, target)] = -c
            else:
                out[(target, src)] = c
                out[(src, target)] = -c
        else:
            itv = eval_itv(e, {s: DiffBoundElem(self.dims, m, True).interval(s) for s in self.dims})
            if itv.hi != INF:
                out[(target, None)] = itv.hi
            if itv.lo != NEG_INF:
                out[(None, target)] = -itv.lo
        return DiffBoundElem(self.dims, out)._close()

    def guard(self, e: NumExpr) -> DiffBoundElem:
        m = self._closed_m()
        if m is None:
            return self
        out = dict(m)
        for op, left, right in _atoms(e, True):
            lf, rf = _linear_form(left), _linear_form(right)
            if lf is None or rf is None:
                continue  # unsupported shape: sound no-op
            (x, cx), (y, cy) = lf, rf
            # x + cx  op  y + cy
            if op == "==":
                _add_bound(out, x, y, cy - cx)
                _add_bound(out, y, x, cx - cy)
            elif op in ("<", "<="):
                k = 1 if op == "<" else 0
                _add_bound(out, x, y, cy - cx - k)
            elif op in (">", ">="):
                k = 1 if op == ">" else 0
                _add_bound(out, y, x, cx - cy - k)
            elif op == "!=":
                # representable only against an endpoint, via the intervals
                tmp = DiffBoundElem(self.dims, out)._close()
                if tmp._m is None:
                    return tmp
                if x is not None and y is None:
                    pruned = _prune_ne(tmp.interval(x), Itv(cy - cx, cy - cx))
                    if pruned is None:
                        return DiffBoundElem.bottom(self.dims)
                    if pruned.hi != INF:
                        _add_bound(out, x, None, pruned.hi)
                    if pruned.lo != NEG_INF:
                        _add_bound(out, None, x, -pruned.lo)
        return DiffBoundElem(self.dims, out)._close()

    def new_dim(self, sym: Sym) -> DiffBoundElem:
        if sym in self.dims:
            raise InternalError(f"dimension {sym} already present")
        return DiffBoundElem(self.dims | {sym}, self._closed_m(), closed=True)

    def drop_dim(self, sym: Sym) -> DiffBoundElem:
        if sym not in self.dims:
            raise InternalError(f"dimension {sym} not present")
        m = self._closed_m()
        if m is None:
            return DiffBoundElem(self.dims - {sym}, None, closed=True)
        out = {k: v for k, v in m.items() if sym not in k}
        return DiffBoundElem(self.dims - {sym}, out, closed=True)

    def rename(self, phi: Mapping[Sym, Sym], out_dims: Iterable[Sym] | None = None) -> DiffBoundElem:
        dims = frozenset(out_dims) if out_dims is not None else frozenset(phi)
        m = self._closed_m()
        if m is None:
            return DiffBoundElem(dims, None, closed=True)
        for src in phi.values():
            if src not in self.dims:
                raise InternalError(f"rename image {src} outside dims")
        ext: dict[Sym | None, Sym | None] = {None: None}
        ext.update({x: phi[x] for x in dims if x in phi})
        out: dict[tuple[Sym | None, Sym | None], Bound] = {}
        items = [x for x in [None, *sorted(dims)] if x in ext]
        for x in items:
            for y in items:
                if x == y:
                    continue
                b = 0 if ext[x] == ext[y] else m.get((ext[x], ext[y]), INF)
                if b != INF:
                    out[(x, y)] = b
        return DiffBoundElem(dims, out)._close()

    # -- lattice operations

    def _check_dims(self, other: DiffBoundElem) -> None:
        if self.dims != other.dims:
            raise InternalError("dimension mismatch")

    def included_in(self, other: DiffBoundElem) -> bool:
        self._check_dims(other)
        m = self._closed_m()
        if m is None:
            return True
        om = other._m if other._m is not None else None
        if other._closed_m() is None:
            return False
        assert om is not None

        def mine(k: tuple[Sym | None, Sym | None]) -> Bound:
            return m.get(k, INF)

        return all(mine(k) <= v for k, v in om.items())

    def join(self, other: DiffBoundElem) -> DiffBoundElem:
        self._check_dims(other)
        m0, m1 = self._closed_m(), other._closed_m()
        if m0 is None:
            return DiffBoundElem(self.dims, m1, closed=True)
        if m1 is None:
            return DiffBoundElem(self.dims, m0, closed=True)
        out = {k: max(m0[k], m1[k]) for k in m0.keys() & m1.keys()}
        return DiffBoundElem(self.dims, out, closed=True)

    def widen(self, other: DiffBoundElem) -> DiffBoundElem:
        self._check_dims(other)
        m1 = other._closed_m()
        if self._m is None:
            return DiffBoundElem(self.dims, m1, closed=True)
        if m1 is None:
            return self
        # keep stable bounds, drop the rest; deliberately not re-closed
        out = {k: v for k, v in self._m.items() if m1.get(k, INF) <= v}
        return DiffBoundElem(self.dims, out, closed=False)

    def render(self) -> str:
        m = self._closed_m()
        if m is None:
            return "⊥"
        parts = [f"{s}∈{self.interval(s).render()}" for s in sorted(self.dims)]
        rels = [
            f"{x}-{y}≤{int(c)}"
            for (x, y), c in sorted(m.items(), key=repr)
            if x is not None and y is not None
        ]
        return "{" + ", ".join(parts + rels) + "}"

    def __repr__(self) -> str:
        return f"DiffBoundElem({self.render()})"


def _add_bound(
    m: dict[tuple[Sym | None, Sym | None], Bound], x: Sym | None, y: Sym | None, c: Bound
) -> None:
    if x == y:
        return
    m[(x, y)] = min(m.get((x, y), INF), c)


def _linear_form(e: NumExpr) -> tuple[Sym | None, int] | None:
    """Decompose ``e`` as sym + c (sym possibly absent); None if not linear."""
    if isinstance(e, Const):
        return (None, e.value)
    if isinstance(e, SymVal):
        return (e.sym, 0)
    if isinstance(e, NumBin) and e.op in ("+", "-"):
        lf = _linear_form(e.left)
        rf = _linear_form(e.right)
        if lf is None or rf is None:
            return None
        (xs, xc), (ys, yc) = lf, rf
        if e.op == "+":
            if xs is not None and ys is not None:
                return None
            return (xs or ys, xc + yc)
        if ys is not None:
            return None
        return (xs, xc - yc)
    return None


NUMERIC_DOMAINS = {"interval": IntervalElem, "diffbound": DiffBoundElem}


def numeric_top(kind: str, dims: Iterable[Sym]):
    try:
        return NUMERIC_DOMAINS[kind].top(dims)
    except KeyError:
        raise InternalError(f"unknown numeric domain {kind!r}") from None

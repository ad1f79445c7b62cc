"""Disjunctive layer: finite context-tagged disjunctions of abstract memories.

A context records how a disjunct arose (the statement label and, for
branches, which arm).  Transfer functions map the memory-layer operation
over every disjunct, tag the outputs with the current context, and collapse
back under the disjunct cap by joining disjuncts that share a context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .combined import Alarm
from .lang import Expr, LocExpr
from .memory import AbstractMem, MemoryDomain


@dataclass(frozen=True)
class Context:
    label: int | None = None
    branch: bool | None = None

    def render(self) -> str:
        if self.label is None:
            return "entry"
        tag = "" if self.branch is None else ("/T" if self.branch else "/F")
        return f"L{self.label}{tag}"


@dataclass(frozen=True)
class Disjunct:
    ctx: Context
    mem: AbstractMem


@dataclass(frozen=True)
class DisjunctState:
    disjuncts: tuple[Disjunct, ...] = ()

    def __iter__(self):
        return iter(self.disjuncts)

    def __len__(self) -> int:
        return len(self.disjuncts)

    def is_empty(self) -> bool:
        return not self.disjuncts

    def members(self) -> list[AbstractMem]:
        return [d.mem for d in self.disjuncts]

    def render(self, table=None) -> str:
        if not self.disjuncts:
            return "(unreachable)"
        return "\n".join(
            f"#{i} [{d.ctx.render()}] {d.mem.render(table)}" for i, d in enumerate(self.disjuncts)
        )


class DisjunctiveDomain:
    def __init__(self, mem: MemoryDomain, cap: int = 4):
        self.mem = mem
        self.cap = cap

    def single(self, m: AbstractMem, ctx: Context = Context()) -> DisjunctState:
        return DisjunctState((Disjunct(ctx, m),))

    # -- partition management

    def partition(self, c: Context, batch: Iterable[DisjunctState]) -> DisjunctState:
        """Union of all disjuncts; any disjunct without a context gets ``c``."""
        out = []
        for state in batch:
            for d in state:
                ctx = d.ctx if d.ctx.label is not None else c
                out.append(Disjunct(ctx, d.mem))
        return DisjunctState(tuple(out))

    def _subsume(self, items: list[Disjunct]) -> list[Disjunct]:
        """Drop disjuncts already included in another (later entries win)."""
        kept: list[Disjunct] = []
        for d in items:
            if any(self.mem.compare(d.mem, k.mem) for k in kept):
                continue
            kept = [k for k in kept if not self.mem.compare(k.mem, d.mem)]
            kept.append(d)
        return kept

    def collapse(self, c: Context, state: DisjunctState) -> tuple[DisjunctState, list[Alarm]]:
        """Drop subsumed disjuncts, then merge same-context disjuncts (then,
        if still over the cap, oldest pairs regardless of context) until at
        most ``cap`` remain."""
        items = self._subsume(list(state.disjuncts))
        alarms: list[Alarm] = []
        while len(items) > self.cap:
            merged = False
            seen: dict[Context, int] = {}
            for i, d in enumerate(items):
                if d.ctx in seen:
                    j = seen[d.ctx]
                    m, al = self.mem.join(items[j].mem, d.mem)
                    alarms.extend(al)
                    items[j] = Disjunct(d.ctx, m)
                    del items[i]
                    merged = True
                    break
                seen[d.ctx] = i
            if not merged:
                m, al = self.mem.join(items[0].mem, items[1].mem)
                alarms.extend(al)
                items[:2] = [Disjunct(c, m)]
        return DisjunctState(tuple(items)), alarms

    # -- transfer functions

    def _transfer(self, c: Context, op, state: DisjunctState) -> tuple[DisjunctState, list[Alarm]]:
        outs: list[Disjunct] = []
        alarms: list[Alarm] = []
        for d in state:
            res, al = op(d.mem)
            alarms.extend(a if a.label is not None else Alarm(a.kind, a.detail, c.label) for a in al)
            outs.extend(Disjunct(c, m) for m in res)
        collapsed, al = self.collapse(c, DisjunctState(tuple(outs)))
        alarms.extend(a if a.label is not None else Alarm(a.kind, a.detail, c.label) for a in al)
        return collapsed, alarms

    def assign(self, c: Context, loc: LocExpr, e: Expr, state: DisjunctState):
        return self._transfer(c, lambda m: self.mem.assign(loc, e, m), state)

    def guard(self, c: Context, e: Expr, state: DisjunctState):
        return self._transfer(c, lambda m: self.mem.guard(e, m), state)

    def alloc(self, c: Context, loc: LocExpr, fields: Sequence[str], state: DisjunctState):
        return self._transfer(c, lambda m: self.mem.alloc(loc, fields, m), state)

    def free(self, c: Context, loc: LocExpr, state: DisjunctState):
        return self._transfer(c, lambda m: self.mem.free(loc, m), state)

    # -- lattice operations

    def compare(self, s0: DisjunctState, s1: DisjunctState) -> bool:
        """Every disjunct of s0 is included in some disjunct of s1."""
        return all(any(self.mem.compare(d0.mem, d1.mem) for d1 in s1) for d0 in s0)

    def join(self, s0: DisjunctState, s1: DisjunctState) -> tuple[DisjunctState, list[Alarm]]:
        return self.collapse(Context(), DisjunctState(s0.disjuncts + s1.disjuncts))

    def widen(self, s0: DisjunctState, s1: DisjunctState) -> tuple[DisjunctState, list[Alarm]]:
        """Pair disjuncts by context; widen per context, pass the unpaired
        side through unchanged."""
        alarms: list[Alarm] = []
        ctxs: list[Context] = []
        for d in list(s0) + list(s1):
            if d.ctx not in ctxs:
                ctxs.append(d.ctx)
        outs: list[Disjunct] = []
        for ctx in ctxs:
            ls = [d.mem for d in s0 if d.ctx == ctx]
            rs = [d.mem for d in s1 if d.ctx == ctx]
            if ls and rs:
                l = self._fold_join(ls, alarms)
                r = self._fold_join(rs, alarms)
                if self.mem.compare(r, l):
                    outs.append(Disjunct(ctx, l))  # already stable: keep as is
                else:
                    w, al = self.mem.widen(l, r)
                    alarms.extend(al)
                    outs.append(Disjunct(ctx, w))
            elif ls:
                outs.extend(Disjunct(ctx, m) for m in ls)
            else:
                outs.extend(Disjunct(ctx, m) for m in rs)
        collapsed, al = self.collapse(Context(), DisjunctState(tuple(outs)))
        alarms.extend(al)
        return collapsed, alarms

    def _fold_join(self, mems: list[AbstractMem], alarms: list[Alarm]) -> AbstractMem:
        acc = mems[0]
        for m in mems[1:]:
            acc, al = self.mem.join(acc, m)
            alarms.extend(al)
        return acc

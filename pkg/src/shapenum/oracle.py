"""Membership oracle: does a concrete (environment, store) pair belong to
the concretization of an abstract memory state?

The decision procedure unfolds every inductive edge in all combinations up
to a depth bound, then searches for a valuation matching points-to edges to
store cells exactly (each cell covered by exactly one edge), compatible
with the environment and accepted by the numeric element.  ``UNKNOWN`` is
returned only when a match failed but some depth-limited expansion still
carries an unexpanded summary, so a deeper unfolding might succeed.

On graphs without inductive edges the answer is always definite, and agrees
with the brute-force bijection enumeration in :func:`member_exact_bruteforce`.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

from .lang import WORD
from .shape import DefsTable, IndEdge, PtEdge, ShapeGraph
from .symbols import NumExpr, Sym, SymbolSupply, eval_numexpr

if TYPE_CHECKING:  # pragma: no cover
    from .memory import AbstractMem


class MemberResult(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass
class _Expansion:
    pt: tuple[PtEdge, ...]
    residual: tuple[IndEdge, ...]
    conds: tuple[NumExpr, ...]
    syms: frozenset[Sym]


def _expansions(graph: ShapeGraph, defs: DefsTable, depth: int) -> list[_Expansion]:
    base = 1 + max((s.index for s in graph.nodes), default=0)

    def expand(
        pt: tuple[PtEdge, ...],
        pending: list[tuple[IndEdge, int]],
        conds: tuple[NumExpr, ...],
        syms: frozenset[Sym],
        next_fresh: int,
    ) -> Iterable[_Expansion]:
        if not pending:
            yield _Expansion(pt, (), conds, syms)
            return
        (edge, budget), rest = pending[0], pending[1:]
        if budget <= 0:
            for x in expand(pt, rest, conds, syms, next_fresh):
                yield _Expansion(x.pt, (edge,) + x.residual, x.conds, x.syms)
            return
        definition = defs[edge.name]
        for rule in definition.rules:
            supply = SymbolSupply(next_fresh)
            rpt, rind, side, fresh = definition.instantiate(rule, edge.root, supply)
            cells = {(e.src, e.off) for e in pt}
            if any((e.src, e.off) in cells for e in rpt):
                continue  # separation clash: this branch denotes nothing
            yield from expand(
                pt + tuple(rpt),
                rest + [(i, budget - 1) for i in rind],
                conds + tuple(c.expr for c in side),
                syms | frozenset(fresh),
                supply.next_index,
            )

    pending = [(i, depth) for i in graph.sorted_ind()]
    return list(expand(tuple(graph.sorted_pt()), pending, (), frozenset(graph.nodes), base))


def _candidates(store: Mapping[int, int], num, dims: Iterable[Sym]) -> list[int]:
    vals: set[int] = {0}
    vals.update(store.keys())
    vals.update(store.values())
    if not num.is_bottom():
        for s in dims:
            itv = num.interval(s)
            if itv.lo not in (float("-inf"), float("inf")):
                vals.add(int(itv.lo))
            if itv.hi not in (float("-inf"), float("inf")):
                vals.add(int(itv.hi))
    return sorted(vals)


def _match(
    exp: _Expansion,
    store: Mapping[int, int],
    nu0: Mapping[Sym, int],
    num,
    exact_cover: bool,
) -> bool:
    edges = sorted(exp.pt, key=lambda e: (e.src, e.off))

    def finish(nu: dict[Sym, int], used: frozenset[int]) -> bool:
        if exact_cover and len(used) != len(store):
            return False
        free = sorted(exp.syms - nu.keys())
        pool = _candidates(store, num, free)
        for combo in itertools.product(pool, repeat=len(free)):
            full = dict(nu)
            full.update(zip(free, combo))
            if not all(eval_numexpr(c, full) != 0 for c in exp.conds):
                continue
            if num.is_bottom() or not num.accepts({s: full[s] for s in num.dims}):
                continue
            return True
        return False

    def rec(remaining: list[PtEdge], nu: dict[Sym, int], used: frozenset[int]) -> bool:
        if not remaining:
            return finish(nu, used)
        ready = [e for e in remaining if e.src in nu]
        if ready:
            e = ready[0]
            rest = [x for x in remaining if x is not e]
            addr = nu[e.src] + e.off * WORD
            if addr not in store or addr in used:
                return False
            val = store[addr]
            if e.dst in nu:
                if nu[e.dst] != val:
                    return False
                return rec(rest, nu, used | {addr})
            nu2 = dict(nu)
            nu2[e.dst] = val
            return rec(rest, nu2, used | {addr})
        # no edge has a known source: try anchoring the first one anywhere
        e = remaining[0]
        anchors = sorted({a - e.off * WORD for a in store if a not in used})
        for cand in anchors:
            nu2 = dict(nu)
            nu2[e.src] = cand
            if rec(remaining, nu2, used):
                return True
        return False

    return rec(edges, dict(nu0), frozenset())


def member_gamma(
    env: Mapping[str, int],
    store: Mapping[int, int],
    mem: "AbstractMem",
    depth: int,
    defs: DefsTable,
) -> MemberResult:
    """Decide membership of ``(env, store)`` in the concretization of ``mem``."""
    graph = mem.elem.graph
    num = mem.elem.num
    if set(env) != set(mem.env):
        return MemberResult.NO
    nu0: dict[Sym, int] = {}
    for x, node in mem.env.items():
        if node in nu0 and nu0[node] != env[x]:
            return MemberResult.NO
        nu0[node] = env[x]
    if num.is_bottom():
        return MemberResult.NO

    expansions = _expansions(graph, defs, depth)
    complete = [x for x in expansions if not x.residual]
    partial = [x for x in expansions if x.residual]
    for x in complete:
        if _match(x, store, nu0, num, exact_cover=True):
            return MemberResult.YES
    for x in partial:
        if _match(x, store, nu0, num, exact_cover=False):
            return MemberResult.UNKNOWN
    return MemberResult.NO


def member_exact_bruteforce(
    env: Mapping[str, int],
    store: Mapping[int, int],
    mem: "AbstractMem",
) -> MemberResult:
    """Reference decision for summary-free graphs: enumerate all bijections
    between points-to edges and store cells.  Always definite."""
    graph = mem.elem.graph
    num = mem.elem.num
    if graph.ind:
        raise ValueError("brute-force membership only covers exact graphs")
    if set(env) != set(mem.env) or num.is_bottom():
        return MemberResult.NO
    edges = graph.sorted_pt()
    cells = sorted(store.items())
    if len(edges) != len(cells):
        return MemberResult.NO
    nu0: dict[Sym, int] = {}
    for x, node in mem.env.items():
        if node in nu0 and nu0[node] != env[x]:
            return MemberResult.NO
        nu0[node] = env[x]
    for perm in itertools.permutations(cells):
        nu = dict(nu0)
        ok = True
        for e, (addr, val) in zip(edges, perm):
            src_val = addr - e.off * WORD
            if nu.setdefault(e.src, src_val) != src_val or nu.setdefault(e.dst, val) != val:
                ok = False
                break
        if not ok:
            continue
        free = sorted(frozenset(graph.nodes) - nu.keys())
        pool = _candidates(store, num, free)
        for combo in itertools.product(pool, repeat=len(free)):
            full = dict(nu)
            full.update(zip(free, combo))
            if num.accepts({s: full[s] for s in num.dims}):
                return MemberResult.YES
    return MemberResult.NO

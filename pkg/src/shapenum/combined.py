"""Combined shape-numeric layer: a shape graph paired with a numeric element
whose dimension set always equals the graph's node set.

Transfer functions evaluate locations in the graph, materializing summarized
cells on demand by unfolding (bounded), so each returns a finite disjunction
of output elements plus the alarms raised for disjuncts that had to be
dropped (a dropped disjunct is a reported potential memory error).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import InternalError
from .lang import AddrOf, BinOp, Expr, IntLit, Loc, LocExpr, Not
from .numeric import NUMERIC_DOMAINS
from .shape import (
    CompareOutcome,
    DefsTable,
    EvalFail,
    IndEdge,
    NoIndEdge,
    PtEdge,
    ShapeGraph,
    SideCond,
    UnsupportedLoc,
    eval_exp,
    eval_loc,
    join as shape_join,
    mutate,
    unfold as shape_unfold,
    widen as shape_widen,
)
from .shape import compare as shape_compare
from .symbols import Const, NumBin, NumExpr, NumNot, Sym, SymbolSupply, SymVal


@dataclass(frozen=True)
class CombinedElem:
    graph: ShapeGraph
    num: object  # IntervalElem or DiffBoundElem

    def __post_init__(self) -> None:
        if frozenset(self.num.dims) != self.graph.nodes:
            raise InternalError(
                f"numeric dimensions {sorted(self.num.dims)} out of sync with "
                f"graph nodes {sorted(self.graph.nodes)}"
            )

    def is_bottom(self) -> bool:
        return self.num.is_bottom()

    def render(self, table=None) -> str:
        return f"⟨{self.graph.render(table)} | {self.num.render()}⟩"

    def __repr__(self) -> str:
        return f"CombinedElem({self.render()})"


@dataclass(frozen=True)
class Alarm:
    kind: str  # memory | invalid-free | precision-loss | unsupported
    detail: str = ""
    label: int | None = None

    def render(self) -> str:
        where = f"label {self.label}" if self.label is not None else "?"
        return f"[{self.kind}] at {where}: {self.detail}"


class CombinedDomain:
    """Operations of the combined layer, closed over the definition table,
    the fresh-symbol supply, and the analysis knobs."""

    def __init__(
        self,
        defs: DefsTable,
        supply: SymbolSupply | None = None,
        numeric: str = "interval",
        unfold_bound: int = 3,
        node_budget: int = 12,
    ):
        self.defs = defs
        self.table = defs.field_table
        self.supply = supply if supply is not None else SymbolSupply()
        try:
            self.numeric_cls = NUMERIC_DOMAINS[numeric]
        except KeyError:
            raise InternalError(f"unknown numeric domain {numeric!r}") from None
        self.unfold_bound = unfold_bound
        self.node_budget = node_budget

    # -- element construction

    def top(self, graph: ShapeGraph) -> CombinedElem:
        return CombinedElem(graph, self.numeric_cls.top(graph.nodes))

    # -- unfolding

    def unfold(self, target: tuple[Sym, int], x: CombinedElem) -> list[CombinedElem]:
        """Materialize the summary at ``target``: one element per viable rule,
        each with the rule's side constraint applied (bottoms dropped)."""
        return [elem for elem, _ in self._unfold_sides(target, x)]

    def _unfold_sides(
        self, target: tuple[Sym, int], x: CombinedElem
    ) -> list[tuple[CombinedElem, tuple[SideCond, ...]]]:
        node = target[0]
        out = []
        for g2, conds in shape_unfold(target, x.graph, self.defs, self.supply):
            num = x.num
            for s in sorted(g2.nodes - x.graph.nodes):
                num = num.new_dim(s)
            for c in conds:
                num = num.guard(c.expr)
            if g2.pt_at(node, 0) is not None and x.graph.pt_at(node, 0) is None:
                # the rule materialized a cell at the node's own address,
                # so that address is allocated and hence positive
                num = num.guard(NumBin(">=", SymVal(node), Const(1)))
            if num.is_bottom():
                continue
            out.append((CombinedElem(g2, num), conds))
        return out

    # -- the materializing evaluation driver

    def _attempts(
        self,
        x: CombinedElem,
        fn: Callable[[CombinedElem], object],
        alarms: list[Alarm],
        what: str,
        alarm_kind: str = "memory",
    ) -> list[tuple[CombinedElem, object]]:
        """Run ``fn`` on ``x``; on a missing-cell failure, unfold at the
        failure address and retry on every disjunct, up to the unfold bound.
        Disjuncts that still fail are dropped with an alarm."""
        work: list[tuple[CombinedElem, int]] = [(x, self.unfold_bound)]
        out: list[tuple[CombinedElem, object]] = []
        while work:
            elem, budget = work.pop(0)
            try:
                r = fn(elem)
            except UnsupportedLoc as exc:
                alarms.append(Alarm("unsupported", f"{what}: {exc}"))
                continue
            if isinstance(r, EvalFail):
                if budget <= 0:
                    alarms.append(
                        Alarm(alarm_kind, f"{what}: unfold budget exhausted at ({r.node}, +{r.off})")
                    )
                    continue
                try:
                    subs = self._unfold_sides((r.node, r.off), elem)
                except NoIndEdge:
                    alarms.append(
                        Alarm(alarm_kind, f"{what}: no cell at ({r.node}, +{r.off})")
                    )
                    continue
                work.extend((e, budget - 1) for e, _ in subs)
            else:
                out.append((elem, r))
        return out

    # -- right-hand sides

    def _lower_leaves(
        self, e: Expr, x: CombinedElem, alarms: list[Alarm]
    ) -> list[tuple[CombinedElem, NumExpr]]:
        """Resolve every location subterm of ``e`` to a node, yielding one
        variant per unfolding disjunct.  No nodes are created."""
        if isinstance(e, IntLit):
            return [(x, Const(e.value))]
        if isinstance(e, (Loc, AddrOf)):
            resolved = self._attempts(
                x, lambda el: eval_exp(e, el.graph, self.table), alarms, "value"
            )
            return [(el, SymVal(v)) for el, v in resolved]
        if isinstance(e, Not):
            return [(el, NumNot(ne)) for el, ne in self._lower_leaves(e.arg, x, alarms)]
        if isinstance(e, BinOp):
            out = []
            for el, le in self._lower_leaves(e.left, x, alarms):
                for el2, re_ in self._lower_leaves(e.right, el, alarms):
                    out.append((el2, NumBin(e.op, le, re_)))
            return out
        raise InternalError(f"unknown expression {e!r}")

    def _bind_fresh(self, x: CombinedElem, ne: NumExpr) -> tuple[CombinedElem, Sym]:
        """Introduce a fresh node constrained to the value of ``ne``."""
        d = self.supply.fresh("t")
        num = x.num.new_dim(d).assign(d, ne)
        return CombinedElem(x.graph.with_node(d), num), d

    def _rhs_value(
        self, e: Expr, x: CombinedElem, alarms: list[Alarm]
    ) -> list[tuple[CombinedElem, Sym]]:
        """Node abstracting the value of ``e``: existing node for location
        reads and address-ofs, otherwise a fresh constrained node per
        operator application (innermost first, left to right)."""
        if isinstance(e, (Loc, AddrOf)):
            return self._attempts(x, lambda el: eval_exp(e, el.graph, self.table), alarms, "value")
        if isinstance(e, IntLit):
            return [self._bind_fresh(x, Const(e.value))]
        if isinstance(e, Not):
            out = []
            for el, ne in self._lower_leaves(e.arg, x, alarms):
                out.append(self._bind_fresh(el, NumNot(ne)))
            return out
        if isinstance(e, BinOp):
            out = []
            for el, le in self._lower_leaves(e.left, x, alarms):
                for el2, re_ in self._lower_leaves(e.right, el, alarms):
                    out.append(self._bind_fresh(el2, NumBin(e.op, le, re_)))
            return out
        raise InternalError(f"unknown expression {e!r}")

    # -- transfer functions

    def assign(
        self, loc: LocExpr, e: Expr, x: CombinedElem, roots: Iterable[Sym] = ()
    ) -> tuple[list[CombinedElem], list[Alarm]]:
        alarms: list[Alarm] = []
        roots = frozenset(roots)

        def resolve_target(el: CombinedElem):
            r = eval_loc(loc, el.graph, self.table)
            if isinstance(r, EvalFail):
                return r
            node, off = r
            if el.graph.pt_at(node, off) is None:
                return EvalFail(node, off)  # the assigned cell itself needs materializing
            return (node, off)

        outs: list[CombinedElem] = []
        for el, (node, off) in self._attempts(x, resolve_target, alarms, "assign target"):
            for el2, val in self._rhs_value(e, el, alarms):
                g = mutate(node, off, val, el2.graph)
                outs.append(self.reclaim(CombinedElem(g, el2.num), roots))
        return outs, alarms

    def guard(self, e: Expr, x: CombinedElem) -> tuple[list[CombinedElem], list[Alarm]]:
        alarms: list[Alarm] = []
        outs: list[CombinedElem] = []
        for el, ne in self._lower_leaves(e, x, alarms):
            # Split a summary for the branch outcome only on direct pointer
            # tests; a dereferencing guard already materialized what the
            # test needs, and the numeric layer keeps the rest.
            outs.extend(self._apply_guard(el, ne, split=el is x))
        return outs, alarms

    def _apply_guard(self, x: CombinedElem, ne: NumExpr, split: bool = True) -> list[CombinedElem]:
        target = _null_test_target(ne)
        if (
            split
            and target is not None
            and x.graph.ind_at(target)
            and x.graph.pt_at(target, 0) is None
        ):
            # A null test on a summarized pointer: unfold so the test's
            # outcome is reflected in the shape, not just the numerics.
            outs = []
            for sub, conds in self._unfold_sides((target, 0), x):
                num = sub.num.guard(ne)
                for c in conds:
                    num = num.guard(c.expr)  # re-assert, now that ne narrowed things
                if not num.is_bottom():
                    outs.append(CombinedElem(sub.graph, num))
            return outs
        num = x.num.guard(ne)
        return [] if num.is_bottom() else [CombinedElem(x.graph, num)]

    def alloc(
        self, loc: LocExpr, fields: Sequence[str], x: CombinedElem, roots: Iterable[Sym] = ()
    ) -> tuple[list[CombinedElem], list[Alarm]]:
        alarms: list[Alarm] = []
        blk = self.supply.fresh("b")
        g = x.graph.with_node(blk)
        num = x.num.new_dim(blk).guard(NumBin(">=", SymVal(blk), Const(1)))
        for f in fields:
            off = self.table.offset(f)
            content = self.supply.fresh("v")
            g = g.with_node(content).with_pt(PtEdge(blk, off, content, f))
            num = num.new_dim(content)
        seeded = CombinedElem(g, num)

        def resolve_target(el: CombinedElem):
            r = eval_loc(loc, el.graph, self.table)
            if isinstance(r, EvalFail):
                return r
            node, off = r
            if el.graph.pt_at(node, off) is None:
                return EvalFail(node, off)
            return (node, off)

        outs = []
        for el, (node, off) in self._attempts(seeded, resolve_target, alarms, "malloc target"):
            g2 = mutate(node, off, blk, el.graph)
            outs.append(self.reclaim(CombinedElem(g2, el.num), frozenset(roots)))
        return outs, alarms

    def free(
        self,
        loc: LocExpr,
        x: CombinedElem,
        roots: Iterable[Sym] = (),
        fields: Sequence[str] | None = None,
    ) -> tuple[list[CombinedElem], list[Alarm]]:
        alarms: list[Alarm] = []
        roots = frozenset(roots)
        resolved = self._attempts(
            x,
            lambda el: eval_exp(Loc(loc), el.graph, self.table),
            alarms,
            "free target",
            alarm_kind="invalid-free",
        )
        outs: list[CombinedElem] = []
        for el, beta in resolved:
            if beta in roots:
                alarms.append(Alarm("invalid-free", f"{beta} is a variable cell"))
                continue
            if not el.num.guard(NumBin("==", SymVal(beta), Const(0))).is_bottom():
                alarms.append(Alarm("invalid-free", f"{beta} may be null"))
                refined = el.num.guard(NumBin("!=", SymVal(beta), Const(0)))
                if refined.is_bottom():
                    continue
                el = CombinedElem(el.graph, refined)

            if fields is not None:
                offs = [self.table.offset(f) for f in fields]

                def need(e2: CombinedElem, offs=offs):
                    for o in offs:
                        if e2.graph.pt_at(beta, o) is None:
                            return EvalFail(beta, o)
                    return offs
            else:

                def need(e2: CombinedElem):
                    edges = e2.graph.pt_from(beta)
                    if not edges:
                        return EvalFail(beta, 0)
                    return [edge.off for edge in edges]

            for el2, offs in self._attempts(el, need, alarms, "free block", alarm_kind="invalid-free"):
                g = el2.graph
                for o in offs:
                    g = g.without_pt(beta, o)
                outs.append(self.reclaim(CombinedElem(g, el2.num), roots))
        return outs, alarms

    # -- inclusion, join, widening

    def _entails(self, num, conds: Sequence[SideCond]) -> bool:
        return all(c.auto or num.included_in(num.guard(c.expr)) for c in conds)

    def compare(
        self, roots: Mapping[Sym, Sym], x0: CombinedElem, x1: CombinedElem
    ) -> dict[Sym, Sym] | None:
        """Inclusion of x0 in x1; on success the node map (x1 symbols to x0
        symbols) extending ``roots``."""
        res = shape_compare(roots, x0.graph, x1.graph, self.defs, self.unfold_bound)
        if res is None:
            return None
        if not self._entails(x0.num, res.conds):
            return None
        renamed = x0.num.rename(res.phi, out_dims=x1.graph.nodes)
        if not renamed.included_in(x1.num):
            return None
        return res.phi

    def join(
        self,
        psi0: Sequence[tuple[Sym, Sym, Sym]],
        x0: CombinedElem,
        x1: CombinedElem,
        widen: bool = False,
    ) -> tuple[CombinedElem, list[tuple[Sym, Sym, Sym]], list[Alarm]]:
        ent0 = lambda conds: self._entails(x0.num, conds)
        ent1 = lambda conds: self._entails(x1.num, conds)
        if widen:
            out = shape_widen(
                psi0, x0.graph, x1.graph, self.defs, self.supply, ent0, ent1, self.node_budget
            )
        else:
            out = shape_join(psi0, x0.graph, x1.graph, self.defs, self.supply, ent0, ent1)
        pi_l = {o: l for (l, _, o) in out.psi}
        pi_r = {o: r for (_, r, o) in out.psi}
        n0 = x0.num.rename(pi_l, out.graph.nodes)
        n1 = x1.num.rename(pi_r, out.graph.nodes)
        num = n0.widen(n1) if widen else n0.join(n1)
        alarms = (
            [Alarm("precision-loss", "join dropped an unmatched heap region")]
            if out.dropped
            else []
        )
        return CombinedElem(out.graph, num), out.psi, alarms

    def widen(self, psi0, x0, x1):
        return self.join(psi0, x0, x1, widen=True)

    # -- garbage collection

    def reclaim(self, x: CombinedElem, roots: Iterable[Sym]) -> CombinedElem:
        """Drop nodes unreachable from ``roots`` (following points-to edges),
        deleting their edges and projecting their numeric dimensions."""
        reach = {r for r in roots if r in x.graph.nodes}
        frontier = sorted(reach)
        while frontier:
            n = frontier.pop(0)
            for e in x.graph.pt_from(n):
                if e.dst not in reach:
                    reach.add(e.dst)
                    frontier.append(e.dst)
        dead = x.graph.nodes - reach
        if not dead:
            return x
        pt = frozenset(e for e in x.graph.pt if e.src not in dead and e.dst not in dead)
        ind = frozenset(i for i in x.graph.ind if i.root not in dead)
        num = x.num
        for s in sorted(dead):
            num = num.drop_dim(s)
        return CombinedElem(ShapeGraph(frozenset(reach), pt, ind), num)


def _null_test_target(ne: NumExpr) -> Sym | None:
    """The summarized pointer symbol of a null test, if ``ne`` is one."""
    if isinstance(ne, NumNot):
        return _null_test_target(ne.arg)
    if isinstance(ne, SymVal):
        return ne.sym
    if isinstance(ne, NumBin) and ne.op in ("==", "!="):
        if isinstance(ne.left, SymVal) and ne.right == Const(0):
            return ne.left.sym
        if isinstance(ne.right, SymVal) and ne.left == Const(0):
            return ne.left.sym if isinstance(ne.left, SymVal) else ne.right.sym
    return None

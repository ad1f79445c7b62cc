"""Shape graph tests: evaluation rules, mutation, unfolding, inclusion,
join/widening, and oracle-backed soundness spot checks."""

from __future__ import annotations

import pytest

from shapenum.combined import CombinedElem
from shapenum.errors import DefsError, InternalError
from shapenum.lang import AddrNode, Deref, FieldOf, Loc, AddrOf
from shapenum.memory import AbstractMem
from shapenum.numeric import IntervalElem
from shapenum.oracle import MemberResult, member_gamma
from shapenum.shape import (
    DefsTable,
    EvalFail,
    IndEdge,
    NoIndEdge,
    PtEdge,
    ShapeGraph,
    UnsupportedLoc,
    compare,
    eval_exp,
    eval_loc,
    join,
    mutate,
    unfold,
    widen,
)
from shapenum.symbols import Const, NumBin, Sym, SymbolSupply, SymVal

from conftest import list_state_concrete


def syms(*pairs):
    return [Sym(i, h) for i, h in pairs]


A0, A1, A2, A3, A4, A5, A6, A7 = (Sym(i, "al") for i in range(8))
P0, P1, P2, P3, P4, P5 = (Sym(10 + i, "pr") for i in range(6))


@pytest.fixture
def defs():
    return DefsTable()


@pytest.fixture
def table(defs):
    t = defs.field_table
    t.register("a", 0)
    t.register("b", 1)
    t.register("c", 2)
    return t


# -- graph invariants ---------------------------------------------------------


def test_separation_rejects_duplicate_cells():
    with pytest.raises(InternalError):
        ShapeGraph.of(pt=[PtEdge(A0, 0, A1), PtEdge(A0, 0, A2)])


def test_of_collects_endpoints():
    g = ShapeGraph.of(pt=[PtEdge(A0, 0, A1)], ind=[(A2, "list")])
    assert g.nodes == frozenset({A0, A1, A2})


def test_delete_node_requires_isolation():
    g = ShapeGraph.of(pt=[PtEdge(A0, 0, A1)])
    with pytest.raises(InternalError):
        g.without_node(A0)
    g2 = g.without_pt(A0, 0)
    assert g2.without_node(A0).nodes == frozenset({A1})


def test_delete_edge_keeps_nodes():
    g = ShapeGraph.of(pt=[PtEdge(A0, 0, A1)])
    g2 = g.without_pt(A0, 0)
    assert g2.nodes == frozenset({A0, A1}) and not g2.pt


# -- evaluation ----------------------------------------------------------------


def test_loc_address_rule(defs):
    g = ShapeGraph.of(nodes=[A0])
    assert eval_loc(AddrNode(A0), g, defs.field_table) == (A0, 0)


def test_loc_field_offsets_accumulate(table, defs):
    g = ShapeGraph.of(nodes=[A0])
    loc = FieldOf(FieldOf(AddrNode(A0), "b"), "a")
    assert eval_loc(loc, g, table) == (A0, 1)


def test_eval_exp_dereference(table, defs):
    # the two-struct layout of the worked assignment example
    g = ShapeGraph.of(
        pt=[
            PtEdge(A0, 0, A1),
            PtEdge(A0, 1, A2),
            PtEdge(A1, 0, A3),
            PtEdge(A1, 1, A4),
        ]
    )
    # the assigned cell of x->a.b is the b field of the pointed-to struct
    loc = FieldOf(FieldOf(Deref(Loc(AddrNode(A0))), "a"), "b")
    assert eval_loc(loc, g, table) == (A1, 1)
    # and the value of x.b is the second field's contents
    assert eval_exp(Loc(FieldOf(AddrNode(A0), "b")), g, table) == A2


def test_eval_exp_addr_of_zero_offset(defs):
    g = ShapeGraph.of(nodes=[A0])
    assert eval_exp(AddrOf(AddrNode(A0)), g, defs.field_table) == A0


def test_eval_exp_addr_of_field_unsupported(table):
    g = ShapeGraph.of(nodes=[A0])
    with pytest.raises(UnsupportedLoc):
        eval_exp(AddrOf(FieldOf(AddrNode(A0), "b")), g, table)


def test_eval_fails_on_summary(defs):
    g = ShapeGraph.of(pt=[PtEdge(A0, 0, A2)], ind=[(A2, "list")])
    got = eval_exp(Loc(FieldOf(AddrNode(A2), "next")), g, defs.field_table)
    assert got == EvalFail(A2, 0)  # the missing cell is the next field


# -- mutation -------------------------------------------------------------------


def test_mutate_swings_edge():
    g = ShapeGraph.of(pt=[PtEdge(A1, 1, A4), PtEdge(A0, 1, A2)])
    g2 = mutate(A1, 1, A2, g)
    assert g2.pt_at(A1, 1).dst == A2
    assert g2.pt_at(A0, 1).dst == A2
    assert A4 in g2.nodes  # mutation alone does not collect garbage


def test_mutate_same_destination_is_identity():
    g = ShapeGraph.of(pt=[PtEdge(A0, 0, A1)])
    assert mutate(A0, 0, A1, g) == g


def test_mutate_missing_edge_is_internal_error():
    g = ShapeGraph.of(nodes=[A0, A1])
    with pytest.raises(InternalError):
        mutate(A0, 0, A1, g)


# -- unfolding ------------------------------------------------------------------


def test_unfold_list_two_rules(defs):
    g = ShapeGraph.of(pt=[PtEdge(A0, 0, A2)], ind=[(A2, "list")])
    out = unfold((A2, 0), g, defs, SymbolSupply(100))
    assert len(out) == 2
    empty, cons = sorted(out, key=lambda p: len(p[0].pt))
    g_empty, conds_empty = empty
    assert g_empty.pt == g.pt and not g_empty.ind
    assert [str(c.expr) for c in conds_empty] == [f"({A2} == 0)"]
    g_cons, conds_cons = cons
    assert len(g_cons.pt) == 3 and len(g_cons.ind) == 1
    assert g_cons.pt_at(A2, 0) is not None and g_cons.pt_at(A2, 1) is not None
    tail = g_cons.pt_at(A2, 0).dst
    assert IndEdge(tail, "list") in g_cons.ind
    (cond,) = conds_cons
    assert str(cond.expr) == f"({A2} != 0)" and cond.auto


def test_unfold_requires_summary(defs):
    g = ShapeGraph.of(pt=[PtEdge(A0, 0, A2)])
    with pytest.raises(NoIndEdge):
        unfold((A2, 0), g, defs, SymbolSupply(100))


def test_unfold_skips_separation_clash(defs):
    # a cell already present at the root makes the non-empty rule infeasible
    g = ShapeGraph.of(pt=[PtEdge(A2, 0, A3)], ind=[(A2, "list")])
    out = unfold((A2, 0), g, defs, SymbolSupply(100))
    assert len(out) == 1  # only the empty rule survives


# -- inclusion -------------------------------------------------------------------


def left_right_inclusion_pair(defs):
    """The held inclusion fixture: a two-cell materialized list against a
    one-cell materialized list; primed symbols on the weaker side."""
    left = ShapeGraph.of(
        pt=[
            PtEdge(A0, 0, A2),
            PtEdge(A1, 0, A3),
            PtEdge(A2, 0, A4, "next"),
            PtEdge(A2, 1, A5, "d"),
            PtEdge(A4, 0, A6, "next"),
            PtEdge(A4, 1, A7, "d"),
        ],
        ind=[(A6, "list")],
    )
    right = ShapeGraph.of(
        pt=[
            PtEdge(P0, 0, P2),
            PtEdge(P1, 0, P3),
            PtEdge(P2, 0, P4, "next"),
            PtEdge(P2, 1, P5, "d"),
        ],
        ind=[(P4, "list")],
    )
    return left, right


def test_compare_inclusion_fixture(defs):
    left, right = left_right_inclusion_pair(defs)
    res = compare({P0: A0, P1: A1}, left, right, defs)
    assert res is not None
    expected = {P0: A0, P1: A1, P2: A2, P3: A3, P4: A4, P5: A5}
    assert {k: res.phi[k] for k in expected} == expected


def test_compare_reflexive(defs):
    g = ShapeGraph.of(
        pt=[PtEdge(A0, 0, A2), PtEdge(A2, 0, A4), PtEdge(A2, 1, A5)],
        ind=[(A4, "list")],
    )
    res = compare({A0: A0}, g, g, defs)
    assert res is not None
    assert all(res.phi[n] == n for n in g.nodes)


def test_compare_residual_left_edge_fails(defs):
    left = ShapeGraph.of(pt=[PtEdge(A0, 0, A2), PtEdge(A3, 0, A4)])
    right = ShapeGraph.of(pt=[PtEdge(P0, 0, P2)])
    assert compare({P0: A0}, left, right, defs) is None


def test_compare_missing_left_edge_fails(defs):
    left = ShapeGraph.of(pt=[PtEdge(A0, 0, A2)])
    right = ShapeGraph.of(pt=[PtEdge(P0, 0, P2), PtEdge(P2, 0, P3)])
    assert compare({P0: A0}, left, right, defs) is None


def test_compare_weakening_instance(defs):
    # a materialized first cell plus a summarized tail folds into a summary
    frag = ShapeGraph.of(
        pt=[PtEdge(A2, 0, A3, "next"), PtEdge(A2, 1, A4, "d")], ind=[(A3, "list")]
    )
    summary = ShapeGraph.of(nodes=[P0], ind=[(P0, "list")])
    res = compare({P0: A2}, frag, summary, defs)
    assert res is not None
    assert all(c.auto for c in res.conds)


def test_compare_empty_against_summary_needs_null(defs):
    frag = ShapeGraph.of(nodes=[A2])
    summary = ShapeGraph.of(nodes=[P0], ind=[(P0, "list")])
    res = compare({P0: A2}, frag, summary, defs)
    assert res is not None
    (cond,) = res.conds
    assert str(cond.expr) == f"({A2} == 0)" and not cond.auto


def test_compare_budget_exhaustion_returns_none(defs):
    # three materialized cells against a bare summary with budget 2
    left = ShapeGraph.of(
        pt=[
            PtEdge(A0, 0, A2),
            PtEdge(A2, 0, A3, "next"),
            PtEdge(A2, 1, A4, "d"),
            PtEdge(A3, 0, A5, "next"),
            PtEdge(A3, 1, A6, "d"),
            PtEdge(A5, 0, A7, "next"),
            PtEdge(A5, 1, Sym(8, "al"), "d"),
        ],
        ind=[(A7, "list")],
    )
    right = ShapeGraph.of(pt=[PtEdge(P0, 0, P2)], ind=[(P2, "list")])
    assert compare({P0: A0}, left, right, defs, unfold_budget=2) is None
    assert compare({P0: A0}, left, right, defs, unfold_budget=3) is not None


# -- join and widening -----------------------------------------------------------


def test_join_identity_is_bijective(defs):
    g = ShapeGraph.of(
        pt=[PtEdge(A0, 0, A2), PtEdge(A2, 0, A4, "next"), PtEdge(A2, 1, A5, "d")],
        ind=[(A4, "list")],
    )
    supply = SymbolSupply(100)
    o = supply.fresh("o")
    out = join([(A0, A0, o)], g, g, defs, supply)
    assert not out.dropped
    assert len(out.graph.pt) == len(g.pt) and len(out.graph.ind) == len(g.ind)
    # every triple pairs a node with itself
    assert all(l == r for l, r, _ in out.psi)


def test_join_opposite_emptiness_folds_to_summaries(defs):
    # one side: x holds a non-empty list, y a summary; other side swapped
    lx, ly = Sym(20, "L"), Sym(21, "L")
    lxv, lyv = Sym(22, "L"), Sym(23, "L")
    l_tail, l_data = Sym(24, "L"), Sym(25, "L")
    left = ShapeGraph.of(
        pt=[
            PtEdge(lx, 0, lxv),
            PtEdge(ly, 0, lyv),
            PtEdge(lxv, 0, l_tail, "next"),
            PtEdge(lxv, 1, l_data, "d"),
        ],
        ind=[(l_tail, "list"), (lyv, "list")],
    )
    rx, ry = Sym(30, "R"), Sym(31, "R")
    rxv, ryv = Sym(32, "R"), Sym(33, "R")
    r_tail, r_data = Sym(34, "R"), Sym(35, "R")
    right = ShapeGraph.of(
        pt=[
            PtEdge(rx, 0, rxv),
            PtEdge(ry, 0, ryv),
            PtEdge(ryv, 0, r_tail, "next"),
            PtEdge(ryv, 1, r_data, "d"),
        ],
        ind=[(r_tail, "list"), (rxv, "list")],
    )
    supply = SymbolSupply(100)
    ox, oy = supply.fresh("o"), supply.fresh("o")
    out = join([(lx, rx, ox), (ly, ry, oy)], left, right, defs, supply)
    assert not out.dropped
    by_pair = {(l, r): o for l, r, o in out.psi}
    oxv = by_pair[(lxv, rxv)]
    oyv = by_pair[(lyv, ryv)]
    assert IndEdge(oxv, "list") in out.graph.ind
    assert IndEdge(oyv, "list") in out.graph.ind
    assert not out.graph.pt_from(oxv) and not out.graph.pt_from(oyv)


def test_widen_budget_forces_summarization(defs):
    # two long exact chains; the budget forces both into summaries
    def chain(base: int, n: int, var: Sym):
        pt = []
        prev = var
        for i in range(n):
            blk = Sym(base + 2 * i, "c")
            val = Sym(base + 2 * i + 1, "c")
            pt.append(PtEdge(prev, 0, blk) if prev is var else PtEdge(prev, 0, blk, "next"))
            pt.append(PtEdge(blk, 1, val, "d"))
            prev = blk
        last = Sym(base + 2 * n, "c")
        pt.append(PtEdge(prev, 0, last, "next"))
        return ShapeGraph.of(pt=pt), last

    lvar, rvar = Sym(500, "L"), Sym(600, "R")
    left, l_last = chain(510, 4, lvar)
    right, r_last = chain(610, 5, rvar)

    # ground the chains: terminal pointers are null so they fold into lists
    def entails_null(last):
        def check(conds):
            ok = True
            for c in conds:
                if c.auto:
                    continue
                ok = ok and str(c.expr) == f"({last} == 0)"
            return ok

        return check

    supply = SymbolSupply(1000)
    o = supply.fresh("o")
    out = widen(
        [(lvar, rvar, o)],
        left,
        right,
        defs,
        supply,
        entails_null(l_last),
        entails_null(r_last),
        node_budget=6,
    )
    assert len(out.graph.nodes) <= 6
    assert any(i.name == "list" for i in out.graph.ind)


# -- oracle-backed soundness ------------------------------------------------------


def as_mem(graph, env, num=None):
    num = num if num is not None else IntervalElem.top(graph.nodes)
    return AbstractMem(env, CombinedElem(graph, num))


def test_unfold_union_covers_membership(defs):
    """Any store accepted by the summarized state is accepted by some
    unfolded disjunct whose side constraint holds."""
    ax, beta = Sym(0, "a"), Sym(1, "b")
    g = ShapeGraph.of(pt=[PtEdge(ax, 0, beta)], ind=[(beta, "list")])
    mem = as_mem(g, {"x": ax})
    for n in (0, 1, 2):
        env, store = list_state_concrete(n=n)
        assert member_gamma(env, store, mem, 3, defs) is MemberResult.YES
        supply = SymbolSupply(100)
        accepted = []
        for g_u, conds in unfold((beta, 0), g, defs, supply):
            num = IntervalElem.top(g_u.nodes)
            for c in conds:
                num = num.guard(c.expr)
            if num.is_bottom():
                continue
            sub = AbstractMem({"x": ax}, CombinedElem(g_u, num))
            accepted.append(member_gamma(env, store, sub, 3, defs))
        assert MemberResult.YES in accepted


def test_compare_transports_membership(defs):
    """When inclusion holds, every accepted store of the left state is
    accepted by the right state."""
    left, right = left_right_inclusion_pair(defs)
    res = compare({P0: A0, P1: A1}, left, right, defs)
    assert res is not None
    left_mem = as_mem(left, {"x": A0, "y": A1})
    right_mem = as_mem(right, {"x": P0, "y": P1})
    for n in (2, 3):
        # a two-cell prefix demands at least two concrete elements
        env, store = list_state_concrete(n=n)
        store = dict(store)
        env = dict(env)
        env["y"] = 0x104
        store[0x104] = 9
        if member_gamma(env, store, left_mem, 4, defs) is MemberResult.YES:
            assert member_gamma(env, store, right_mem, 4, defs) is MemberResult.YES


def test_join_covers_both_inputs(defs):
    lx = Sym(20, "L")
    lxv = Sym(22, "L")
    ltail, ldata = Sym(24, "L"), Sym(25, "L")
    left = ShapeGraph.of(
        pt=[PtEdge(lx, 0, lxv), PtEdge(lxv, 0, ltail, "next"), PtEdge(lxv, 1, ldata, "d")],
        ind=[(ltail, "list")],
    )
    rx = Sym(30, "R")
    rxv = Sym(32, "R")
    right = ShapeGraph.of(pt=[PtEdge(rx, 0, rxv)], ind=[(rxv, "list")])
    supply = SymbolSupply(100)
    ox = supply.fresh("o")
    out = join(
        [(lx, rx, ox)],
        left,
        right,
        defs,
        supply,
        lambda conds: all(c.auto for c in conds),
        lambda conds: all(c.auto for c in conds),
    )
    assert not out.dropped
    joined = as_mem(out.graph, {"x": ox})
    left_mem = as_mem(left, {"x": lx})
    right_mem = as_mem(right, {"x": rx})
    for n in (0, 1, 2):
        env, store = list_state_concrete(n=n)
        for side in (left_mem, right_mem):
            if member_gamma(env, store, side, 3, defs) is MemberResult.YES:
                assert member_gamma(env, store, joined, 3, defs) is MemberResult.YES


# -- definitions table -------------------------------------------------------------


def test_defs_parse_builtin():
    defs = DefsTable()
    d = defs["list"]
    assert d.has_base and len(d.rules) == 2
    assert defs.field_table.offset("next") == 0
    assert defs.field_table.offset("d") == 1


def test_defs_load_custom():
    defs = DefsTable()
    defs.load_text("ind pair(a) := | emp, a == 0 | a.fst |-> p * a.snd |-> q, a != 0")
    assert "pair" in defs
    assert defs.field_table.offset("fst") == 0


def test_defs_reject_garbage():
    defs = DefsTable()
    with pytest.raises(DefsError):
        defs.load_text("ind broken(a) := | no constraint here")


def test_defs_reject_rich_constraint():
    defs = DefsTable()
    with pytest.raises(DefsError):
        defs.load_text("ind odd(a) := | emp, a + a == 0")

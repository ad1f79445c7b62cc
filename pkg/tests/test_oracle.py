"""Membership oracle tests: definite answers on exact graphs, depth-bounded
answers on summaries, agreement with brute-force bijection enumeration."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapenum.combined import CombinedElem
from shapenum.memory import AbstractMem
from shapenum.numeric import IntervalElem
from shapenum.oracle import MemberResult, member_exact_bruteforce, member_gamma
from shapenum.shape import DefsTable, IndEdge, PtEdge, ShapeGraph
from shapenum.symbols import Sym

from conftest import list_state_concrete

YES, NO, UNKNOWN = MemberResult.YES, MemberResult.NO, MemberResult.UNKNOWN

AX = Sym(0, "a")
BETA = Sym(1, "b")


def list_summary_mem(num_bounds=None) -> AbstractMem:
    g = ShapeGraph.of(pt=[PtEdge(AX, 0, BETA)], ind=[(BETA, "list")])
    num = IntervalElem.top(g.nodes)
    if num_bounds:
        num = IntervalElem.of({**{s: (float("-inf"), float("inf")) for s in g.nodes}, **num_bounds})
    return AbstractMem({"x": AX}, CombinedElem(g, num))


@pytest.fixture
def defs():
    return DefsTable()


@pytest.mark.parametrize("n", [0, 1, 2])
def test_list_summary_accepts_short_lists(defs, n):
    env, store = list_state_concrete(n=n)
    assert member_gamma(env, store, list_summary_mem(), 3, defs) is YES


def test_list_summary_unknown_beyond_depth(defs):
    env, store = list_state_concrete(n=5)
    assert member_gamma(env, store, list_summary_mem(), 3, defs) is UNKNOWN


def test_deeper_budget_resolves(defs):
    env, store = list_state_concrete(n=5)
    assert member_gamma(env, store, list_summary_mem(), 6, defs) is YES


def test_empty_store_vs_one_edge(defs):
    g = ShapeGraph.of(pt=[PtEdge(AX, 0, BETA)])
    mem = AbstractMem({"x": AX}, CombinedElem(g, IntervalElem.top(g.nodes)))
    assert member_gamma({"x": 0x100}, {}, mem, 3, defs) is NO


def test_cell_count_mismatch(defs):
    env, store = list_state_concrete(n=1)
    g = ShapeGraph.of(pt=[PtEdge(AX, 0, BETA)])  # exact: just the variable cell
    mem = AbstractMem({"x": AX}, CombinedElem(g, IntervalElem.top(g.nodes)))
    assert member_gamma(env, store, mem, 3, defs) is NO


def test_numeric_constraint_rejects(defs):
    env, store = list_state_concrete(n=0)  # x holds 0
    mem = list_summary_mem({BETA: (5, 5)})
    assert member_gamma(env, store, mem, 3, defs) is NO


def test_env_mismatch(defs):
    mem = list_summary_mem()
    assert member_gamma({"y": 0x100}, {0x100: 0}, mem, 3, defs) is NO


def test_env_injectivity_enforced(defs):
    from shapenum.errors import InternalError

    g = ShapeGraph.of(pt=[PtEdge(AX, 0, BETA)])
    with pytest.raises(InternalError, match="share"):
        AbstractMem({"x": AX, "y": AX}, CombinedElem(g, IntervalElem.top(g.nodes)))


# -- agreement with the brute-force bijection reference ---------------------


def random_exact_case(rng: random.Random):
    """A random exact abstract state plus a store that may or may not match."""
    n_extra = rng.randint(0, 2)
    ax, ay = Sym(0, "a"), Sym(1, "a")
    vx, vy = Sym(2, "v"), Sym(3, "v")
    pt = [PtEdge(ax, 0, vx), PtEdge(ay, 0, vy)]
    syms = [ax, ay, vx, vy]
    for i in range(n_extra):
        blk = Sym(4 + 2 * i, "b")
        val = Sym(5 + 2 * i, "v")
        pt.append(PtEdge(blk, rng.choice([0, 1]), val))
        syms += [blk, val]
    g = ShapeGraph.of(pt=pt)
    bounds = {}
    for s in g.nodes:
        if rng.random() < 0.3:
            lo = rng.randint(-2, 4)
            bounds[s] = (lo, lo + rng.randint(0, 6))
        else:
            bounds[s] = (float("-inf"), float("inf"))
    mem = AbstractMem({"x": ax, "y": ay}, CombinedElem(g, IntervalElem.of(bounds)))

    env = {"x": 0x100, "y": 0x104}
    if rng.random() < 0.5:
        # derive the store from a valuation so matches are plausible
        nu = {ax: 0x100, ay: 0x104}
        addr = 0x200
        for e in pt[2:]:
            if e.src not in nu:
                nu[e.src] = addr
                addr += 8
        store = {}
        for e in g.sorted_pt():
            v = nu.get(e.dst, rng.randint(0, 3))
            store[nu[e.src] + e.off * 4] = v
            nu.setdefault(e.dst, v)
    else:
        store = {0x100: rng.randint(0, 2), 0x104: rng.randint(0, 2)}
        for i in range(n_extra):
            store[0x200 + 8 * i] = rng.randint(0, 2)
    if rng.random() < 0.3 and store:
        k = rng.choice(sorted(store))
        store[k] += rng.randint(1, 2)  # perturb
    return mem, env, store


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10**6))
def test_exact_graphs_agree_with_bruteforce(seed):
    rng = random.Random(seed)
    mem, env, store = random_exact_case(rng)
    defs = DefsTable()
    got = member_gamma(env, store, mem, 3, defs)
    want = member_exact_bruteforce(env, store, mem)
    assert got is not UNKNOWN
    assert got is want


def test_bruteforce_rejects_summaries():
    mem = list_summary_mem()
    with pytest.raises(ValueError):
        member_exact_bruteforce({"x": 0x100}, {0x100: 0}, mem)

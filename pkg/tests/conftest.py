"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import random

import pytest

from shapenum.combined import CombinedDomain, CombinedElem
from shapenum.lang import ZERO_FIELD
from shapenum.memory import AbstractMem, MemoryDomain
from shapenum.numeric import DiffBoundElem, IntervalElem
from shapenum.shape import DefsTable, IndEdge, PtEdge, ShapeGraph
from shapenum.symbols import Const, NumBin, Sym, SymbolSupply, SymVal

from corpus import FIXTURES, write_fixture_files


def pytest_sessionstart(session):
    write_fixture_files()


@pytest.fixture
def defs() -> DefsTable:
    return DefsTable()


@pytest.fixture
def supply() -> SymbolSupply:
    return SymbolSupply(100)


@pytest.fixture
def comb(defs) -> CombinedDomain:
    return CombinedDomain(defs, SymbolSupply(100))


def make_domain(variables=("x", "y"), numeric="interval", **kw):
    defs = DefsTable()
    comb = CombinedDomain(defs, SymbolSupply(0), numeric=numeric, **kw)
    return MemoryDomain(variables, comb)


def list_state_concrete(lengths_base=0x200, n=0, x_addr=0x100, data=0):
    """Concrete (env, store) with variable x holding an n-element list."""
    env = {"x": x_addr}
    store = {}
    nxt = 0
    base = lengths_base + 8 * (n - 1)
    for i in range(n):
        store[base] = nxt
        store[base + 4] = data
        nxt = base
        base -= 8
    store[x_addr] = nxt
    return env, store


def var_list_mem(domain: MemoryDomain, var: str = "x", materialized: int = 0):
    """Abstract state where ``var`` points to a list, with ``materialized``
    head cells exposed ahead of the summary."""
    m = domain.init_state()
    g = m.elem.graph
    num = m.elem.num
    supply = domain.comb.supply
    node = m.cell_node(var)
    for _ in range(materialized):
        tail = supply.fresh("v")
        data = supply.fresh("v")
        g = g.with_node(tail).with_node(data)
        g = g.with_pt(PtEdge(node, 0, tail, "next")).with_pt(PtEdge(node, 1, data, "d"))
        num = num.new_dim(tail).new_dim(data)
        num = num.guard(NumBin(">=", SymVal(node), Const(1)))
        node = tail
    g = g.with_ind(IndEdge(node, "list"))
    return AbstractMem(m.env, CombinedElem(g, num))

"""Brute-force enumeration harness for numeric-layer soundness.

Ground truth is direct constraint evaluation: an element's concretization,
restricted to valuations over a small value grid, is enumerated and each
operation's output is required to contain the concrete image of every
member.  Used by the property tests and by the acceptance suite.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Type

from shapenum.numeric import DiffBoundElem, IntervalElem
from shapenum.symbols import Const, NumBin, NumExpr, Sym, SymVal, eval_numexpr

GRID = range(-2, 6)

SYMS = [Sym(0, "s"), Sym(1, "s"), Sym(2, "s")]


def gamma_grid(elem) -> list[dict[Sym, int]]:
    dims = sorted(elem.dims)
    out = []
    for combo in itertools.product(GRID, repeat=len(dims)):
        nu = dict(zip(dims, combo))
        if elem.accepts(nu):
            out.append(nu)
    return out


def random_elem(rng: random.Random, cls: Type, dims: Iterable[Sym]):
    dims = list(dims)
    if rng.random() < 0.05:
        return cls.bottom(dims)
    elem = cls.top(dims)
    for s in dims:
        if rng.random() < 0.7:
            lo = rng.randint(-3, 5)
            hi = lo + rng.randint(0, 5)
            elem = elem.guard(NumBin(">=", SymVal(s), Const(lo)))
            elem = elem.guard(NumBin("<=", SymVal(s), Const(hi)))
    if cls is DiffBoundElem and len(dims) >= 2:
        for _ in range(rng.randint(0, 2)):
            a, b = rng.sample(dims, 2)
            elem = elem.guard(NumBin(rng.choice(["<=", "<"]), SymVal(a), SymVal(b)))
    return elem


def random_expr(rng: random.Random, dims: list[Sym], depth: int = 2) -> NumExpr:
    if depth == 0 or rng.random() < 0.4:
        if dims and rng.random() < 0.7:
            return SymVal(rng.choice(dims))
        return Const(rng.randint(-3, 5))
    op = rng.choice(["+", "-", "==", "!=", "<", "<=", ">", ">="])
    return NumBin(op, random_expr(rng, dims, depth - 1), random_expr(rng, dims, depth - 1))


def check_assign(elem, target: Sym, e: NumExpr) -> int:
    out = elem.assign(target, e)
    for nu in gamma_grid(elem):
        post = dict(nu)
        post[target] = eval_numexpr(e, nu)
        assert out.accepts(post), f"assign lost {post} ({elem!r} . {target} := {e})"
    return 1


def check_guard(elem, e: NumExpr) -> int:
    out = elem.guard(e)
    for nu in gamma_grid(elem):
        if eval_numexpr(e, nu) != 0:
            assert out.accepts(nu), f"guard lost {nu} ({elem!r} . {e})"
    return 1


def check_join(a, b) -> int:
    out = a.join(b)
    for nu in gamma_grid(a) + gamma_grid(b):
        assert out.accepts(nu), f"join lost {nu}"
    return 1


def check_widen(a, b) -> int:
    out = a.widen(b)
    for nu in gamma_grid(a) + gamma_grid(b):
        assert out.accepts(nu), f"widen lost {nu}"
    return 1


def check_compare(a, b) -> int:
    if a.included_in(b):
        for nu in gamma_grid(a):
            assert b.accepts(nu), f"inclusion claimed but {nu} not in the right element"
    return 1


def check_rename(elem, rng: random.Random) -> int:
    dims = sorted(elem.dims)
    outs = [Sym(10 + i, "r") for i in range(rng.randint(1, 3))]
    phi = {o: rng.choice(dims) for o in outs} if dims else {}
    out = elem.rename(phi, outs)
    for nu in gamma_grid(elem):
        image = {o: nu[phi[o]] for o in outs if o in phi}
        for o in outs:
            image.setdefault(o, 0)
        assert out.accepts(image), f"rename lost {image}"
    return 1


def run_soundness_cases(cls: Type, cases: int, seed: int = 0) -> int:
    """Run ``cases`` rounds of all six operation checks; returns the number
    of individual operation checks performed."""
    rng = random.Random(seed)
    checked = 0
    for _ in range(cases):
        ndims = rng.randint(1, 3)
        dims = SYMS[:ndims]
        a = random_elem(rng, cls, dims)
        b = random_elem(rng, cls, dims)
        e = random_expr(rng, dims)
        checked += check_assign(a, rng.choice(dims), e)
        checked += check_guard(a, random_expr(rng, dims))
        checked += check_join(a, b)
        checked += check_widen(a, b)
        checked += check_compare(a, b)
        checked += check_rename(a, rng)
    return checked


def widen_chain_growth(cls: Type, rng: random.Random, steps: int = 30) -> int:
    """Drive one random widening chain and count the strictly-growing steps.

    Intervals admit at most one bottom exit plus two bound jumps per
    dimension, so growth happens at most ``2*dims + 1`` times however long
    the chain runs; difference bounds admit one jump per matrix entry."""
    ndims = rng.randint(1, 3)
    dims = SYMS[:ndims]
    x = random_elem(rng, cls, dims)
    growth = 0
    for _ in range(steps):
        y = random_elem(rng, cls, dims)
        nxt = x.widen(y)
        if not nxt.included_in(x):
            growth += 1
        x = nxt
    limit = 2 * ndims + 1 if cls is IntervalElem else (ndims + 1) ** 2 + 1
    assert growth <= limit, f"widening grew {growth} times over {ndims} dims"
    return growth

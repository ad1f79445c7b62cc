"""Memory layer: abstract environments over program variables paired with a
combined shape-numeric element.

Each declared variable owns a permanent cell: its address node is mapped by
the abstract environment and carries exactly one zero-offset points-to edge
to the node abstracting the cell's contents.  Program-level statements are
translated by substituting every variable for its address node, then
forwarded to the combined layer; variable address nodes act as the root set
for garbage collection, so variable cells are never reclaimed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .combined import Alarm, CombinedDomain, CombinedElem
from .errors import InternalError
from .lang import (
    ZERO_FIELD,
    AddrNode,
    AddrOf,
    BinOp,
    Deref,
    Expr,
    FieldOf,
    IntLit,
    Loc,
    LocExpr,
    Not,
    Var,
)
from .shape import PtEdge, ShapeGraph
from .symbols import Sym


@dataclass(frozen=True)
class AbstractMem:
    """Abstract environment plus combined element."""

    env: Mapping[str, Sym]
    elem: CombinedElem

    def __post_init__(self) -> None:
        nodes = self.elem.graph.nodes
        seen: set[Sym] = set()
        for x, node in self.env.items():
            if node in seen:
                raise InternalError(f"variables share the address node {node}")
            seen.add(node)
            if node not in nodes:
                raise InternalError(f"environment node {node} missing from the graph")
            if self.elem.graph.pt_at(node, 0) is None:
                raise InternalError(f"variable {x!r} has no cell edge")

    def is_bottom(self) -> bool:
        return self.elem.is_bottom()

    def cell_node(self, x: str) -> Sym:
        """Node holding the current contents of variable ``x``."""
        edge = self.elem.graph.pt_at(self.env[x], 0)
        assert edge is not None
        return edge.dst

    def render(self, table=None) -> str:
        env_part = ", ".join(f"{x}@{sym}" for x, sym in sorted(self.env.items()))
        return f"{env_part} | {self.elem.render(table)}"

    def __repr__(self) -> str:
        return f"AbstractMem({self.render()})"


def subst_loc(loc: LocExpr, env: Mapping[str, Sym]) -> LocExpr:
    if isinstance(loc, Var):
        return AddrNode(env[loc.name])
    if isinstance(loc, FieldOf):
        return FieldOf(subst_loc(loc.base, env), loc.field)
    if isinstance(loc, Deref):
        return Deref(subst_exp(loc.addr, env))
    if isinstance(loc, AddrNode):
        return loc
    raise InternalError(f"unknown location {loc!r}")


def subst_exp(e: Expr, env: Mapping[str, Sym]) -> Expr:
    if isinstance(e, Loc):
        return Loc(subst_loc(e.loc, env))
    if isinstance(e, AddrOf):
        return AddrOf(subst_loc(e.loc, env))
    if isinstance(e, IntLit):
        return e
    if isinstance(e, BinOp):
        return BinOp(e.op, subst_exp(e.left, env), subst_exp(e.right, env))
    if isinstance(e, Not):
        return Not(subst_exp(e.arg, env))
    raise InternalError(f"unknown expression {e!r}")


class MemoryDomain:
    def __init__(self, variables: Sequence[str], comb: CombinedDomain):
        self.variables = tuple(variables)
        self.comb = comb

    # -- construction

    def init_state(self) -> AbstractMem:
        """One cell per declared variable, contents unconstrained.

        Variable addresses are positive, which the numeric layer records so
        that address-of values compare against null."""
        from .symbols import Const, NumBin, SymVal

        g = ShapeGraph.empty()
        env: dict[str, Sym] = {}
        for x in self.variables:
            addr = self.comb.supply.fresh("a")
            content = self.comb.supply.fresh("v")
            env[x] = addr
            g = g.with_node(addr).with_node(content).with_pt(PtEdge(addr, 0, content, ZERO_FIELD))
        num = self.comb.top(g).num
        for x in self.variables:
            num = num.guard(NumBin(">=", SymVal(env[x]), Const(1)))
        return AbstractMem(env, CombinedElem(g, num))

    def roots(self, m: AbstractMem) -> frozenset[Sym]:
        return frozenset(m.env.values())

    # -- transfer functions (variable substitution, then the combined layer)

    def assign(self, loc: LocExpr, e: Expr, m: AbstractMem) -> tuple[list[AbstractMem], list[Alarm]]:
        outs, alarms = self.comb.assign(
            subst_loc(loc, m.env), subst_exp(e, m.env), m.elem, self.roots(m)
        )
        return [AbstractMem(m.env, x) for x in outs], alarms

    def guard(self, e: Expr, m: AbstractMem) -> tuple[list[AbstractMem], list[Alarm]]:
        outs, alarms = self.comb.guard(subst_exp(e, m.env), m.elem)
        return [AbstractMem(m.env, x) for x in outs], alarms

    def alloc(
        self, loc: LocExpr, fields: Sequence[str], m: AbstractMem
    ) -> tuple[list[AbstractMem], list[Alarm]]:
        outs, alarms = self.comb.alloc(subst_loc(loc, m.env), fields, m.elem, self.roots(m))
        return [AbstractMem(m.env, x) for x in outs], alarms

    def free(self, loc: LocExpr, m: AbstractMem) -> tuple[list[AbstractMem], list[Alarm]]:
        outs, alarms = self.comb.free(subst_loc(loc, m.env), m.elem, self.roots(m))
        return [AbstractMem(m.env, x) for x in outs], alarms

    # -- lattice operations

    def _check_same_vars(self, m0: AbstractMem, m1: AbstractMem) -> None:
        if set(m0.env) != set(m1.env):
            raise InternalError("abstract states over different variable sets")

    def compare(self, m0: AbstractMem, m1: AbstractMem) -> bool:
        """Sound inclusion test: True implies every state of m0 is one of m1."""
        self._check_same_vars(m0, m1)
        roots = {m1.env[x]: m0.env[x] for x in m0.env}
        return self.comb.compare(roots, m0.elem, m1.elem) is not None

    def _merge(self, m0: AbstractMem, m1: AbstractMem, widen: bool) -> tuple[AbstractMem, list[Alarm]]:
        self._check_same_vars(m0, m1)
        psi0 = [
            (m0.env[x], m1.env[x], self.comb.supply.fresh("a"))
            for x in sorted(m0.env)
        ]
        elem, psi, alarms = self.comb.join(psi0, m0.elem, m1.elem, widen=widen)
        env = {x: o for (x, (_, _, o)) in zip(sorted(m0.env), psi0)}
        return AbstractMem(env, elem), alarms

    def join(self, m0: AbstractMem, m1: AbstractMem) -> tuple[AbstractMem, list[Alarm]]:
        return self._merge(m0, m1, widen=False)

    def widen(self, m0: AbstractMem, m1: AbstractMem) -> tuple[AbstractMem, list[Alarm]]:
        return self._merge(m0, m1, widen=True)

"""Separating shape graphs with exact points-to and inductive summary edges.

Nodes are symbolic variables denoting values; each points-to edge denotes
exactly one memory cell (``src + offset`` contains ``dst``) and distinct
edges denote disjoint cells.  An inductive edge summarizes an unbounded
region described by the rules of a named inductive definition.

This module provides the graph data type, the definition table (with its
text format), and the graph-level operations: location/value evaluation,
edge mutation, unfolding, inclusion checking (producing a node map from the
weaker graph into the stronger one), and join/widening (producing a fresh
output graph plus a three-way node correspondence).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import DefsError, InternalError
from .lang import AddrNode, AddrOf, Deref, Expr, FieldOf, FieldTable, Loc, LocExpr, Var
from .symbols import Const, NumBin, NumExpr, Sym, SymbolSupply, SymVal, subst_numexpr

ZERO_OFF = 0

# Placeholder symbols for definition-rule templates: negative indices so they
# can never collide with analysis symbols, interned so each ref name gets a
# stable, distinct symbol.
_PLACEHOLDERS: dict[str, Sym] = {}


def _placeholder(name: str) -> Sym:
    if name not in _PLACEHOLDERS:
        _PLACEHOLDERS[name] = Sym(-(len(_PLACEHOLDERS) + 1), name)
    return _PLACEHOLDERS[name]


# ---------------------------------------------------------------------------
# Graphs


@dataclass(frozen=True)
class PtEdge:
    """Exact points-to predicate: the cell at ``src + off`` contains ``dst``.

    ``name`` is the display name of the field and is ignored by equality;
    cells are identified by their offset.
    """

    src: Sym
    off: int
    dst: Sym
    name: str = field(default="", compare=False)

    def render(self, table: FieldTable | None = None) -> str:
        fld = self.name or (table.name_at(self.off) if table else f"+{self.off}")
        return f"{self.src}.{fld}↦{self.dst}"


@dataclass(frozen=True)
class IndEdge:
    """Inductive summary predicate rooted at ``root``."""

    root: Sym
    name: str

    def render(self, table: FieldTable | None = None) -> str:
        return f"{self.name}({self.root})"


@dataclass(frozen=True)
class ShapeGraph:
    nodes: frozenset[Sym]
    pt: frozenset[PtEdge]
    ind: frozenset[IndEdge]

    def __post_init__(self) -> None:
        seen: set[tuple[Sym, int]] = set()
        for e in self.pt:
            if (e.src, e.off) in seen:
                raise InternalError(f"two points-to edges at ({e.src}, +{e.off})")
            seen.add((e.src, e.off))
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise InternalError(f"edge {e} endpoint outside node set")
        roots: set[tuple[Sym, str]] = set()
        for i in self.ind:
            if (i.root, i.name) in roots:
                raise InternalError(f"duplicate inductive edge {i}")
            roots.add((i.root, i.name))
            if i.root not in self.nodes:
                raise InternalError(f"inductive edge {i} root outside node set")

    # -- constructors

    @classmethod
    def empty(cls) -> ShapeGraph:
        return cls(frozenset(), frozenset(), frozenset())

    @classmethod
    def of(
        cls,
        nodes: Iterable[Sym] = (),
        pt: Iterable[tuple[Sym, int, Sym] | PtEdge] = (),
        ind: Iterable[tuple[Sym, str] | IndEdge] = (),
    ) -> ShapeGraph:
        pt_edges = frozenset(e if isinstance(e, PtEdge) else PtEdge(*e) for e in pt)
        ind_edges = frozenset(e if isinstance(e, IndEdge) else IndEdge(*e) for e in ind)
        all_nodes = set(nodes)
        for e in pt_edges:
            all_nodes.update((e.src, e.dst))
        for i in ind_edges:
            all_nodes.add(i.root)
        return cls(frozenset(all_nodes), pt_edges, ind_edges)

    # -- queries

    def pt_at(self, src: Sym, off: int) -> PtEdge | None:
        for e in self.pt:
            if e.src == src and e.off == off:
                return e
        return None

    def pt_from(self, src: Sym) -> list[PtEdge]:
        return sorted((e for e in self.pt if e.src == src), key=lambda e: e.off)

    def ind_at(self, root: Sym) -> list[IndEdge]:
        return sorted((i for i in self.ind if i.root == root), key=lambda i: i.name)

    def sorted_pt(self) -> list[PtEdge]:
        return sorted(self.pt, key=lambda e: (e.src, e.off))

    def sorted_ind(self) -> list[IndEdge]:
        return sorted(self.ind, key=lambda i: (i.root, i.name))

    # -- functional updates

    def with_node(self, sym: Sym) -> ShapeGraph:
        if sym in self.nodes:
            raise InternalError(f"node {sym} already present")
        return ShapeGraph(self.nodes | {sym}, self.pt, self.ind)

    def without_node(self, sym: Sym) -> ShapeGraph:
        if any(sym in (e.src, e.dst) for e in self.pt) or any(i.root == sym for i in self.ind):
            raise InternalError(f"node {sym} still has incident edges")
        if sym not in self.nodes:
            raise InternalError(f"node {sym} not present")
        return ShapeGraph(self.nodes - {sym}, self.pt, self.ind)

    def with_pt(self, edge: PtEdge) -> ShapeGraph:
        if self.pt_at(edge.src, edge.off) is not None:
            raise InternalError(f"cell ({edge.src}, +{edge.off}) already described")
        nodes = self.nodes | {edge.src, edge.dst}
        return ShapeGraph(nodes, self.pt | {edge}, self.ind)

    def without_pt(self, src: Sym, off: int) -> ShapeGraph:
        e = self.pt_at(src, off)
        if e is None:
            raise InternalError(f"no points-to edge at ({src}, +{off})")
        return ShapeGraph(self.nodes, self.pt - {e}, self.ind)

    def with_ind(self, edge: IndEdge) -> ShapeGraph:
        if edge in self.ind:
            raise InternalError(f"inductive edge {edge} already present")
        return ShapeGraph(self.nodes | {edge.root}, self.pt, self.ind | {edge})

    def without_ind(self, edge: IndEdge) -> ShapeGraph:
        if edge not in self.ind:
            raise InternalError(f"inductive edge {edge} not present")
        return ShapeGraph(self.nodes, self.pt, self.ind - {edge})

    def render(self, table: FieldTable | None = None) -> str:
        parts = [e.render(table) for e in self.sorted_pt()]
        parts += [i.render(table) for i in self.sorted_ind()]
        loose = sorted(
            self.nodes
            - {e.src for e in self.pt}
            - {e.dst for e in self.pt}
            - {i.root for i in self.ind}
        )
        if loose:
            parts.append("nodes " + ",".join(map(str, loose)))
        return " ✱ ".join(parts) if parts else "emp"

    def __repr__(self) -> str:
        return f"ShapeGraph({self.render()})"


# ---------------------------------------------------------------------------
# Inductive definitions


@dataclass(frozen=True)
class SideCond:
    """One conjunct of a rule's side constraint.

    ``auto`` marks conjuncts of the form ``root != 0`` for a rule whose
    pattern places a cell at offset zero from the root: any store matching
    the pattern locates a cell at the root's address, which is therefore a
    valid (non-null) address.  Such conjuncts hold structurally and need no
    numeric entailment check during weakening.
    """

    expr: NumExpr
    auto: bool = False


@dataclass(frozen=True)
class IndRule:
    pt: tuple[tuple[str, int, str, str], ...]  # (src ref, offset, dst ref, field name)
    ind: tuple[tuple[str, str], ...]  # (root ref, definition name)
    conds: tuple[NumExpr, ...]  # placeholder symbols Sym(-1, ref)


@dataclass(frozen=True)
class InductiveDef:
    name: str
    formal: str
    rules: tuple[IndRule, ...]
    has_base: bool  # some rule has an empty heap pattern

    def instantiate(
        self, rule: IndRule, root: Sym, supply: SymbolSupply
    ) -> tuple[list[PtEdge], list[IndEdge], list[SideCond], list[Sym]]:
        """Bind the formal to ``root`` and freshen the rule-local symbols."""
        binding: dict[str, Sym] = {self.formal: root}
        fresh: list[Sym] = []

        def lookup(ref: str) -> Sym:
            if ref not in binding:
                sym = supply.fresh("u")
                binding[ref] = sym
                fresh.append(sym)
            return binding[ref]

        pt = [PtEdge(lookup(src), off, lookup(dst), name) for src, off, dst, name in rule.pt]
        ind = [IndEdge(lookup(r), d) for r, d in rule.ind]
        zero_cell = any(src == self.formal and off == ZERO_OFF for src, off, _, _ in rule.pt)
        conds = []
        for c in rule.conds:
            auto = zero_cell and _is_nonnull_root(c, self.formal)
            conds.append(SideCond(_bind_cond(c, lookup), auto))
        return pt, ind, conds, fresh


def _bind_cond(c: NumExpr, lookup: Callable[[str], Sym]) -> NumExpr:
    """Rule conditions carry placeholder symbols named by their rule ref."""
    if isinstance(c, SymVal):
        return SymVal(lookup(c.sym.hint))
    if isinstance(c, Const):
        return c
    if isinstance(c, NumBin):
        return NumBin(c.op, _bind_cond(c.left, lookup), _bind_cond(c.right, lookup))
    raise InternalError(f"unsupported side condition {c!r}")


def _is_nonnull_root(c: NumExpr, formal: str) -> bool:
    return (
        isinstance(c, NumBin)
        and c.op == "!="
        and isinstance(c.left, SymVal)
        and c.left.sym.hint == formal
        and c.right == Const(0)
    )


BUILTIN_LIST_DEF = "ind list(a) := | emp, a == 0 | a.next |-> b0 * a.d |-> b1 * list(b0), a != 0"


class DefsTable:
    """Loaded inductive definitions plus the field table they extend.

    Text format, one definition per line (``//`` comments allowed)::

        ind list(a) := | emp, a == 0 | a.next |-> b0 * a.d |-> b1 * list(b0), a != 0

    Rules are separated by ``|``; each rule is a ``*``-separated heap
    pattern (or ``emp``) followed by a comma and a conjunction (``&&``) of
    side constraints of the shapes ``sym == 0``, ``sym != 0``, or
    ``sym relop sym-or-constant``.
    """

    def __init__(self, field_table: FieldTable | None = None, builtin: bool = True):
        self.field_table = field_table if field_table is not None else FieldTable()
        self.defs: dict[str, InductiveDef] = {}
        if builtin:
            self.load_text(BUILTIN_LIST_DEF)

    def __contains__(self, name: str) -> bool:
        return name in self.defs

    def __getitem__(self, name: str) -> InductiveDef:
        try:
            return self.defs[name]
        except KeyError:
            raise DefsError(f"unknown inductive definition {name!r}") from None

    def names(self) -> list[str]:
        return sorted(self.defs)

    def load_file(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as fh:
            self.load_text(fh.read())

    def load_text(self, text: str) -> None:
        for line in text.splitlines():
            line = line.split("//")[0].strip()
            if line:
                self._load_line(line)

    def _load_line(self, line: str) -> None:
        m = re.match(r"^ind\s+(\w+)\s*\(\s*(\w+)\s*\)\s*:=\s*\|(.*)$", line)
        if not m:
            raise DefsError(f"cannot parse definition: {line!r}")
        name, formal, rest = m.group(1), m.group(2), m.group(3)
        if name in self.defs:
            raise DefsError(f"duplicate definition {name!r}")
        field_order: list[str] = []
        rules = []
        for raw in (r.strip() for r in re.split(r"\|(?!->)", rest)):
            if "," not in raw:
                raise DefsError(f"rule needs a side constraint: {raw!r}")
            pattern_text, cond_text = raw.rsplit(",", 1)
            pt, ind = self._parse_pattern(pattern_text.strip(), field_order)
            conds = tuple(self._parse_cond(c.strip()) for c in cond_text.split("&&"))
            rules.append(IndRule(pt=tuple(pt), ind=tuple(ind), conds=conds))
        self.field_table.register_block(field_order)
        has_base = any(not r.pt and not r.ind for r in rules)
        self.defs[name] = InductiveDef(name, formal, tuple(rules), has_base)

    @staticmethod
    def _parse_pattern(
        text: str, field_order: list[str]
    ) -> tuple[list[tuple[str, int, str, str]], list[tuple[str, str]]]:
        pt: list[tuple[str, int, str, str]] = []
        ind: list[tuple[str, str]] = []
        if text == "emp":
            return pt, ind
        for atom in (a.strip() for a in text.split("*")):
            m = re.match(r"^(\w+)\.(\w+)\s*\|->\s*(\w+)$", atom)
            if m:
                src, fld, dst = m.groups()
                if fld not in field_order:
                    field_order.append(fld)
                pt.append((src, field_order.index(fld), dst, fld))
                continue
            m = re.match(r"^(\w+)\s*\(\s*(\w+)\s*\)$", atom)
            if m:
                dname, root = m.groups()
                ind.append((root, dname))
                continue
            raise DefsError(f"cannot parse pattern atom {atom!r}")
        return pt, ind

    @staticmethod
    def _parse_cond(text: str) -> NumExpr:
        m = re.match(r"^(\w+)\s*(==|!=|<=|>=|<|>)\s*(-?\w+)$", text)
        if not m:
            raise DefsError(f"unsupported side constraint {text!r}")
        left, op, right = m.groups()

        def term(t: str) -> NumExpr:
            if re.fullmatch(r"-?\d+", t):
                return Const(int(t))
            return SymVal(_placeholder(t))  # placeholder named by the rule ref

        return NumBin(op, term(left), term(right))


# ---------------------------------------------------------------------------
# Evaluation of symbolic locations and value expressions


@dataclass(frozen=True)
class EvalFail:
    """A needed points-to edge is missing: materialize at (node, offset)."""

    node: Sym
    off: int


class UnsupportedLoc(InternalError):
    """Address-of with a non-zero offset, or a non-location value operand."""


def eval_loc(loc: LocExpr, g: ShapeGraph, table: FieldTable) -> tuple[Sym, int] | EvalFail:
    """Abstract address of a symbolic location: a (node, offset) pair."""
    if isinstance(loc, AddrNode):
        return (loc.sym, ZERO_OFF)
    if isinstance(loc, FieldOf):
        base = eval_loc(loc.base, g, table)
        if isinstance(base, EvalFail):
            return base
        node, off = base
        return (node, off + table.offset(loc.field))
    if isinstance(loc, Deref):
        target = eval_exp(loc.addr, g, table)
        if isinstance(target, EvalFail):
            return target
        return (target, ZERO_OFF)
    if isinstance(loc, Var):
        raise InternalError("program variable reached the shape layer unsubstituted")
    raise InternalError(f"unknown location {loc!r}")


def eval_exp(e: Expr, g: ShapeGraph, table: FieldTable) -> Sym | EvalFail:
    """Abstract value of a location read or an address-of expression."""
    if isinstance(e, Loc):
        addr = eval_loc(e.loc, g, table)
        if isinstance(addr, EvalFail):
            return addr
        node, off = addr
        edge = g.pt_at(node, off)
        if edge is None:
            return EvalFail(node, off)
        return edge.dst
    if isinstance(e, AddrOf):
        addr = eval_loc(e.loc, g, table)
        if isinstance(addr, EvalFail):
            return addr
        node, off = addr
        if off != ZERO_OFF:
            raise UnsupportedLoc(f"address-of a non-zero field offset (+{off})")
        return node
    raise UnsupportedLoc(f"not a location expression: {e!r}")


def mutate(src: Sym, off: int, new_dst: Sym, g: ShapeGraph) -> ShapeGraph:
    """Swing the points-to edge at ``(src, off)`` to ``new_dst``."""
    edge = g.pt_at(src, off)
    if edge is None:
        raise InternalError(f"mutate: no points-to edge at ({src}, +{off})")
    if new_dst not in g.nodes:
        raise InternalError(f"mutate: {new_dst} is not a node")
    return ShapeGraph(g.nodes, (g.pt - {edge}) | {PtEdge(src, off, new_dst, edge.name)}, g.ind)


# ---------------------------------------------------------------------------
# Unfolding


class NoIndEdge(Exception):
    """Unfold target has no inductive edge: a potential memory error."""

    def __init__(self, node: Sym, off: int):
        super().__init__(f"no points-to edge and no summary at ({node}, +{off})")
        self.node = node
        self.off = off


def unfold(
    target: tuple[Sym, int], g: ShapeGraph, defs: DefsTable, supply: SymbolSupply
) -> list[tuple[ShapeGraph, tuple[SideCond, ...]]]:
    """Replace the inductive edge at the target node by its rule bodies.

    Returns one (graph, side-conditions) pair per rule whose instantiated
    pattern is compatible with the separation invariant; the union of the
    results covers every store the summarized graph describes.
    """
    node, off = target
    edges = g.ind_at(node)
    if not edges:
        raise NoIndEdge(node, off)
    edge = edges[0]
    definition = defs[edge.name]
    base = g.without_ind(edge)
    out: list[tuple[ShapeGraph, tuple[SideCond, ...]]] = []
    for rule in definition.rules:
        pt, ind, conds, fresh = definition.instantiate(rule, node, supply)
        try:
            unfolded = base
            for s in fresh:
                unfolded = unfolded.with_node(s)
            for e in pt:
                unfolded = unfolded.with_pt(e)
            for i in ind:
                unfolded = unfolded.with_ind(i)
        except InternalError:
            # rule pattern clashes with cells already present: empty branch
            continue
        out.append((unfolded, tuple(conds)))
    return out


# ---------------------------------------------------------------------------
# Inclusion


@dataclass
class CompareOutcome:
    """Witness that the left graph is included in the right one.

    ``phi`` maps right-graph symbols to left-graph symbols; ``conds`` are
    the side conditions of the unfoldings used on the right, re-expressed
    over left symbols, which the caller must discharge.
    """

    phi: dict[Sym, Sym]
    conds: tuple[SideCond, ...]


def compare(
    roots: Mapping[Sym, Sym],
    left: ShapeGraph,
    right: ShapeGraph,
    defs: DefsTable,
    unfold_budget: int = 3,
) -> CompareOutcome | None:
    """Region-by-region inclusion check of ``left`` in ``right``.

    ``roots`` seeds the node map (right symbol -> left symbol).  The check
    consumes matching points-to edges (equal offsets, related sources),
    matches inductive edges by definition name, and otherwise unfolds
    right-hand inductive edges up to ``unfold_budget`` times.  Incomplete:
    ``None`` means "not provable", not "not included".
    """
    fresh_base = 1 + max(
        (s.index for s in (set(left.nodes) | set(right.nodes) | set(roots) | set(roots.values()))),
        default=0,
    )

    def search(
        phi: dict[Sym, Sym],
        lpt: frozenset[PtEdge],
        lind: frozenset[IndEdge],
        rpt: frozenset[PtEdge],
        rind: frozenset[IndEdge],
        budget: int,
        conds: tuple[tuple[NumExpr, bool], ...],
        next_fresh: int,
    ) -> CompareOutcome | None:
        phi = dict(phi)
        lpt_d = {(e.src, e.off): e for e in lpt}
        rpt_pending = set(rpt)
        # deterministically consume right points-to edges with mapped sources
        progress = True
        while progress:
            progress = False
            for e in sorted(rpt_pending, key=lambda e: (e.src, e.off)):
                if e.src not in phi:
                    continue
                match = lpt_d.pop((phi[e.src], e.off), None)
                if match is None:
                    return None
                if e.dst in phi:
                    if phi[e.dst] != match.dst:
                        return None
                else:
                    phi[e.dst] = match.dst
                rpt_pending.remove(e)
                progress = True
                break
        rind_pending = sorted(
            (i for i in rind if i.root in phi), key=lambda i: (i.root, i.name)
        )
        if rind_pending:
            edge = rind_pending[0]
            remaining_r_ind = frozenset(rind) - {edge}
            # (a) direct match against a left inductive edge of the same name
            direct = IndEdge(phi[edge.root], edge.name)
            if direct in lind:
                res = search(
                    phi,
                    frozenset(lpt_d.values()),
                    lind - {direct},
                    frozenset(rpt_pending),
                    remaining_r_ind,
                    budget,
                    conds,
                    next_fresh,
                )
                if res is not None:
                    return res
            # (b) unfold the right-hand summary and retry
            if budget > 0:
                definition = defs[edge.name]
                for rule in definition.rules:
                    supply = SymbolSupply(next_fresh)
                    pt, ind, side, _ = definition.instantiate(rule, edge.root, supply)
                    if any((e.src, e.off) in {(x.src, x.off) for x in rpt_pending} for e in pt):
                        continue  # separation clash: empty branch
                    res = search(
                        phi,
                        frozenset(lpt_d.values()),
                        lind,
                        frozenset(rpt_pending) | frozenset(pt),
                        remaining_r_ind | frozenset(ind),
                        budget - 1,
                        conds + tuple((c.expr, c.auto) for c in side),
                        supply.next_index,
                    )
                    if res is not None:
                        return res
            return None
        if rpt_pending or any(i.root not in phi for i in rind):
            return None  # disconnected right-hand region: cannot relate it
        if lpt_d or lind:
            return None  # residual left-hand region: right describes fewer cells
        out_conds = []
        for expr, auto in conds:
            try:
                out_conds.append(SideCond(subst_numexpr(expr, phi), auto))
            except KeyError:
                return None  # a condition symbol never got related
        return CompareOutcome(phi, tuple(out_conds))

    return search(
        dict(roots),
        left.pt,
        left.ind,
        right.pt,
        right.ind,
        unfold_budget,
        (),
        fresh_base,
    )


# ---------------------------------------------------------------------------
# Join and widening

EntailFn = Callable[[Sequence[SideCond]], bool]


def _auto_only(conds: Sequence[SideCond]) -> bool:
    return all(c.auto for c in conds)


@dataclass
class JoinOutcome:
    graph: ShapeGraph
    psi: list[tuple[Sym, Sym, Sym]]  # (left, right, output)
    dropped: bool  # some fragment could not be represented and was dropped


def join(
    psi0: Sequence[tuple[Sym, Sym, Sym]],
    left: ShapeGraph,
    right: ShapeGraph,
    defs: DefsTable,
    supply: SymbolSupply,
    left_entails: EntailFn | None = None,
    right_entails: EntailFn | None = None,
    aggressive: bool = False,
) -> JoinOutcome:
    """Over-approximate both graphs over a fresh output node set.

    ``psi0`` seeds the (left, right, output) correspondence with the roots.
    Isomorphic fragments are copied; where the sides disagree, a fragment is
    weakened to an inductive summary when the inclusion check validates it
    (side conditions discharged by the per-side entailment callbacks).  As a
    last resort the offending fragments are dropped and ``dropped`` is set:
    the output then no longer describes those cells and the caller must
    report the precision loss.

    With ``aggressive`` set, summarization is attempted before copying
    matching cells; the widening uses this to bound output growth.
    """
    left_entails = left_entails or _auto_only
    right_entails = right_entails or _auto_only

    psi: dict[tuple[Sym, Sym], Sym] = {}
    order: list[tuple[Sym, Sym, Sym]] = []
    queue: list[tuple[Sym, Sym, Sym]] = []
    for l, r, o in psi0:
        psi[(l, r)] = o
        order.append((l, r, o))
        queue.append((l, r, o))

    rem_l_pt = {(e.src, e.off): e for e in left.sorted_pt()}
    rem_l_ind = set(left.ind)
    rem_r_pt = {(e.src, e.off): e for e in right.sorted_pt()}
    rem_r_ind = set(right.ind)

    out_nodes: set[Sym] = {o for _, _, o in order}
    out_pt: list[PtEdge] = []
    out_ind: list[IndEdge] = []
    dropped = False

    def out_sym(l: Sym, r: Sym) -> Sym:
        if (l, r) not in psi:
            o = supply.fresh("j")
            psi[(l, r)] = o
            order.append((l, r, o))
            queue.append((l, r, o))
            out_nodes.add(o)
        return psi[(l, r)]

    def fragment(
        root: Sym, pt: dict[tuple[Sym, int], PtEdge], ind: set[IndEdge], side: int
    ) -> tuple[list[PtEdge], list[IndEdge]]:
        """Remaining edges reachable from ``root``, stopping at other
        already-correlated nodes (their regions are joined separately)."""
        stop = {l for (l, r) in psi} if side == 0 else {r for (l, r) in psi}
        seen = {root}
        frontier = [root]
        fpt: list[PtEdge] = []
        find: list[IndEdge] = []
        while frontier:
            n = frontier.pop(0)
            for key in sorted(k for k in pt if k[0] == n):
                e = pt[key]
                fpt.append(e)
                if e.dst not in seen and e.dst not in stop:
                    seen.add(e.dst)
                    frontier.append(e.dst)
            for i in sorted((i for i in ind if i.root == n), key=lambda i: i.name):
                find.append(i)
        return fpt, find

    def summarize_side(
        root: Sym,
        pt: dict[tuple[Sym, int], PtEdge],
        ind: set[IndEdge],
        side: int,
        name: str,
        entails: EntailFn,
    ) -> tuple[list[PtEdge], list[IndEdge]] | None:
        """Check the fragment at ``root`` is included in ``name(root)``."""
        fpt, find = fragment(root, pt, ind, side)
        frag = ShapeGraph.of(nodes=[root], pt=fpt, ind=find)
        summary_root = _placeholder("__summary_root__")
        summary = ShapeGraph.of(ind=[(summary_root, name)])
        # absorbing an n-edge fragment takes about one unfolding per cell
        budget = len(fpt) + len(find) + 1
        res = compare({summary_root: root}, frag, summary, defs, unfold_budget=budget)
        if res is None or not entails(res.conds):
            return None
        return fpt, find

    def candidates(l: Sym, r: Sym) -> list[str]:
        here = [i.name for i in sorted(rem_r_ind, key=lambda i: (i.root, i.name)) if i.root == r]
        here += [i.name for i in sorted(rem_l_ind, key=lambda i: (i.root, i.name)) if i.root == l]
        anywhere = sorted({i.name for i in rem_l_ind | rem_r_ind})
        everything = defs.names()
        seen: set[str] = set()
        out = []
        for name in here + anywhere + everything:
            if name not in seen:
                seen.add(name)
                out.append(name)
        return out

    def try_weaken(l: Sym, r: Sym, o: Sym) -> bool:
        for name in candidates(l, r):
            lw = summarize_side(l, rem_l_pt, rem_l_ind, 0, name, left_entails)
            if lw is None:
                continue
            rw = summarize_side(r, rem_r_pt, rem_r_ind, 1, name, right_entails)
            if rw is None:
                continue
            for e in lw[0]:
                del rem_l_pt[(e.src, e.off)]
            rem_l_ind.difference_update(lw[1])
            for e in rw[0]:
                del rem_r_pt[(e.src, e.off)]
            rem_r_ind.difference_update(rw[1])
            out_ind.append(IndEdge(o, name))
            return True
        return False

    def rooted_here(l: Sym, r: Sym) -> bool:
        return (
            any(k[0] == l for k in rem_l_pt)
            or any(i.root == l for i in rem_l_ind)
            or any(k[0] == r for k in rem_r_pt)
            or any(i.root == r for i in rem_r_ind)
        )

    while queue:
        l, r, o = queue.pop(0)
        # matching inductive summaries survive as summaries
        for name in sorted(
            {i.name for i in rem_l_ind if i.root == l} & {i.name for i in rem_r_ind if i.root == r}
        ):
            rem_l_ind.remove(IndEdge(l, name))
            rem_r_ind.remove(IndEdge(r, name))
            out_ind.append(IndEdge(o, name))
        if aggressive and rooted_here(l, r) and try_weaken(l, r, o):
            continue
        # isomorphic cells are copied
        for off in sorted({k[1] for k in rem_l_pt if k[0] == l} & {k[1] for k in rem_r_pt if k[0] == r}):
            le = rem_l_pt.pop((l, off))
            re_ = rem_r_pt.pop((r, off))
            out_pt.append(PtEdge(o, off, out_sym(le.dst, re_.dst), le.name or re_.name))
        # whatever still hangs off this pair must be summarized (or dropped)
        if rooted_here(l, r):
            if not try_weaken(l, r, o):
                fpt_l, find_l = fragment(l, rem_l_pt, rem_l_ind, 0)
                fpt_r, find_r = fragment(r, rem_r_pt, rem_r_ind, 1)
                for e in fpt_l:
                    del rem_l_pt[(e.src, e.off)]
                rem_l_ind.difference_update(find_l)
                for e in fpt_r:
                    del rem_r_pt[(e.src, e.off)]
                rem_r_ind.difference_update(find_r)
                dropped = True

    if rem_l_pt or rem_r_pt or rem_l_ind or rem_r_ind:
        dropped = True  # regions unreachable from the roots cannot be correlated

    graph = ShapeGraph.of(nodes=out_nodes, pt=out_pt, ind=out_ind)
    return JoinOutcome(graph, order, dropped)


def widen(
    psi0: Sequence[tuple[Sym, Sym, Sym]],
    left: ShapeGraph,
    right: ShapeGraph,
    defs: DefsTable,
    supply: SymbolSupply,
    left_entails: EntailFn | None = None,
    right_entails: EntailFn | None = None,
    node_budget: int = 12,
) -> JoinOutcome:
    """Join, forcing summarization when the output would exceed the budget."""
    probe = SymbolSupply(supply.next_index)
    out = join(psi0, left, right, defs, probe, left_entails, right_entails)
    if len(out.graph.nodes) > node_budget:
        out = join(
            psi0, left, right, defs, supply, left_entails, right_entails, aggressive=True
        )
    else:
        supply.reserve_above(out.graph.nodes)
    return out

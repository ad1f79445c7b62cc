"""Executable concrete semantics: stores, environments, small-step execution.

A concrete store is a finite map from positive word-aligned addresses to
integer values; an environment maps each declared variable to the address of
its cell.  Execution states carry a control label, the environment, the
store, and the allocator bookkeeping (block table and fresh-address cursor)
so stepping is a deterministic, replayable function.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import ConcreteRunError, InternalError
from .lang import (
    WORD,
    AddrNode,
    AddrOf,
    Assert,
    Assign,
    BinOp,
    Deref,
    Expr,
    FieldOf,
    Free,
    If,
    IntLit,
    Loc,
    LocExpr,
    Malloc,
    Not,
    Program,
    Stmt,
    Var,
    While,
)

# Default base address for variable cells and for the allocator.
VAR_BASE = 0x100
HEAP_BASE = 0x1000


@dataclass(frozen=True)
class ConcreteState:
    """One execution state: control label plus the memory state."""

    label: int
    env: Mapping[str, int]
    store: Mapping[int, int]
    blocks: Mapping[int, int] = field(default_factory=dict)  # base -> field count
    next_addr: int = HEAP_BASE

    def memory(self) -> tuple[Mapping[str, int], Mapping[int, int]]:
        return (self.env, self.store)

    def render(self) -> str:
        vars_part = ", ".join(
            f"{x}@{a}={self.store.get(a, '?')}" for x, a in sorted(self.env.items())
        )
        store_part = ",".join(f"{a}:{v}" for a, v in sorted(self.store.items()))
        return f"{self.label} | {vars_part} | {store_part}"


def initial_state(
    program: Program,
    values: Mapping[str, int] | None = None,
    var_base: int = VAR_BASE,
) -> ConcreteState:
    """Entry state with one cell per declared variable (default contents 0)."""
    values = dict(values or {})
    env: dict[str, int] = {}
    store: dict[int, int] = {}
    addr = var_base
    for x in program.variables:
        env[x] = addr
        store[addr] = values.pop(x, 0)
        addr += WORD
    if values:
        raise InternalError(f"initial values for undeclared variables: {sorted(values)}")
    entry = program.body[0].label if program.body else program.exit_label
    return ConcreteState(entry, env, store)


# ---------------------------------------------------------------------------
# Evaluation


def eval_loc_concrete(loc: LocExpr, state: ConcreteState, program: Program) -> int:
    """Address of a location expression; raises on null dereference."""
    if isinstance(loc, Var):
        return state.env[loc.name]
    if isinstance(loc, FieldOf):
        base = eval_loc_concrete(loc.base, state, program)
        return base + program.field_table.offset(loc.field) * WORD
    if isinstance(loc, Deref):
        addr = eval_exp_concrete(loc.addr, state, program)
        if addr == 0:
            raise ConcreteRunError("null-deref", state.label)
        return addr
    if isinstance(loc, AddrNode):
        raise InternalError("symbolic location in concrete evaluation")
    raise InternalError(f"unknown location {loc!r}")


def eval_exp_concrete(exp: Expr, state: ConcreteState, program: Program) -> int:
    """Value of an expression; comparisons yield 0/1."""
    if isinstance(exp, IntLit):
        return exp.value
    if isinstance(exp, Loc):
        addr = eval_loc_concrete(exp.loc, state, program)
        try:
            return state.store[addr]
        except KeyError:
            raise ConcreteRunError("unmapped-address", state.label, f"read of {addr}") from None
    if isinstance(exp, AddrOf):
        return eval_loc_concrete(exp.loc, state, program)
    if isinstance(exp, Not):
        return 0 if eval_exp_concrete(exp.arg, state, program) != 0 else 1
    if isinstance(exp, BinOp):
        a = eval_exp_concrete(exp.left, state, program)
        b = eval_exp_concrete(exp.right, state, program)
        if exp.op == "+":
            return a + b
        if exp.op == "-":
            return a - b
        if exp.op == "==":
            return int(a == b)
        if exp.op == "!=":
            return int(a != b)
        if exp.op == "<":
            return int(a < b)
        if exp.op == "<=":
            return int(a <= b)
        if exp.op == ">":
            return int(a > b)
        if exp.op == ">=":
            return int(a >= b)
    raise InternalError(f"unknown expression {exp!r}")


# ---------------------------------------------------------------------------
# Control flow

def build_flow(program: Program) -> dict[int, int]:
    """Fall-through successor label for every statement."""
    nxt: dict[int, int] = {}

    def walk(body: tuple[Stmt, ...], cont: int) -> None:
        for i, s in enumerate(body):
            after = body[i + 1].label if i + 1 < len(body) else cont
            nxt[s.label] = after
            if isinstance(s, If):
                walk(s.then_body, after)
                walk(s.else_body, after)
            elif isinstance(s, While):
                walk(s.body, s.label)

    walk(program.body, program.exit_label)
    return nxt


def _entry(body: tuple[Stmt, ...], cont: int) -> int:
    return body[0].label if body else cont


def step(state: ConcreteState, program: Program, flow: dict[int, int] | None = None) -> tuple[ConcreteState, ...]:
    """One small step.  Deterministic: at most one successor; empty at exit."""
    if state.label == program.exit_label:
        return ()
    flow = flow if flow is not None else build_flow(program)
    s = program.stmt_at(state.label)
    after = flow[s.label]

    if isinstance(s, Assign):
        addr = eval_loc_concrete(s.loc, state, program)
        val = eval_exp_concrete(s.expr, state, program)
        if addr not in state.store:
            raise ConcreteRunError("unmapped-address", state.label, f"write to {addr}")
        store = dict(state.store)
        store[addr] = val
        return (replace(state, label=after, store=store),)

    if isinstance(s, Malloc):
        addr = eval_loc_concrete(s.loc, state, program)
        if addr not in state.store:
            raise ConcreteRunError("unmapped-address", state.label, f"write to {addr}")
        base = state.next_addr
        store = dict(state.store)
        for i in range(len(s.fields)):
            store[base + i * WORD] = 0
        store[addr] = base
        blocks = dict(state.blocks)
        blocks[base] = len(s.fields)
        return (
            replace(
                state,
                label=after,
                store=store,
                blocks=blocks,
                next_addr=base + len(s.fields) * WORD,
            ),
        )

    if isinstance(s, Free):
        target = eval_exp_concrete(Loc(s.loc), state, program)
        if target not in state.blocks:
            raise ConcreteRunError("invalid-free", state.label, f"address {target}")
        store = dict(state.store)
        blocks = dict(state.blocks)
        n = blocks.pop(target)
        for i in range(n):
            del store[target + i * WORD]
        return (replace(state, label=after, store=store, blocks=blocks),)

    if isinstance(s, If):
        taken = eval_exp_concrete(s.cond, state, program) != 0
        dest = _entry(s.then_body, after) if taken else _entry(s.else_body, after)
        return (replace(state, label=dest),)

    if isinstance(s, While):
        taken = eval_exp_concrete(s.cond, state, program) != 0
        dest = _entry(s.body, s.label) if taken else after
        return (replace(state, label=dest),)

    if isinstance(s, Assert):
        if eval_exp_concrete(s.cond, state, program) == 0:
            raise ConcreteRunError("assert", state.label)
        return (replace(state, label=after),)

    raise InternalError(f"unknown statement {s!r}")


# ---------------------------------------------------------------------------
# Trace collection


@dataclass
class RunResult:
    """Fuel-bounded prefix trace plus the memory states seen per label."""

    trace: list[ConcreteState]
    per_label: dict[int, list[ConcreteState]]
    error: ConcreteRunError | None = None

    @property
    def final(self) -> ConcreteState:
        return self.trace[-1]


def run_collect(program: Program, init: ConcreteState, fuel: int) -> RunResult:
    """Run up to ``fuel`` steps, collecting the trace and per-label states.

    A runtime error is captured in the result (with its label) rather than
    raised; the trace then ends at the erroring state.
    """
    if fuel <= 0:
        raise InternalError("fuel must be positive")
    flow = build_flow(program)
    trace = [init]
    per_label: dict[int, list[ConcreteState]] = {lab: [] for lab in program.labels()}
    per_label[program.exit_label] = []
    per_label.setdefault(init.label, []).append(init)
    state = init
    error: ConcreteRunError | None = None
    for _ in range(fuel):
        try:
            succs = step(state, program, flow)
        except ConcreteRunError as exc:
            error = exc
            break
        if not succs:
            break
        (state,) = succs
        trace.append(state)
        per_label.setdefault(state.label, []).append(state)
    return RunResult(trace, per_label, error)


def replay_equal(a: RunResult, b: RunResult) -> bool:
    """Replaying a trace reproduces it exactly (determinism check)."""
    return a.trace == b.trace and (a.error is None) == (b.error is None)

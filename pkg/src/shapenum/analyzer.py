"""The denotational abstract interpreter: structural recursion over program
syntax, widening-based loop fixpoints, assertion checking, reporting.

The per-label result maps every statement label (and the exit label) to a
disjunctive state covering every concrete state ever observed at that
control point; states recorded across loop iterations are accumulated by
join, so the final map is a sound flow-sensitive invariant table.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .combined import Alarm, CombinedDomain
from .disjunctive import Context, DisjunctState, DisjunctiveDomain
from .errors import InternalError, UnknownFieldError
from .lang import (
    Assert,
    Assign,
    Expr,
    Free,
    If,
    Malloc,
    Not,
    Program,
    Stmt,
    While,
    used_fields,
)
from .memory import MemoryDomain
from .shape import DefsTable
from .symbols import SymbolSupply


@dataclass
class AnalyzerConfig:
    unfold_bound: int = 3
    widen_delay: int = 1
    max_disjuncts: int = 4
    oracle_depth: int = 3
    node_budget: int = 12
    numeric: str = "interval"
    iteration_cap: int = 1000


@dataclass
class AnalysisResult:
    program: Program
    states: dict[int, DisjunctState]
    alarms: list[Alarm]
    asserts: dict[int, str]  # label -> "proven" | "unproven"
    config: AnalyzerConfig
    loop_iterations: dict[int, int] = field(default_factory=dict)

    def state_at(self, label: int) -> DisjunctState:
        return self.states[label]

    @property
    def exit_state(self) -> DisjunctState:
        return self.states[self.program.exit_label]

    def all_asserts_proven(self) -> bool:
        return all(v == "proven" for v in self.asserts.values())


class Analyzer:
    def __init__(
        self,
        program: Program,
        defs: DefsTable | None = None,
        config: AnalyzerConfig | None = None,
    ):
        self.program = program
        self.config = config if config is not None else AnalyzerConfig()
        if defs is None:
            defs = DefsTable(field_table=program.field_table)
        elif defs.field_table is not program.field_table:
            # adopt the program's offsets into the shared table
            for name in program.field_table.names():
                defs.field_table.register(name, program.field_table.offset(name))
            program.field_table = defs.field_table
        self.defs = defs
        for name in used_fields(program):
            if not defs.field_table.known(name):
                raise UnknownFieldError(name)
        supply = SymbolSupply()
        comb = CombinedDomain(
            defs,
            supply,
            numeric=self.config.numeric,
            unfold_bound=self.config.unfold_bound,
            node_budget=self.config.node_budget,
        )
        self.memory = MemoryDomain(program.variables, comb)
        self.disj = DisjunctiveDomain(self.memory, cap=self.config.max_disjuncts)
        self._states: dict[int, DisjunctState] = {}
        self._alarms: list[Alarm] = []
        self._asserts: dict[int, str] = {}
        self._loop_iterations: dict[int, int] = {}

    # -- public entry points

    def initial(self) -> DisjunctState:
        return self.disj.single(self.memory.init_state())

    def analyze(self, pre: DisjunctState | None = None) -> AnalysisResult:
        self._states = {lab: DisjunctState() for lab in self.program.labels()}
        self._states[self.program.exit_label] = DisjunctState()
        self._alarms = []
        self._asserts = {}
        self._loop_iterations = {}
        state = pre if pre is not None else self.initial()
        final = self._exec_body(self.program.body, state)
        self._record(self.program.exit_label, final)
        alarms = sorted(set(self._alarms), key=lambda a: (a.label if a.label is not None else -1, a.kind, a.detail))
        return AnalysisResult(
            self.program,
            dict(self._states),
            alarms,
            dict(self._asserts),
            self.config,
            dict(self._loop_iterations),
        )

    # -- recording

    def _record(self, label: int, state: DisjunctState) -> None:
        prev = self._states.get(label)
        if prev is None or prev.is_empty():
            self._states[label] = state
        elif not state.is_empty():
            joined, al = self.disj.join(prev, state)
            self._alarms.extend(al)
            self._states[label] = joined

    # -- structural recursion

    def _exec_body(self, body: tuple[Stmt, ...], state: DisjunctState) -> DisjunctState:
        for s in body:
            state = self._exec_stmt(s, state)
        return state

    def _exec_stmt(self, s: Stmt, state: DisjunctState) -> DisjunctState:
        self._record(s.label, state)
        ctx = Context(s.label)
        if isinstance(s, Assign):
            out, al = self.disj.assign(ctx, s.loc, s.expr, state)
        elif isinstance(s, Malloc):
            out, al = self.disj.alloc(ctx, s.loc, s.fields, state)
        elif isinstance(s, Free):
            out, al = self.disj.free(ctx, s.loc, state)
        elif isinstance(s, Assert):
            self._asserts[s.label] = self._check_assert(s.cond, state)
            return state  # asserts never narrow the state
        elif isinstance(s, If):
            then_in, al_t = self.disj.guard(Context(s.label, True), s.cond, state)
            else_in, al_f = self.disj.guard(Context(s.label, False), Not(s.cond), state)
            self._alarms.extend(al_t + al_f)
            then_out = self._exec_body(s.then_body, then_in)
            else_out = self._exec_body(s.else_body, else_in)
            out, al = self.disj.join(then_out, else_out)
        elif isinstance(s, While):
            invariant = self._lfp(s, state)
            out, al = self.disj.guard(Context(s.label, False), Not(s.cond), invariant)
        else:
            raise InternalError(f"unknown statement {s!r}")
        self._alarms.extend(al)
        return out

    def _check_assert(self, cond: Expr, state: DisjunctState) -> str:
        """Refutation by guard: proven iff assuming the negation leaves
        nothing, and the hypothetical guard raised no alarms."""
        refuted, alarms = self.disj.guard(Context(), Not(cond), state)
        if alarms:
            return "unproven"
        return "proven" if refuted.is_empty() else "unproven"

    def _lfp(self, s: While, init: DisjunctState) -> DisjunctState:
        """Widening iteration to a post-fixpoint of the loop transformer."""

        def body(x: DisjunctState) -> DisjunctState:
            self._record(s.label, x)
            entered, al = self.disj.guard(Context(s.label, True), s.cond, x)
            self._alarms.extend(al)
            return self._exec_body(s.body, entered)

        x = init
        for k in range(self.config.iteration_cap):
            fx = body(x)
            folded, al = self.disj.join(x, fx)
            self._alarms.extend(al)
            if self.disj.compare(folded, x):
                self._loop_iterations[s.label] = k + 1
                return x
            if k < self.config.widen_delay:
                x = folded
            else:
                x, al = self.disj.widen(x, fx)
                self._alarms.extend(al)
        raise InternalError(
            f"loop at label {s.label} did not stabilize within "
            f"{self.config.iteration_cap} iterations"
        )


def analyze_program(
    program: Program,
    defs: DefsTable | None = None,
    config: AnalyzerConfig | None = None,
    pre: DisjunctState | None = None,
) -> AnalysisResult:
    return Analyzer(program, defs, config).analyze(pre)

"""Cross-validation of the analyzer against the concrete interpreter.

For a program and a set of initial variable assignments, every concrete
state observed by a fuel-bounded run must be accepted (by the depth-bounded
membership oracle) by the analysis result at its label.  A run that ends in
a runtime error is excused only if the analyzer reported an alarm (or an
unproven assert) at the same label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .analyzer import AnalysisResult, Analyzer, AnalyzerConfig
from .concrete import ConcreteState, initial_state, run_collect
from .errors import ConcreteRunError
from .lang import Program
from .oracle import MemberResult, member_gamma
from .shape import DefsTable


@dataclass
class Violation:
    label: int
    init: Mapping[str, int]
    state: str
    verdict: MemberResult


@dataclass
class SoundnessReport:
    program_name: str
    checked_states: int = 0
    violations: list[Violation] = field(default_factory=list)
    unmatched_errors: list[ConcreteRunError] = field(default_factory=list)
    matched_errors: list[ConcreteRunError] = field(default_factory=list)
    result: AnalysisResult | None = None

    @property
    def ok(self) -> bool:
        return not self.violations and not self.unmatched_errors

    def render(self) -> str:
        status = "SOUND" if self.ok else "UNSOUND"
        out = [
            f"{self.program_name}: {status} "
            f"({self.checked_states} states checked, "
            f"{len(self.violations)} violations, "
            f"{len(self.matched_errors)} matched errors, "
            f"{len(self.unmatched_errors)} unmatched errors)"
        ]
        for v in self.violations[:10]:
            out.append(f"  label {v.label} [{v.verdict.value}] init={dict(v.init)}: {v.state}")
        return "\n".join(out)


def _error_matched(result: AnalysisResult, err: ConcreteRunError) -> bool:
    if err.kind == "assert":
        return result.asserts.get(err.label) == "unproven"
    if any(a.label == err.label for a in result.alarms):
        return True
    return False


def soundness_check(
    program: Program,
    inits: Sequence[Mapping[str, int]],
    defs: DefsTable | None = None,
    config: AnalyzerConfig | None = None,
    fuel: int = 200,
    name: str = "program",
    result: AnalysisResult | None = None,
) -> SoundnessReport:
    config = config if config is not None else AnalyzerConfig()
    analyzer = Analyzer(program, defs, config)
    if result is None:
        result = analyzer.analyze()
    report = SoundnessReport(name, result=result)
    depth = config.oracle_depth
    for init_values in inits:
        init = initial_state(program, init_values)
        run = run_collect(program, init, fuel)
        for label, states in sorted(run.per_label.items()):
            abstract = result.states.get(label)
            for st in states:
                report.checked_states += 1
                if abstract is None or abstract.is_empty():
                    report.violations.append(
                        Violation(label, init_values, st.render(), MemberResult.NO)
                    )
                    continue
                verdicts = [
                    member_gamma(st.env, st.store, d.mem, depth, analyzer.defs)
                    for d in abstract.disjuncts
                ]
                if MemberResult.YES not in verdicts:
                    worst = (
                        MemberResult.UNKNOWN
                        if MemberResult.UNKNOWN in verdicts
                        else MemberResult.NO
                    )
                    report.violations.append(
                        Violation(label, init_values, st.render(), worst)
                    )
        if run.error is not None:
            if _error_matched(result, run.error):
                report.matched_errors.append(run.error)
            else:
                report.unmatched_errors.append(run.error)
    return report

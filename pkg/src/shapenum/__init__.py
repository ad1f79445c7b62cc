"""shapenum: a shape + numeric static analyzer for a small heap language.

Layered abstract domains (shape graphs with inductive summaries, a numeric
layer synchronized with the graph's nodes, abstract environments, and a
context-tagged disjunctive completion) drive a denotational abstract
interpreter; an executable concrete semantics plus a concretization
membership oracle provide the soundness ground truth.
"""

from .analyzer import AnalysisResult, Analyzer, AnalyzerConfig, analyze_program
from .checking import SoundnessReport, soundness_check
from .combined import Alarm, CombinedDomain, CombinedElem
from .concrete import ConcreteState, initial_state, run_collect, step
from .disjunctive import Context, Disjunct, DisjunctState, DisjunctiveDomain
from .errors import (
    ConcreteRunError,
    DefsError,
    InternalError,
    ParseError,
    ShapenumError,
    UnknownFieldError,
)
from .lang import Program, parse_program, pretty_print
from .memory import AbstractMem, MemoryDomain
from .numeric import DiffBoundElem, IntervalElem, Itv
from .oracle import MemberResult, member_exact_bruteforce, member_gamma
from .shape import DefsTable, IndEdge, PtEdge, ShapeGraph
from .symbols import Const, NumBin, NumExpr, NumNot, Sym, SymbolSupply, SymVal

__version__ = "0.1.0"

__all__ = [
    "AbstractMem",
    "Alarm",
    "AnalysisResult",
    "Analyzer",
    "AnalyzerConfig",
    "analyze_program",
    "CombinedDomain",
    "CombinedElem",
    "ConcreteRunError",
    "ConcreteState",
    "Const",
    "Context",
    "DefsError",
    "DefsTable",
    "DiffBoundElem",
    "Disjunct",
    "DisjunctState",
    "DisjunctiveDomain",
    "IndEdge",
    "initial_state",
    "InternalError",
    "IntervalElem",
    "Itv",
    "MemberResult",
    "member_exact_bruteforce",
    "member_gamma",
    "MemoryDomain",
    "NumBin",
    "NumExpr",
    "NumNot",
    "ParseError",
    "parse_program",
    "pretty_print",
    "Program",
    "PtEdge",
    "run_collect",
    "ShapeGraph",
    "ShapenumError",
    "SoundnessReport",
    "soundness_check",
    "step",
    "Sym",
    "SymbolSupply",
    "SymVal",
    "UnknownFieldError",
]

"""Deterministic renderings of analysis results: text, JSON, and DOT."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .analyzer import AnalysisResult
from .disjunctive import DisjunctState
from .lang import FieldTable
from .memory import AbstractMem
from .numeric import DiffBoundElem, IntervalElem


def _bound_json(b: float) -> Any:
    if b == math.inf:
        return "inf"
    if b == -math.inf:
        return "-inf"
    return int(b)


def num_to_json(num) -> dict[str, Any]:
    if num.is_bottom():
        return {"bottom": True}
    out: dict[str, Any] = {
        "intervals": {
            str(s): [_bound_json(num.interval(s).lo), _bound_json(num.interval(s).hi)]
            for s in sorted(num.dims)
        }
    }
    if isinstance(num, DiffBoundElem):
        rels = []
        for x in sorted(num.dims):
            for y in sorted(num.dims):
                if x == y:
                    continue
                b = num.bound(x, y)
                if b != math.inf:
                    rels.append([str(x), str(y), _bound_json(b)])
        out["bounds"] = rels
    return out


def mem_to_json(d_ctx, mem: AbstractMem, table: FieldTable) -> dict[str, Any]:
    g = mem.elem.graph
    return {
        "context": {"label": d_ctx.label, "branch": d_ctx.branch},
        "env": {x: str(sym) for x, sym in sorted(mem.env.items())},
        "graph": {
            "nodes": sorted(str(n) for n in g.nodes),
            "pt_edges": [
                {"src": str(e.src), "field": e.name or table.name_at(e.off), "off": e.off, "dst": str(e.dst)}
                for e in g.sorted_pt()
            ],
            "ind_edges": [{"root": str(i.root), "def": i.name} for i in g.sorted_ind()],
        },
        "num": num_to_json(mem.elem.num),
    }


def result_to_json(result: AnalysisResult) -> dict[str, Any]:
    table = result.program.field_table
    labels: dict[str, Any] = {}
    for label in sorted(result.states):
        labels[str(label)] = [
            mem_to_json(d.ctx, d.mem, table) for d in result.states[label].disjuncts
        ]
    return {
        "labels": labels,
        "alarms": [
            {"label": a.label, "kind": a.kind, "detail": a.detail}
            for a in result.alarms
        ],
        "asserts": [
            {"label": label, "verdict": verdict}
            for label, verdict in sorted(result.asserts.items())
        ],
    }


def result_to_text(result: AnalysisResult) -> str:
    table = result.program.field_table
    lines: list[str] = []
    for label in sorted(result.states):
        tag = "exit" if label == result.program.exit_label else str(label)
        lines.append(f"-- label {tag} --")
        state = result.states[label]
        if state.is_empty():
            lines.append("  (unreachable)")
        else:
            for i, d in enumerate(state.disjuncts):
                lines.append(f"  #{i} [{d.ctx.render()}] {d.mem.render(table)}")
    if result.alarms:
        lines.append("-- alarms --")
        lines.extend(f"  {a.render()}" for a in result.alarms)
    if result.asserts:
        lines.append("-- asserts --")
        lines.extend(
            f"  label {label}: {verdict}" for label, verdict in sorted(result.asserts.items())
        )
    return "\n".join(lines) + "\n"


def mem_to_dot(mem: AbstractMem, table: FieldTable, name: str = "state") -> str:
    """Graphviz rendering: circles for nodes, field-labeled points-to edges,
    bold definition-labeled edges for inductive summaries."""
    g = mem.elem.graph
    var_labels: dict[str, list[str]] = {}
    for x, sym in sorted(mem.env.items()):
        var_labels.setdefault(str(sym), []).append(x)
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=circle];"]
    for n in sorted(g.nodes):
        label = str(n)
        if str(n) in var_labels:
            label += " (" + ",".join(var_labels[str(n)]) + ")"
        lines.append(f'  "{n}" [label="{label}"];')
    for e in g.sorted_pt():
        fld = e.name or table.name_at(e.off)
        lines.append(f'  "{e.src}" -> "{e.dst}" [label="{fld}"];')
    for i, edge in enumerate(g.sorted_ind()):
        phantom = f"__ind{i}"
        lines.append(f'  "{phantom}" [shape=point, label=""];')
        lines.append(
            f'  "{edge.root}" -> "{phantom}" [label="{edge.name}", style=bold, penwidth=2];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_outputs(result: AnalysisResult, emit: str, outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if emit == "json":
        p = outdir / "result.json"
        p.write_text(json.dumps(result_to_json(result), indent=2, sort_keys=True) + "\n")
        written.append(p)
    elif emit == "text":
        p = outdir / "result.txt"
        p.write_text(result_to_text(result))
        written.append(p)
    elif emit == "dot":
        table = result.program.field_table
        for label in sorted(result.states):
            for i, d in enumerate(result.states[label].disjuncts):
                p = outdir / f"state_{label}_{i}.dot"
                p.write_text(mem_to_dot(d.mem, table, name=f"s{label}_{i}"))
                written.append(p)
    else:
        raise ValueError(f"unknown emit format {emit!r}")
    return written

"""Command-line interface: run, analyze, check."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analyzer import Analyzer, AnalyzerConfig
from .checking import soundness_check
from .concrete import initial_state, run_collect
from .errors import ShapenumError
from .export import result_to_text, write_outputs
from .lang import parse_program
from .shape import DefsTable


def _parse_inits(pairs: list[str]) -> dict[str, int]:
    out: dict[str, int] = {}
    for p in pairs:
        name, _, value = p.partition("=")
        out[name.strip()] = int(value)
    return out


def _load(path: str, defs_path: str | None):
    program = parse_program(Path(path).read_text())
    defs = DefsTable(field_table=program.field_table)
    if defs_path:
        defs.load_file(defs_path)
    return program, defs


def _config(args: argparse.Namespace) -> AnalyzerConfig:
    return AnalyzerConfig(
        unfold_bound=args.unfold_bound,
        widen_delay=args.widen_delay,
        max_disjuncts=args.max_disjuncts,
        oracle_depth=args.oracle_depth,
        numeric=args.numeric,
    )


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--defs", help="inductive definitions file", default=None)
    p.add_argument("--unfold-bound", type=int, default=3, metavar="N")
    p.add_argument("--widen-delay", type=int, default=1, metavar="N")
    p.add_argument("--max-disjuncts", type=int, default=4, metavar="N")
    p.add_argument("--oracle-depth", type=int, default=3, metavar="K")
    p.add_argument("--numeric", choices=["interval", "diffbound"], default="interval")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="shapenum")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a program concretely")
    p_run.add_argument("file")
    p_run.add_argument("--fuel", type=int, default=1000)
    p_run.add_argument("--trace", action="store_true")
    p_run.add_argument("--init", action="append", default=[], metavar="VAR=VAL")

    p_an = sub.add_parser("analyze", help="run the abstract interpreter")
    p_an.add_argument("file")
    _add_analysis_flags(p_an)
    p_an.add_argument("--emit", choices=["text", "json", "dot"], default="text")
    p_an.add_argument("--out", default=None, metavar="DIR")

    p_chk = sub.add_parser("check", help="analyze plus concrete soundness cross-check")
    p_chk.add_argument("file")
    _add_analysis_flags(p_chk)
    p_chk.add_argument("--fuel", type=int, default=200)
    p_chk.add_argument("--init", action="append", default=[], metavar="VAR=VAL")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ShapenumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        program = parse_program(Path(args.file).read_text())
        DefsTable(field_table=program.field_table)  # register builtin fields
        init = initial_state(program, _parse_inits(args.init))
        run = run_collect(program, init, args.fuel)
        if args.trace:
            for st in run.trace:
                print(st.render())
        if run.error is not None:
            print(f"error: {run.error}")
            return 1
        print(f"final: {run.final.render()}")
        return 0

    if args.command == "analyze":
        program, defs = _load(args.file, args.defs)
        result = Analyzer(program, defs, _config(args)).analyze()
        if args.out:
            for path in write_outputs(result, args.emit, args.out):
                print(f"wrote {path}")
        else:
            print(result_to_text(result), end="")
        return 0

    if args.command == "check":
        program, defs = _load(args.file, args.defs)
        inits = [_parse_inits(args.init)] if args.init else [{}]
        report = soundness_check(
            program,
            inits,
            defs,
            _config(args),
            fuel=args.fuel,
            name=args.file,
        )
        print(report.render())
        assert report.result is not None
        if not report.ok:
            return 2
        if not report.result.all_asserts_proven():
            unproven = [l for l, v in report.result.asserts.items() if v != "proven"]
            print(f"unproven asserts at labels: {unproven}")
            return 1
        return 0

    raise AssertionError(f"unknown command {args.command!r}")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

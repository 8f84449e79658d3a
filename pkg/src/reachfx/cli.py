"""Command-line entry points: check, run, trace, soundness, corpus."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .evaluator import Done, evaluate, serialize_trace
from .parser import ParseError, parse, tokenize
from .pretty import render_verdict, term_str, verdict_json
from .typechecker import typecheck

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    """Unreadable, empty or unparsable input (exit status 2)."""


def load_term(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        if len(tokenize(text)) == 1:
            raise InputError(f"{path}: empty program")
        return parse(text)
    except ParseError as exc:
        raise InputError(f"{path}:{exc.span}: parse error: expected {', '.join(exc.expected)}, "
                         f"found {exc.found!r}") from exc


def cmd_check(args) -> int:
    v = typecheck(load_term(args.file))
    print(json.dumps(verdict_json(v)) if args.json else render_verdict(v))
    return EXIT_OK if v.ok else EXIT_REJECT


def _outcome_line(r) -> str:
    if isinstance(r, Done):
        return term_str(r.value)
    return str(r)


def cmd_run(args) -> int:
    r = evaluate(load_term(args.file), args.fuel)
    if args.trace and r.trace:
        print(serialize_trace(r.trace))
    print(_outcome_line(r))
    return EXIT_OK if isinstance(r, Done) else EXIT_REJECT


def cmd_soundness(args) -> int:
    from .soundness import SoundnessConfig, run_soundness
    cfg = SoundnessConfig(seeds=args.seeds, budget=args.budget, fuel=args.fuel,
                          stepcheck=args.stepcheck, start=args.start)
    summary = run_soundness(cfg)
    for key, value in summary.as_rows():
        print(f"{key}: {value}")
    return EXIT_OK if summary.clean else EXIT_REJECT


def cmd_corpus(args) -> int:
    from .corpus import run_corpus
    results = run_corpus(args.dir)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        detail = "" if r.passed else f"  expected {r.expectation}, got {r.actual}"
        print(f"{status} {r.path.name}{detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed} passed, {failed} failed")
    return EXIT_OK if failed == 0 and results else EXIT_REJECT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reachfx", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="type-check a program")
    p.add_argument("file")
    p.add_argument("--json", action="store_true", help="print one JSON object")
    p.set_defaults(func=cmd_check)

    for name, trace in (("run", False), ("trace", True)):
        p = sub.add_parser(name, help="evaluate a program" + (" and print its events" if trace else ""))
        p.add_argument("file")
        p.add_argument("--fuel", type=int, default=10_000)
        p.set_defaults(func=cmd_run, trace=trace)

    p = sub.add_parser("soundness", help="run generated programs and check invariants")
    p.add_argument("--seeds", type=int, default=500)
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument("--start", type=int, default=0, help="first seed")
    p.add_argument("--stepcheck", action="store_true", help="re-type every configuration")
    p.set_defaults(func=cmd_soundness)

    p = sub.add_parser("corpus", help="check every corpus file against its header")
    p.add_argument("dir", nargs="?", default=None)
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Golden corpus: programs with an expected verdict in their first comment line.

Headers take one of two forms::

    // EXPECT: ACCEPT TYPE <type> QUAL <qualifier> EFF <use>;<kill>
    // EXPECT: REJECT <code> @ <line>
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .parser import ParseError, parse
from .pretty import render_verdict
from .typechecker import typecheck

CORPUS_DIR = Path(__file__).resolve().parents[2] / "corpus"

_HEADER = re.compile(r"^//\s*EXPECT:\s*(?:ACCEPT\s+(?P<out>.+?)|REJECT\s+(?P<code>\S+)\s*@\s*(?P<line>\d+))\s*$")


class ExpectationError(ValueError):
    pass


@dataclass(frozen=True)
class Expectation:
    accept: bool
    output: Optional[str] = None  # exact `check` line for accepted programs
    code: Optional[str] = None
    line: Optional[int] = None

    def __str__(self) -> str:
        return f"ACCEPT {self.output}" if self.accept else f"REJECT {self.code} @ {self.line}"


def parse_expectation(text: str) -> Expectation:
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if not line.startswith("//"):
            break
        m = _HEADER.match(line)
        if m:
            if m.group("out") is not None:
                return Expectation(True, output=m.group("out"))
            return Expectation(False, code=m.group("code"), line=int(m.group("line")))
    raise ExpectationError("missing `// EXPECT:` header")


def corpus_files(directory=None) -> list:
    return sorted(Path(directory or CORPUS_DIR).glob("*.rt"))


def corpus_manifest(directory=None) -> list:
    """``(path, Expectation)`` for every corpus file, sorted by name."""
    return [(p, parse_expectation(p.read_text(encoding="utf-8"))) for p in corpus_files(directory)]


@dataclass(frozen=True)
class CorpusResult:
    path: Path
    expectation: Expectation
    actual: str
    passed: bool


def check_file(path) -> CorpusResult:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    exp = parse_expectation(text)
    try:
        v = typecheck(parse(text))
    except ParseError as exc:
        return CorpusResult(path, exp, f"parse error at {exc.span}", False)
    actual = render_verdict(v)
    if exp.accept:
        passed = v.ok and actual == exp.output
    else:
        d = v.diagnostic
        passed = d is not None and d.code == exp.code and d.span is not None and d.span.line == exp.line
    return CorpusResult(path, exp, actual, passed)


def run_corpus(directory=None) -> list:
    return [check_file(p) for p in corpus_files(directory)]

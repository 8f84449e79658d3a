"""Acceptance criteria. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import itertools
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reachfx.corpus import CORPUS_DIR, corpus_manifest, run_corpus  # noqa: E402
from reachfx.effects import ComposeFailure, seq_compose  # noqa: E402
from reachfx.evaluator import (  # noqa: E402
    TOMBSTONE, Done, Step, Store, Stuck, StuckReason, evaluate, serialize_trace, step,
)
from reachfx.parser import parse  # noqa: E402
from reachfx.pretty import term_str  # noqa: E402
from reachfx.qualifiers import saturate, saturate_with_steps  # noqa: E402
from reachfx.soundness import SoundnessConfig, run_soundness, validate_run  # noqa: E402
from reachfx.syntax import FRESH, Effect, Free, Loc, LocLit, Move, QType, Qualifier, TypeEnv  # noqa: E402
from reachfx.typechecker import E_USE_AFTER_KILL, infer, typecheck  # noqa: E402

from helpers import GOLDEN_OUTCOMES, REF_INT, env_of, golden_trace, q  # noqa: E402
from oracles import all_graphs, compose, reach, subsets  # noqa: E402


def report(name: str, ok: bool, detail: str = "") -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""), flush=True)


def corpus_fidelity():
    start = time.perf_counter()
    results = run_corpus()
    elapsed = time.perf_counter() - start
    failed = [r.path.name for r in results if not r.passed]
    ok = len(results) >= 14 and not failed and elapsed < 1.0
    return ok, f"{len(results)} files, {len(failed)} failed, {elapsed:.2f}s"


STATIC_REJECTS = ["free c; !c", "free c; c := 1", "move c; c := 1", "move c; move c"]


def no_use_after_kill_statics():
    codes = []
    for body in STATIC_REJECTS:
        v = typecheck(parse("val c = ref 0; " + body))
        codes.append(None if v.ok else v.diagnostic.code)
    double = typecheck(parse("val c = ref 0; free c; free c"))
    ok = all(c == E_USE_AFTER_KILL for c in codes) and double.ok
    return ok, f"rejects {codes}, double free {'accepted' if double.ok else 'rejected'}"


def alias_sensitive_kill():
    env = TypeEnv().with_term("c", QType(REF_INT, FRESH)).with_term("c2", QType(REF_INT, q("c")))
    v = infer(env, {"c", "c2"}, parse("free c; !c2"))
    surface = typecheck(parse("val c = ref 0; val c2 = c; free c; !c2"))
    ok = (not v.ok and v.diagnostic.code == E_USE_AFTER_KILL and v.diagnostic.witness == {"c"}
          and not surface.ok and surface.diagnostic.code == E_USE_AFTER_KILL)
    return ok, f"{v.diagnostic.code if v.diagnostic else 'accepted'}"


def dynamic_safety():
    start = time.perf_counter()
    s = run_soundness(SoundnessConfig(seeds=500, budget=20, fuel=10_000))
    elapsed = time.perf_counter() - start
    stuck = sum(s.stuck.values())
    ok = (s.programs == 500 and stuck == 0 and s.generation_failures == 0
          and s.monotonicity_violations == 0 and s.tombstone_violations == 0 and elapsed < 30)
    return ok, (f"{s.programs} programs, {stuck} stuck, {s.monotonicity_violations} monotonicity, "
                f"{s.tombstone_violations} tombstone violations, {elapsed:.2f}s")


def desk_scale_preservation():
    start = time.perf_counter()
    steps, bad = 0, []
    for path, exp in corpus_manifest():
        if not exp.accept:
            continue
        v = validate_run(parse(path.read_text(encoding="utf-8")), stepcheck=True)
        steps += v.steps
        if not v.ok or not isinstance(v.outcome, Done):
            bad.append(path.stem)
    elapsed = time.perf_counter() - start
    return not bad and elapsed < 5, f"{steps} steps checked, failing {bad}, {elapsed:.2f}s"


def algebra_oracles():
    atoms = ("a", "b", "c")
    effects = [Effect(u, k) for u in subsets(atoms) for k in subsets(atoms)]
    mismatches = pairs = 0
    for graph in all_graphs(atoms, max_edges=2):
        env = env_of(graph, REF_INT)
        for e1, e2 in itertools.product(effects, effects):
            pairs += 1
            expected = compose(graph, (set(e1.use), set(e1.kill)), (set(e2.use), set(e2.kill)))
            try:
                got = seq_compose(env, e1, e2)
                got = (set(got.use), set(got.kill))
            except ComposeFailure:
                got = None
            mismatches += got != expected
    rng = random.Random(2024)
    sat_bad = 0
    for _ in range(1000):
        n = rng.randint(0, 6)
        names = [f"v{i}" for i in range(n)]
        graph = {x: (set(rng.sample(names[:i], rng.randint(0, i))), rng.random() < 0.4)
                 for i, x in enumerate(names)}
        env = env_of(graph)
        start = set(rng.sample(names, rng.randint(0, n)))
        sat, changed = saturate_with_steps(env, Qualifier(frozenset(start)))
        if changed > n or saturate(env, sat) != sat or sat.atoms != reach(graph, start):
            sat_bad += 1
    ok = mismatches == 0 and sat_bad == 0
    return ok, f"{pairs} effect pairs, {mismatches} mismatches; 1000 envs, {sat_bad} saturation failures"


def evaluator_semantics():
    bad = []
    for name, outcome in GOLDEN_OUTCOMES.items():
        r = evaluate(parse((CORPUS_DIR / f"{name}.rt").read_text(encoding="utf-8")))
        got = term_str(r.value) if isinstance(r, Done) else str(r)
        if serialize_trace(r.trace) != golden_trace(name) or got != outcome:
            bad.append(name)
    dead = Store({Loc(0): TOMBSTONE})
    f = step(dead, Free(LocLit(Loc(0))))
    free_ok = isinstance(f, Step) and f.store == dead
    m = step(dead, Move(LocLit(Loc(0))))
    move_ok = isinstance(m, Stuck) and m.reason == StuckReason.MOVE_OF_DEAD
    return not bad and free_ok and move_ok, f"golden mismatches {bad}"


CRITERIA = [
    ("Corpus fidelity", corpus_fidelity),
    ("No-use-after-kill statics", no_use_after_kill_statics),
    ("Alias-sensitive kill", alias_sensitive_kill),
    ("Dynamic safety", dynamic_safety),
    ("Desk-scale preservation", desk_scale_preservation),
    ("Algebra oracles", algebra_oracles),
    ("Evaluator semantics", evaluator_semantics),
]


@pytest.fixture
def check(capsys):
    def run(index):
        name, fn = CRITERIA[index]
        ok, detail = fn()
        with capsys.disabled():
            print()
            report(name, ok, detail)
        assert ok, detail
    return run


def test_corpus_fidelity(check):
    check(0)


def test_no_use_after_kill_statics(check):
    check(1)


def test_alias_sensitive_kill(check):
    check(2)


def test_dynamic_safety(check):
    check(3)


def test_desk_scale_preservation(check):
    check(4)


def test_algebra_oracles(check):
    check(5)


def test_evaluator_semantics(check):
    check(6)


if __name__ == "__main__":
    results = [fn() for _, fn in CRITERIA]
    for (name, _), (ok, detail) in zip(CRITERIA, results):
        report(name, ok, detail)
    sys.exit(0 if all(ok for ok, _ in results) else 1)

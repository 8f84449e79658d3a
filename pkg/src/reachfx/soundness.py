"""Store typing, configuration re-checking and per-step preservation checks.

A configuration ``(Σ, k, σ, t)`` is re-typed after every reduction. The
checks mirror the shape of the preservation statement: the store typing only
grows, newly tombstoned cells were announced by the static kill component,
and a fresh result instantiated with a new location never kills it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .effects import compose_conflict, effect_sub, mk_kill
from .evaluator import (
    RULES, TOMBSTONE, Alloc, Done, MoveLoc, OutOfFuel, Step, Store, Stuck, step,
)
from .generator import GenerationExhausted, GeneratorConfig, generate_well_typed
from .qualifiers import sub_qualifier
from .subtyping import sub_qtype, sub_type
from .syntax import (
    Effect, Loc, QType, Qualifier, Term, TypeEnv, free_atoms_qtype, free_type_vars, is_value,
)
from .typechecker import Diagnostic, infer

STORE_ILL_TYPED = "STORE-ILL-TYPED"
KILL_COMPOSITION = "KILL-COMPOSITION"


class StoreTyping:
    """Telescoped location typing: each referent mentions only earlier locations."""

    def __init__(self, entries: tuple = ()):
        self.entries = tuple(entries)
        self._env = TypeEnv()
        for loc, referent in self.entries:
            self._check_entry(loc, referent)
            self._env = self._env.with_loc(loc, referent)

    def _check_entry(self, loc: Loc, referent: QType) -> None:
        if self._env.loc(loc) is not None:
            raise ValueError(f"location {loc} already typed")
        if free_type_vars(referent.ty):
            raise ValueError(f"referent of {loc} has free type variables")
        if referent.qual.fresh:
            raise ValueError(f"referent of {loc} is fresh")
        for a in free_atoms_qtype(referent):
            if not isinstance(a, Loc) or self._env.loc(a) is None:
                raise ValueError(f"referent of {loc} mentions {a}, which is not an earlier location")

    def extend(self, loc: Loc, referent: QType) -> "StoreTyping":
        return StoreTyping(self.entries + ((loc, referent),))

    def __getitem__(self, loc: Loc) -> QType:
        q = self._env.loc(loc)
        if q is None:
            raise KeyError(loc)
        return q

    def __contains__(self, loc: Loc) -> bool:
        return self._env.loc(loc) is not None

    def domain(self) -> frozenset:
        return frozenset(loc for loc, _ in self.entries)

    @property
    def env(self) -> TypeEnv:
        return self._env

    def __len__(self) -> int:
        return len(self.entries)


def _store_problems(sigma: StoreTyping, store: Store, killed: frozenset) -> list:
    problems = []
    for loc in store.domain() - sigma.domain():
        problems.append(f"{loc} is not in the store typing")
    phi = sigma.domain()
    for loc, referent in sigma.entries:
        if loc not in store:
            problems.append(f"{loc} is typed but not allocated")
            continue
        cell = store[loc]
        if loc in killed:
            if cell is not TOMBSTONE:
                problems.append(f"{loc} is in the kill set but still live")
            continue
        if cell is TOMBSTONE:
            problems.append(f"{loc} is a tombstone outside the kill set")
            continue
        v = infer(sigma.env, phi, cell.value)
        if not v.ok:
            problems.append(f"value at {loc}: {v.diagnostic.render()}")
        elif not sub_qtype(sigma.env, v.qtype, referent):
            problems.append(f"value at {loc} does not conform to its store type")
    return problems


def check_store(sigma: StoreTyping, store: Store, killed: frozenset) -> bool:
    return not _store_problems(sigma, store, frozenset(killed))


@dataclass
class ConfigReport:
    store_well_typed: bool
    residual_type: Optional[QType]
    residual_effect: Optional[Effect]
    kill_composition_defined: bool
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def check_config(sigma: StoreTyping, killed, store: Store, t: Term) -> ConfigReport:
    """Re-type a machine configuration. Problems are collected, never raised."""
    killed = frozenset(killed)
    failures = []
    problems = _store_problems(sigma, store, killed)
    failures.extend(Diagnostic(STORE_ILL_TYPED, None, p) for p in problems)
    # a dead location may still be mentioned, so it stays observable
    v = infer(sigma.env, sigma.domain(), t, killed)
    composes = True
    if not v.ok:
        failures.append(v.diagnostic)
    else:
        conflict = compose_conflict(sigma.env, mk_kill(killed), v.effect)
        if conflict:
            composes = False
            failures.append(Diagnostic(KILL_COMPOSITION, None,
                                       "residual effect uses a killed location", conflict))
    return ConfigReport(not problems, v.qtype, v.effect, composes, failures)


def referent_of(sigma: StoreTyping, value: Term, hint: Optional[QType]) -> QType:
    """Store type for a freshly allocated cell: the annotation if any, else the value's type."""
    if hint is not None:
        return hint
    v = infer(sigma.env, sigma.domain(), value)
    if not v.ok:
        raise ValueError(f"allocated value is ill-typed: {v.diagnostic.render()}")
    return v.qtype


def extend_store_typing(sigma: StoreTyping, new_store: Store, events) -> StoreTyping:
    for ev in events:
        if isinstance(ev, Alloc):
            sigma = sigma.extend(ev.loc, referent_of(sigma, new_store[ev.loc].value, ev.referent))
        elif isinstance(ev, MoveLoc):
            sigma = sigma.extend(ev.target, sigma[ev.source])
    return sigma


def _restrict(e: Effect, keep) -> Effect:
    return Effect(frozenset(a for a in e.use if keep(a)), frozenset(a for a in e.kill if keep(a)))


def preservation_failures(sigma: StoreTyping, store: Store, before: ConfigReport,
                          sigma2: StoreTyping, store2: Store, after: ConfigReport) -> list:
    """Check the relation between two consecutive well-typed configurations."""
    out = []
    if not after.passed:
        out.extend(f"after step: {d.render()}" for d in after.failures)
        return out
    env = sigma2.env
    killed, killed2 = store.tombstones(), store2.tombstones()
    fresh_kills = killed2 - killed
    new_locs = store2.domain() - store.domain()
    if not fresh_kills <= before.residual_effect.kill:
        out.append(f"kill extension {sorted(fresh_kills)} not covered by the static kill component")
    old_e, new_e = before.residual_effect, after.residual_effect
    residual = _restrict(new_e, lambda a: a not in new_locs)
    payload = _restrict(new_e, lambda a: a in new_locs)
    if not effect_sub(env, residual, old_e):
        out.append(f"residual effect {residual} exceeds the prior effect {old_e}")
    old_q, new_q = before.residual_type, after.residual_type
    p = frozenset(a for a in new_q.qual.atoms if a in new_locs) if old_q.qual.fresh else frozenset()
    if payload.kill & p or fresh_kills & p:
        out.append(f"step kills its own fresh result {sorted(p)}")
    if not sub_type(env, new_q.ty, old_q.ty):
        out.append("result type does not conform to the prior type")
    if not sub_qualifier(env, new_q.qual, Qualifier(old_q.qual.atoms | p, old_q.qual.fresh)):
        out.append(f"result qualifier {new_q.qual} exceeds {old_q.qual} plus {sorted(p)}")
    return out


@dataclass
class RunValidation:
    outcome: object  # Done | Stuck | OutOfFuel
    steps: int
    rules: Counter
    trace: tuple
    monotonicity_violations: int = 0
    tombstone_violations: int = 0
    preservation_failures: list = field(default_factory=list)

    @property
    def stuck(self) -> bool:
        return isinstance(self.outcome, Stuck)

    @property
    def ok(self) -> bool:
        return (not self.stuck and not self.monotonicity_violations
                and not self.tombstone_violations and not self.preservation_failures)


def validate_run(t: Term, fuel: int = 10_000, stepcheck: bool = True) -> RunValidation:
    """Evaluate ``t`` from the empty store, checking invariants at every step."""
    store, sigma = Store(), StoreTyping()
    rules: Counter = Counter()
    trace: list = []
    failures: list = []
    mono = tomb = 0
    report = check_config(sigma, frozenset(), store, t) if stepcheck else None
    if report is not None and not report.passed:
        failures.extend(f"initial: {d.render()}" for d in report.failures)
        stepcheck = False
    for n in range(fuel):
        r = step(store, t)
        if isinstance(r, Done):
            outcome = Done(r.value, store, tuple(trace))
            break
        if isinstance(r, Stuck):
            outcome = Stuck(r.reason, store, tuple(trace), t)
            break
        assert isinstance(r, Step)
        rules[r.rule] += 1
        trace.extend(r.events)
        if not store.domain() <= r.store.domain():
            mono += 1
        if any(r.store[l] is not TOMBSTONE for l in store.tombstones()):
            tomb += 1
        if stepcheck:
            sigma2 = extend_store_typing(sigma, r.store, r.events)
            after = check_config(sigma2, r.store.tombstones(), r.store, r.term)
            problems = preservation_failures(sigma, store, report, sigma2, r.store, after)
            if problems:
                failures.extend(f"step {n + 1} ({r.rule}): {p}" for p in problems)
                stepcheck = False
            sigma, report = sigma2, after
        store, t = r.store, r.term
    else:
        done = is_value(t)
        outcome = Done(t, store, tuple(trace)) if done else OutOfFuel(store, t, tuple(trace))
    return RunValidation(outcome, sum(rules.values()), rules, tuple(trace), mono, tomb, failures)


# -- batch driver ---------------------------------------------------------------


@dataclass(frozen=True)
class SoundnessConfig:
    seeds: int = 500
    budget: int = 20
    fuel: int = 10_000
    stepcheck: bool = False
    start: int = 0
    generator: GeneratorConfig = GeneratorConfig()


@dataclass
class SoundnessSummary:
    programs: int = 0
    done: int = 0
    out_of_fuel: int = 0
    stuck: Counter = field(default_factory=Counter)
    generation_failures: int = 0
    monotonicity_violations: int = 0
    tombstone_violations: int = 0
    preservation_failures: int = 0
    rules: Counter = field(default_factory=Counter)
    examples: list = field(default_factory=list)  # (seed, message) of the first few failures

    @property
    def clean(self) -> bool:
        return not (sum(self.stuck.values()) or self.generation_failures
                    or self.monotonicity_violations or self.tombstone_violations
                    or self.preservation_failures)

    def as_rows(self) -> list:
        rows = [("programs", self.programs), ("done", self.done), ("out_of_fuel", self.out_of_fuel),
                ("stuck", sum(self.stuck.values()))]
        rows += [(f"stuck.{reason.value}", n) for reason, n in sorted(self.stuck.items())]
        rows += [("generation_failures", self.generation_failures),
                 ("monotonicity_violations", self.monotonicity_violations),
                 ("tombstone_violations", self.tombstone_violations),
                 ("preservation_failures", self.preservation_failures)]
        rows += [(f"rule.{r}", self.rules.get(r, 0)) for r in RULES]
        return rows


def run_soundness(config: SoundnessConfig = SoundnessConfig()) -> SoundnessSummary:
    summary = SoundnessSummary()
    for seed in range(config.start, config.start + config.seeds):
        try:
            t = generate_well_typed(seed, config.budget, config.generator)
        except GenerationExhausted:
            summary.generation_failures += 1
            continue
        v = validate_run(t, config.fuel, config.stepcheck)
        summary.programs += 1
        summary.rules.update(v.rules)
        if isinstance(v.outcome, Done):
            summary.done += 1
        elif isinstance(v.outcome, Stuck):
            summary.stuck[v.outcome.reason] += 1
            summary.examples.append((seed, str(v.outcome)))
        else:
            summary.out_of_fuel += 1
        summary.monotonicity_violations += v.monotonicity_violations
        summary.tombstone_violations += v.tombstone_violations
        if v.preservation_failures:
            summary.preservation_failures += 1
            summary.examples.append((seed, v.preservation_failures[0]))
    return summary

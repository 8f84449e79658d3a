import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reachfx.qualifiers import (
    expand, is_saturated, overlap, saturate, saturate_with_steps, sub_qualifier,
    unreachable_atoms,
)
from reachfx.syntax import EMPTY, FRESH, Loc, QType, Qualifier, TopT, TypeEnv, UnboundAtom

from helpers import counter_env, env_of, q
from oracles import declarative_subqualifier, reach


def test_saturate_alias_chain():
    assert saturate(counter_env(), q("counter2")) == q("counter2", "counter")


def test_saturate_empty():
    assert saturate(counter_env(), EMPTY) == EMPTY


def test_saturate_three_chain_against_oracle():
    g = {"a": (set(), True), "b": ({"a"}, False), "c": ({"b"}, False)}
    assert saturate(env_of(g), q("c")).atoms == reach(g, {"c"}) == {"a", "b", "c"}


def test_saturate_keeps_fresh_marker():
    assert saturate(counter_env(), q("counter2", fresh=True)) == q("counter", "counter2", fresh=True)


def test_unbound_atom_is_an_error():
    with pytest.raises(UnboundAtom):
        saturate(counter_env(), q("nope"))
    with pytest.raises(UnboundAtom):
        saturate(TypeEnv(), Qualifier.of(Loc(0)))


def test_is_saturated():
    env = counter_env()
    assert is_saturated(env, q("counter2", "counter"))
    assert not is_saturated(env, q("counter2"))
    assert is_saturated(env, EMPTY)


def test_locations_are_sinks():
    env = TypeEnv().with_loc(Loc(0), QType(TopT())).with_loc(Loc(1), QType(TopT(), Qualifier.of(Loc(0))))
    assert saturate(env, Qualifier.of(Loc(1))) == Qualifier.of(Loc(1))


class TestOverlap:
    def test_shared_parent(self):
        g = {"x": (set(), True), "y": ({"x"}, False), "z": ({"x"}, False)}
        assert overlap(env_of(g), q("y"), q("z")) == q("x", fresh=True)

    def test_with_empty(self):
        assert overlap(counter_env(), q("counter2"), EMPTY) == FRESH

    def test_self_overlap(self):
        env = counter_env()
        assert overlap(env, q("counter"), q("counter")) == q("counter", fresh=True)


class TestSubQualifier:
    def test_inclusion(self):
        g = {"a0": (set(), True), "b0": (set(), True), "a": ({"a0"}, False), "b": ({"b0"}, False)}
        assert sub_qualifier(env_of(g), q("a"), q("a", "b"))

    def test_empty_left(self):
        assert sub_qualifier(counter_env(), EMPTY, q("counter"))

    def test_variable_lookup(self):
        env = counter_env()
        assert sub_qualifier(env, q("counter2"), q("counter"))
        # and back again by self absorption, since counter2 is bound at {counter}
        assert sub_qualifier(env, q("counter"), q("counter2"))

    def test_fresh_needs_fresh(self):
        env = counter_env()
        assert not sub_qualifier(env, q("counter", fresh=True), q("counter"))
        assert sub_qualifier(env, q("counter"), q("counter", fresh=True))

    def test_fresh_binding_blocks_lookup(self):
        # counter is bound at a fresh qualifier, so it cannot be upcast to it
        assert not sub_qualifier(counter_env(), q("counter"), EMPTY)

    def test_self_absorption(self):
        g = {"c": (set(), True), "f": ({"c"}, False)}
        assert sub_qualifier(env_of(g), q("c", "f"), q("f"))

    def test_qualifier_variable_bound(self):
        env = (TypeEnv().with_term("a", QType(TopT(), FRESH))
               .with_tvar("X", "x", QType(TopT(), q("a"))))
        assert sub_qualifier(env, q("x"), q("a"))
        # the bound does not license the converse
        assert not sub_qualifier(env, q("a"), q("x"))

    def test_witness(self):
        env = counter_env()
        assert unreachable_atoms(env, q("counter", "counter2"), EMPTY) == {"counter", "counter2"}
        assert unreachable_atoms(env, q("counter2"), q("counter")) == frozenset()


def _random_env(rng: random.Random, n: int) -> tuple:
    names = [f"v{i}" for i in range(n)]
    graph = {}
    for i, name in enumerate(names):
        earlier = names[:i]
        k = rng.randint(0, len(earlier))
        graph[name] = (set(rng.sample(earlier, k)), rng.random() < 0.4)
    return graph, env_of(graph)


def test_saturation_idempotent_and_bounded_on_random_envs():
    rng = random.Random(11)
    for _ in range(1000):
        graph, env = _random_env(rng, rng.randint(0, 6))
        start = set(rng.sample(sorted(graph), rng.randint(0, len(graph))))
        qual = Qualifier(frozenset(start))
        sat, changed = saturate_with_steps(env, qual)
        assert changed <= len(graph)
        assert expand(env, sat.atoms) == sat.atoms
        assert saturate(env, sat) == sat
        assert sat.atoms == reach(graph, start)


def _telescoped_graphs():
    names = ["a", "b", "c"]
    for n in range(4):
        used = names[:n]
        options = []
        for i, x in enumerate(used):
            earlier = used[:i]
            choices = [(frozenset(c), f) for c in _subsets(earlier) for f in (False, True)]
            options.append(choices)
        for combo in _product(options):
            yield {x: (set(c[0]), c[1]) for x, c in zip(used, combo)}


def _subsets(xs):
    out = [[]]
    for x in xs:
        out += [s + [x] for s in out]
    return out


def _product(options):
    if not options:
        yield ()
        return
    for head in options[0]:
        for tail in _product(options[1:]):
            yield (head,) + tail


def test_agrees_with_declarative_rules_exhaustively():
    """All telescoped environments with up to three bindings, all qualifier pairs."""
    checked = 0
    for graph in _telescoped_graphs():
        env = env_of(graph)
        rel = declarative_subqualifier(graph)
        atoms = sorted(graph)
        quals = [(frozenset(s), f) for s in _subsets(atoms) for f in (False, True)]
        for p in quals:
            for r in quals:
                got = sub_qualifier(env, Qualifier(*p), Qualifier(*r))
                assert got == ((p, r) in rel), (graph, p, r)
                checked += 1
    assert checked > 1000


atom_sets = st.sets(st.sampled_from(["a", "b", "c", "d"]))


@st.composite
def envs(draw):
    graph = {}
    for i, name in enumerate(["a", "b", "c", "d"]):
        earlier = ["a", "b", "c", "d"][:i]
        deps = draw(st.sets(st.sampled_from(earlier))) if earlier else set()
        graph[name] = (deps, draw(st.booleans()))
    return graph


@settings(max_examples=200, deadline=None)
@given(envs(), atom_sets, atom_sets, atom_sets)
def test_sub_qualifier_reflexive_and_transitive(graph, a, b, c):
    env = env_of(graph)
    qa, qb, qc = (Qualifier(frozenset(s)) for s in (a, b, c))
    assert sub_qualifier(env, qa, qa)
    if sub_qualifier(env, qa, qb) and sub_qualifier(env, qb, qc):
        assert sub_qualifier(env, qa, qc)


@settings(max_examples=200, deadline=None)
@given(envs(), atom_sets, atom_sets)
def test_overlap_commutative_and_fresh(graph, a, b):
    env = env_of(graph)
    qa, qb = Qualifier(frozenset(a)), Qualifier(frozenset(b))
    assert overlap(env, qa, qb) == overlap(env, qb, qa)
    assert overlap(env, qa, qb).fresh


@settings(max_examples=200, deadline=None)
@given(envs(), atom_sets, atom_sets)
def test_saturate_monotone(graph, a, b):
    env = env_of(graph)
    small, big = Qualifier(frozenset(a)), Qualifier(frozenset(a | b))
    assert saturate(env, small).atoms <= saturate(env, big).atoms


@given(atom_sets, atom_sets, st.booleans(), st.booleans())
def test_without_variable_bindings_is_inclusion(a, b, fa, fb):
    env = TypeEnv()
    for i, name in enumerate(sorted(a | b)):
        env = env.with_loc(Loc(i), QType(TopT()))
    locs = {name: Loc(i) for i, name in enumerate(sorted(a | b))}
    p = Qualifier(frozenset(locs[x] for x in a), fa)
    r = Qualifier(frozenset(locs[x] for x in b), fb)
    assert sub_qualifier(env, p, r) == (p.atoms <= r.atoms and (not fa or fb))

import itertools

import pytest

from reachfx.subtyping import sub_qtype, sub_qualified_eff, sub_type
from reachfx.syntax import (
    EMPTY, FRESH, All, Effect, Fun, IllFormedType, IntT, PURE, QType, Ref, TopT, TVar, TypeEnv,
    UnitT,
)

from helpers import env_of, q

ENV = env_of({"a": (set(), True), "b": (set(), True)}, Ref(IntT()))


def fun(dom_q, cod=QType(IntT()), latent=PURE, dom_ty=IntT()):
    return Fun("f", "x", QType(dom_ty, dom_q), latent, cod)


class TestRef:
    def test_same_referent(self):
        assert sub_type(ENV, Ref(IntT(), q("a")), Ref(IntT(), q("a")))

    def test_referent_qualifier_is_invariant(self):
        assert not sub_type(ENV, Ref(IntT(), q("a")), Ref(IntT(), q("a", "b")))
        assert not sub_type(ENV, Ref(IntT(), q("a", "b")), Ref(IntT(), q("a")))

    def test_payload_is_invariant(self):
        assert not sub_type(ENV, Ref(IntT()), Ref(TopT()))


def test_top_is_greatest():
    for t in (UnitT(), IntT(), TopT(), Ref(IntT(), q("a")), fun(q("a"))):
        assert sub_type(ENV, t, TopT())
    assert not sub_type(ENV, TopT(), IntT())


def test_function_domain_is_contravariant():
    wide, narrow = fun(q("a", "b")), fun(q("a"))
    assert sub_type(ENV, wide, narrow)
    assert not sub_type(ENV, narrow, wide)


def test_function_latent_effect_is_covariant():
    small = fun(q("a"), latent=Effect(frozenset({"a"})))
    big = fun(q("a"), latent=Effect(frozenset({"a", "b"})))
    assert sub_type(ENV, small, big)
    assert not sub_type(ENV, big, small)


def test_codomain_may_mention_parameter():
    f = fun(q("a"), cod=QType(Ref(IntT()), q("x")))
    g = fun(q("a"), cod=QType(Ref(IntT()), q("x", "b")))
    assert sub_type(ENV, f, g)


def test_type_variable_uses_bound():
    env = ENV.with_tvar("X", "x", QType(IntT(), q("a")))
    assert sub_type(env, TVar("X"), IntT())
    assert sub_type(env, TVar("X"), TVar("X"))
    assert not sub_type(env, IntT(), TVar("X"))
    with pytest.raises(IllFormedType):
        sub_type(ENV, TVar("Y"), TopT())


def test_polymorphic_types_compare_up_to_renaming():
    s = All("f", "X", "x", QType(TopT(), FRESH), PURE, QType(TVar("X"), q("x")))
    t = All("g", "Y", "y", QType(TopT(), FRESH), PURE, QType(TVar("Y"), q("y")))
    assert sub_type(ENV, s, t) and sub_type(ENV, t, s)


class TestQualifiedWithEffects:
    def test_componentwise(self):
        assert sub_qualified_eff(ENV, QType(IntT(), q("a")), PURE,
                                 QType(IntT(), q("a", "b")), Effect(frozenset({"a"})))

    def test_reflexive(self):
        qt, e = QType(Ref(IntT()), q("a")), Effect(frozenset({"a"}), frozenset({"b"}))
        assert sub_qualified_eff(ENV, qt, e, qt, e)

    def test_qualifier_must_shrink(self):
        assert not sub_qtype(ENV, QType(IntT(), q("a", "b")), QType(IntT(), q("a")))


def _universe():
    base = [UnitT(), IntT(), TopT(), Ref(IntT()), Ref(IntT(), q("a")), Ref(TopT())]
    funs = [fun(dq, latent=lat) for dq in (EMPTY, q("a"), q("a", "b"))
            for lat in (PURE, Effect(frozenset({"a"})))]
    return base + funs


def test_reflexive_and_transitive_on_small_universe():
    types = _universe()
    rel = {(s, t) for s, t in itertools.product(types, types) if sub_type(ENV, s, t)}
    for t in types:
        assert (t, t) in rel
    for (s, t), (t2, u) in itertools.product(rel, rel):
        if t == t2:
            assert (s, u) in rel, (s, t, u)


def test_ref_invariance_iff_both_directions():
    types = _universe()
    for s, t in itertools.product(types, types):
        both = sub_type(ENV, s, t) and sub_type(ENV, t, s)
        assert sub_type(ENV, Ref(s), Ref(t)) == both


def test_unbound_referent_atom_rejected():
    assert not sub_type(TypeEnv(), Ref(IntT(), q("zz")), Ref(IntT(), q("zz")))

"""Algorithmic subtyping on types, qualified types and qualified types with effects.

Transitivity is admissible: no rule searches for an intermediate type.
"""

from __future__ import annotations

from .effects import effect_sub
from .qualifiers import sub_qualifier
from .syntax import (
    FRESH, All, Effect, Fun, IllFormedType, IntT, QType, Ref, TopT, TVar,
    Type, TypeEnv, UnitT, fresh_name, rename_all_binder, rename_all_tvar,
    rename_fun_binder,
)


def check_well_formed(env: TypeEnv, ty: Type) -> None:
    """Raise ``IllFormedType`` on type variables that are not in scope."""
    if isinstance(ty, TVar):
        if env.tvar(ty.name) is None:
            raise IllFormedType(f"unbound type variable {ty.name}")
    elif isinstance(ty, Ref):
        check_well_formed(env, ty.referent)
    elif isinstance(ty, Fun):
        check_well_formed(env, ty.domain.ty)
        check_well_formed(env, ty.codomain.ty)
    elif isinstance(ty, All):
        check_well_formed(env, ty.bound.ty)
        check_well_formed(env.with_tvar(ty.tvar, ty.qvar, ty.bound), ty.body.ty)


def promote(env: TypeEnv, ty: Type) -> Type:
    """Resolve type variables through their bounds until a concrete head appears."""
    seen = set()
    while isinstance(ty, TVar):
        if ty.name in seen:
            raise IllFormedType(f"cyclic bound for {ty.name}")
        seen.add(ty.name)
        b = env.tvar(ty.name)
        if b is None:
            raise IllFormedType(f"unbound type variable {ty.name}")
        ty = b.bound.ty
    return ty


def _align_fun(s: Fun, t: Fun, env: TypeEnv) -> tuple[Fun, Fun]:
    avoid = env.names() | {s.self_name, s.param, t.self_name, t.param}
    f = fresh_name(s.self_name, avoid)
    x = fresh_name(s.param, avoid | {f})
    s = rename_fun_binder(rename_fun_binder(s, s.self_name, f), s.param, x)
    t = rename_fun_binder(rename_fun_binder(t, t.self_name, f), t.param, x)
    return s, t


def _align_all(s: All, t: All, env: TypeEnv) -> tuple[All, All]:
    avoid = env.names() | {s.self_name, s.qvar, s.tvar, t.self_name, t.qvar, t.tvar}
    f = fresh_name(s.self_name, avoid)
    x = fresh_name(s.qvar, avoid | {f})
    X = fresh_name(s.tvar, avoid | {f, x})
    s = rename_all_tvar(rename_all_binder(rename_all_binder(s, s.self_name, f), s.qvar, x), X)
    t = rename_all_tvar(rename_all_binder(rename_all_binder(t, t.self_name, f), t.qvar, x), X)
    return s, t


def sub_type(env: TypeEnv, s: Type, t: Type) -> bool:
    if isinstance(t, TopT):
        check_well_formed(env, s)
        return True
    if isinstance(s, TVar):
        if isinstance(t, TVar) and s.name == t.name:
            check_well_formed(env, s)
            return True
        b = env.tvar(s.name)
        if b is None:
            raise IllFormedType(f"unbound type variable {s.name}")
        return sub_type(env, b.bound.ty, t)
    if isinstance(s, (UnitT, IntT)):
        return type(s) is type(t)
    if isinstance(s, TopT):
        return False
    if isinstance(s, Ref):
        if not isinstance(t, Ref) or s.qual != t.qual:
            return False
        if not all(env.binds(a) for a in s.qual.atoms):
            return False
        return sub_type(env, s.referent, t.referent) and sub_type(env, t.referent, s.referent)
    if isinstance(s, Fun):
        if not isinstance(t, Fun):
            return False
        s, t = _align_fun(s, t, env)
        if not sub_qtype(env, t.domain, s.domain):
            return False
        inner = (env.with_term(s.self_name, QType(s, FRESH))
                 .with_term(s.param, t.domain))
        return sub_qualified_eff(inner, s.codomain, s.latent, t.codomain, t.latent)
    if isinstance(s, All):
        if not isinstance(t, All):
            return False
        s, t = _align_all(s, t, env)
        if not sub_qtype(env, t.bound, s.bound):
            return False
        inner = (env.with_term(s.self_name, QType(s, FRESH))
                 .with_tvar(s.tvar, s.qvar, t.bound))
        return sub_qualified_eff(inner, s.body, s.latent, t.body, t.latent)
    raise TypeError(f"not a type: {s!r}")


def sub_qtype(env: TypeEnv, p: QType, q: QType) -> bool:
    return sub_type(env, p.ty, q.ty) and sub_qualifier(env, p.qual, q.qual)


def sub_qualified_eff(env: TypeEnv, p: QType, e1: Effect, q: QType, e2: Effect) -> bool:
    return sub_qtype(env, p, q) and effect_sub(env, e1, e2)

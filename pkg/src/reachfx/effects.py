"""Use/kill effects: constructors, sequential composition and effect subtyping."""

from __future__ import annotations

from typing import Iterable

from .qualifiers import saturate, sub_qualifier
from .syntax import Effect, Qualifier, TypeEnv


class ComposeFailure(Exception):
    """Sequential composition is undefined: something is used after being killed."""

    def __init__(self, atoms: frozenset):
        assert atoms, "composition failures carry a nonempty witness"
        super().__init__("used after kill: " + ", ".join(sorted(map(str, atoms))))
        self.atoms = frozenset(atoms)


def _atoms(alpha) -> frozenset:
    # accepts a Qualifier (fresh marker dropped) or any iterable of atoms
    if isinstance(alpha, Qualifier):
        return alpha.atoms
    return frozenset(alpha)


def mk_use(alpha: Qualifier | Iterable) -> Effect:
    return Effect(use=_atoms(alpha))


def mk_kill(alpha: Qualifier | Iterable) -> Effect:
    return Effect(kill=_atoms(alpha))


def mk_move(alpha: Qualifier | Iterable) -> Effect:
    # one record: a later use or move of the same resource then fails to compose
    a = _atoms(alpha)
    return Effect(use=a, kill=a)


def compose_conflict(env: TypeEnv, e1: Effect, e2: Effect) -> frozenset:
    """Atoms of ``sat(e1.kill) ∩ sat(e2.use)``; empty iff ``e1 ▷ e2`` is defined."""
    if not e1.kill or not e2.use:
        return frozenset()
    killed = saturate(env, Qualifier(e1.kill)).atoms
    used = saturate(env, Qualifier(e2.use)).atoms
    return killed & used


def seq_compose(env: TypeEnv, e1: Effect, e2: Effect) -> Effect:
    conflict = compose_conflict(env, e1, e2)
    if conflict:
        raise ComposeFailure(conflict)
    return Effect(e1.use | e2.use, e1.kill | e2.kill)


def seq_all(env: TypeEnv, *effects: Effect) -> Effect:
    out = Effect()
    for e in effects:
        out = seq_compose(env, out, e)
    return out


def effect_sub(env: TypeEnv, e1: Effect, e2: Effect) -> bool:
    return (sub_qualifier(env, Qualifier(e1.use), Qualifier(e2.use))
            and sub_qualifier(env, Qualifier(e1.kill), Qualifier(e2.kill)))

"""Transitive lookup, saturation, overlap and sub-qualifier checking."""

from __future__ import annotations

from .syntax import Qualifier, TypeEnv, UnboundAtom


def _check_bound(env: TypeEnv, atoms) -> None:
    for a in atoms:
        if not env.binds(a):
            raise UnboundAtom(a)


def expand(env: TypeEnv, atoms: frozenset) -> frozenset:
    """One step of transitive lookup: ``atoms`` plus everything they reach directly."""
    out = set(atoms)
    for a in atoms:
        out |= env.one_step(a)
    return frozenset(out)


def saturate_with_steps(env: TypeEnv, q: Qualifier) -> tuple[Qualifier, int]:
    """Saturate ``q`` and report how many expansions actually changed it."""
    _check_bound(env, q.atoms)
    atoms = q.atoms
    changed = 0
    for _ in range(env.atom_count()):
        nxt = expand(env, atoms)
        if nxt == atoms:
            break
        atoms = nxt
        changed += 1
    return Qualifier(atoms, q.fresh), changed


def saturate(env: TypeEnv, q: Qualifier) -> Qualifier:
    """|env|-fold transitive lookup. The fresh marker is carried through unchanged."""
    return saturate_with_steps(env, q)[0]


def is_saturated(env: TypeEnv, q: Qualifier) -> bool:
    return saturate(env, q) == q


def overlap(env: TypeEnv, p: Qualifier, q: Qualifier) -> Qualifier:
    """``p ⊓ q``: the shared part of both saturations, always fresh-marked."""
    return Qualifier(saturate(env, p).atoms & saturate(env, q).atoms, True)


def grow(env: TypeEnv, q: Qualifier) -> frozenset:
    """Close the right-hand side of a sub-qualifier query under self-absorption.

    A variable ``f`` bound at a non-fresh ``r`` satisfies ``r, f <: f``, so
    once ``f`` is on the right every atom of ``r`` may be absorbed as well.
    """
    grown = set(q.atoms)
    todo = list(q.atoms)
    while todo:
        a = todo.pop()
        r = env.binding_qual(a)
        if r is None or r.fresh:
            continue
        for b in r.atoms:
            if b not in grown:
                grown.add(b)
                todo.append(b)
    return frozenset(grown)


def _reaches_into(env: TypeEnv, a, target: frozenset, visiting: set) -> bool:
    if a in target:
        return True
    if a in visiting:
        return False
    binding = env.binding_qual(a)
    if binding is None:
        # qualifier variables upcast to their bound; locations are sinks
        tb = None if not isinstance(a, str) else env.qvar(a)
        if tb is None or tb.bound.qual.fresh:
            return False
        binding = tb.bound.qual
    elif binding.fresh:
        return False
    visiting.add(a)
    ok = all(_reaches_into(env, b, target, visiting) for b in binding.atoms)
    visiting.discard(a)
    return ok


def sub_qualifier(env: TypeEnv, p: Qualifier, q: Qualifier) -> bool:
    """Algorithmic ``env ⊢ p <: q``."""
    _check_bound(env, p.atoms | q.atoms)
    if p.fresh and not q.fresh:
        return False
    target = grow(env, q)
    return all(_reaches_into(env, a, target, set()) for a in p.atoms)


def unreachable_atoms(env: TypeEnv, p: Qualifier, q: Qualifier) -> frozenset:
    """Atoms of ``p`` that cannot be upcast into ``q`` (diagnostic witness)."""
    target = grow(env, q)
    return frozenset(a for a in p.atoms if not _reaches_into(env, a, target, set()))

"""Reference implementations written independently of the package algorithms.

They work on plain dicts (``name -> (set of atoms, fresh)``) so that they
share no code with ``reachfx.qualifiers``.
"""

from __future__ import annotations

import itertools


def reach(graph: dict, start) -> set:
    """Depth-first closure of one-step reachability."""
    seen, stack = set(start), list(start)
    while stack:
        a = stack.pop()
        for b in graph.get(a, (set(), False))[0]:
            if b not in seen:
                seen.add(b)
                stack.append(b)
    return seen


def compose_defined(graph: dict, kill1: set, use2: set) -> bool:
    return not (reach(graph, kill1) & reach(graph, use2))


def compose(graph: dict, e1: tuple, e2: tuple):
    """``None`` when undefined, else the union record."""
    (u1, k1), (u2, k2) = e1, e2
    if not compose_defined(graph, k1, u2):
        return None
    return (u1 | u2, k1 | k2)


def declarative_subqualifier(graph: dict) -> set:
    """Least relation closed under the qualifier subtyping rules.

    Qualifiers are pairs ``(frozenset atoms, fresh)`` over ``dom(graph)``.
    Rules: inclusion, variable lookup, self absorption, congruence and
    transitivity. Returns the set of related pairs.
    """
    atoms = sorted(graph)
    universe = [(frozenset(c), f)
                for n in range(len(atoms) + 1)
                for c in itertools.combinations(atoms, n)
                for f in (False, True)]
    rel = set()
    for p in universe:
        for q in universe:
            if p[0] <= q[0] and (not p[1] or q[1]):
                rel.add((p, q))
    for x, (q, fresh) in graph.items():
        if not fresh:
            rel.add(((frozenset({x}), False), (frozenset(q), False)))
            rel.add(((frozenset(q) | {x}, False), (frozenset({x}), False)))
    changed = True
    while changed:
        changed = False
        new = set()
        # congruence: p,q1 <: p,q2
        for (q1, q2) in rel:
            for p in universe:
                a = (p[0] | q1[0], p[1] or q1[1])
                b = (p[0] | q2[0], p[1] or q2[1])
                if (a, b) not in rel:
                    new.add((a, b))
        # transitivity
        succ = {}
        for (a, b) in rel:
            succ.setdefault(a, set()).add(b)
        for (a, b) in rel:
            for c in succ.get(b, ()):
                if (a, c) not in rel:
                    new.add((a, c))
        if new:
            rel |= new
            changed = True
    return rel


def all_graphs(atoms=("a", "b", "c"), max_edges=2):
    """Every reachability graph over ``atoms`` with at most ``max_edges`` edges.

    All bindings are fresh-marked, matching variables bound to allocations.
    """
    pairs = [(x, y) for x in atoms for y in atoms]
    for n in range(max_edges + 1):
        for edges in itertools.combinations(pairs, n):
            g = {a: (set(), True) for a in atoms}
            for x, y in edges:
                g[x][0].add(y)
            yield g


def subsets(atoms):
    return [frozenset(c) for n in range(len(atoms) + 1) for c in itertools.combinations(atoms, n)]

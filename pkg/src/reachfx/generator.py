"""Random generation of closed, well-typed programs for soundness testing.

Programs are let-chains over integer references. The generator tracks which
names alias which allocation and which allocations are dead, so every
operation it emits is statically admissible. Each result is re-checked and
regenerated (deterministically) when the checker disagrees.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    EMPTY, FRESH, Abs, App, Assign, Deref, Free, IntLit, IntT, Let, Move, QType, Qualifier,
    Ref, RefNew, TAbs, TApp, Term, TopT, TVar, UnitLit, UnitT, Var,
)
from .typechecker import typecheck


class GenerationExhausted(Exception):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    ref_ops: float = 0.4
    applications: float = 0.3
    leaves: float = 0.3
    max_attempts: int = 20

    def __post_init__(self):
        if min(self.ref_ops, self.applications, self.leaves) < 0:
            raise ValueError("weights must be nonnegative")
        if self.ref_ops + self.applications + self.leaves <= 0:
            raise ValueError("at least one weight must be positive")


INT_REF = Ref(IntT(), EMPTY)
FRESH_INT_REF = QType(INT_REF, FRESH)


def size(t: Term) -> int:
    """Number of term nodes, counting annotations as part of their node."""
    n = 1
    for child in ("fn", "arg", "init", "ref", "target", "value", "rhs", "body"):
        sub = getattr(t, child, None)
        if isinstance(sub, Term):
            n += size(sub)
    return n


@dataclass
class _Cell:
    """One allocation and the names that reach it."""
    alive: bool = True
    holds: Optional[int] = None  # cell id referenced by a nested reference


@dataclass
class _State:
    rng: random.Random
    cells: list = field(default_factory=list)
    names: dict = field(default_factory=dict)      # ref name -> cell id
    funcs: dict = field(default_factory=dict)      # separate function name -> body kind
    closures: dict = field(default_factory=dict)   # closure name -> (cell id, body kind)
    ints: list = field(default_factory=list)
    counter: int = 0

    def fresh(self, stem: str) -> str:
        self.counter += 1
        return f"{stem}{self.counter}"

    def live_refs(self, nested: Optional[bool] = None) -> list:
        out = []
        for n, c in self.names.items():
            cell = self.cells[c]
            if cell.alive and (nested is None or (cell.holds is not None) == nested):
                out.append(n)
        return sorted(out)

    def all_refs(self) -> list:
        return sorted(self.names)

    def kill(self, cell_id: int) -> None:
        self.cells[cell_id].alive = False

    def new_cell(self, holds: Optional[int] = None) -> int:
        self.cells.append(_Cell(True, holds))
        return len(self.cells) - 1

    def int_operand(self) -> Term:
        if self.ints and self.rng.random() < 0.4:
            return Var(self.rng.choice(self.ints))
        return IntLit(self.rng.randint(0, 9))


Stmt = tuple  # (name or "_", rhs)


class _Builder:
    def __init__(self, seed: int, config: GeneratorConfig):
        self.config = config
        self.st = _State(random.Random(seed))

    @property
    def rng(self) -> random.Random:
        return self.st.rng

    # each method returns a list of statements or None when not applicable

    def alloc(self):
        st = self.st
        live_int = st.live_refs(nested=False)
        name = st.fresh("r")
        if live_int and self.rng.random() < 0.25:
            inner = self.rng.choice(live_int)
            st.names[name] = st.new_cell(holds=st.names[inner])
            return [(name, RefNew(Var(inner)))]
        st.names[name] = st.new_cell()
        # a literal: `ref n` would store Int^{n}, which no Ref[Int^{}] parameter accepts
        return [(name, RefNew(IntLit(self.rng.randint(0, 9))))]

    def alias(self):
        st = self.st
        live = st.live_refs()
        if not live:
            return None
        src = self.rng.choice(live)
        name = st.fresh("a")
        st.names[name] = st.names[src]
        return [(name, Var(src))]

    def deref(self):
        st = self.st
        live = st.live_refs()
        if not live:
            return None
        r = self.rng.choice(live)
        cell = st.cells[st.names[r]]
        if cell.holds is None:
            name = st.fresh("n")
            st.ints.append(name)
            return [(name, Deref(Var(r)))]
        name = st.fresh("d")
        st.names[name] = cell.holds
        return [(name, Deref(Var(r)))]

    def assign(self):
        st = self.st
        live = st.live_refs(nested=False)
        if not live:
            return None
        r = self.rng.choice(live)
        return [("_", Assign(Var(r), st.int_operand()))]

    def free(self):
        st = self.st
        refs = st.all_refs()
        if not refs:
            return None
        r = self.rng.choice(refs)
        st.kill(st.names[r])
        return [("_", Free(Var(r)))]

    def move(self):
        st = self.st
        live = st.live_refs()
        if not live:
            return None
        r = self.rng.choice(live)
        cell = st.cells[st.names[r]]
        st.kill(st.names[r])
        name = st.fresh("m")
        st.names[name] = st.new_cell(holds=cell.holds)
        return [(name, Move(Var(r)))]

    def _body(self, z: str, kind: str) -> Term:
        if kind == "read":
            return Deref(Var(z))
        if kind == "write":
            return Assign(Var(z), IntLit(self.rng.randint(0, 9)))
        if kind == "free":
            return Free(Var(z))
        return UnitLit()

    def call(self):
        """Define (or reuse) a capture-free function on integer references and call it."""
        st = self.st
        kind = None
        if st.funcs and self.rng.random() < 0.5:
            f = self.rng.choice(sorted(st.funcs))
            kind = st.funcs[f]
            out = []
        else:
            kind = self.rng.choice(["read", "write", "free", "unit"])
            f = st.fresh("f")
            z = st.fresh("z")
            st.funcs[f] = kind
            out = [(f, Abs(f, z, FRESH_INT_REF, self._body(z, kind)))]
        candidates = st.live_refs(nested=False) if kind != "unit" else [
            n for n in st.all_refs() if st.cells[st.names[n]].holds is None]
        if not candidates:
            return out or None
        r = self.rng.choice(candidates)
        if kind == "free":
            st.kill(st.names[r])
        name = st.fresh("n") if kind == "read" else "_"
        if kind == "read":
            st.ints.append(name)
        return out + [(name, App(Var(f), Var(r)))]

    def closure(self):
        """A thunk capturing a live integer reference, defined and called."""
        st = self.st
        live = st.live_refs(nested=False)
        if st.closures and self.rng.random() < 0.5:
            g = self.rng.choice(sorted(st.closures))
            cell, kind = st.closures[g]
            if not st.cells[cell].alive:
                return None
            out = []
        else:
            if not live:
                return None
            r = self.rng.choice(live)
            cell = st.names[r]
            kind = self.rng.choice(["read", "write", "free"])
            g = st.fresh("g")
            u = st.fresh("u")
            st.closures[g] = (cell, kind)
            out = [(g, Abs(g, u, QType(UnitT(), EMPTY), self._body(r, kind)))]
        if kind == "free":
            st.kill(cell)
        return out + [("_", App(Var(g), UnitLit()))]

    def tapp(self):
        st = self.st
        h, y = st.fresh("h"), st.fresh("y")
        poly = TAbs(h, "X", "x", QType(TopT(), FRESH),
                    Abs(st.fresh("k"), y, QType(TVar("X"), Qualifier.of("x")), Var(y),
                        result=QType(TVar("X"), Qualifier.of("x"))))
        operand = st.int_operand()
        name = st.fresh("n")
        st.ints.append(name)
        return [(name, App(TApp(poly, QType(IntT(), EMPTY)), operand))]

    def leaf(self):
        st = self.st
        if self.rng.random() < 0.5:
            name = st.fresh("n")
            st.ints.append(name)
            return [(name, IntLit(self.rng.randint(0, 9)))]
        return [("_", UnitLit())]

    def pick(self):
        c = self.config
        roll = self.rng.random() * (c.ref_ops + c.applications + c.leaves)
        if roll < c.ref_ops:
            ops = [self.alloc, self.alloc, self.deref, self.assign, self.free, self.move, self.alias]
        elif roll < c.ref_ops + c.applications:
            ops = [self.call, self.call, self.closure, self.closure, self.tapp]
        else:
            ops = [self.leaf]
        return self.rng.choice(ops)

    def final(self) -> Term:
        st = self.st
        live = st.live_refs(nested=False)
        if live and self.rng.random() < 0.5:
            return Deref(Var(self.rng.choice(live)))
        if st.ints and self.rng.random() < 0.5:
            return Var(self.rng.choice(st.ints))
        return UnitLit()

    def build(self, budget: int) -> Term:
        stmts: list = []
        used = 1  # the final expression
        stalls = 0
        while stalls < 8:
            snapshot = _snapshot(self.st)
            produced = self.pick()()
            if not produced:
                stalls += 1
                continue
            cost = sum(size(rhs) + 1 for _, rhs in produced)
            if used + cost > budget:
                _restore(self.st, snapshot)
                stalls += 1
                continue
            stmts.extend(produced)
            used += cost
        body = self.final() if budget > 1 else UnitLit()
        for name, rhs in reversed(stmts):
            body = Let(name, rhs, body)
        return body


def _snapshot(st: _State):
    return ([_Cell(c.alive, c.holds) for c in st.cells], dict(st.names), dict(st.funcs),
            dict(st.closures), list(st.ints))


def _restore(st: _State, snap) -> None:
    st.cells, st.names, st.funcs, st.closures, st.ints = snap


def generate_well_typed(seed: int, budget: int, config: GeneratorConfig = GeneratorConfig()) -> Term:
    """A closed program accepted by the checker, deterministic in ``seed``."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if budget == 1:
        return UnitLit()
    for attempt in range(config.max_attempts):
        t = _Builder(seed * 7919 + attempt, config).build(budget)
        if typecheck(t).ok:
            return t
    raise GenerationExhausted(f"no well-typed program for seed {seed} within budget {budget}")

"""Small-step call-by-value machine with tombstones, idempotent free and move.

Reduction is substitution based. Evaluation order is left to right: function
before argument, assignment target before the assigned value, a binding's
right-hand side before its body.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .syntax import (
    Abs, App, Assign, Deref, Free, Let, Loc, LocLit, Move, QType, RefNew, TAbs, TApp,
    Term, UnitLit, is_value, subst_term, subst_tvar_term, value_qualifier,
)


class StuckReason(str, Enum):
    USE_AFTER_FREE = "UseAfterFree"
    MOVE_OF_DEAD = "MoveOfDead"
    NOT_A_FUNCTION = "NotAFunction"
    NOT_A_LOCATION = "NotALocation"
    UNBOUND_LOCATION = "UnboundLocation"


@dataclass(frozen=True)
class Live:
    value: Term


class _Tombstone:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TOMBSTONE"


TOMBSTONE = _Tombstone()
Cell = Union[Live, _Tombstone]


class Store:
    """Location-indexed cells. Updates return a new store; indices only grow."""

    __slots__ = ("_cells", "next_index")

    def __init__(self, cells: Optional[dict] = None, next_index: Optional[int] = None):
        self._cells = dict(cells or {})
        if next_index is None:
            next_index = max((l.index for l in self._cells), default=-1) + 1
        self.next_index = next_index

    def __contains__(self, loc: Loc) -> bool:
        return loc in self._cells

    def __getitem__(self, loc: Loc) -> Cell:
        return self._cells[loc]

    def __len__(self) -> int:
        return len(self._cells)

    def __iter__(self):
        return iter(sorted(self._cells))

    def __eq__(self, other) -> bool:
        return isinstance(other, Store) and self._cells == other._cells

    def __repr__(self) -> str:
        inner = ", ".join(f"{l}: {'†' if c is TOMBSTONE else c.value}" for l, c in self.items())
        return f"Store({inner})"

    def items(self):
        return [(l, self._cells[l]) for l in sorted(self._cells)]

    def domain(self) -> frozenset:
        return frozenset(self._cells)

    def tombstones(self) -> frozenset:
        return frozenset(l for l, c in self._cells.items() if c is TOMBSTONE)

    def set(self, loc: Loc, cell: Cell) -> "Store":
        cells = dict(self._cells)
        cells[loc] = cell
        return Store(cells, self.next_index)

    def alloc(self, value: Term) -> tuple["Store", Loc]:
        loc = Loc(self.next_index)
        cells = dict(self._cells)
        cells[loc] = Live(value)
        return Store(cells, self.next_index + 1), loc


# -- trace events -------------------------------------------------------------


@dataclass(frozen=True)
class Alloc:
    loc: Loc
    referent: Optional[QType] = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"ALLOC ℓ{self.loc.index}"


@dataclass(frozen=True)
class UseLoc:
    loc: Loc

    def __str__(self) -> str:
        return f"USE ℓ{self.loc.index}"


@dataclass(frozen=True)
class KillLoc:
    loc: Loc

    def __str__(self) -> str:
        return f"KILL ℓ{self.loc.index}"


@dataclass(frozen=True)
class MoveLoc:
    source: Loc
    target: Loc

    def __str__(self) -> str:
        return f"MOVE ℓ{self.source.index} -> ℓ{self.target.index}"


def serialize_trace(events) -> str:
    return "\n".join(str(e) for e in events)


# -- results ------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    store: Store
    term: Term
    events: tuple
    rule: str


@dataclass(frozen=True)
class Done:
    value: Term
    store: Optional[Store] = None
    trace: tuple = ()


@dataclass(frozen=True)
class Stuck:
    reason: StuckReason
    store: Optional[Store] = None
    trace: tuple = ()
    term: Optional[Term] = None

    def __str__(self) -> str:
        return f"Stuck({self.reason.value})"


@dataclass(frozen=True)
class OutOfFuel:
    store: Store
    term: Term
    trace: tuple = ()

    def __str__(self) -> str:
        return "OutOfFuel"


class _StuckSignal(Exception):
    def __init__(self, reason: StuckReason):
        self.reason = reason


RULES = ("beta", "ref", "deref", "assign", "free", "move")


def _location(store: Store, v: Term) -> Loc:
    if not isinstance(v, LocLit):
        raise _StuckSignal(StuckReason.NOT_A_LOCATION)
    if v.loc not in store:
        raise _StuckSignal(StuckReason.UNBOUND_LOCATION)
    return v.loc


def _reduce(store: Store, t: Term) -> tuple:
    """Contract a redex whose immediate subterms are all values."""
    if isinstance(t, App):
        fn, arg = t.fn, t.arg
        if not isinstance(fn, Abs):
            raise _StuckSignal(StuckReason.NOT_A_FUNCTION)
        body = subst_term(fn.body, fn.param, arg, value_qualifier(arg))
        body = subst_term(body, fn.self_name, fn, value_qualifier(fn))
        return store, body, (), "beta"
    if isinstance(t, TApp):
        fn = t.fn
        if not isinstance(fn, TAbs):
            raise _StuckSignal(StuckReason.NOT_A_FUNCTION)
        body = subst_tvar_term(fn.body, fn.tvar, fn.qvar, t.arg)
        body = subst_term(body, fn.self_name, fn, value_qualifier(fn))
        return store, body, (), "beta"
    if isinstance(t, Let):
        return store, subst_term(t.body, t.name, t.rhs, value_qualifier(t.rhs)), (), "beta"
    if isinstance(t, RefNew):
        store, loc = store.alloc(t.init)
        return store, LocLit(loc), (Alloc(loc, t.referent),), "ref"
    if isinstance(t, Deref):
        loc = _location(store, t.ref)
        cell = store[loc]
        if cell is TOMBSTONE:
            raise _StuckSignal(StuckReason.USE_AFTER_FREE)
        return store, cell.value, (UseLoc(loc),), "deref"
    if isinstance(t, Assign):
        loc = _location(store, t.target)
        if store[loc] is TOMBSTONE:
            raise _StuckSignal(StuckReason.USE_AFTER_FREE)
        return store.set(loc, Live(t.value)), UnitLit(), (UseLoc(loc),), "assign"
    if isinstance(t, Free):
        loc = _location(store, t.ref)
        return store.set(loc, TOMBSTONE), UnitLit(), (KillLoc(loc),), "free"
    if isinstance(t, Move):
        loc = _location(store, t.ref)
        cell = store[loc]
        if cell is TOMBSTONE:
            raise _StuckSignal(StuckReason.MOVE_OF_DEAD)
        store, target = store.set(loc, TOMBSTONE).alloc(cell.value)
        return store, LocLit(target), (MoveLoc(loc, target),), "move"
    raise TypeError(f"not a redex: {t!r}")


def _step(store: Store, t: Term) -> tuple:
    # descend into the leftmost non-value immediate subterm of the context grammar
    if isinstance(t, App):
        if not is_value(t.fn):
            s, fn, ev, rule = _step(store, t.fn)
            return s, App(fn, t.arg, span=t.span), ev, rule
        if not is_value(t.arg):
            s, arg, ev, rule = _step(store, t.arg)
            return s, App(t.fn, arg, span=t.span), ev, rule
    elif isinstance(t, Assign):
        if not is_value(t.target):
            s, tgt, ev, rule = _step(store, t.target)
            return s, Assign(tgt, t.value, span=t.span), ev, rule
        if not is_value(t.value):
            s, val, ev, rule = _step(store, t.value)
            return s, Assign(t.target, val, span=t.span), ev, rule
    elif isinstance(t, TApp):
        if not is_value(t.fn):
            s, fn, ev, rule = _step(store, t.fn)
            return s, TApp(fn, t.arg, span=t.span), ev, rule
    elif isinstance(t, Let):
        if not is_value(t.rhs):
            s, rhs, ev, rule = _step(store, t.rhs)
            return s, Let(t.name, rhs, t.body, t.annot, span=t.span), ev, rule
    elif isinstance(t, RefNew):
        if not is_value(t.init):
            s, init, ev, rule = _step(store, t.init)
            return s, RefNew(init, t.referent, span=t.span), ev, rule
    elif isinstance(t, (Deref, Free, Move)):
        if not is_value(t.ref):
            s, ref, ev, rule = _step(store, t.ref)
            return s, type(t)(ref, span=t.span), ev, rule
    else:
        raise TypeError(f"open term: {t!r}")
    return _reduce(store, t)


def step(store: Store, t: Term) -> Union[Step, Done, Stuck]:
    """Perform exactly one reduction, or report a value or a stuck term."""
    if is_value(t):
        return Done(t, store)
    try:
        s, t2, events, rule = _step(store, t)
    except _StuckSignal as sig:
        return Stuck(sig.reason, store, (), t)
    return Step(s, t2, events, rule)


def run(store: Store, t: Term, fuel: int = 10_000) -> Union[Done, Stuck, OutOfFuel]:
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    trace: list = []
    for _ in range(fuel):
        r = step(store, t)
        if isinstance(r, Done):
            return Done(r.value, store, tuple(trace))
        if isinstance(r, Stuck):
            return Stuck(r.reason, store, tuple(trace), t)
        trace.extend(r.events)
        store, t = r.store, r.term
    if is_value(t):
        return Done(t, store, tuple(trace))
    return OutOfFuel(store, t, tuple(trace))


def evaluate(t: Term, fuel: int = 10_000):
    """Run a closed program from the empty store."""
    return run(Store(), t, fuel)

"""Abstract syntax, typing environments and substitution.

Atoms are either term variables (plain ``str``) or store locations (``Loc``).
Every syntax node is an immutable frozen dataclass, so terms and types can be
shared freely and used as dictionary keys.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union


@dataclass(frozen=True, order=True)
class Loc:
    index: int

    def __str__(self) -> str:
        return f"@{self.index}"


Atom = Union[str, Loc]


def atom_key(a: Atom) -> tuple:
    # variables sort before locations, then by name / index
    return (1, a.index, "") if isinstance(a, Loc) else (0, 0, a)


def sorted_atoms(atoms: Iterable[Atom]) -> list:
    return sorted(atoms, key=atom_key)


class UnboundAtom(Exception):
    def __init__(self, atom: Atom):
        super().__init__(f"unbound atom {atom}")
        self.atom = atom


class IllFormedType(Exception):
    pass


# --------------------------------------------------------------------------
# qualifiers and effects


@dataclass(frozen=True)
class Qualifier:
    atoms: frozenset = frozenset()
    fresh: bool = False

    @staticmethod
    def of(*atoms: Atom, fresh: bool = False) -> "Qualifier":
        return Qualifier(frozenset(atoms), fresh)

    def __or__(self, other: "Qualifier") -> "Qualifier":
        return Qualifier(self.atoms | other.atoms, self.fresh or other.fresh)

    def __contains__(self, a: Atom) -> bool:
        return a in self.atoms

    def without_fresh(self) -> "Qualifier":
        return Qualifier(self.atoms, False)

    def with_fresh(self) -> "Qualifier":
        return Qualifier(self.atoms, True)

    def __str__(self) -> str:
        parts = [str(a) for a in sorted_atoms(self.atoms)]
        if self.fresh:
            parts.append("*")
        return "{" + ", ".join(parts) + "}"


EMPTY = Qualifier()
FRESH = Qualifier(frozenset(), True)


def _atom_set_str(atoms: frozenset) -> str:
    return "{" + ", ".join(str(a) for a in sorted_atoms(atoms)) + "}"


@dataclass(frozen=True)
class Effect:
    """A use/kill record. Both components are plain atom sets (never fresh)."""

    use: frozenset = frozenset()
    kill: frozenset = frozenset()

    def atoms(self) -> frozenset:
        return self.use | self.kill

    def is_pure(self) -> bool:
        return not self.use and not self.kill

    def __str__(self) -> str:
        parts = []
        if self.use:
            parts.append(f"u:{_atom_set_str(self.use)}")
        if self.kill:
            parts.append(f"k:{_atom_set_str(self.kill)}")
        return "<" + ", ".join(parts) + ">"


PURE = Effect()


# --------------------------------------------------------------------------
# types


class Type:
    pass


@dataclass(frozen=True)
class UnitT(Type):
    pass


@dataclass(frozen=True)
class IntT(Type):
    pass


@dataclass(frozen=True)
class TopT(Type):
    pass


@dataclass(frozen=True)
class TVar(Type):
    name: str


@dataclass(frozen=True)
class QType:
    ty: Type
    qual: Qualifier = EMPTY


@dataclass(frozen=True)
class Fun(Type):
    self_name: str
    param: str
    domain: QType
    latent: Effect
    codomain: QType


@dataclass(frozen=True)
class Ref(Type):
    referent: Type
    qual: Qualifier = EMPTY


@dataclass(frozen=True)
class All(Type):
    self_name: str
    tvar: str
    qvar: str
    bound: QType
    latent: Effect
    body: QType


def is_tracked(ty: Type) -> bool:
    return not isinstance(ty, (UnitT, IntT))


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Term:
    span: Optional[Span] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class UnitLit(Term):
    pass


@dataclass(frozen=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Abs(Term):
    self_name: str
    param: str
    domain: QType
    body: Term
    latent: Optional[Effect] = None
    result: Optional[QType] = None
    capture: Optional[Qualifier] = None


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class RefNew(Term):
    init: Term
    referent: Optional[QType] = None


@dataclass(frozen=True)
class Deref(Term):
    ref: Term


@dataclass(frozen=True)
class Assign(Term):
    target: Term
    value: Term


@dataclass(frozen=True)
class TAbs(Term):
    self_name: str
    tvar: str
    qvar: str
    bound: QType
    body: Term
    capture: Optional[Qualifier] = None


@dataclass(frozen=True)
class TApp(Term):
    fn: Term
    arg: QType


@dataclass(frozen=True)
class Free(Term):
    ref: Term


@dataclass(frozen=True)
class Move(Term):
    ref: Term


@dataclass(frozen=True)
class LocLit(Term):
    loc: Loc


@dataclass(frozen=True)
class Let(Term):
    """``val name = rhs; body``; sequencing ``a; b`` is ``Let("_", a, b)``."""

    name: str
    rhs: Term
    body: Term
    annot: Optional[QType] = None


VALUE_TYPES = (UnitLit, IntLit, Abs, TAbs, LocLit)


def is_value(t: Term) -> bool:
    return isinstance(t, VALUE_TYPES)


# --------------------------------------------------------------------------
# environments


@dataclass(frozen=True)
class TermBinding:
    name: str
    qtype: QType


@dataclass(frozen=True)
class TypeBinding:
    tvar: str
    qvar: str
    bound: QType


@dataclass(frozen=True)
class LocBinding:
    loc: Loc
    referent: QType


class TypeEnv:
    """Ordered, persistent typing environment.

    Holds term bindings, bounded type-variable bindings and (for runtime
    configurations) the store typing's location bindings.
    """

    __slots__ = ("bindings", "_terms", "_tvars", "_qvars", "_locs")

    def __init__(self, bindings: tuple = ()):
        self.bindings = tuple(bindings)
        self._terms: dict = {}
        self._tvars: dict = {}
        self._qvars: dict = {}
        self._locs: dict = {}
        for b in self.bindings:
            self._index(b)

    def _index(self, b) -> None:
        if isinstance(b, TermBinding):
            self._terms[b.name] = b.qtype
        elif isinstance(b, TypeBinding):
            self._tvars[b.tvar] = b
            self._qvars[b.qvar] = b
        else:
            self._locs[b.loc] = b.referent

    def _extend(self, b) -> "TypeEnv":
        env = TypeEnv.__new__(TypeEnv)
        env.bindings = self.bindings + (b,)
        env._terms = dict(self._terms)
        env._tvars = dict(self._tvars)
        env._qvars = dict(self._qvars)
        env._locs = dict(self._locs)
        env._index(b)
        return env

    def with_term(self, name: str, qtype: QType) -> "TypeEnv":
        return self._extend(TermBinding(name, qtype))

    def with_tvar(self, tvar: str, qvar: str, bound: QType) -> "TypeEnv":
        return self._extend(TypeBinding(tvar, qvar, bound))

    def with_loc(self, loc: Loc, referent: QType) -> "TypeEnv":
        return self._extend(LocBinding(loc, referent))

    def term(self, name: str) -> Optional[QType]:
        return self._terms.get(name)

    def tvar(self, name: str) -> Optional[TypeBinding]:
        return self._tvars.get(name)

    def qvar(self, name: str) -> Optional[TypeBinding]:
        return self._qvars.get(name)

    def loc(self, loc: Loc) -> Optional[QType]:
        return self._locs.get(loc)

    def binds(self, a: Atom) -> bool:
        if isinstance(a, Loc):
            return a in self._locs
        return a in self._terms or a in self._qvars

    def names(self) -> set:
        return set(self._terms) | set(self._tvars) | set(self._qvars)

    def locations(self) -> frozenset:
        return frozenset(self._locs)

    def atom_count(self) -> int:
        return len(self._terms) + len(self._qvars) + len(self._locs)

    def one_step(self, a: Atom) -> frozenset:
        """Atoms directly reachable from ``a``.

        A variable reaches the atoms of its binding qualifier; a qualifier
        variable reaches the atoms of its bound. Locations are sinks: the
        value of a location is the location itself.
        """
        if isinstance(a, Loc):
            if a not in self._locs:
                raise UnboundAtom(a)
            return frozenset()
        if a in self._terms:
            return self._terms[a].qual.atoms
        if a in self._qvars:
            return self._qvars[a].bound.qual.atoms
        raise UnboundAtom(a)

    def binding_qual(self, a: Atom) -> Optional[Qualifier]:
        """The qualifier an atom is bound at (``None`` for locations)."""
        if isinstance(a, Loc):
            if a not in self._locs:
                raise UnboundAtom(a)
            return None
        if a in self._terms:
            return self._terms[a].qual
        if a in self._qvars:
            return None
        raise UnboundAtom(a)

    def __len__(self) -> int:
        return len(self.bindings)

    def __repr__(self) -> str:
        return f"TypeEnv({list(self.bindings)!r})"


# --------------------------------------------------------------------------
# fresh names

_counter = itertools.count()


def fresh_name(base: str, avoid: Iterable[str] = ()) -> str:
    avoid = set(avoid)
    stem = base.split("'")[0] or "v"
    while True:
        cand = f"{stem}'{next(_counter)}"
        if cand not in avoid:
            return cand


# --------------------------------------------------------------------------
# free atoms / type variables


def free_atoms_qtype(q: QType) -> set:
    return set(q.qual.atoms) | free_atoms_type(q.ty)


def free_atoms_effect(e: Effect) -> set:
    return set(e.use | e.kill)


def free_atoms_type(ty: Type) -> set:
    if isinstance(ty, Ref):
        return free_atoms_type(ty.referent) | set(ty.qual.atoms)
    if isinstance(ty, Fun):
        inner = free_atoms_qtype(ty.codomain) | free_atoms_effect(ty.latent)
        return free_atoms_qtype(ty.domain) | (inner - {ty.self_name, ty.param})
    if isinstance(ty, All):
        inner = free_atoms_qtype(ty.body) | free_atoms_effect(ty.latent)
        return free_atoms_qtype(ty.bound) | (inner - {ty.self_name, ty.qvar})
    return set()


def free_type_vars(ty: Type) -> set:
    if isinstance(ty, TVar):
        return {ty.name}
    if isinstance(ty, Ref):
        return free_type_vars(ty.referent)
    if isinstance(ty, Fun):
        return free_type_vars(ty.domain.ty) | free_type_vars(ty.codomain.ty)
    if isinstance(ty, All):
        return free_type_vars(ty.bound.ty) | (free_type_vars(ty.body.ty) - {ty.tvar})
    return set()


def _annot_atoms(q: Optional[QType]) -> set:
    return free_atoms_qtype(q) if q is not None else set()


def free_atoms(t: Term) -> set:
    """Free variables and locations of a term, including annotation qualifiers."""
    return _free(t, annotations=True)


def free_occurrences(t: Term) -> set:
    """Free variables and locations occurring as terms (annotations ignored)."""
    return _free(t, annotations=False)


def _free(t: Term, annotations: bool) -> set:
    rec = lambda s: _free(s, annotations)  # noqa: E731
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, LocLit):
        return {t.loc}
    if isinstance(t, (UnitLit, IntLit)):
        return set()
    if isinstance(t, Abs):
        inner = rec(t.body)
        if annotations:
            inner |= _annot_atoms(t.result)
            if t.latent is not None:
                inner |= free_atoms_effect(t.latent)
        out = inner - {t.self_name, t.param}
        if annotations:
            out |= _annot_atoms(t.domain)
            if t.capture is not None:
                out |= set(t.capture.atoms)
        return out
    if isinstance(t, TAbs):
        out = rec(t.body) - {t.self_name, t.qvar}
        if annotations:
            out |= _annot_atoms(t.bound)
            if t.capture is not None:
                out |= set(t.capture.atoms)
        return out
    if isinstance(t, App):
        return rec(t.fn) | rec(t.arg)
    if isinstance(t, Assign):
        return rec(t.target) | rec(t.value)
    if isinstance(t, TApp):
        return rec(t.fn) | (_annot_atoms(t.arg) if annotations else set())
    if isinstance(t, RefNew):
        return rec(t.init) | (_annot_atoms(t.referent) if annotations else set())
    if isinstance(t, (Deref, Free, Move)):
        return rec(t.ref)
    if isinstance(t, Let):
        out = rec(t.rhs) | (rec(t.body) - {t.name})
        if annotations:
            out |= _annot_atoms(t.annot)
        return out
    raise TypeError(f"not a term: {t!r}")


# --------------------------------------------------------------------------
# qualifier substitution


def subst_qualifier(q: Qualifier, x: Atom, p: Qualifier) -> Qualifier:
    if x not in q.atoms:
        return q
    return Qualifier((q.atoms - {x}) | p.atoms, q.fresh or p.fresh)


def subst_effect(e: Effect, x: Atom, p: Qualifier) -> Effect:
    """Effect components are never fresh, so ``p``'s marker is dropped."""
    def sub(s: frozenset) -> frozenset:
        return (s - {x}) | p.atoms if x in s else s
    return Effect(sub(e.use), sub(e.kill))


def _rename_atom_effect(e: Effect, old: str, new: str) -> Effect:
    return subst_effect(e, old, Qualifier.of(new))


def subst_qual_in_qtype(q: QType, x: Atom, p: Qualifier) -> QType:
    return QType(subst_qual_in_type(q.ty, x, p), subst_qualifier(q.qual, x, p))


def subst_qual_in_type(ty: Type, x: Atom, p: Qualifier) -> Type:
    """Replace qualifier atom ``x`` by ``p`` everywhere in ``ty`` (capture-avoiding)."""
    if isinstance(ty, Ref):
        return Ref(subst_qual_in_type(ty.referent, x, p), subst_qualifier(ty.qual, x, p))
    if isinstance(ty, Fun):
        dom = subst_qual_in_qtype(ty.domain, x, p)
        if x in (ty.self_name, ty.param):
            return replace(ty, domain=dom)
        ty = _avoid_fun_capture(ty, p.atoms)
        return Fun(ty.self_name, ty.param, dom,
                   subst_effect(ty.latent, x, p),
                   subst_qual_in_qtype(ty.codomain, x, p))
    if isinstance(ty, All):
        bound = subst_qual_in_qtype(ty.bound, x, p)
        if x in (ty.self_name, ty.qvar):
            return replace(ty, bound=bound)
        ty = _avoid_all_capture(ty, p.atoms)
        return All(ty.self_name, ty.tvar, ty.qvar, bound,
                   subst_effect(ty.latent, x, p),
                   subst_qual_in_qtype(ty.body, x, p))
    return ty


def _avoid_fun_capture(ty: Fun, danger: frozenset) -> Fun:
    for binder in (ty.self_name, ty.param):
        if binder in danger:
            new = fresh_name(binder, danger | {ty.self_name, ty.param})
            ty = rename_fun_binder(ty, binder, new)
    return ty


def _avoid_all_capture(ty: All, danger: frozenset) -> All:
    for binder in (ty.self_name, ty.qvar):
        if binder in danger:
            new = fresh_name(binder, danger | {ty.self_name, ty.qvar})
            ty = rename_all_binder(ty, binder, new)
    return ty


def rename_fun_binder(ty: Fun, old: str, new: str) -> Fun:
    sub = Qualifier.of(new)
    return Fun(new if ty.self_name == old else ty.self_name,
               new if ty.param == old else ty.param,
               ty.domain,
               subst_effect(ty.latent, old, sub),
               subst_qual_in_qtype(ty.codomain, old, sub))


def rename_all_binder(ty: All, old: str, new: str) -> All:
    sub = Qualifier.of(new)
    return All(new if ty.self_name == old else ty.self_name, ty.tvar,
               new if ty.qvar == old else ty.qvar,
               ty.bound,
               subst_effect(ty.latent, old, sub),
               subst_qual_in_qtype(ty.body, old, sub))


def rename_all_tvar(ty: All, new: str) -> All:
    return replace(ty, tvar=new, body=QType(subst_tvar(ty.body.ty, ty.tvar, TVar(new)), ty.body.qual))


# --------------------------------------------------------------------------
# type-variable substitution


def subst_tvar(ty: Type, X: str, arg: Type) -> Type:
    """Replace type variable ``X`` by ``arg`` (carrier only)."""
    if isinstance(ty, TVar):
        return arg if ty.name == X else ty
    if isinstance(ty, Ref):
        return Ref(subst_tvar(ty.referent, X, arg), ty.qual)
    if isinstance(ty, Fun):
        return replace(ty, domain=QType(subst_tvar(ty.domain.ty, X, arg), ty.domain.qual),
                       codomain=QType(subst_tvar(ty.codomain.ty, X, arg), ty.codomain.qual))
    if isinstance(ty, All):
        bound = QType(subst_tvar(ty.bound.ty, X, arg), ty.bound.qual)
        if ty.tvar == X:
            return replace(ty, bound=bound)
        if ty.tvar in free_type_vars(arg):
            ty = rename_all_tvar(ty, fresh_name(ty.tvar, free_type_vars(arg)))
        return replace(ty, bound=bound, body=QType(subst_tvar(ty.body.ty, X, arg), ty.body.qual))
    return ty


def subst_type(q: QType, X: str, x: str, arg: QType) -> QType:
    """``q[arg.ty / X, arg.qual / x]``: instantiate a bounded type variable."""
    return subst_qual_in_qtype(QType(subst_tvar(q.ty, X, arg.ty), q.qual), x, arg.qual)


# --------------------------------------------------------------------------
# term substitution


def _sq(q: Optional[QType], x: Atom, p: Qualifier) -> Optional[QType]:
    return None if q is None else subst_qual_in_qtype(q, x, p)


def subst_term(t: Term, x: str, repl: Term, qual: Qualifier) -> Term:
    """Replace free ``Var(x)`` by ``repl`` and qualifier atom ``x`` by ``qual``.

    ``repl`` must be closed up to locations, or a variable fresh for ``t``;
    in both cases no binder of ``t`` can capture it.
    """
    def go(s: Term) -> Term:
        return subst_term(s, x, repl, qual)

    if isinstance(t, Var):
        return repl if t.name == x else t
    if isinstance(t, (UnitLit, IntLit, LocLit)):
        return t
    if isinstance(t, Abs):
        domain = subst_qual_in_qtype(t.domain, x, qual)
        capture = None if t.capture is None else subst_qualifier(t.capture, x, qual)
        if x in (t.self_name, t.param):
            return replace(t, domain=domain, capture=capture)
        latent = None if t.latent is None else subst_effect(t.latent, x, qual)
        return replace(t, domain=domain, capture=capture, latent=latent,
                       result=_sq(t.result, x, qual), body=go(t.body))
    if isinstance(t, TAbs):
        bound = subst_qual_in_qtype(t.bound, x, qual)
        capture = None if t.capture is None else subst_qualifier(t.capture, x, qual)
        if x in (t.self_name, t.qvar):
            return replace(t, bound=bound, capture=capture)
        return replace(t, bound=bound, capture=capture, body=go(t.body))
    if isinstance(t, App):
        return replace(t, fn=go(t.fn), arg=go(t.arg))
    if isinstance(t, Assign):
        return replace(t, target=go(t.target), value=go(t.value))
    if isinstance(t, TApp):
        return replace(t, fn=go(t.fn), arg=subst_qual_in_qtype(t.arg, x, qual))
    if isinstance(t, RefNew):
        return replace(t, init=go(t.init), referent=_sq(t.referent, x, qual))
    if isinstance(t, Deref):
        return replace(t, ref=go(t.ref))
    if isinstance(t, Free):
        return replace(t, ref=go(t.ref))
    if isinstance(t, Move):
        return replace(t, ref=go(t.ref))
    if isinstance(t, Let):
        rhs = go(t.rhs)
        annot = _sq(t.annot, x, qual)
        body = t.body if t.name == x else go(t.body)
        return replace(t, rhs=rhs, body=body, annot=annot)
    raise TypeError(f"not a term: {t!r}")


def rename_var(t: Term, old: str, new: str) -> Term:
    return subst_term(t, old, Var(new), Qualifier.of(new))


def _st(q: Optional[QType], X: str, x: str, arg: QType) -> Optional[QType]:
    return None if q is None else subst_type(q, X, x, arg)


def subst_tvar_term(t: Term, X: str, x: str, arg: QType) -> Term:
    """Instantiate type variable ``X`` (with qualifier variable ``x``) inside annotations."""
    def go(s: Term) -> Term:
        return subst_tvar_term(s, X, x, arg)

    if isinstance(t, (Var, UnitLit, IntLit, LocLit)):
        return t
    if isinstance(t, Abs):
        domain = subst_type(t.domain, X, x, arg)
        capture = None if t.capture is None else subst_qualifier(t.capture, x, arg.qual)
        if x in (t.self_name, t.param):
            return replace(t, domain=domain, capture=capture)
        latent = None if t.latent is None else subst_effect(t.latent, x, arg.qual)
        return replace(t, domain=domain, capture=capture, latent=latent,
                       result=_st(t.result, X, x, arg), body=go(t.body))
    if isinstance(t, TAbs):
        bound = subst_type(t.bound, X, x, arg)
        capture = None if t.capture is None else subst_qualifier(t.capture, x, arg.qual)
        if t.tvar == X or x in (t.self_name, t.qvar):
            return replace(t, bound=bound, capture=capture)
        return replace(t, bound=bound, capture=capture, body=go(t.body))
    if isinstance(t, App):
        return replace(t, fn=go(t.fn), arg=go(t.arg))
    if isinstance(t, Assign):
        return replace(t, target=go(t.target), value=go(t.value))
    if isinstance(t, TApp):
        return replace(t, fn=go(t.fn), arg=subst_type(t.arg, X, x, arg))
    if isinstance(t, RefNew):
        return replace(t, init=go(t.init), referent=_st(t.referent, X, x, arg))
    if isinstance(t, (Deref, Free, Move)):
        return replace(t, ref=go(t.ref))
    if isinstance(t, Let):
        body = t.body if t.name == x else go(t.body)
        return replace(t, rhs=go(t.rhs), body=body, annot=_st(t.annot, X, x, arg))
    raise TypeError(f"not a term: {t!r}")


def value_qualifier(v: Term) -> Qualifier:
    """The qualifier a runtime value stands for when substituted into annotations."""
    if isinstance(v, LocLit):
        return Qualifier.of(v.loc)
    return Qualifier(frozenset(a for a in free_atoms(v) if isinstance(a, Loc)))


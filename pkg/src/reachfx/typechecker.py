"""Syntax-directed inference of qualified types and use/kill effects.

``infer(env, phi, t)`` returns the minimal qualified type and effect of ``t``
under observation ``phi``, or a ``Diagnostic`` with a stable error code.

``val x = t1; t2`` is typed as the application of an anonymous function to
``t1``: the plain application rule when ``t1`` is not fresh, the fresh
application rule otherwise. Subsumption is used only at checking positions
(arguments, assignment right-hand sides, annotations).

Inference also threads the set of atoms already killed earlier in the same
activation, so a use-after-kill is reported at the offending use rather
than at the enclosing binder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .effects import ComposeFailure, compose_conflict, mk_kill, mk_move, mk_use, seq_compose
from .qualifiers import overlap, sub_qualifier, unreachable_atoms
from .subtyping import check_well_formed, effect_sub, promote, sub_type
from .syntax import (
    EMPTY, FRESH, PURE, Abs, All, App, Assign, Atom, Deref, Effect, Free, Fun,
    IllFormedType, IntLit, IntT, Let, Loc, LocLit, Move, QType, Qualifier, Ref,
    RefNew, Span, TAbs, TApp, Term, TVar, TypeEnv, UnboundAtom, UnitLit, UnitT, Var,
    free_atoms, free_atoms_qtype, free_atoms_type, free_occurrences, fresh_name, is_tracked,
    rename_all_binder, rename_all_tvar, rename_fun_binder, rename_var,
    sorted_atoms, subst_effect, subst_qual_in_qtype, subst_type, subst_tvar_term,
)

E_UNBOUND = "E-UNBOUND"
E_OBS = "E-OBS"
E_QUAL_MISMATCH = "E-QUAL-MISMATCH"
E_QUAL_SUB = "E-QUAL-SUB"
E_SEPARATION = "E-SEPARATION"
E_USE_AFTER_KILL = "E-USE-AFTER-KILL"
E_FRESH_ESCAPE_KILL = "E-FRESH-ESCAPE-KILL"
E_REF_FRESH = "E-REF-FRESH"
E_TYPE_MISMATCH = "E-TYPE-MISMATCH"

ERROR_CODES = (
    E_UNBOUND, E_OBS, E_QUAL_MISMATCH, E_QUAL_SUB, E_SEPARATION,
    E_USE_AFTER_KILL, E_FRESH_ESCAPE_KILL, E_REF_FRESH, E_TYPE_MISMATCH,
)


def display_atom(a: Atom) -> str:
    # binders renamed to avoid shadowing carry a primed suffix
    return str(a) if isinstance(a, Loc) else a.split("'")[0]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    span: Optional[Span]
    message: str
    witness: frozenset = frozenset()

    def witness_names(self) -> list:
        return [display_atom(a) for a in sorted_atoms(self.witness)]

    def render(self) -> str:
        where = str(self.span) if self.span else "?:?"
        return f"{self.code} {where} {self.message}"


@dataclass(frozen=True)
class Verdict:
    qtype: Optional[QType] = None
    effect: Optional[Effect] = None
    diagnostic: Optional[Diagnostic] = None

    @property
    def ok(self) -> bool:
        return self.diagnostic is None


class TypeCheckError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.render())
        self.diagnostic = diagnostic


def _fail(code: str, t: Term, message: str, witness=frozenset()):
    raise TypeCheckError(Diagnostic(code, t.span, message, frozenset(witness)))


def _names(atoms) -> str:
    return "{" + ", ".join(display_atom(a) for a in sorted_atoms(atoms)) + "}"


def check_app(env: TypeEnv, phi: frozenset, fun: Fun, fun_qual: Qualifier,
              arg_type, arg_qual: Qualifier, span: Optional[Span] = None) -> Optional[Diagnostic]:
    """Check an argument against a function's declared domain.

    Without a fresh marker in the domain the argument qualifier must upcast
    into it. With one, only the overlap between argument and function has to
    be covered by the domain (separation).
    """
    domain = fun.domain
    if not sub_type(env, arg_type, domain.ty):
        return Diagnostic(E_TYPE_MISMATCH, span, "argument type does not match the parameter type")
    if not domain.qual.fresh:
        if arg_qual.fresh:
            return Diagnostic(E_QUAL_SUB, span,
                              "fresh argument passed to a parameter that does not accept fresh values")
        if not sub_qualifier(env, arg_qual, domain.qual):
            missing = unreachable_atoms(env, arg_qual, domain.qual)
            return Diagnostic(E_QUAL_SUB, span,
                              f"argument qualifier {_names(arg_qual.atoms)} is not a subqualifier of "
                              f"{_names(domain.qual.atoms)}", missing)
        return None
    shared = overlap(env, arg_qual, fun_qual)
    if not sub_qualifier(env, shared, domain.qual):
        witness = unreachable_atoms(env, shared, domain.qual)
        return Diagnostic(E_SEPARATION, span,
                          f"argument overlaps with the function on {_names(witness)}", witness)
    return None


class _Checker:
    def require_bound(self, env: TypeEnv, atoms, t: Term) -> None:
        for a in atoms:
            if not env.binds(a):
                _fail(E_UNBOUND, t, f"unbound name {display_atom(a)}", {a})

    def well_formed(self, env: TypeEnv, q: QType, t: Term) -> None:
        try:
            check_well_formed(env, q.ty)
        except IllFormedType as exc:
            _fail(E_UNBOUND, t, str(exc))
        self.require_bound(env, free_atoms_qtype(q), t)

    def require_observed(self, phi: frozenset, atoms, t: Term, what: str) -> None:
        hidden = frozenset(a for a in atoms if a not in phi)
        if hidden:
            _fail(E_OBS, t, f"{what} {_names(hidden)} not observable here", hidden)

    def require_sub(self, env: TypeEnv, actual: QType, expected: QType, t: Term, qual_code: str,
                    what: str) -> None:
        if not sub_type(env, actual.ty, expected.ty):
            _fail(E_TYPE_MISMATCH, t, f"{what}: type mismatch")
        if not sub_qualifier(env, actual.qual, expected.qual):
            missing = unreachable_atoms(env, actual.qual, expected.qual)
            _fail(qual_code, t, f"{what}: qualifier {actual.qual} is not a subqualifier of "
                                f"{expected.qual}", missing)

    def flow(self, env: TypeEnv, killed: frozenset, eff: Effect, t: Term) -> None:
        conflict = compose_conflict(env, mk_kill(killed), eff)
        if conflict:
            _fail(E_USE_AFTER_KILL, t, f"use of killed resource {_names(conflict)}", conflict)

    def seq(self, env: TypeEnv, t: Term, *effects: Effect) -> Effect:
        out = PURE
        for e in effects:
            try:
                out = seq_compose(env, out, e)
            except ComposeFailure as exc:
                _fail(E_USE_AFTER_KILL, t, f"use of killed resource {_names(exc.atoms)}", exc.atoms)
        return out

    def expect_ref(self, env: TypeEnv, q: QType, t: Term) -> Ref:
        ty = promote(env, q.ty)
        if not isinstance(ty, Ref):
            _fail(E_TYPE_MISMATCH, t, "expected a reference")
        return ty

    # ------------------------------------------------------------------

    def infer(self, env: TypeEnv, phi: frozenset, t: Term, killed: frozenset) -> tuple[QType, Effect]:
        method = getattr(self, "infer_" + type(t).__name__)
        try:
            return method(env, phi, t, killed)
        except UnboundAtom as exc:
            _fail(E_UNBOUND, t, f"unbound name {display_atom(exc.atom)}", {exc.atom})
        except IllFormedType as exc:
            _fail(E_UNBOUND, t, str(exc))

    def infer_UnitLit(self, env, phi, t, killed):
        return QType(UnitT(), EMPTY), PURE

    def infer_IntLit(self, env, phi, t, killed):
        return QType(IntT(), EMPTY), PURE

    def infer_Var(self, env, phi, t: Var, killed):
        q = env.term(t.name)
        if q is None:
            _fail(E_UNBOUND, t, f"unbound variable {display_atom(t.name)}", {t.name})
        self.require_observed(phi, {t.name}, t, "variable")
        return QType(q.ty, Qualifier.of(t.name)), PURE

    def infer_LocLit(self, env, phi, t: LocLit, killed):
        r = env.loc(t.loc)
        if r is None:
            _fail(E_UNBOUND, t, f"unbound location {t.loc}", {t.loc})
        self.require_observed(phi, {t.loc}, t, "location")
        return QType(Ref(r.ty, r.qual), Qualifier.of(t.loc)), PURE

    def infer_RefNew(self, env, phi, t: RefNew, killed):
        q, e = self.infer(env, phi, t.init, killed)
        if t.referent is not None:
            self.well_formed(env, t.referent, t)
            self.require_sub(env, q, t.referent, t, E_QUAL_SUB, "allocation annotation")
            self.require_observed(phi, t.referent.qual.atoms, t, "annotation")
            q = t.referent
        if q.qual.fresh:
            _fail(E_REF_FRESH, t, "cannot store a fresh value in a new reference")
        return QType(Ref(q.ty, q.qual), FRESH), e

    def infer_Deref(self, env, phi, t: Deref, killed):
        q, e = self.infer(env, phi, t.ref, killed)
        ref = self.expect_ref(env, q, t)
        self.require_observed(phi, ref.qual.atoms, t, "referent")
        own = mk_use(q.qual)
        self.flow(env, killed | e.kill, own, t)
        return QType(ref.referent, ref.qual), self.seq(env, t, e, own)

    def infer_Assign(self, env, phi, t: Assign, killed):
        q1, e1 = self.infer(env, phi, t.target, killed)
        ref = self.expect_ref(env, q1, t)
        q2, e2 = self.infer(env, phi, t.value, killed | e1.kill)
        self.require_sub(env, q2, QType(ref.referent, ref.qual), t, E_QUAL_MISMATCH,
                         "referent qualifier mismatch")
        own = mk_use(q1.qual)
        self.flow(env, killed | e1.kill | e2.kill, own, t)
        return QType(UnitT(), EMPTY), self.seq(env, t, e1, e2, own)

    def infer_Free(self, env, phi, t: Free, killed):
        q, e = self.infer(env, phi, t.ref, killed)
        self.expect_ref(env, q, t)
        return QType(UnitT(), EMPTY), self.seq(env, t, e, mk_kill(q.qual))

    def infer_Move(self, env, phi, t: Move, killed):
        q, e = self.infer(env, phi, t.ref, killed)
        ref = self.expect_ref(env, q, t)
        own = mk_move(q.qual)
        self.flow(env, killed | e.kill, own, t)
        return QType(Ref(ref.referent, ref.qual.without_fresh()), FRESH), self.seq(env, t, e, own)

    # -- abstractions -----------------------------------------------------

    def _capture(self, env: TypeEnv, phi: frozenset, body: Term, binders: set,
                 declared: Optional[Qualifier], t: Term,
                 extra: frozenset = frozenset()) -> tuple[Qualifier, frozenset]:
        """Capture qualifier and the body's observation filter (minus binders)."""
        occ = free_occurrences(body) - binders
        tracked, untracked = set(), set()
        for a in occ:
            if isinstance(a, Loc):
                tracked.add(a)
                continue
            b = env.term(a)
            if b is None:
                continue  # reported as unbound inside the body
            (tracked if is_tracked(b.ty) else untracked).add(a)
        if declared is not None:
            self.require_bound(env, declared.atoms, t)
            outside = frozenset(a for a in tracked if a not in declared.atoms)
            if outside:
                _fail(E_QUAL_SUB, t, f"captured {_names(outside)} missing from the declared capture set",
                      outside)
            self.require_observed(phi, declared.atoms, t, "captured")
            capture = declared.without_fresh()
        else:
            # unobservable captures stay out of the body filter and fail at their use
            capture = Qualifier(frozenset(a for a in tracked if a in phi))
        # qualifier variables are not resources, but annotations may name them
        qvars = frozenset(a for a in free_atoms(body) | extra
                          if isinstance(a, str) and env.qvar(a) is not None and a in phi)
        body_phi = capture.atoms | frozenset(a for a in untracked if a in phi) | qvars
        return capture, body_phi

    def _fresh_binder(self, env: TypeEnv, name: str, body_names: set) -> str:
        if name in env.names() or name in body_names:
            return fresh_name(name, env.names() | body_names)
        return name

    def infer_Abs(self, env, phi, t: Abs, killed):
        self.well_formed(env, t.domain, t)
        annotated = set(free_atoms_qtype(t.domain))
        if t.result is not None:
            annotated |= free_atoms_qtype(t.result)
        if t.latent is not None:
            annotated |= t.latent.use | t.latent.kill
        capture, body_phi = self._capture(env, phi, t.body, {t.self_name, t.param}, t.capture, t,
                                          frozenset(annotated))
        body, latent_ann, result_ann = t.body, t.latent, t.result
        f, x = t.self_name, t.param
        if x == f:
            _fail(E_TYPE_MISMATCH, t, "self and parameter names must differ")
        for old in (f, x):
            if old in env.names():
                new = fresh_name(old, env.names())
                body = rename_var(body, old, new)
                sub = Qualifier.of(new)
                if latent_ann is not None:
                    latent_ann = subst_effect(latent_ann, old, sub)
                if result_ann is not None:
                    result_ann = subst_qual_in_qtype(result_ann, old, sub)
                f, x = (new, x) if old == f else (f, new)
        inner = env
        if f in free_occurrences(body):
            if result_ann is None:
                _fail(E_TYPE_MISMATCH, t, "recursive functions need a result annotation")
            latent = latent_ann if latent_ann is not None else PURE
            inner = inner.with_term(f, QType(Fun(f, x, t.domain, latent, result_ann), capture))
        inner = inner.with_term(x, t.domain)
        body_phi = body_phi | {x, f}
        q, e = self.infer(inner, body_phi, body, frozenset())
        if result_ann is not None:
            self.well_formed(inner, result_ann, t)
            self.require_sub(inner, q, result_ann, t, E_QUAL_SUB, "result annotation")
            self.require_observed(body_phi, result_ann.qual.atoms, t, "result annotation")
            q = result_ann
        if latent_ann is not None:
            self.require_bound(inner, latent_ann.use | latent_ann.kill, t)
            if not effect_sub(inner, e, latent_ann):
                _fail(E_QUAL_SUB, t, f"body effect {e} exceeds the declared effect {latent_ann}")
            e = latent_ann
        return QType(Fun(f, x, t.domain, e, q), capture), PURE

    def infer_TAbs(self, env, phi, t: TAbs, killed):
        self.well_formed(env, t.bound, t)
        capture, body_phi = self._capture(env, phi, t.body, {t.self_name, t.qvar}, t.capture, t)
        body = t.body
        f, X, x = t.self_name, t.tvar, t.qvar
        if f in free_occurrences(body):
            _fail(E_TYPE_MISMATCH, t, "recursive type abstractions are not supported")
        if x in env.names() or x == f:
            new = fresh_name(x, env.names() | {f})
            body = rename_var(body, x, new)
            x = new
        if X in env.names():
            new = fresh_name(X, env.names())
            body = subst_tvar_term(body, X, x, QType(TVar(new), Qualifier.of(x)))
            X = new
        inner = env.with_tvar(X, x, t.bound)
        q, e = self.infer(inner, body_phi | {x, f}, body, frozenset())
        return QType(All(f, X, x, t.bound, e, q), capture), PURE

    # -- eliminations -----------------------------------------------------

    def _result_scope(self, phi, r: Qualifier, binders: set, t: Term) -> None:
        outside = frozenset(a for a in r.atoms if a not in phi and a not in binders)
        if outside:
            _fail(E_OBS, t, f"result reaches {_names(outside)} which is not observable here", outside)

    def infer_App(self, env, phi, t: App, killed):
        qf, e1 = self.infer(env, phi, t.fn, killed)
        fun = promote(env, qf.ty)
        if not isinstance(fun, Fun):
            _fail(E_TYPE_MISMATCH, t, "applying a non-function")
        qa, e2 = self.infer(env, phi, t.arg, killed | e1.kill)
        q, p = qf.qual, qa.qual
        danger = env.names() | set(p.atoms) | set(q.atoms)
        for old in (fun.self_name, fun.param):
            if old in danger:
                fun = rename_fun_binder(fun, old, fresh_name(old, danger | {fun.self_name, fun.param}))
        diag = check_app(env, phi, fun, q, qa.ty, p, t.span)
        if diag is not None:
            raise TypeCheckError(diag)
        f, x = fun.self_name, fun.param
        U, r, e3 = fun.codomain.ty, fun.codomain.qual, fun.latent
        fresh_path = fun.domain.qual.fresh
        if p.fresh and (x in free_atoms_type(U) or x in (e3.kill & r.atoms)):
            _fail(E_FRESH_ESCAPE_KILL, t, "fresh argument is both returned and killed, or escapes "
                                          "into the result type", {x})
        if q.fresh and (f in (e3.kill & r.atoms) or (fresh_path and f in free_atoms_type(U))):
            _fail(E_FRESH_ESCAPE_KILL, t, "fresh function is both returned and killed", {f})
        self._result_scope(phi, r, {x, f}, t)
        latent = subst_effect(subst_effect(e3, x, p), f, q)
        result = subst_qual_in_qtype(subst_qual_in_qtype(fun.codomain, x, p), f, q)
        self.flow(env, killed | e1.kill | e2.kill, latent, t)
        return result, self.seq(env, t, e1, e2, latent)

    def infer_TApp(self, env, phi, t: TApp, killed):
        qf, e1 = self.infer(env, phi, t.fn, killed)
        fun = promote(env, qf.ty)
        if not isinstance(fun, All):
            _fail(E_TYPE_MISMATCH, t, "instantiating a non-polymorphic value")
        arg = t.arg
        self.well_formed(env, arg, t)
        q, p = qf.qual, arg.qual
        danger = env.names() | set(p.atoms) | set(q.atoms)
        for old in (fun.self_name, fun.qvar):
            if old in danger:
                fun = rename_all_binder(fun, old, fresh_name(old, danger | {fun.self_name, fun.qvar}))
        if fun.tvar in env.names():
            fun = rename_all_tvar(fun, fresh_name(fun.tvar, env.names()))
        if not sub_type(env, arg.ty, fun.bound.ty):
            _fail(E_TYPE_MISMATCH, t, "type argument does not conform to the bound")
        self.require_observed(phi, p.atoms, t, "type argument qualifier")
        if not fun.bound.qual.fresh:
            if p.fresh or not sub_qualifier(env, p, fun.bound.qual):
                _fail(E_QUAL_SUB, t, f"type argument qualifier {p} exceeds the bound {fun.bound.qual}",
                      unreachable_atoms(env, p.without_fresh(), fun.bound.qual))
        else:
            shared = overlap(env, p, q)
            if not sub_qualifier(env, shared, fun.bound.qual):
                witness = unreachable_atoms(env, shared, fun.bound.qual)
                _fail(E_SEPARATION, t, f"type argument overlaps with the function on {_names(witness)}",
                      witness)
        f, x = fun.self_name, fun.qvar
        U, r = fun.body.ty, fun.body.qual
        if p.fresh and x in free_atoms_type(U):
            _fail(E_FRESH_ESCAPE_KILL, t, "fresh type argument escapes into the result type", {x})
        if f in free_atoms_type(U):
            _fail(E_FRESH_ESCAPE_KILL, t, "self reference escapes into the result type", {f})
        self._result_scope(phi, r, {x, f}, t)
        result = subst_qual_in_qtype(subst_type(fun.body, fun.tvar, x, arg), f, q)
        latent = subst_effect(subst_effect(fun.latent, x, p), f, q)
        self.flow(env, killed | e1.kill, latent, t)
        return result, self.seq(env, t, e1, latent)

    def infer_Let(self, env, phi, t: Let, killed):
        q1, e1 = self.infer(env, phi, t.rhs, killed)
        if t.annot is not None:
            self.well_formed(env, t.annot, t)
            self.require_sub(env, q1, t.annot, t, E_QUAL_SUB, "binding annotation")
            self.require_observed(phi, t.annot.qual.atoms, t, "annotation")
            q1 = t.annot
        x, body = t.name, t.body
        if x in env.names():
            new = fresh_name(x, env.names())
            body = rename_var(body, x, new)
            x = new
        # the implicit function of a binding captures everything observable:
        # atoms reachable only through types (a referent qualifier) stay visible
        p = q1.qual
        domain = overlap(env, p, Qualifier(phi)) if p.fresh else p
        inner = env.with_term(x, QType(q1.ty, domain))
        q2, e2 = self.infer(inner, phi | {x}, body, killed | e1.kill)
        U, r = q2.ty, q2.qual
        if p.fresh and (x in free_atoms_type(U) or x in (e2.kill & r.atoms)):
            _fail(E_FRESH_ESCAPE_KILL, t, f"fresh value bound to {display_atom(x)} is both returned "
                                          f"and killed, or escapes into the result type", {x})
        self._result_scope(phi, r, {x}, t)
        result = subst_qual_in_qtype(q2, x, p)
        return result, self.seq(env, t, e1, subst_effect(e2, x, p))


def infer(env: TypeEnv, phi, t: Term, killed=frozenset()) -> Verdict:
    """Infer ``t`` under ``env`` and observation ``phi``.

    ``killed`` lists atoms already killed before ``t`` runs; any use of them
    (through saturation) is rejected.
    """
    try:
        q, e = _Checker().infer(env, frozenset(phi), t, frozenset(killed))
    except TypeCheckError as exc:
        return Verdict(diagnostic=exc.diagnostic)
    return Verdict(q, e)


def typecheck(t: Term) -> Verdict:
    """Check a closed source program in the empty environment."""
    return infer(TypeEnv(), frozenset(), t)

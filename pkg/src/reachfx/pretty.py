"""Pretty-printer producing text the parser reads back to the same AST.

Nested qualifiers are always printed, and function or polymorphic types
inside a qualified type are parenthesised, so the output never depends on
precedence subtleties.
"""

from __future__ import annotations

from .syntax import (
    Abs, All, App, Assign, Deref, Effect, Free, Fun, IntLit, IntT, Let, LocLit, Move,
    QType, Qualifier, Ref, RefNew, TAbs, TApp, Term, TopT, TVar, Type, UnitLit, UnitT,
    Var, sorted_atoms,
)


def qual_str(q: Qualifier) -> str:
    items = [str(a) for a in sorted_atoms(q.atoms)]
    if q.fresh:
        items.append("*")
    return "{" + ", ".join(items) + "}"


def atoms_str(atoms) -> str:
    return "{" + ", ".join(str(a) for a in sorted_atoms(atoms)) + "}"


def effect_str(e: Effect) -> str:
    parts = []
    if e.use:
        parts.append(f"u:{atoms_str(e.use)}")
    if e.kill:
        parts.append(f"k:{atoms_str(e.kill)}")
    return "<" + ", ".join(parts) + ">"


def type_str(ty: Type) -> str:
    if isinstance(ty, UnitT):
        return "Unit"
    if isinstance(ty, IntT):
        return "Int"
    if isinstance(ty, TopT):
        return "Top"
    if isinstance(ty, TVar):
        return ty.name
    if isinstance(ty, Ref):
        return f"Ref[{qtype_str(QType(ty.referent, ty.qual))}]"
    if isinstance(ty, Fun):
        return (f"{ty.self_name}({ty.param}: {qtype_str(ty.domain)}) -> "
                f"{effect_str(ty.latent)} {qtype_str(ty.codomain)}")
    if isinstance(ty, All):
        return (f"forall {ty.self_name}[{ty.tvar}^{ty.qvar} <: {qtype_str(ty.bound)}] -> "
                f"{effect_str(ty.latent)} {qtype_str(ty.body)}")
    raise TypeError(f"not a type: {ty!r}")


def qtype_str(q: QType) -> str:
    inner = type_str(q.ty)
    if isinstance(q.ty, (Fun, All)):
        inner = f"({inner})"
    return f"{inner}^{qual_str(q.qual)}"


# precedence levels: 0 expr, 1 assign, 2 unary, 3 app, 4 atom
def _wrap(s: str, level: int, prec: int) -> str:
    return f"({s})" if prec < level else s


def term_str(t: Term, level: int = 0) -> str:
    if isinstance(t, UnitLit):
        return "unit"
    if isinstance(t, IntLit):
        return str(t.value) if t.value >= 0 else f"({t.value})"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, LocLit):
        return str(t.loc)
    if isinstance(t, Abs):
        head = f"fun {t.self_name}({t.param}: {qtype_str(t.domain)})"
        if t.capture is not None:
            head += f" ^{qual_str(t.capture)}"
        if t.latent is not None or t.result is not None:
            head += " ->"
            if t.latent is not None:
                head += " " + effect_str(t.latent)
            if t.result is not None:
                head += " " + qtype_str(t.result)
        return f"{head} {{ {term_str(t.body)} }}"
    if isinstance(t, TAbs):
        head = f"tfun {t.self_name}[{t.tvar}^{t.qvar} <: {qtype_str(t.bound)}]"
        if t.capture is not None:
            head += f" ^{qual_str(t.capture)}"
        return f"{head} {{ {term_str(t.body)} }}"
    if isinstance(t, App):
        return _wrap(f"{term_str(t.fn, 3)} {term_str(t.arg, 4)}", level, 3)
    if isinstance(t, TApp):
        return _wrap(f"{term_str(t.fn, 3)} [{qtype_str(t.arg)}]", level, 3)
    if isinstance(t, RefNew):
        ann = "" if t.referent is None else f"[{qtype_str(t.referent)}]"
        return _wrap(f"ref{ann} {term_str(t.init, 2)}", level, 2)
    if isinstance(t, Deref):
        return _wrap(f"!{term_str(t.ref, 2)}", level, 2)
    if isinstance(t, Free):
        return _wrap(f"free {term_str(t.ref, 2)}", level, 2)
    if isinstance(t, Move):
        return _wrap(f"move {term_str(t.ref, 2)}", level, 2)
    if isinstance(t, Assign):
        return _wrap(f"{term_str(t.target, 2)} := {term_str(t.value, 1)}", level, 1)
    if isinstance(t, Let):
        if t.name == "_" and t.annot is None:
            s = f"{term_str(t.rhs, 1)}; {term_str(t.body, 0)}"
        else:
            ann = "" if t.annot is None else f": {qtype_str(t.annot)}"
            s = f"val {t.name}{ann} = {term_str(t.rhs, 1)}; {term_str(t.body, 0)}"
        return _wrap(s, level, 0)
    raise TypeError(f"not a term: {t!r}")


def render_verdict(v) -> str:
    """One-line ``check`` output for a checker verdict."""
    if v.ok:
        e = v.effect
        return (f"TYPE {type_str(v.qtype.ty)} QUAL {qual_str(v.qtype.qual)} "
                f"EFF {atoms_str(e.use)};{atoms_str(e.kill)}")
    return v.diagnostic.render()


def verdict_json(v) -> dict:
    if v.ok:
        return {"type": type_str(v.qtype.ty), "qual": qual_str(v.qtype.qual),
                "use": sorted(map(str, v.effect.use)), "kill": sorted(map(str, v.effect.kill))}
    d = v.diagnostic
    return {"code": d.code, "line": d.span.line if d.span else None,
            "col": d.span.col if d.span else None, "message": d.message,
            "witness": d.witness_names()}

"""Natural-deduction typing for modal lambda terms.

Inference is syntax directed: variables look up, abstractions use their
annotation, applications infer the head, and a box-substitution types its
bound terms in the outer context and its body under exactly the binders.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    Abs,
    App,
    Arrow,
    Atom,
    Box,
    BoxSubst,
    Formula,
    Term,
    Var,
    free_vars,
)

Context = tuple[tuple[str, Formula], ...]


def context(*pairs) -> Context:
    return tuple(pairs)


def lookup(ctx: Context, name: str) -> Formula | None:
    for x, f in ctx:
        if x == name:
            return f
    return None


def extend(ctx: Context, *pairs) -> Context:
    return ctx + tuple(pairs)


@dataclass(frozen=True)
class TypeAssignment:
    context: Context
    subject: Term
    type: Formula


@dataclass(frozen=True)
class NdDerivation:
    rule: str  # Id | Abs | App | BoxSubstRule
    conclusion: TypeAssignment
    premises: tuple["NdDerivation", ...] = ()


class TypingError(Exception):
    pass


class UnboundVariable(TypingError):
    pass


class NotAFunction(TypingError):
    pass


class ArgumentMismatch(TypingError):
    pass


class NotBoxed(TypingError):
    pass


class ShadowedContext(TypingError):
    pass


class TypeMismatch(TypingError):
    pass


def infer_type(ctx: Context, term: Term) -> tuple[Formula, NdDerivation]:
    """Infer the unique type of ``term`` in ``ctx`` with its derivation."""
    if isinstance(term, Var):
        f = lookup(ctx, term.name)
        if f is None:
            raise UnboundVariable(f"unbound variable {term.name!r}")
        return f, NdDerivation("Id", TypeAssignment(ctx, term, f))
    if isinstance(term, Abs):
        if lookup(ctx, term.binder) is not None:
            raise ShadowedContext(f"binder {term.binder!r} shadows the context")
        inner = extend(ctx, (term.binder, term.annotation))
        body_ty, body_d = infer_type(inner, term.body)
        ty = Arrow(term.annotation, body_ty)
        return ty, NdDerivation("Abs", TypeAssignment(ctx, term, ty), (body_d,))
    if isinstance(term, App):
        arg_ty, arg_d = infer_type(ctx, term.arg)
        fun_ty, fun_d = infer_type(ctx, term.fun)
        if not isinstance(fun_ty, Arrow):
            raise NotAFunction(f"applied term has non-arrow type")
        if fun_ty.domain != arg_ty:
            raise ArgumentMismatch("argument type does not match the function domain")
        ty = fun_ty.codomain
        return ty, NdDerivation("App", TypeAssignment(ctx, term, ty), (arg_d, fun_d))
    assert isinstance(term, BoxSubst)
    bound_ds = []
    inner_ctx: list[tuple[str, Formula]] = []
    for x, bound in term.bindings:
        if lookup(ctx, x) is not None:
            raise ShadowedContext(f"let binder {x!r} occurs in the context")
        bty, bd = infer_type(ctx, bound)
        if not isinstance(bty, Box):
            raise NotBoxed(f"bound term for {x!r} has non-boxed type")
        bound_ds.append(bd)
        inner_ctx.append((x, bty.body))
    body_ty, body_d = infer_type(tuple(inner_ctx), term.body)
    ty = Box(body_ty)
    return ty, NdDerivation(
        "BoxSubstRule", TypeAssignment(ctx, term, ty), tuple(bound_ds) + (body_d,)
    )


def check_type(assignment: TypeAssignment) -> NdDerivation:
    ty, d = infer_type(assignment.context, assignment.subject)
    if ty != assignment.type:
        raise TypeMismatch("inferred type differs from the stated type")
    return d


def typable(ctx: Context, term: Term) -> bool:
    try:
        infer_type(ctx, term)
        return True
    except TypingError:
        return False


def strengthen(ctx: Context, term: Term) -> Context:
    """Drop declarations not free in ``term``; typability is preserved."""
    infer_type(ctx, term)
    fv = free_vars(term)
    return tuple((x, f) for x, f in ctx if x in fv)


def nd_check(d: NdDerivation) -> bool:
    """Validate that every node locally instantiates its rule."""
    ctx, subject, ty = d.conclusion.context, d.conclusion.subject, d.conclusion.type
    if d.rule == "Id":
        return (
            isinstance(subject, Var)
            and lookup(ctx, subject.name) == ty
            and not d.premises
        )
    if d.rule == "Abs":
        if not (isinstance(subject, Abs) and isinstance(ty, Arrow)):
            return False
        if ty.domain != subject.annotation or len(d.premises) != 1:
            return False
        (p,) = d.premises
        return (
            p.conclusion.context == extend(ctx, (subject.binder, subject.annotation))
            and p.conclusion.subject == subject.body
            and p.conclusion.type == ty.codomain
            and nd_check(p)
        )
    if d.rule == "App":
        if not isinstance(subject, App) or len(d.premises) != 2:
            return False
        arg_p, fun_p = d.premises
        return (
            arg_p.conclusion.context == ctx
            and fun_p.conclusion.context == ctx
            and arg_p.conclusion.subject == subject.arg
            and fun_p.conclusion.subject == subject.fun
            and fun_p.conclusion.type == Arrow(arg_p.conclusion.type, ty)
            and nd_check(arg_p)
            and nd_check(fun_p)
        )
    if d.rule == "BoxSubstRule":
        if not (isinstance(subject, BoxSubst) and isinstance(ty, Box)):
            return False
        n = len(subject.bindings)
        if len(d.premises) != n + 1:
            return False
        binder_types = []
        for (x, bound), p in zip(subject.bindings, d.premises[:n]):
            if lookup(ctx, x) is not None:
                return False
            if p.conclusion.context != ctx or p.conclusion.subject != bound:
                return False
            if not isinstance(p.conclusion.type, Box):
                return False
            binder_types.append((x, p.conclusion.type.body))
            if not nd_check(p):
                return False
        body_p = d.premises[n]
        return (
            body_p.conclusion.context == tuple(binder_types)
            and body_p.conclusion.subject == subject.body
            and body_p.conclusion.type == ty.body
            and nd_check(body_p)
        )
    return False


def enumerate_nd(ctx: Context, term: Term):
    """All (type, derivation) pairs buildable for (ctx, term) bottom-up.

    There is at most one; inference is deterministic.  Used as an oracle
    for the uniqueness property.
    """
    out = []
    if isinstance(term, Var):
        f = lookup(ctx, term.name)
        if f is not None:
            out.append((f, NdDerivation("Id", TypeAssignment(ctx, term, f))))
        return out
    if isinstance(term, Abs):
        if lookup(ctx, term.binder) is not None:
            return out
        for bty, bd in enumerate_nd(extend(ctx, (term.binder, term.annotation)), term.body):
            ty = Arrow(term.annotation, bty)
            out.append((ty, NdDerivation("Abs", TypeAssignment(ctx, term, ty), (bd,))))
        return out
    if isinstance(term, App):
        for aty, ad in enumerate_nd(ctx, term.arg):
            for fty, fd in enumerate_nd(ctx, term.fun):
                if isinstance(fty, Arrow) and fty.domain == aty:
                    ty = fty.codomain
                    out.append(
                        (ty, NdDerivation("App", TypeAssignment(ctx, term, ty), (ad, fd)))
                    )
        return out
    assert isinstance(term, BoxSubst)
    choices: list[list] = [[]]
    for x, bound in term.bindings:
        if lookup(ctx, x) is not None:
            return []
        nxt = []
        for prefix in choices:
            for bty, bd in enumerate_nd(ctx, bound):
                if isinstance(bty, Box):
                    nxt.append(prefix + [((x, bty.body), bd)])
        choices = nxt
    for choice in choices:
        inner = tuple(pair for pair, _ in choice)
        for body_ty, body_d in enumerate_nd(inner, term.body):
            ty = Box(body_ty)
            out.append(
                (
                    ty,
                    NdDerivation(
                        "BoxSubstRule",
                        TypeAssignment(ctx, term, ty),
                        tuple(bd for _, bd in choice) + (body_d,),
                    ),
                )
            )
    return out


def print_nd(d: NdDerivation, indent: int = 0) -> str:
    from .surface import print_assignment

    c = d.conclusion
    lines = [" " * indent + f"{d.rule}: {print_assignment(c.context, c.subject, c.type)}"]
    for p in d.premises:
        lines.append(print_nd(p, indent + 2))
    return "\n".join(lines)

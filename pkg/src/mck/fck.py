"""Canonical (focused) typing for normal forms.

Every normal form has exactly one derivation here, built by a
syntax-directed case split:

- Ax: a variable at atomic type.
- ArrowRStar: a maximal block of abstractions.
- ArrowLAx: a head-variable application at atomic type.
- KBox: a box-substitution whose bound terms are all variables.
- ArrowLK: a box-substitution with at least one applied bound term; all
  applied bound terms are split off in one step and replaced by fresh
  box-typed hypotheses, leaving a variable-only residue.

Exchange never surfaces: contexts are compared as name-indexed maps.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rewrite import head_spine, in_lambda_hat
from .surface import print_assignment, print_formula, print_term
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
    arrow,
    flatten_arrow,
    free_vars,
)
from .typing import (
    Context,
    TypeAssignment,
    TypingError,
    check_type,
    extend,
    infer_type,
    lookup,
)


@dataclass(frozen=True)
class FckDerivation:
    rule: str  # Ax | ArrowRStar | ArrowLAx | KBox | ArrowLK
    conclusion: TypeAssignment
    premises: tuple["FckDerivation", ...] = ()


class NotNormal(Exception):
    pass


class FckViolation(Exception):
    pass


def _deterministic_fresh(base: str, taken: set[str]) -> str:
    if base not in taken:
        return base
    k = 0
    while f"{base}_w{k}" in taken:
        k += 1
    return f"{base}_w{k}"


def _split_bindings(term: BoxSubst):
    """Partition the bindings into applied head-variable bindings and
    bare-variable bindings, preserving order."""
    applied = []
    plain = []
    for i, (x, bound) in enumerate(term.bindings):
        head, args = head_spine(bound)
        if isinstance(head, Var) and args:
            applied.append((i, x, head.name, args))
        elif isinstance(bound, Var):
            plain.append((i, x, bound.name))
        else:
            return None
    return applied, plain


def fck_derive(ctx: Context, term: Term) -> FckDerivation:
    """The unique canonical derivation of a normal form."""
    if not in_lambda_hat(ctx, term):
        raise NotNormal("term is not in normal form")
    return _derive(ctx, term)


def _derive(ctx: Context, term: Term) -> FckDerivation:
    ty, _ = infer_type(ctx, term)
    conclusion = TypeAssignment(ctx, term, ty)
    if isinstance(term, Var):
        return FckDerivation("Ax", conclusion)
    if isinstance(term, App):
        head, args = head_spine(term)
        assert isinstance(head, Var)
        premises = tuple(_derive(ctx, a) for a in args)
        return FckDerivation("ArrowLAx", conclusion, premises)
    if isinstance(term, Abs):
        binders = []
        body = term
        while isinstance(body, Abs):
            binders.append((body.binder, body.annotation))
            body = body.body
        premise = _derive(extend(ctx, *binders), body)
        return FckDerivation("ArrowRStar", conclusion, (premise,))
    assert isinstance(term, BoxSubst)
    split = _split_bindings(term)
    assert split is not None
    applied, _plain = split
    if not applied:
        inner = []
        for x, bound in term.bindings:
            assert isinstance(bound, Var)
            bty = lookup(ctx, bound.name)
            assert isinstance(bty, Box)
            inner.append((x, bty.body))
        premise = _derive(tuple(inner), term.body)
        return FckDerivation("KBox", conclusion, (premise,))
    # split: replace each applied bound term by a fresh box-typed variable
    taken = {x for x, _ in ctx} | set(free_vars(term)) | {x for x, _ in term.bindings}
    arg_premises = []
    fresh_decls = []
    new_bindings = list(term.bindings)
    for i, binder, head_name, args in applied:
        head_ty = lookup(ctx, head_name)
        domains, result = flatten_arrow(head_ty)
        assert len(domains) == len(args) and isinstance(result, Box)
        for a in args:
            arg_premises.append(_derive(ctx, a))
        fresh = _deterministic_fresh(head_name, taken)
        taken.add(fresh)
        fresh_decls.append((fresh, result))
        new_bindings[i] = (binder, Var(fresh))
    residue = BoxSubst(term.body, tuple(new_bindings))
    right = _derive(extend(ctx, *fresh_decls), residue)
    return FckDerivation("ArrowLK", conclusion, tuple(arg_premises) + (right,))


# ---------------------------------------------------------------------------
# Checking


def fck_violations(d: FckDerivation) -> list[str]:
    """Located rule violations; empty iff the derivation is valid."""
    out: list[str] = []
    _check(d, out)
    return out


def fck_check(d: FckDerivation) -> bool:
    return not fck_violations(d)


def _complain(out: list[str], d: FckDerivation, why: str) -> None:
    c = d.conclusion
    out.append(f"{d.rule} at {print_assignment(c.context, c.subject, c.type)}: {why}")


def _check(d: FckDerivation, out: list[str]) -> None:
    ctx, subject, ty = d.conclusion.context, d.conclusion.subject, d.conclusion.type
    names = {x for x, _ in ctx}
    if len(names) != len(ctx):
        _complain(out, d, "duplicate context variable")
        return
    if d.rule == "Ax":
        if not (isinstance(subject, Var) and isinstance(ty, Atom)):
            _complain(out, d, "axiom subject must be a variable at atomic type")
        elif lookup(ctx, subject.name) != ty:
            _complain(out, d, "variable not declared at the concluded type")
        if d.premises:
            _complain(out, d, "axiom has no premises")
        return
    if d.rule == "ArrowRStar":
        binders = []
        body = subject
        while isinstance(body, Abs):
            binders.append((body.binder, body.annotation))
            body = body.body
        if not binders:
            _complain(out, d, "subject is not an abstraction")
            return
        domains, result = flatten_arrow(ty)
        if len(domains) < len(binders) or list(domains[: len(binders)]) != [
            a for _, a in binders
        ]:
            _complain(out, d, "type does not match the abstraction block")
            return
        inner_ty = arrow(domains[len(binders) :], result)
        if any(x in names for x, _ in binders):
            _complain(out, d, "abstraction binder shadows the context")
        if len(d.premises) != 1:
            _complain(out, d, "expected exactly one premise")
            return
        (p,) = d.premises
        want = extend(ctx, *binders)
        if (
            dict(p.conclusion.context) != dict(want)
            or len(p.conclusion.context) != len(want)
            or p.conclusion.subject != body
            or p.conclusion.type != inner_ty
        ):
            _complain(out, d, "premise does not extend the context with the binders")
        _check(p, out)
        return
    if d.rule == "ArrowLAx":
        head, args = head_spine(subject)
        if not (isinstance(head, Var) and args and isinstance(ty, Atom)):
            _complain(out, d, "subject must be an applied head variable at atomic type")
            return
        head_ty = lookup(ctx, head.name)
        if head_ty is None:
            _complain(out, d, "head variable not declared")
            return
        domains, result = flatten_arrow(head_ty)
        if result != ty or len(domains) != len(args):
            _complain(out, d, "head type does not end in the concluded atom")
            return
        if len(d.premises) != len(args):
            _complain(out, d, "one premise per argument expected")
            return
        for p, a, dom in zip(d.premises, args, domains):
            if (
                dict(p.conclusion.context) != dict(ctx)
                or p.conclusion.subject != a
                or p.conclusion.type != dom
            ):
                _complain(out, d, "argument premise mismatch")
            _check(p, out)
        return
    if d.rule == "KBox":
        if not (isinstance(subject, BoxSubst) and isinstance(ty, Box)):
            _complain(out, d, "subject must be a box-substitution at boxed type")
            return
        inner = []
        used = set()
        for x, bound in subject.bindings:
            if not isinstance(bound, Var):
                _complain(out, d, "all bound terms must be variables here")
                return
            decl = lookup(ctx, bound.name)
            if not isinstance(decl, Box):
                _complain(out, d, f"bound variable {bound.name!r} not boxed in context")
                return
            if bound.name in used:
                _complain(out, d, "a context variable is bound twice")
            used.add(bound.name)
            if x in names:
                _complain(out, d, f"binder {x!r} is not fresh")
            inner.append((x, decl.body))
        if free_vars(subject.body) != {x for x, _ in subject.bindings}:
            _complain(out, d, "body must use exactly the binders")
        if len(d.premises) != 1:
            _complain(out, d, "expected exactly one premise")
            return
        (p,) = d.premises
        if (
            dict(p.conclusion.context) != dict(inner)
            or len(p.conclusion.context) != len(inner)
            or p.conclusion.subject != subject.body
            or p.conclusion.type != ty.body
        ):
            _complain(out, d, "premise must type the body under exactly the binders")
        _check(p, out)
        return
    if d.rule == "ArrowLK":
        if not (isinstance(subject, BoxSubst) and isinstance(ty, Box)):
            _complain(out, d, "subject must be a box-substitution at boxed type")
            return
        split = _split_bindings(subject)
        if split is None:
            _complain(out, d, "bound terms must be head applications or variables")
            return
        applied, _plain = split
        if not applied:
            _complain(out, d, "no applied bound term; this is a KBox conclusion")
            return
        if not d.premises:
            _complain(out, d, "missing premises")
            return
        right = d.premises[-1]
        args_premises = d.premises[:-1]
        expected_args = []
        fresh_decls = []
        replacement = {}
        for i, binder, head_name, args in applied:
            head_ty = lookup(ctx, head_name)
            if head_ty is None:
                _complain(out, d, f"head {head_name!r} not declared")
                return
            domains, result = flatten_arrow(head_ty)
            if len(domains) != len(args) or not isinstance(result, Box):
                _complain(out, d, f"head {head_name!r} is not an arrow into a box")
                return
            expected_args.extend((a, dom) for a, dom in zip(args, domains))
            replacement[i] = result
        if len(args_premises) != len(expected_args):
            _complain(out, d, "one premise per split-off argument expected")
            return
        for p, (a, dom) in zip(args_premises, expected_args):
            if (
                dict(p.conclusion.context) != dict(ctx)
                or p.conclusion.subject != a
                or p.conclusion.type != dom
            ):
                _complain(out, d, "argument premise mismatch")
            _check(p, out)
        # right premise: same box-substitution with the applied bound terms
        # replaced by fresh box-typed hypotheses
        rsub = right.conclusion.subject
        if not isinstance(rsub, BoxSubst) or rsub.body != subject.body:
            _complain(out, d, "residue premise must keep the body")
            return
        if len(rsub.bindings) != len(subject.bindings):
            _complain(out, d, "residue premise must keep all bindings")
            return
        rmap = dict(rsub.bindings)
        want_ctx = list(ctx)
        seen_fresh: set[str] = set()
        for i, binder, head_name, args in applied:
            got = rmap.get(binder)
            if not isinstance(got, Var):
                _complain(out, d, "split binding must become a fresh variable")
                return
            if got.name in names or got.name in seen_fresh:
                _complain(out, d, f"replacement {got.name!r} is not fresh")
            seen_fresh.add(got.name)
            want_ctx.append((got.name, replacement[i]))
        for x, bound in subject.bindings:
            if isinstance(bound, Var) and rmap.get(x) != bound:
                _complain(out, d, "variable bindings must be kept unchanged")
        if (
            dict(right.conclusion.context) != dict(want_ctx)
            or len(right.conclusion.context) != len(want_ctx)
            or right.conclusion.type != ty
        ):
            _complain(out, d, "residue premise context mismatch")
        _check(right, out)
        return
    _complain(out, d, f"unknown rule {d.rule!r}")


# ---------------------------------------------------------------------------
# Exhaustive enumeration (uniqueness oracle)


def enumerate_fck(ctx: Context, term: Term, ty: Formula) -> list[FckDerivation]:
    """All rule trees concluding (ctx, term, ty); exactly one for a normal
    form.  Fresh names are chosen as in ``fck_derive`` so equal inputs
    yield identical trees."""
    conclusion = TypeAssignment(ctx, term, ty)
    out: list[FckDerivation] = []
    if isinstance(term, Var) and isinstance(ty, Atom) and lookup(ctx, term.name) == ty:
        out.append(FckDerivation("Ax", conclusion))
    head, args = head_spine(term)
    if isinstance(head, Var) and args and isinstance(ty, Atom):
        head_ty = lookup(ctx, head.name)
        if head_ty is not None:
            domains, result = flatten_arrow(head_ty)
            if result == ty and len(domains) == len(args):
                options = [enumerate_fck(ctx, a, dom) for a, dom in zip(args, domains)]
                for combo in _product(options):
                    out.append(FckDerivation("ArrowLAx", conclusion, tuple(combo)))
    if isinstance(term, Abs):
        binders = []
        body = term
        while isinstance(body, Abs):
            binders.append((body.binder, body.annotation))
            body = body.body
        domains, result = flatten_arrow(ty)
        if len(domains) >= len(binders) and list(domains[: len(binders)]) == [
            a for _, a in binders
        ]:
            inner_ty = arrow(domains[len(binders) :], result)
            for p in enumerate_fck(extend(ctx, *binders), body, inner_ty):
                out.append(FckDerivation("ArrowRStar", conclusion, (p,)))
    if isinstance(term, BoxSubst) and isinstance(ty, Box):
        split = _split_bindings(term)
        if split is not None:
            applied, _plain = split
            if not applied:
                inner = []
                ok = True
                used = set()
                for x, bound in term.bindings:
                    decl = lookup(ctx, bound.name)
                    if not isinstance(decl, Box) or bound.name in used or x in {
                        n for n, _ in ctx
                    }:
                        ok = False
                        break
                    used.add(bound.name)
                    inner.append((x, decl.body))
                if ok and free_vars(term.body) == {x for x, _ in term.bindings}:
                    for p in enumerate_fck(tuple(inner), term.body, ty.body):
                        out.append(FckDerivation("KBox", conclusion, (p,)))
            else:
                taken = (
                    {x for x, _ in ctx}
                    | set(free_vars(term))
                    | {x for x, _ in term.bindings}
                )
                arg_opts = []
                fresh_decls = []
                new_bindings = list(term.bindings)
                ok = True
                for i, binder, head_name, args in applied:
                    head_ty = lookup(ctx, head_name)
                    if head_ty is None:
                        ok = False
                        break
                    domains, result = flatten_arrow(head_ty)
                    if len(domains) != len(args) or not isinstance(result, Box):
                        ok = False
                        break
                    for a, dom in zip(args, domains):
                        arg_opts.append(enumerate_fck(ctx, a, dom))
                    fresh = _deterministic_fresh(head_name, taken)
                    taken.add(fresh)
                    fresh_decls.append((fresh, result))
                    new_bindings[i] = (binder, Var(fresh))
                if ok:
                    residue = BoxSubst(term.body, tuple(new_bindings))
                    rights = enumerate_fck(extend(ctx, *fresh_decls), residue, ty)
                    for combo in _product(arg_opts):
                        for r in rights:
                            out.append(
                                FckDerivation(
                                    "ArrowLK", conclusion, tuple(combo) + (r,)
                                )
                            )
    return out


def _product(options):
    if not options:
        yield []
        return
    for first in options[0]:
        for rest in _product(options[1:]):
            yield [first] + rest


# ---------------------------------------------------------------------------
# Equality up to exchange, printing, serialization


def fck_equal(d1: FckDerivation, d2: FckDerivation) -> bool:
    """Structural equality with contexts compared as maps."""
    c1, c2 = d1.conclusion, d2.conclusion
    return (
        d1.rule == d2.rule
        and dict(c1.context) == dict(c2.context)
        and c1.subject == c2.subject
        and c1.type == c2.type
        and len(d1.premises) == len(d2.premises)
        and all(fck_equal(p1, p2) for p1, p2 in zip(d1.premises, d2.premises))
    )


def print_fck(d: FckDerivation, indent: int = 0) -> str:
    c = d.conclusion
    lines = [" " * indent + f"{d.rule}: {print_assignment(c.context, c.subject, c.type)}"]
    for p in d.premises:
        lines.append(print_fck(p, indent + 2))
    return "\n".join(lines)


def fck_to_dict(d: FckDerivation) -> dict:
    c = d.conclusion
    return {
        "rule": d.rule,
        "conclusion": {
            "context": [[x, print_formula(f)] for x, f in c.context],
            "subject": print_term(c.subject),
            "type": print_formula(c.type),
        },
        "premises": [fck_to_dict(p) for p in d.premises],
    }

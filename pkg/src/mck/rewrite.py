"""Reduction: beta steps, restricted eta expansion, binding cleanup.

Six ground steps, each fired only in its legal class of positions:

- beta1: an abstraction applied to an argument.
- beta2: a box-substitution one of whose bound terms is itself a
  box-substitution; the inner bindings are spliced into the outer list.
- eta1: an arrow-typed occurrence that is not an abstraction expands to
  one, except directly in function position of an application.
- eta2: a box-typed occurrence that is not a box-substitution expands to
  one, except directly in bound-term position of a box-substitution.
- kappa1: a binding whose binder does not occur in the body is dropped.
- kappa2: two bindings with alpha-equal bound terms are merged under a
  fresh binder.

The position restrictions on the eta rules are what make expansion
terminate: an expansion never re-enables itself.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .syntax import (
    Abs,
    App,
    Arrow,
    Box,
    BoxSubst,
    Formula,
    Path,
    Term,
    Var,
    alpha_eq,
    canonical,
    free_vars,
    fresh_name,
    occurrences,
    replace_at,
    subterm_at,
    substitute,
)
from .typing import (
    Context,
    TypingError,
    extend,
    infer_type,
    lookup,
)


class ReductionKind(Enum):
    BETA1 = "beta1"
    BETA2 = "beta2"
    KAPPA1 = "kappa1"
    KAPPA2 = "kappa2"
    ETA1 = "eta1"
    ETA2 = "eta2"


_KIND_ORDER = {
    ReductionKind.BETA1: 0,
    ReductionKind.BETA2: 1,
    ReductionKind.KAPPA1: 2,
    ReductionKind.KAPPA2: 3,
    ReductionKind.ETA1: 4,
    ReductionKind.ETA2: 5,
}


@dataclass(frozen=True)
class Redex:
    path: Path
    kind: ReductionKind
    detail: tuple = ()

    def describe(self) -> str:
        where = "/".join(
            step if isinstance(step, str) else f"bind{step[1]}" for step in self.path
        )
        extra = f" {self.detail}" if self.detail else ""
        return f"{self.kind.value} at [{where or 'root'}]{extra}"


@dataclass(frozen=True)
class Trace:
    start: Term
    steps: tuple[tuple[Redex, Term], ...]


class IllegalRedex(Exception):
    pass


class StepBudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class _Site:
    path: Path
    ctx: Context
    term: Term
    type: Formula
    in_fun: bool
    in_bound: bool


def _sites(ctx: Context, term: Term) -> list[_Site]:
    """Every subterm occurrence with its local context and type.

    A box-substitution types its bound terms in the outer context and its
    body under exactly the binders, so the local context is recomputed on
    the way down.
    """
    out: list[_Site] = []

    def walk(c: Context, t: Term, path: Path, in_fun: bool, in_bound: bool) -> Formula:
        if isinstance(t, Var):
            ty = lookup(c, t.name)
            if ty is None:
                raise TypingError(f"unbound variable {t.name!r}")
        elif isinstance(t, Abs):
            body_ty = walk(
                extend(c, (t.binder, t.annotation)), t.body, path + ("body",), False, False
            )
            ty = Arrow(t.annotation, body_ty)
        elif isinstance(t, App):
            fun_ty = walk(c, t.fun, path + ("fun",), True, False)
            walk(c, t.arg, path + ("arg",), False, False)
            assert isinstance(fun_ty, Arrow)
            ty = fun_ty.codomain
        else:
            assert isinstance(t, BoxSubst)
            inner: list[tuple[str, Formula]] = []
            for i, (x, bound) in enumerate(t.bindings):
                bty = walk(c, bound, path + (("bind", i),), False, True)
                assert isinstance(bty, Box)
                inner.append((x, bty.body))
            body_ty = walk(tuple(inner), t.body, path + ("body",), False, False)
            ty = Box(body_ty)
        out.append(_Site(path, c, t, ty, in_fun, in_bound))
        return ty

    infer_type(ctx, term)  # surface typing errors with their proper class
    walk(ctx, term, (), False, False)
    return out


def find_redexes(ctx: Context, term: Term) -> list[Redex]:
    """Every legal redex, in deterministic (leftmost-first) order."""
    redexes: list[Redex] = []
    for site in _sites(ctx, term):
        t = site.term
        if isinstance(t, App) and isinstance(t.fun, Abs):
            redexes.append(Redex(site.path, ReductionKind.BETA1))
        if isinstance(t, BoxSubst):
            for i, (x, bound) in enumerate(t.bindings):
                if isinstance(bound, BoxSubst):
                    redexes.append(Redex(site.path, ReductionKind.BETA2, (i,)))
                if occurrences(t.body, x) == 0:
                    redexes.append(Redex(site.path, ReductionKind.KAPPA1, (i,)))
            for i in range(len(t.bindings)):
                for j in range(i + 1, len(t.bindings)):
                    if alpha_eq(t.bindings[i][1], t.bindings[j][1]):
                        redexes.append(Redex(site.path, ReductionKind.KAPPA2, (i, j)))
        if isinstance(site.type, Arrow) and not isinstance(t, Abs) and not site.in_fun:
            redexes.append(Redex(site.path, ReductionKind.ETA1))
        if isinstance(site.type, Box) and not isinstance(t, BoxSubst) and not site.in_bound:
            redexes.append(Redex(site.path, ReductionKind.ETA2))
    redexes.sort(key=_redex_key)
    return redexes


def _step_key(step) -> tuple:
    if step == "fun":
        return (0, 0)
    if step == "arg":
        return (1, 0)
    if step == "body":
        return (1 << 30, 0)
    return (0, step[1])  # ("bind", i): bound terms sit left of the body


def _redex_key(r: Redex) -> tuple:
    return (
        tuple(_step_key(s) for s in r.path),
        _KIND_ORDER[r.kind],
        r.detail,
    )


def _apply_ground(t: Term, ty: Formula, redex: Redex) -> Term:
    kind = redex.kind
    if kind is ReductionKind.BETA1:
        assert isinstance(t, App) and isinstance(t.fun, Abs)
        return substitute(t.fun.body, [(t.fun.binder, t.arg)])
    if kind is ReductionKind.BETA2:
        (i,) = redex.detail
        y, inner = t.bindings[i]
        assert isinstance(inner, BoxSubst)
        # Inner binders deliberately stay free in body[R/y]; the merged
        # binding list captures them again.
        new_body = substitute(t.body, [(y, inner.body)])
        bindings = t.bindings[:i] + inner.bindings + t.bindings[i + 1 :]
        return BoxSubst(new_body, bindings)
    if kind is ReductionKind.KAPPA1:
        (i,) = redex.detail
        return BoxSubst(t.body, t.bindings[:i] + t.bindings[i + 1 :])
    if kind is ReductionKind.KAPPA2:
        i, j = redex.detail
        y1, bound = t.bindings[i]
        y2, _ = t.bindings[j]
        v = fresh_name(y1)
        new_body = substitute(t.body, [(y1, Var(v)), (y2, Var(v))])
        bindings = tuple(
            b for k, b in enumerate(t.bindings) if k not in (i, j)
        ) + ((v, bound),)
        return BoxSubst(new_body, bindings)
    if kind is ReductionKind.ETA1:
        assert isinstance(ty, Arrow)
        x = fresh_name("x")
        return Abs(x, ty.domain, App(t, Var(x)))
    assert kind is ReductionKind.ETA2
    x = fresh_name("x")
    return BoxSubst(Var(x), ((x, t),))


def step(ctx: Context, term: Term, redex: Redex) -> Term:
    """Apply one redex; the result is re-canonicalized and keeps the type."""
    if redex not in find_redexes(ctx, term):
        raise IllegalRedex(redex.describe())
    target = subterm_at(term, redex.path)
    local_ty = None
    if redex.kind in (ReductionKind.ETA1, ReductionKind.ETA2):
        for site in _sites(ctx, term):
            if site.path == redex.path:
                local_ty = site.type
                break
    return canonical(replace_at(term, redex.path, _apply_ground(target, local_ty, redex)))


def normalize(
    ctx: Context,
    term: Term,
    strategy: str = "leftmost",
    max_steps: int = 500,
    seed: int | None = None,
) -> tuple[Term, Trace]:
    """Reduce to normal form with the given redex-selection strategy.

    The result is independent of the strategy up to alpha equivalence.
    """
    rng = random.Random(seed) if strategy == "random" else None
    start = term
    steps: list[tuple[Redex, Term]] = []
    while True:
        redexes = find_redexes(ctx, term)
        if not redexes:
            return term, Trace(start, tuple(steps))
        if len(steps) >= max_steps:
            break
        if strategy == "leftmost":
            r = redexes[0]
        elif strategy == "rightmost":
            r = redexes[-1]
        elif strategy == "random":
            r = rng.choice(redexes)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        term = step(ctx, term, r)
        steps.append((r, term))
    raise StepBudgetExceeded(f"no normal form within {max_steps} steps")


# ---------------------------------------------------------------------------
# Termination measures


def _arrow_weight(f: Formula) -> int:
    if isinstance(f, Arrow):
        return _arrow_weight(f.domain) + _arrow_weight(f.codomain) + 1
    if isinstance(f, Box):
        return _arrow_weight(f.body)
    return 0


def _box_weight(f: Formula) -> int:
    if isinstance(f, Arrow):
        return _box_weight(f.domain) + _box_weight(f.codomain)
    if isinstance(f, Box):
        return _box_weight(f.body) + 1
    return 0


def eta_measure(ctx: Context, term: Term) -> tuple[int, int]:
    """Remaining eta-expansion work: arrow weights of expandable arrow
    positions and box weights of expandable box positions."""
    eta1 = 0
    eta2 = 0
    for site in _sites(ctx, term):
        if isinstance(site.type, Arrow) and not isinstance(site.term, Abs) and not site.in_fun:
            eta1 += _arrow_weight(site.type)
        if isinstance(site.type, Box) and not isinstance(site.term, BoxSubst) and not site.in_bound:
            eta2 += _box_weight(site.type)
    return eta1, eta2


def kappa_measure(term: Term) -> int:
    """Total binding count over all box-substitution subterms."""
    if isinstance(term, Var):
        return 0
    if isinstance(term, Abs):
        return kappa_measure(term.body)
    if isinstance(term, App):
        return kappa_measure(term.fun) + kappa_measure(term.arg)
    assert isinstance(term, BoxSubst)
    return (
        kappa_measure(term.body)
        + sum(kappa_measure(b) for _, b in term.bindings)
        + len(term.bindings)
    )


# ---------------------------------------------------------------------------
# Normal forms


def is_normal(ctx: Context, term: Term) -> bool:
    return not find_redexes(ctx, term)


def head_spine(t: Term) -> tuple[Term, tuple[Term, ...]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    return t, tuple(reversed(args))


def in_lambda_hat(ctx: Context, term: Term) -> bool:
    """Inductive characterization of the normal forms: head-variable
    applications at atomic type, abstractions, and box-substitutions whose
    body uses every binder and whose bound terms are pairwise distinct
    head-variable applications."""
    try:
        ty, _ = infer_type(ctx, term)
    except TypingError:
        return False
    return _hat(ctx, term, ty)


def _hat(ctx: Context, term: Term, ty: Formula) -> bool:
    if isinstance(term, (Var, App)):
        head, args = head_spine(term)
        if not isinstance(head, Var):
            return False
        if isinstance(ty, (Arrow, Box)):
            return False
        return all(_hat(ctx, a, infer_type(ctx, a)[0]) for a in args)
    if isinstance(term, Abs):
        assert isinstance(ty, Arrow)
        inner = extend(ctx, (term.binder, term.annotation))
        return _hat(inner, term.body, ty.codomain)
    assert isinstance(term, BoxSubst)
    binders = {x for x, _ in term.bindings}
    if free_vars(term.body) != binders:
        return False
    for i, (_, bound) in enumerate(term.bindings):
        head, args = head_spine(bound)
        if not isinstance(head, Var):
            return False
        if not all(_hat(ctx, a, infer_type(ctx, a)[0]) for a in args):
            return False
        for j in range(i):
            if alpha_eq(term.bindings[j][1], bound):
                return False
    inner_ctx = []
    for x, bound in term.bindings:
        bty = infer_type(ctx, bound)[0]
        inner_ctx.append((x, bty.body))
    assert isinstance(ty, Box)
    return _hat(tuple(inner_ctx), term.body, ty.body)


def print_trace(trace: Trace) -> str:
    from .surface import print_term

    lines = [f"0  {print_term(trace.start)}"]
    for i, (redex, term) in enumerate(trace.steps, start=1):
        lines.append(f"{i}  {redex.describe()}  ~>  {print_term(term)}")
    return "\n".join(lines)

"""Core data model: formulas, modal lambda terms, typing contexts.

Terms are immutable. Two conventions are maintained by construction:

- Barendregt convention: within one term no name is both free and bound,
  and all binders are pairwise distinct.  ``canonical`` re-establishes it
  by renaming from a global fresh-name supply.
- Canonical binding order: the bindings of a box-substitution are sorted
  by the position of the binder's first occurrence in the body; vacuous
  binders come last in their original order.  Structural equality on
  terms therefore absorbs permutations of the binding list.
"""

from __future__ import annotations

import itertools
import re
import threading
from dataclasses import dataclass, field
from typing import Iterator, Optional


# ---------------------------------------------------------------------------
# Formulas (= types)


class Formula:
    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        from .surface import print_formula

        return f"<{print_formula(self)}>"


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    name: str


@dataclass(frozen=True, repr=False)
class Arrow(Formula):
    domain: Formula
    codomain: Formula


@dataclass(frozen=True, repr=False)
class Box(Formula):
    body: Formula


def flatten_arrow(f: Formula) -> tuple[tuple[Formula, ...], Formula]:
    """Split ``f`` as (A1, ..., An) -> C with C not an arrow."""
    domains: list[Formula] = []
    while isinstance(f, Arrow):
        domains.append(f.domain)
        f = f.codomain
    return tuple(domains), f


def arrow(domains, codomain: Formula) -> Formula:
    """Build the right-nested arrow (A1, ..., An) -> C."""
    f = codomain
    for d in reversed(tuple(domains)):
        f = Arrow(d, f)
    return f


def formula_size(f: Formula) -> int:
    """Number of connectives (arrows and boxes)."""
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Box):
        return 1 + formula_size(f.body)
    assert isinstance(f, Arrow)
    return 1 + formula_size(f.domain) + formula_size(f.codomain)


def formula_atoms(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, Box):
        return formula_atoms(f.body)
    assert isinstance(f, Arrow)
    return formula_atoms(f.domain) | formula_atoms(f.codomain)


# ---------------------------------------------------------------------------
# Fresh-name supply

_counter = itertools.count(1)
_counter_lock = threading.Lock()

_SUFFIX = re.compile(r"_\d+$")


def fresh_name(base: str = "x") -> str:
    """A globally fresh name, ``base`` with a counter suffix."""
    base = _SUFFIX.sub("", base) or "x"
    with _counter_lock:
        n = next(_counter)
    return f"{base}_{n}"


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        from .surface import print_term

        return f"<{print_term(self)}>"


@dataclass(frozen=True, repr=False)
class Var(Term):
    name: str


@dataclass(frozen=True, repr=False)
class Abs(Term):
    binder: str
    annotation: Formula
    body: Term


@dataclass(frozen=True, repr=False)
class App(Term):
    fun: Term
    arg: Term


@dataclass(frozen=True, repr=False)
class BoxSubst(Term):
    """Simultaneous explicit substitution: ``let x1,...,xn = N1,...,Nn in body``.

    Binders scope over the body only.  The binding list may be empty
    (the proof-term of necessitation).
    """

    body: Term
    bindings: tuple[tuple[str, Term], ...]

    def __post_init__(self) -> None:
        binders = [x for x, _ in self.bindings]
        if len(set(binders)) != len(binders):
            raise ValueError(f"duplicate binders in box-substitution: {binders}")
        ordered = _canonical_binding_order(self.body, self.bindings)
        if ordered != self.bindings:
            object.__setattr__(self, "bindings", ordered)


def _first_occurrence_index(body: Term) -> dict[str, int]:
    """Preorder index of the first occurrence of each variable in ``body``."""
    index: dict[str, int] = {}
    pos = 0

    def walk(t: Term) -> None:
        nonlocal pos
        pos += 1
        if isinstance(t, Var):
            index.setdefault(t.name, pos)
        elif isinstance(t, Abs):
            walk(t.body)
        elif isinstance(t, App):
            walk(t.fun)
            walk(t.arg)
        elif isinstance(t, BoxSubst):
            for _, bound in t.bindings:
                walk(bound)
            walk(t.body)

    walk(body)
    return index


def _canonical_binding_order(body, bindings):
    index = _first_occurrence_index(body)
    big = 1 << 60
    keyed = [(index.get(x, big), i, (x, b)) for i, (x, b) in enumerate(bindings)]
    keyed.sort(key=lambda k: (k[0], k[1]))
    return tuple(k[2] for k in keyed)


# ---------------------------------------------------------------------------
# Structural queries


def free_vars(t: Term) -> set[str]:
    """Free variables.  For a box-substitution these come from the bound
    terms only; the binders scope over the body."""
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.binder}
    if isinstance(t, App):
        return free_vars(t.fun) | free_vars(t.arg)
    assert isinstance(t, BoxSubst)
    out: set[str] = set()
    for _, bound in t.bindings:
        out |= free_vars(bound)
    return out


def occurrences(t: Term, name: str) -> int:
    """Number of free occurrences of ``name`` in ``t``."""
    if isinstance(t, Var):
        return 1 if t.name == name else 0
    if isinstance(t, Abs):
        return 0 if t.binder == name else occurrences(t.body, name)
    if isinstance(t, App):
        return occurrences(t.fun, name) + occurrences(t.arg, name)
    assert isinstance(t, BoxSubst)
    return sum(occurrences(bound, name) for _, bound in t.bindings)


def term_size(t: Term) -> int:
    """Height-style length: variables measure 0, other nodes 1 + max child."""
    if isinstance(t, Var):
        return 0
    if isinstance(t, Abs):
        return term_size(t.body) + 1
    if isinstance(t, App):
        return max(term_size(t.fun), term_size(t.arg)) + 1
    assert isinstance(t, BoxSubst)
    return max([term_size(t.body)] + [term_size(b) for _, b in t.bindings]) + 1


# Occurrence paths: () is the root; steps are "fun", "arg", "body" or
# ("bind", i).  Paths address subterm occurrences, so ``subterms`` yields a
# multiset keyed by path.

Path = tuple


def child_steps(t: Term):
    if isinstance(t, Var):
        return ()
    if isinstance(t, Abs):
        return ("body",)
    if isinstance(t, App):
        return ("fun", "arg")
    assert isinstance(t, BoxSubst)
    return tuple(("bind", i) for i in range(len(t.bindings))) + ("body",)


def child_at(t: Term, step) -> Term:
    if step == "body":
        return t.body
    if step == "fun":
        return t.fun
    if step == "arg":
        return t.arg
    kind, i = step
    assert kind == "bind"
    return t.bindings[i][1]


def subterms(t: Term, path: Path = ()) -> Iterator[tuple[Path, Term]]:
    """All subterm occurrences with their tree paths (preorder)."""
    yield path, t
    for step in child_steps(t):
        yield from subterms(child_at(t, step), path + (step,))


def subterm_at(t: Term, path: Path) -> Term:
    for step in path:
        t = child_at(t, step)
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    step, rest = path[0], path[1:]
    if step == "body":
        if isinstance(t, Abs):
            return Abs(t.binder, t.annotation, replace_at(t.body, rest, new))
        assert isinstance(t, BoxSubst)
        return BoxSubst(replace_at(t.body, rest, new), t.bindings)
    if step == "fun":
        return App(replace_at(t.fun, rest, new), t.arg)
    if step == "arg":
        return App(t.fun, replace_at(t.arg, rest, new))
    _, i = step
    bindings = list(t.bindings)
    x, bound = bindings[i]
    bindings[i] = (x, replace_at(bound, rest, new))
    return BoxSubst(t.body, tuple(bindings))


def bound_names(t: Term) -> list[str]:
    """All binder names, in preorder (with repetitions if any)."""
    out: list[str] = []

    def walk(s: Term) -> None:
        if isinstance(s, Abs):
            out.append(s.binder)
            walk(s.body)
        elif isinstance(s, App):
            walk(s.fun)
            walk(s.arg)
        elif isinstance(s, BoxSubst):
            out.extend(x for x, _ in s.bindings)
            for _, bound in s.bindings:
                walk(bound)
            walk(s.body)

    walk(t)
    return out


# ---------------------------------------------------------------------------
# Renaming, Barendregt convention, substitution


def rename_bound(t: Term, mapping: dict[str, str]) -> Term:
    """Rename binders (and their occurrences) according to ``mapping``.

    The mapping must not identify distinct binders or capture free names;
    callers pick fresh targets.
    """

    def walk(s: Term, env: dict[str, str]) -> Term:
        if isinstance(s, Var):
            return Var(env.get(s.name, s.name))
        if isinstance(s, Abs):
            new = mapping.get(s.binder, s.binder)
            env2 = dict(env)
            env2[s.binder] = new
            return Abs(new, s.annotation, walk(s.body, env2))
        if isinstance(s, App):
            return App(walk(s.fun, env), walk(s.arg, env))
        assert isinstance(s, BoxSubst)
        bounds = tuple(
            (mapping.get(x, x), walk(b, env)) for x, b in s.bindings
        )
        env2 = dict(env)
        for x, _ in s.bindings:
            env2[x] = mapping.get(x, x)
        return BoxSubst(walk(s.body, env2), bounds)

    return walk(t, {})


def canonical(t: Term) -> Term:
    """Re-establish the Barendregt convention.

    Renames just enough binders that all binders are pairwise distinct and
    disjoint from the free variables.  Terms already in shape are returned
    unchanged, so equal inputs stay equal.
    """
    free = free_vars(t)
    seen: set[str] = set(free)
    mapping: dict[str, str] = {}
    clash = False
    for name in bound_names(t):
        if name in seen:
            clash = True
        else:
            seen.add(name)
    if not clash:
        return t

    taken = set(free) | set(bound_names(t))

    used: set[str] = set(free)

    def _pick(name: str) -> str:
        if name not in used:
            used.add(name)
            return name
        new = fresh_name(name)
        while new in taken or new in used:
            new = fresh_name(name)
        used.add(new)
        return new

    def walk(s: Term, env: dict[str, str]) -> Term:
        if isinstance(s, Var):
            return Var(env.get(s.name, s.name))
        if isinstance(s, Abs):
            new = _pick(s.binder)
            env2 = dict(env)
            env2[s.binder] = new
            return Abs(new, s.annotation, walk(s.body, env2))
        if isinstance(s, App):
            return App(walk(s.fun, env), walk(s.arg, env))
        assert isinstance(s, BoxSubst)
        news = []
        bounds = []
        for x, b in s.bindings:
            news.append(_pick(x))
            bounds.append(walk(b, env))
        env2 = dict(env)
        for (x, _), new in zip(s.bindings, news):
            env2[x] = new
        return BoxSubst(walk(s.body, env2), tuple(zip(news, bounds)))

    return walk(t, {})


def substitute(t: Term, replacements) -> Term:
    """Simultaneous capture-avoiding substitution.

    ``replacements`` maps names to terms (a dict or a list of pairs with
    pairwise distinct targets).  Bound names are freshened on demand; the
    result is re-canonicalized.
    """
    if not isinstance(replacements, dict):
        pairs = list(replacements)
        names = [x for x, _ in pairs]
        if len(set(names)) != len(names):
            raise ValueError("substitution targets must be distinct")
        replacements = dict(pairs)
    if not replacements:
        return t
    avoid: set[str] = set()
    for s in replacements.values():
        avoid |= free_vars(s)

    def walk(s: Term, repl: dict[str, Term]) -> Term:
        if not repl:
            return s
        if isinstance(s, Var):
            return repl.get(s.name, s)
        if isinstance(s, Abs):
            repl2 = {x: n for x, n in repl.items() if x != s.binder}
            relevant = any(x in free_vars(s.body) for x in repl2)
            if not relevant:
                return s
            binder = s.binder
            body = s.body
            if binder in avoid:
                new = fresh_name(binder)
                body = rename_bound(Abs(binder, s.annotation, body), {binder: new}).body
                binder = new
            return Abs(binder, s.annotation, walk(body, repl2))
        if isinstance(s, App):
            return App(walk(s.fun, repl), walk(s.arg, repl))
        assert isinstance(s, BoxSubst)
        # Binders scope over the body only, so substitution passes into the
        # bound terms and never under the binders.
        return BoxSubst(s.body, tuple((x, walk(b, repl)) for x, b in s.bindings))

    return canonical(walk(t, dict(replacements)))


# ---------------------------------------------------------------------------
# Alpha equivalence (includes binding permutations via canonical order)


def alpha_eq(t1: Term, t2: Term) -> bool:
    return _alpha(t1, t2, {}, {})


def _alpha(t1: Term, t2: Term, env1: dict[str, str], env2: dict[str, str]) -> bool:
    if isinstance(t1, Var) and isinstance(t2, Var):
        k1 = env1.get(t1.name, ("free", t1.name))
        k2 = env2.get(t2.name, ("free", t2.name))
        return k1 == k2
    if isinstance(t1, Abs) and isinstance(t2, Abs):
        if t1.annotation != t2.annotation:
            return False
        tag = ("bound", len(env1))
        e1 = dict(env1)
        e1[t1.binder] = tag
        e2 = dict(env2)
        e2[t2.binder] = tag
        return _alpha(t1.body, t2.body, e1, e2)
    if isinstance(t1, App) and isinstance(t2, App):
        return _alpha(t1.fun, t2.fun, env1, env2) and _alpha(t1.arg, t2.arg, env1, env2)
    if isinstance(t1, BoxSubst) and isinstance(t2, BoxSubst):
        if len(t1.bindings) != len(t2.bindings):
            return False
        used1 = [b for b in t1.bindings if occurrences(t1.body, b[0]) > 0]
        used2 = [b for b in t2.bindings if occurrences(t2.body, b[0]) > 0]
        vac1 = [b for b in t1.bindings if occurrences(t1.body, b[0]) == 0]
        vac2 = [b for b in t2.bindings if occurrences(t2.body, b[0]) == 0]
        if len(used1) != len(used2):
            return False
        # Used binders are in canonical (first-occurrence) order on both
        # sides, so they pair positionally.
        for (_, b1), (_, b2) in zip(used1, used2):
            if not _alpha(b1, b2, env1, env2):
                return False
        # Vacuous bindings are order-irrelevant: match as a multiset.
        remaining = list(vac2)
        for _, b1 in vac1:
            for i, (_, b2) in enumerate(remaining):
                if _alpha(b1, b2, env1, env2):
                    del remaining[i]
                    break
            else:
                return False
        e1 = dict(env1)
        e2 = dict(env2)
        for i, ((x1, _), (x2, _)) in enumerate(zip(used1, used2)):
            tag = ("let", len(env1), i)
            e1[x1] = tag
            e2[x2] = tag
        return _alpha(t1.body, t2.body, e1, e2)
    return False


def alpha_eq_in_context(ctx1, t1: Term, ctx2, t2: Term, goal: Formula) -> bool:
    """Alpha equivalence that also identifies terms up to renaming of the
    context variables (both assignments must share the context types, in
    order, and the result type)."""
    types1 = [ty for _, ty in ctx1]
    types2 = [ty for _, ty in ctx2]
    if types1 != types2:
        raise ValueError("context type lists differ")
    del goal  # same goal is a caller-side requirement; nothing to compare here
    zs = [Var(f"_ctx{i}") for i in range(len(types1))]
    s1 = substitute(t1, list(zip((x for x, _ in ctx1), zs)))
    s2 = substitute(t2, list(zip((x for x, _ in ctx2), zs)))
    return alpha_eq(s1, s2)

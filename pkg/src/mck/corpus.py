"""Generators and property suites over generated terms and formulas.

The random generator is type directed, so every emitted pair (context,
term) is typable by construction.  It deliberately produces redexes:
beta redexes are injected, box-substitutions may carry vacuous binders
and duplicated bound terms, and variables of arrow or box type show up
in expandable positions.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .arena import arena_of_sequent
from .correspond import roundtrip_strategy, roundtrip_term, strategy_of_derivation
from .fck import enumerate_fck, fck_check, fck_derive, fck_equal
from .games import BoundExceeded, is_ck_wis, search_ck_wis
from .rewrite import (
    ReductionKind,
    eta_measure,
    find_redexes,
    in_lambda_hat,
    is_normal,
    kappa_measure,
    normalize,
    step,
)
from .sck import ProveStatus, Sequent, prove
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
    alpha_eq,
    alpha_eq_in_context,
    term_size,
)
from .typing import Context, check_type, extend, infer_type, TypeAssignment

ATOMS = ("a", "b", "c")


def gen_formula(rng: random.Random, depth: int = 2, atoms=ATOMS) -> Formula:
    if depth <= 0 or rng.random() < 0.4:
        return Atom(rng.choice(atoms))
    if rng.random() < 0.45:
        return Box(gen_formula(rng, depth - 1, atoms))
    return Arrow(gen_formula(rng, depth - 1, atoms), gen_formula(rng, depth - 1, atoms))


def gen_context(rng: random.Random, atoms=ATOMS) -> Context:
    n = rng.randint(0, 4)
    return tuple((f"g{i + 1}", gen_formula(rng, 2, atoms)) for i in range(n))


class _Gen:
    def __init__(self, rng: random.Random, atoms=ATOMS):
        self.rng = rng
        self.atoms = atoms
        self.counter = itertools.count(1)

    def fresh(self) -> str:
        return f"x{next(self.counter)}"

    def term(self, ctx: Context, goal: Formula, fuel: int) -> Term | None:
        rng = self.rng
        simple = [("var", name) for name, f in ctx if f == goal]
        makers = []
        if fuel > 0:
            if isinstance(goal, Arrow):
                makers.append(("abs",))
            if isinstance(goal, Box):
                makers.append(("boxsubst",))
                makers.append(("boxsubst",))
            for name, f in ctx:
                spine = self._spine_uses(f, goal)
                for k in spine:
                    if k > 0:
                        makers.append(("use", name, k))
            makers.append(("beta",))
        rng.shuffle(makers)
        rng.shuffle(simple)
        # keep the corpus structured: direct variables mostly as a fallback
        if simple and (not makers or rng.random() < 0.25):
            makers = simple + makers
        else:
            makers = makers + simple
        for maker in makers:
            t = self._attempt(maker, ctx, goal, fuel)
            if t is not None:
                return t
        return None

    def _spine_uses(self, f: Formula, goal: Formula) -> list[int]:
        out = []
        k = 0
        while True:
            if f == goal:
                out.append(k)
            if not isinstance(f, Arrow):
                return out
            f = f.codomain
            k += 1

    def _attempt(self, maker, ctx: Context, goal: Formula, fuel: int) -> Term | None:
        rng = self.rng
        if maker[0] == "var":
            return Var(maker[1])
        if maker[0] == "abs":
            assert isinstance(goal, Arrow)
            x = self.fresh()
            body = self.term(extend(ctx, (x, goal.domain)), goal.codomain, fuel - 1)
            return None if body is None else Abs(x, goal.domain, body)
        if maker[0] == "use":
            _, name, k = maker
            f = dict(ctx)[name]
            t: Term = Var(name)
            for _ in range(k):
                assert isinstance(f, Arrow)
                arg = self.term(ctx, f.domain, fuel - 1)
                if arg is None:
                    return None
                t = App(t, arg)
                f = f.codomain
            return t
        if maker[0] == "beta":
            ann = gen_formula(rng, 1, self.atoms)
            arg = self.term(ctx, ann, fuel - 1)
            if arg is None:
                return None
            x = self.fresh()
            body = self.term(extend(ctx, (x, ann)), goal, fuel - 1)
            if body is None:
                return None
            return App(Abs(x, ann, body), arg)
        assert maker[0] == "boxsubst"
        assert isinstance(goal, Box)
        bounds: list[Term] = []
        n = rng.randint(0, 2)
        box_decls = [name for name, f in ctx if isinstance(f, Box)]
        for _ in range(n):
            if box_decls and rng.random() < 0.7:
                bounds.append(Var(rng.choice(box_decls)))
            else:
                bf = Box(gen_formula(rng, 1, self.atoms))
                sub = self.term(ctx, bf, fuel - 1)
                if sub is None:
                    return None
                bounds.append(sub)
        if bounds and rng.random() < 0.25:
            bounds.append(bounds[rng.randrange(len(bounds))])  # kappa2 fodder
        binders = [self.fresh() for _ in bounds]
        inner = []
        for x, bound in zip(binders, bounds):
            bty, _ = infer_type(ctx, bound)
            assert isinstance(bty, Box)
            inner.append((x, bty.body))
        body = self.term(tuple(inner), goal.body, fuel - 1)
        if body is None:
            return None
        return BoxSubst(body, tuple(zip(binders, bounds)))


def generate_terms(
    count: int, seed: int = 0, max_size: int = 12, atoms=ATOMS
) -> list[tuple[Context, Term]]:
    """``count`` typable (context, term) pairs, deterministically seeded."""
    rng = random.Random(seed)
    out: list[tuple[Context, Term]] = []
    while len(out) < count:
        gen = _Gen(rng, atoms)
        ctx = gen_context(rng, atoms)
        goal = gen_formula(rng, 2, atoms)
        t = gen.term(ctx, goal, fuel=4)
        if t is None or term_size(t) > max_size:
            continue
        from .syntax import canonical

        t = canonical(t)
        infer_type(ctx, t)  # generator invariant
        out.append((ctx, t))
    return out


# ---------------------------------------------------------------------------
# Exhaustive enumerations


def enumerate_formulas(max_connectives: int, atoms=("a", "b")):
    """All formulas over ``atoms`` with at most ``max_connectives``
    arrows-plus-boxes, grouped by exact count."""
    by_size: list[list[Formula]] = [[Atom(x) for x in atoms]]
    for n in range(1, max_connectives + 1):
        layer: list[Formula] = [Box(f) for f in by_size[n - 1]]
        for i in range(n):
            for dom in by_size[i]:
                for cod in by_size[n - 1 - i]:
                    layer.append(Arrow(dom, cod))
        by_size.append(layer)
    for layer in by_size:
        yield from layer


def canonical_atom_form(f: Formula, atoms=("a", "b")) -> Formula:
    """Rename atoms in first-occurrence order; used to dedup the formula
    corpus under the atom symmetry that both the prover and the strategy
    search respect."""
    mapping: dict[str, str] = {}

    def walk(g: Formula) -> Formula:
        if isinstance(g, Atom):
            if g.name not in mapping:
                mapping[g.name] = atoms[len(mapping)]
            return Atom(mapping[g.name])
        if isinstance(g, Box):
            return Box(walk(g.body))
        assert isinstance(g, Arrow)
        return Arrow(walk(g.domain), walk(g.codomain))

    return walk(f)


def formula_corpus(max_connectives: int, atoms=("a", "b"), dedup: bool = True):
    seen = set()
    for f in enumerate_formulas(max_connectives, atoms):
        if dedup:
            c = canonical_atom_form(f, atoms)
            if c != f or c in seen:
                continue
            seen.add(c)
        yield f


_ENUM_POOL = (
    Atom("a"),
    Atom("b"),
    Arrow(Atom("a"), Atom("a")),
    Arrow(Atom("a"), Atom("b")),
    Box(Atom("a")),
)

_ENUM_CONTEXT: Context = (
    ("u", Atom("a")),
    ("f", Arrow(Atom("a"), Atom("a"))),
    ("z", Box(Atom("a"))),
)


def enumerate_typable_terms(max_size: int, ctx: Context = _ENUM_CONTEXT, pool=_ENUM_POOL):
    """Every typable term of size <= max_size over the given context whose
    annotations and intermediate types stay inside the formula pool."""
    pool = tuple(pool)
    memo: dict = {}

    def terms(c: Context, goal: Formula, size: int):
        key = (c, goal, size)
        if key in memo:
            return memo[key]
        out: list[Term] = [Var(x) for x, f in c if f == goal]
        if size >= 1:
            if isinstance(goal, Arrow) and goal.domain in pool:
                x = f"b{len(c)}"
                if all(x != y for y, _ in c):
                    for body in terms(extend(c, (x, goal.domain)), goal.codomain, size - 1):
                        out.append(Abs(x, goal.domain, body))
            for a in pool:
                for fun in terms(c, Arrow(a, goal), size - 1):
                    for arg in terms(c, a, size - 1):
                        out.append(App(fun, arg))
            if isinstance(goal, Box):
                for n in range(0, 3):
                    for bound_types in itertools.product(
                        [p for p in pool if isinstance(p, Box)], repeat=n
                    ):
                        bound_lists = [terms(c, bt, size - 1) for bt in bound_types]
                        binders = [f"l{len(c)}{i}" for i in range(n)]
                        if any(any(b == y for y, _ in c) for b in binders):
                            continue
                        inner = tuple(
                            (x, bt.body) for x, bt in zip(binders, bound_types)
                        )
                        for bounds in itertools.product(*bound_lists):
                            for body in terms(inner, goal.body, size - 1):
                                out.append(
                                    BoxSubst(body, tuple(zip(binders, bounds)))
                                )
        memo[key] = out
        return out

    seen = set()
    for goal in pool:
        for t in terms(ctx, goal, max_size):
            if t not in seen:
                seen.add(t)
                yield ctx, t


# ---------------------------------------------------------------------------
# Property suites


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def line(self) -> str:
        mark = "pass" if self.ok else "FAIL"
        extra = "" if self.ok else f" ({len(self.failures)} failures)"
        return f"[{mark}] {self.name}: {self.checked} checks{extra}"


def _show(ctx: Context, t: Term) -> str:
    try:
        ty, _ = infer_type(ctx, t)
        return print_assignment(ctx, t, ty)
    except Exception:
        return print_term(t)


def subject_reduction_suite(pairs) -> SuiteResult:
    res = SuiteResult("subject reduction along every step")
    for ctx, t in pairs:
        ty, _ = infer_type(ctx, t)
        term = t
        for _ in range(500):
            redexes = find_redexes(ctx, term)
            if not redexes:
                break
            for r in redexes:
                res.checked += 1
                nxt = step(ctx, term, r)
                ty2, _ = infer_type(ctx, nxt)
                if ty2 != ty:
                    res.failures.append(f"{_show(ctx, term)} step {r.describe()}")
            term = step(ctx, term, redexes[0])
    return res


def termination_suite(pairs, max_steps: int = 500) -> SuiteResult:
    res = SuiteResult("termination and measure decrease")
    for ctx, t in pairs:
        res.checked += 1
        term = t
        for n in range(max_steps + 1):
            redexes = find_redexes(ctx, term)
            if not redexes:
                break
            r = redexes[0]
            nxt = step(ctx, term, r)
            if r.kind in (ReductionKind.KAPPA1, ReductionKind.KAPPA2):
                if not kappa_measure(nxt) < kappa_measure(term):
                    res.failures.append(f"kappa measure at {_show(ctx, term)}")
            if r.kind in (ReductionKind.ETA1, ReductionKind.ETA2):
                before = sum(eta_measure(ctx, term))
                after = sum(eta_measure(ctx, nxt))
                if after >= before:
                    decreases = [
                        sum(eta_measure(ctx, step(ctx, nxt, r2))) < before
                        for r2 in find_redexes(ctx, nxt)
                        if r2.kind in (ReductionKind.ETA1, ReductionKind.ETA2)
                    ]
                    if not any(decreases):
                        res.failures.append(f"eta measure at {_show(ctx, term)}")
            term = nxt
        else:
            res.failures.append(f"no normal form in {max_steps} steps: {_show(ctx, t)}")
    return res


def confluence_suite(pairs, seeds=(1, 2, 3)) -> SuiteResult:
    res = SuiteResult("strategy independence of normal forms")
    for ctx, t in pairs:
        res.checked += 1
        types = tuple(f for _, f in ctx)
        goal, _ = infer_type(ctx, t)
        left, _ = normalize(ctx, t, "leftmost")
        right, _ = normalize(ctx, t, "rightmost")
        results = [left, right]
        for s in seeds:
            results.append(normalize(ctx, t, "random", seed=s)[0])
        for other in results[1:]:
            if not alpha_eq_in_context(ctx, left, ctx, other, goal):
                res.failures.append(_show(ctx, t))
                break
    return res


def local_confluence_suite(pairs, join_steps: int = 8, max_size: int = 8) -> SuiteResult:
    res = SuiteResult("local confluence of redex pairs")
    for ctx, t in pairs:
        if term_size(t) > max_size:
            continue
        redexes = find_redexes(ctx, t)
        for i in range(len(redexes)):
            for j in range(i + 1, len(redexes)):
                res.checked += 1
                if not _rejoins(ctx, step(ctx, t, redexes[i]), step(ctx, t, redexes[j]), join_steps):
                    res.failures.append(
                        f"{_show(ctx, t)} at {redexes[i].describe()} / {redexes[j].describe()}"
                    )
    return res


def _canon_key(ctx: Context, t: Term):
    zs = [Var(f"_r{i}") for i in range(len(ctx))]
    from .syntax import substitute

    renamed = substitute(t, list(zip((x for x, _ in ctx), zs)))
    return _alpha_key(renamed)


def _alpha_key(t: Term, env=None):
    env = env or {}
    if isinstance(t, Var):
        return ("v", env.get(t.name, t.name))
    if isinstance(t, Abs):
        e = dict(env)
        e[t.binder] = f"#{len(env)}"
        return ("l", t.annotation, _alpha_key(t.body, e))
    if isinstance(t, App):
        return ("@", _alpha_key(t.fun, env), _alpha_key(t.arg, env))
    assert isinstance(t, BoxSubst)
    e = dict(env)
    for i, (x, _) in enumerate(t.bindings):
        e[x] = f"#{len(env)}.{i}"
    return (
        "s",
        tuple(_alpha_key(b, env) for _, b in t.bindings),
        _alpha_key(t.body, e),
    )


def _rejoins(ctx: Context, t1: Term, t2: Term, budget: int) -> bool:
    seen1 = {_canon_key(ctx, t1)}
    seen2 = {_canon_key(ctx, t2)}
    frontier1, frontier2 = [t1], [t2]
    if seen1 & seen2:
        return True
    for _ in range(budget):
        nxt1 = []
        for t in frontier1:
            for r in find_redexes(ctx, t):
                u = step(ctx, t, r)
                k = _canon_key(ctx, u)
                if k not in seen1:
                    seen1.add(k)
                    nxt1.append(u)
        nxt2 = []
        for t in frontier2:
            for r in find_redexes(ctx, t):
                u = step(ctx, t, r)
                k = _canon_key(ctx, u)
                if k not in seen2:
                    seen2.add(k)
                    nxt2.append(u)
        frontier1, frontier2 = nxt1, nxt2
        if seen1 & seen2:
            return True
        if not frontier1 and not frontier2:
            break
    return bool(seen1 & seen2)


def normal_form_suite(pairs) -> SuiteResult:
    res = SuiteResult("normal forms match the inductive characterization")
    for ctx, t in pairs:
        term = t
        for _ in range(500):
            res.checked += 1
            if is_normal(ctx, term) != in_lambda_hat(ctx, term):
                res.failures.append(_show(ctx, term))
            redexes = find_redexes(ctx, term)
            if not redexes:
                break
            term = step(ctx, term, redexes[0])
    return res


def fck_uniqueness_suite(pairs, max_size: int = 10) -> SuiteResult:
    res = SuiteResult("canonical derivations are unique")
    for ctx, t in pairs:
        nf, _ = normalize(ctx, t)
        if term_size(nf) > max_size:
            continue
        res.checked += 1
        d = fck_derive(ctx, nf)
        if not fck_check(d):
            res.failures.append(f"check: {_show(ctx, nf)}")
            continue
        ty, _ = infer_type(ctx, nf)
        found = enumerate_fck(ctx, nf, ty)
        if len(found) != 1 or not fck_equal(found[0], d):
            res.failures.append(f"{len(found)} derivations: {_show(ctx, nf)}")
    return res


def roundtrip_term_suite(pairs) -> SuiteResult:
    res = SuiteResult("term -> strategy -> term round trip")
    for ctx, t in pairs:
        nf, _ = normalize(ctx, t)
        res.checked += 1
        report = roundtrip_term(ctx, nf)
        if not report.roundtrip_ok:
            res.failures.append(f"{_show(ctx, nf)}: {report.diff}")
        goal, _ = infer_type(ctx, nf)
        arena = arena_of_sequent(tuple(f for _, f in ctx), goal)
        if not is_ck_wis(arena, report.strategy):
            res.failures.append(f"strategy invalid: {_show(ctx, nf)}")
    return res


def full_completeness_suite(
    max_connectives: int, depth: int = 12, max_views: int = 4000, atoms=("a", "b"),
    dedup: bool = True, roundtrip: bool = True,
) -> SuiteResult:
    res = SuiteResult(
        f"strategy search agrees with proof search (<= {max_connectives} connectives)"
    )
    memo: dict = {}
    for f in formula_corpus(max_connectives, atoms, dedup=dedup):
        res.checked += 1
        result = prove(Sequent((), f), depth=depth, memo=memo)
        if result.status is ProveStatus.BOUND_EXCEEDED:
            res.failures.append(f"prover bound exceeded: {print_formula(f)}")
            continue
        try:
            strategy = search_ck_wis(arena_of_sequent((), f), max_views=max_views)
        except BoundExceeded:
            res.failures.append(f"search bound exceeded: {print_formula(f)}")
            continue
        provable = result.status is ProveStatus.PROVED
        if provable != (strategy is not None):
            res.failures.append(
                f"disagreement on {print_formula(f)}: prover={provable}, game={strategy is not None}"
            )
            continue
        if strategy is not None and roundtrip:
            report = roundtrip_strategy((), f, strategy)
            if not report.roundtrip_ok:
                res.failures.append(
                    f"strategy round trip failed on {print_formula(f)}: {report.diff}"
                )
    return res


def run_all(count: int = 200, seed: int = 0, max_size: int = 12,
            max_connectives: int = 4) -> list[SuiteResult]:
    pairs = generate_terms(count, seed=seed, max_size=max_size)
    results = [
        subject_reduction_suite(pairs),
        termination_suite(pairs),
        confluence_suite(pairs),
        local_confluence_suite(pairs),
        normal_form_suite(pairs),
        fck_uniqueness_suite(pairs),
        roundtrip_term_suite(pairs),
        full_completeness_suite(max_connectives),
    ]
    return results

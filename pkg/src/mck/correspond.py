"""Between canonical derivations and strategies, both directions.

The strategy of a derivation is built by structural recursion.  Pointer
bookkeeping is the delicate part: the response move for a variable use
must point at the occurrence where that variable's binding entered the
play.  During construction such pointers stay symbolic, ("a", name); a
symbol becomes the concrete position 0 at the level that introduced the
name (an abstraction block), is forwarded to the bound variable (box
introduction) or to the head it replaced (the splitting rule), and any
symbol still alive at the root belongs to a context variable, whose
entry occurrence is position 0 of the whole view.  Attaching a
sub-denotation after a prefix shifts concrete pointers and leaves
symbols alone.

The term of a strategy inverts this: views are sliced at the entry move
of each argument sub-game, and sliced-away pointers are kept as anchor
ids so that two binders living at the same arena vertex (nested uses of
one hypothesis) stay distinguishable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .arena import Arena, arena_of_sequent, goal_prefix, hypothesis_prefix, root_path
from .fck import FckDerivation, NotNormal, fck_derive
from .games import View, is_ck_wis, view_to_list
from .rewrite import head_spine, in_lambda_hat
from .surface import print_formula, print_term
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
    alpha_eq_in_context,
    flatten_arrow,
)
from .typing import Context, TypeAssignment, infer_type


class NotCkWis(Exception):
    pass


class TrivialStrategy(Exception):
    pass


class DecompositionFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# Derivation -> strategy

# during construction a pointer is None (first move), an int, or a symbol
# ("a", name) awaiting the position of name's binding occurrence


def _shift(p, offset: int):
    out = []
    for i, (v, ptr) in enumerate(p):
        if i == 0:
            out.append((v, offset - 1))
        elif isinstance(ptr, int):
            out.append((v, ptr + offset))
        else:
            out.append((v, ptr))
    return tuple(out)


def _resolve(views, name: str, target):
    sym = ("a", name)
    return {
        tuple((v, target if ptr == sym else ptr) for v, ptr in p) for p in views
    }


def strategy_of_derivation(d: FckDerivation) -> frozenset[View]:
    """The strategy denoted by a canonical derivation, over the arena of
    its conclusion sequent (hypotheses in context order)."""
    ctx = d.conclusion.context
    env = {
        name: (formula, hypothesis_prefix(i)) for i, (name, formula) in enumerate(ctx)
    }
    views = _den(d, env, (d.conclusion.type, goal_prefix(len(ctx))))
    for name in env:
        views = _resolve(views, name, 0)
    for p in views:
        for i, (v, ptr) in enumerate(p):
            if not (ptr is None if i == 0 else isinstance(ptr, int)):
                raise AssertionError(f"unresolved pointer {ptr!r} in {p!r}")
    return frozenset(views)


def _den(d: FckDerivation, env: dict, goal: tuple[Formula, str]):
    goal_formula, gp = goal
    subject = d.conclusion.subject
    if d.rule == "Ax":
        assert isinstance(subject, Var)
        root = gp + root_path(goal_formula)
        hyp_formula, hp = env[subject.name]
        m = hp + root_path(hyp_formula)
        return {(), ((root, None),), ((root, None), (m, ("a", subject.name)))}
    if d.rule == "ArrowRStar":
        binders = []
        body = subject
        while isinstance(body, Abs):
            binders.append((body.binder, body.annotation))
            body = body.body
        env2 = dict(env)
        f = goal_formula
        prefix = gp
        for x, ann in binders:
            assert isinstance(f, Arrow)
            env2[x] = (ann, prefix + "0")
            f = f.codomain
            prefix = prefix + "1"
        views = _den(d.premises[0], env2, (f, prefix))
        for x, _ in binders:
            views = _resolve(views, x, 0)
        return views
    if d.rule == "KBox":
        assert isinstance(subject, BoxSubst) and isinstance(goal_formula, Box)
        env2 = dict(env)
        for x, bound in subject.bindings:
            assert isinstance(bound, Var)
            bound_formula, bp = env[bound.name]
            assert isinstance(bound_formula, Box)
            env2[x] = (bound_formula.body, bp + "1")
        views = _den(d.premises[0], env2, (goal_formula.body, gp + "1"))
        for x, bound in subject.bindings:
            views = _resolve(views, x, ("a", bound.name))
        return views
    if d.rule == "ArrowLAx":
        head, args = head_spine(subject)
        assert isinstance(head, Var)
        head_formula, hp = env[head.name]
        domains, _ = flatten_arrow(head_formula)
        root = gp + root_path(goal_formula)
        m = hp + "1" * len(domains) + root_path(Atom("_"))
        base = ((root, None), (m, ("a", head.name)))
        views = {(), ((root, None),), base}
        for i, premise in enumerate(d.premises):
            sub = _den(premise, env, (domains[i], hp + "1" * i + "0"))
            for p in sub:
                if p:
                    views.add(base + _shift(p, 2))
        return views
    assert d.rule == "ArrowLK"
    assert isinstance(subject, BoxSubst) and isinstance(goal_formula, Box)
    right = d.premises[-1]
    fresh_entries = right.conclusion.context[len(d.conclusion.context):]
    applied = []
    for x, bound in subject.bindings:
        head, args = head_spine(bound)
        if isinstance(head, Var) and args:
            applied.append((x, head.name, args))
    assert len(fresh_entries) == len(applied)
    env_right = dict(env)
    info = []  # (fresh name, head name, b-vertex, domain prefixes, arg count)
    for (fresh, fresh_ty), (binder, head_name, args) in zip(fresh_entries, applied):
        head_formula, hp = env[head_name]
        domains, result = flatten_arrow(head_formula)
        assert isinstance(result, Box)
        env_right[fresh] = (result, hp + "1" * len(domains))
        b_vertex = hp + "1" * len(domains) + root_path(result)
        info.append((fresh, head_name, b_vertex, hp, len(domains)))
    base_views = _den(right, env_right, goal)
    views = set(base_views)
    arg_index = 0
    for (fresh, head_name, b_vertex, hp, k), (binder, _, args) in zip(info, applied):
        subs = []
        for j in range(k):
            premise = d.premises[arg_index]
            arg_index += 1
            head_formula, _ = env[head_name]
            domains, _ = flatten_arrow(head_formula)
            subs.append(_den(premise, env, (domains[j], hp + "1" * j + "0")))
        for w in base_views:
            if w and w[-1][0] == b_vertex:
                for sub in subs:
                    for p in sub:
                        if p:
                            views.add(w + _shift(p, len(w)))
    for fresh, head_name, _, _, _ in info:
        views = _resolve(views, fresh, ("a", head_name))
    return views


# ---------------------------------------------------------------------------
# Strategy -> term


@dataclass(frozen=True)
class _Entry:
    name: str
    formula: Formula
    prefix: str
    anchor: int


class _Rebuild:
    """Decomposition state: a frame of sliced views plus the environment.

    Pointers inside a frame are frame-relative ints or ("a", anchor_id)
    references to entry occurrences of enclosing frames.
    """

    def __init__(self, types, goal: Formula):
        self.counter = len(types)
        self.next_anchor = 1
        self.entries = [
            _Entry(f"v{i + 1}", f, hypothesis_prefix(i), 0) for i, f in enumerate(types)
        ]
        self.goal = (goal, goal_prefix(len(types)))

    def fresh_name(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def fresh_anchor(self) -> int:
        self.next_anchor += 1
        return self.next_anchor


def term_of_strategy(types, goal: Formula, s) -> tuple[Term, FckDerivation]:
    """The canonical normal form denoting a non-trivial valid strategy."""
    s = set(s)
    if s <= {()}:
        raise TrivialStrategy("the empty-view strategy denotes no term")
    arena = arena_of_sequent(tuple(types), goal)
    if not is_ck_wis(arena, s):
        raise NotCkWis("strategy fails validation")
    state = _Rebuild(tuple(types), goal)
    term, deriv = _decompose(state, list(state.entries), state.goal, 0, s)
    return term, deriv


def _slice(views, cut: int, frame_anchor: int):
    """Re-root each view at position ``cut``; pointers below the cut become
    anchor references."""
    out = set()
    for p in views:
        rest = p[cut:]
        moves = []
        for i, (v, ptr) in enumerate(rest):
            if i == 0:
                moves.append((v, None))
            elif isinstance(ptr, int):
                if ptr >= cut:
                    moves.append((v, ptr - cut))
                elif ptr == 0:
                    moves.append((v, ("a", frame_anchor)))
                else:
                    raise DecompositionFailure(
                        f"pointer into a sliced-away region at {p!r}"
                    )
            else:
                moves.append((v, ptr))
        out.add(tuple(moves))
    out.add(())
    return out


def _owner(entries, vertex: str):
    """The entry whose part contains the vertex (longest prefix wins)."""
    best = None
    for e in entries:
        if vertex.startswith(e.prefix):
            if best is None or len(e.prefix) > len(best.prefix):
                best = e
    return best


def _decompose(state: _Rebuild, entries: list[_Entry], goal, frame_anchor: int, views):
    goal_formula, gp = goal
    ctx: Context = tuple((e.name, e.formula) for e in entries)

    if isinstance(goal_formula, Arrow):
        domains, result = flatten_arrow(goal_formula)
        binders = []
        env2 = list(entries)
        prefix = gp
        for dom in domains:
            name = state.fresh_name()
            binders.append((name, dom))
            env2.append(_Entry(name, dom, prefix + "0", frame_anchor))
            prefix += "1"
        body, sub = _decompose(state, env2, (result, prefix), frame_anchor, views)
        term: Term = body
        for name, dom in reversed(binders):
            term = Abs(name, dom, term)
        ty, _ = infer_type(ctx, term)
        return term, FckDerivation(
            "ArrowRStar", TypeAssignment(ctx, term, ty), (sub,)
        )

    if isinstance(goal_formula, Atom):
        root = gp
        nonempty = sorted(p for p in views if p)
        if not nonempty or nonempty[0][0][0] != root:
            raise DecompositionFailure("strategy does not open at the goal root")
        two = [p for p in views if len(p) == 2]
        if len(two) != 1:
            raise DecompositionFailure("expected exactly one response to the root")
        (m_vertex, m_ptr) = two[0][1]
        anchor = frame_anchor if m_ptr == 0 else (
            m_ptr[1] if isinstance(m_ptr, tuple) else None
        )
        if anchor is None:
            raise DecompositionFailure(f"uninterpretable head pointer {m_ptr!r}")
        head = None
        for e in entries:
            if e.anchor == anchor and e.prefix + root_path(e.formula) == m_vertex:
                head = e
                break
        if head is None:
            raise DecompositionFailure(f"no declaration owns the move {m_vertex!r}")
        domains, result = flatten_arrow(head.formula)
        if result != goal_formula:
            raise DecompositionFailure("head does not deliver the goal atom")
        if not domains:
            if any(len(p) > 2 for p in views):
                raise DecompositionFailure("axiom strategy has excess views")
            term = Var(head.name)
            return term, FckDerivation("Ax", TypeAssignment(ctx, term, goal_formula))
        groups: dict[int, set] = {j: set() for j in range(len(domains))}
        for p in views:
            if len(p) <= 2:
                continue
            entry_vertex = p[2][0]
            for j in range(len(domains)):
                if entry_vertex.startswith(head.prefix + "1" * j + "0"):
                    groups[j].add(p)
                    break
            else:
                raise DecompositionFailure("continuation outside the head's arguments")
        args = []
        premises = []
        for j in range(len(domains)):
            sub_views = _slice(groups[j], 2, frame_anchor)
            sub_goal = (domains[j], head.prefix + "1" * j + "0")
            arg, prem = _decompose(
                state, list(entries), sub_goal, state.fresh_anchor(), sub_views
            )
            args.append(arg)
            premises.append(prem)
        term = Var(head.name)
        for a in args:
            term = App(term, a)
        return term, FckDerivation(
            "ArrowLAx", TypeAssignment(ctx, term, goal_formula), tuple(premises)
        )

    assert isinstance(goal_formula, Box)

    def contributions(view_set) -> dict[str, _Entry]:
        used: dict[str, _Entry] = {}
        for p in view_set:
            for v, _ in p:
                e = _owner(entries, v)
                if e is None:
                    continue
                # the goal region may sit inside a hypothesis part (it is a
                # subformula of the head when this is an argument sub-game)
                if v.startswith(gp) and len(gp) > len(e.prefix):
                    continue
                used[e.name] = e
        return used

    def residue_of(split) -> set:
        prefixes = []
        for e in split:
            domains, _ = flatten_arrow(e.formula)
            prefixes.extend(e.prefix + "1" * j + "0" for j in range(len(domains)))
        return {
            p
            for p in views
            if not any(v.startswith(dp) for v, _ in p for dp in prefixes)
        }

    def splittable(used) -> list[_Entry]:
        out = []
        for e in entries:
            if e.name not in used:
                continue
            domains, result = flatten_arrow(e.formula)
            if domains and isinstance(result, Box):
                out.append(e)
        return out

    # A hypothesis used only inside another split's argument sub-games is
    # not split here; shrink to a fixpoint (stable after two rounds).
    split_entries = splittable(contributions(views))
    for _ in range(len(entries) + 2):
        nxt = splittable(contributions(residue_of(split_entries)))
        if nxt == split_entries:
            break
        split_entries = nxt
    else:
        raise DecompositionFailure("unstable split of the bound hypotheses")

    kbox_entries = []
    for name, e in sorted(
        contributions(residue_of(split_entries)).items(),
        key=lambda kv: [x.name for x in entries].index(kv[0]),
    ):
        if e in split_entries:
            continue
        if isinstance(e.formula, Box):
            kbox_entries.append(e)
        else:
            raise DecompositionFailure(
                f"hypothesis {e.name!r} cannot feed a boxed goal"
            )

    if not split_entries:
        env2 = []
        bindings = []
        for e in kbox_entries:
            name = state.fresh_name()
            assert isinstance(e.formula, Box)
            env2.append(_Entry(name, e.formula.body, e.prefix + "1", e.anchor))
            bindings.append((name, Var(e.name)))
        body, sub = _decompose(
            state, env2, (goal_formula.body, gp + "1"), frame_anchor, views
        )
        term = BoxSubst(body, tuple(bindings))
        return term, FckDerivation(
            "KBox", TypeAssignment(ctx, term, goal_formula), (sub,)
        )

    # split every contributing arrow-into-box hypothesis at once
    residue = set()
    attachments: dict[tuple[str, int], set] = {}
    domain_prefixes = []
    for e in split_entries:
        domains, _ = flatten_arrow(e.formula)
        for j in range(len(domains)):
            domain_prefixes.append((e, j, e.prefix + "1" * j + "0"))
    for p in views:
        cut = None
        for pos, (v, _) in enumerate(p):
            hit = next(((e, j) for e, j, dp in domain_prefixes if v.startswith(dp)), None)
            if hit is not None:
                cut = (pos, hit)
                break
        if cut is None:
            residue.add(p)
            continue
        pos, (e, j) = cut
        if pos == 0:
            raise DecompositionFailure("argument entry without a preceding use")
        b_vertex = e.prefix + "1" * len(flatten_arrow(e.formula)[0]) + root_path(
            flatten_arrow(e.formula)[1]
        )
        if p[pos - 1][0] != b_vertex:
            raise DecompositionFailure("argument entry not anchored at the head use")
        prefix = p[:pos]
        if prefix not in residue and prefix not in views:
            raise DecompositionFailure("attachment prefix missing from the strategy")
        attachments.setdefault((e.name, j), set()).add((prefix, p[pos:]))

    env_right = list(entries)
    fresh_by_split = {}
    for e in split_entries:
        domains, result = flatten_arrow(e.formula)
        name = state.fresh_name()
        fresh_by_split[e.name] = name
        env_right.append(_Entry(name, result, e.prefix + "1" * len(domains), e.anchor))

    arg_premises = []
    arg_terms: dict[tuple[str, int], Term] = {}
    for e in split_entries:
        domains, _ = flatten_arrow(e.formula)
        for j in range(len(domains)):
            pairs = attachments.get((e.name, j), set())
            if not pairs:
                raise DecompositionFailure(
                    f"no play enters argument {j} of {e.name!r}"
                )
            cuts = {len(prefix) for prefix, _ in pairs}
            sub_views = set()
            for prefix, rest in pairs:
                sub_views |= _slice({prefix + rest}, len(prefix), frame_anchor)
            sub_goal = (domains[j], e.prefix + "1" * j + "0")
            arg, prem = _decompose(
                state, list(entries), sub_goal, state.fresh_anchor(), sub_views
            )
            arg_terms[(e.name, j)] = arg
            arg_premises.append(prem)

    residue_term, right = _decompose(
        state, env_right, goal, frame_anchor, residue
    )
    if not isinstance(residue_term, BoxSubst):
        raise DecompositionFailure("residue did not rebuild a box-substitution")
    new_bindings = []
    for x, bound in residue_term.bindings:
        replaced = False
        if isinstance(bound, Var):
            for e in split_entries:
                if fresh_by_split[e.name] == bound.name:
                    domains, _ = flatten_arrow(e.formula)
                    spine: Term = Var(e.name)
                    for j in range(len(domains)):
                        spine = App(spine, arg_terms[(e.name, j)])
                    new_bindings.append((x, spine))
                    replaced = True
                    break
        if not replaced:
            new_bindings.append((x, bound))
    term = BoxSubst(residue_term.body, tuple(new_bindings))
    return term, FckDerivation(
        "ArrowLK",
        TypeAssignment(ctx, term, goal_formula),
        tuple(arg_premises) + (right,),
    )


# ---------------------------------------------------------------------------
# Round trips


@dataclass(frozen=True)
class CorrespondenceReport:
    term: Term
    derivation: FckDerivation
    strategy: frozenset[View]
    roundtrip_ok: bool
    diff: str = ""

    def to_json(self, types, goal: Formula) -> str:
        arena = arena_of_sequent(tuple(types), goal)
        doc = {
            "term": print_term(self.term),
            "goal": print_formula(goal),
            "hypotheses": [print_formula(f) for f in types],
            "strategy": [view_to_list(p) for p in sorted(self.strategy)],
            "roundtrip_ok": self.roundtrip_ok,
        }
        if self.diff:
            doc["diff"] = self.diff
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def roundtrip_term(ctx: Context, term: Term) -> CorrespondenceReport:
    """term -> derivation -> strategy -> term, compared up to renaming of
    the context variables."""
    if not in_lambda_hat(ctx, term):
        raise NotNormal("round trips start from normal forms")
    d = fck_derive(ctx, term)
    s = strategy_of_derivation(d)
    types = tuple(f for _, f in ctx)
    goal = d.conclusion.type
    term2, _ = term_of_strategy(types, goal, s)
    ctx2 = tuple((f"v{i + 1}", f) for i, f in enumerate(types))
    ok = alpha_eq_in_context(ctx, term, ctx2, term2, goal)
    diff = "" if ok else f"reconstructed {print_term(term2)}"
    return CorrespondenceReport(term, d, s, ok, diff)


def roundtrip_strategy(types, goal: Formula, s) -> CorrespondenceReport:
    """strategy -> term -> derivation -> strategy, compared as sets."""
    term, d = term_of_strategy(types, goal, s)
    s2 = strategy_of_derivation(d)
    ok = frozenset(s) == s2
    diff = ""
    if not ok:
        missing = sorted(frozenset(s) ^ s2)
        diff = f"first differing view: {view_to_list(missing[0])}"
    return CorrespondenceReport(term, d, s2, ok, diff)

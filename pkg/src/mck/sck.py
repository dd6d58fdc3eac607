"""Bounded backward proof search in a cut-free sequent calculus.

Rules: axiom on atoms, right and left implication, the box rule (all
hypotheses un-boxed at once), weakening and contraction; exchange is
implicit (sequents carry multisets).  The search works on set-contexts
with memoization and ancestor pruning, which decides the subformula-
closed space; weakening and contraction are re-inserted explicitly when
a derivation is reconstructed, so emitted derivations use the primitive
rules only.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .surface import print_formula, print_sequent
from .syntax import Arrow, Atom, Box, Formula


@dataclass(frozen=True)
class Sequent:
    hypotheses: tuple[Formula, ...]  # multiset; order is presentation only
    goal: Formula

    def key(self) -> tuple:
        return (frozenset(self.hypotheses), self.goal)


@dataclass(frozen=True)
class SckDerivation:
    rule: str  # ax | impR | impL | Kbox | W | C
    conclusion: Sequent
    premises: tuple["SckDerivation", ...] = ()
    principal: Formula | None = None


class ProveStatus(Enum):
    PROVED = "proved"
    UNPROVABLE = "unprovable"
    BOUND_EXCEEDED = "bound exceeded"


@dataclass(frozen=True)
class ProveResult:
    status: ProveStatus
    derivation: SckDerivation | None = None


# Internal proof skeletons over set-contexts:
#   ("ax", atom) | ("impR", sub) | ("impL", arrow, left, right) | ("K", sub)


class _Search:
    """Backward search on set-contexts.

    Successes are memoized unconditionally.  A failure is memoized only
    when the subtree below it was explored without hitting the depth
    floor or an ancestor repetition; such failures are path-independent.
    Minimal proofs repeat no sequent along a branch, so pruning ancestor
    repetitions keeps the search complete.
    """

    def __init__(self, depth: int, memo: dict | None = None):
        self.max_depth = depth
        self.memo = memo if memo is not None else {}
        self.depth_hit = False
        self.tainted = False

    def run(self, hyps: frozenset, goal: Formula, depth: int, path: frozenset):
        key = (hyps, goal)
        if key in self.memo:
            return self.memo[key]
        if key in path:
            self.tainted = True
            return None
        if depth <= 0:
            self.depth_hit = True
            self.tainted = True
            return None
        path = path | {key}
        outer_taint = self.tainted
        self.tainted = False

        result = None
        if isinstance(goal, Arrow):
            sub = self.run(hyps | {goal.domain}, goal.codomain, depth - 1, path)
            if sub is not None:
                result = ("impR", sub)
        else:
            if isinstance(goal, Atom) and goal in hyps:
                result = ("ax", goal)
            if result is None and isinstance(goal, Box):
                boxed = frozenset(f.body for f in hyps if isinstance(f, Box))
                sub = self.run(boxed, goal.body, depth - 1, path)
                if sub is not None:
                    result = ("K", sub)
            if result is None:
                for f in sorted(hyps, key=print_formula):
                    if not isinstance(f, Arrow):
                        continue
                    left = self.run(hyps, f.domain, depth - 1, path)
                    if left is None:
                        continue
                    right = self.run((hyps - {f}) | {f.codomain}, goal, depth - 1, path)
                    if right is not None:
                        result = ("impL", f, left, right)
                        break

        if result is not None:
            self.memo[key] = result
        elif not self.tainted:
            self.memo[key] = None
        self.tainted = self.tainted or outer_taint
        return result


def prove(sequent: Sequent, depth: int = 12, memo: dict | None = None) -> ProveResult:
    """Depth-bounded backward search; reports whether failure is exhaustive.

    ``memo`` may be shared across calls to reuse decided set-sequents.
    """
    search = _Search(depth, memo)
    skeleton = search.run(frozenset(sequent.hypotheses), sequent.goal, depth, frozenset())
    if skeleton is None:
        if search.depth_hit:
            return ProveResult(ProveStatus.BOUND_EXCEEDED)
        return ProveResult(ProveStatus.UNPROVABLE)
    return ProveResult(ProveStatus.PROVED, _elaborate(skeleton, sequent))


def _retag(d: SckDerivation, target: Sequent) -> SckDerivation:
    """Re-present the conclusion in the caller's hypothesis order."""
    assert Counter(d.conclusion.hypotheses) == Counter(target.hypotheses)
    assert d.conclusion.goal == target.goal
    return SckDerivation(d.rule, target, d.premises, d.principal)


def _weaken_to(d: SckDerivation, target: Sequent) -> SckDerivation:
    """Add hypotheses one at a time until the conclusion matches target."""
    have = Counter(d.conclusion.hypotheses)
    want = Counter(target.hypotheses)
    assert all(have[f] <= want[f] for f in have), "weakening cannot drop hypotheses"
    for f in sorted((want - have).elements(), key=print_formula):
        seq = Sequent(d.conclusion.hypotheses + (f,), d.conclusion.goal)
        d = SckDerivation("W", seq, (d,), principal=f)
    return _retag(d, target)


def _contract_to(d: SckDerivation, target: Sequent) -> SckDerivation:
    """Remove duplicate hypotheses one at a time down to target."""
    have = Counter(d.conclusion.hypotheses)
    want = Counter(target.hypotheses)
    assert all(want[f] <= have[f] for f in want), "contraction cannot add hypotheses"
    hyps = list(d.conclusion.hypotheses)
    for f in sorted((have - want).elements(), key=print_formula):
        hyps.remove(f)
        seq = Sequent(tuple(hyps), d.conclusion.goal)
        d = SckDerivation("C", seq, (d,), principal=f)
    return _retag(d, target)


def _elaborate(skeleton, sequent: Sequent) -> SckDerivation:
    """Rebuild a primitive-rule derivation of the exact multiset sequent."""
    kind = skeleton[0]
    hyps, goal = sequent.hypotheses, sequent.goal
    if kind == "ax":
        atom = skeleton[1]
        assert atom == goal and atom in hyps
        base = SckDerivation("ax", Sequent((atom,), atom))
        return _weaken_to(base, sequent)
    if kind == "impR":
        assert isinstance(goal, Arrow)
        sub = _elaborate(skeleton[1], Sequent(hyps + (goal.domain,), goal.codomain))
        return SckDerivation("impR", sequent, (sub,))
    if kind == "K":
        assert isinstance(goal, Box)
        boxed = tuple(f for f in hyps if isinstance(f, Box))
        sub = _elaborate(skeleton[1], Sequent(tuple(f.body for f in boxed), goal.body))
        k = SckDerivation("Kbox", Sequent(boxed, goal), (sub,))
        return _weaken_to(k, sequent)
    assert kind == "impL"
    _, f, left_sk, right_sk = skeleton
    assert isinstance(f, Arrow) and f in hyps
    rest = list(hyps)
    rest.remove(f)
    left = _elaborate(left_sk, Sequent(hyps, f.domain))
    right = _elaborate(right_sk, Sequent((f.codomain,) + tuple(rest), goal))
    # conclusion of the primitive rule: Gamma, Delta, A->B |- C with
    # Gamma the left context and (B,) Delta the right context
    big = Sequent(hyps + tuple(rest) + (f,), goal)
    node = SckDerivation("impL", big, (left, right), principal=f)
    return _contract_to(node, sequent)


# ---------------------------------------------------------------------------
# Checking


def check_sck(d: SckDerivation) -> bool:
    return not sck_violations(d)


def sck_violations(d: SckDerivation) -> list[str]:
    out: list[str] = []
    _check(d, out)
    return out


def _complain(out: list[str], d: SckDerivation, why: str) -> None:
    out.append(f"{d.rule} at {print_sequent(d.conclusion.hypotheses, d.conclusion.goal)}: {why}")


def _check(d: SckDerivation, out: list[str]) -> None:
    hyps = Counter(d.conclusion.hypotheses)
    goal = d.conclusion.goal
    if d.rule == "ax":
        if d.premises or not isinstance(goal, Atom) or hyps != Counter([goal]):
            _complain(out, d, "axiom must conclude a |- a")
        return
    if d.rule == "impR":
        if len(d.premises) != 1 or not isinstance(goal, Arrow):
            _complain(out, d, "right implication shape")
            return
        (p,) = d.premises
        if (
            Counter(p.conclusion.hypotheses) != hyps + Counter([goal.domain])
            or p.conclusion.goal != goal.codomain
        ):
            _complain(out, d, "premise must move the domain left")
        _check(p, out)
        return
    if d.rule == "impL":
        if len(d.premises) != 2 or not isinstance(d.principal, Arrow):
            _complain(out, d, "left implication shape")
            return
        f = d.principal
        left, right = d.premises
        rhyps = Counter(right.conclusion.hypotheses)
        if rhyps[f.codomain] < 1:
            _complain(out, d, "right premise must hold the codomain")
            return
        delta = rhyps - Counter([f.codomain])
        want = Counter(left.conclusion.hypotheses) + delta + Counter([f])
        if want != hyps or left.conclusion.goal != f.domain or right.conclusion.goal != goal:
            _complain(out, d, "contexts must split around the arrow")
        _check(left, out)
        _check(right, out)
        return
    if d.rule == "Kbox":
        if len(d.premises) != 1 or not isinstance(goal, Box):
            _complain(out, d, "box rule shape")
            return
        (p,) = d.premises
        if any(not isinstance(f, Box) for f in hyps):
            _complain(out, d, "every hypothesis must be boxed")
            return
        if (
            Counter(f.body for f in d.conclusion.hypotheses) != Counter(p.conclusion.hypotheses)
            or p.conclusion.goal != goal.body
        ):
            _complain(out, d, "premise must un-box every hypothesis")
        _check(p, out)
        return
    if d.rule == "W":
        if len(d.premises) != 1 or d.principal is None:
            _complain(out, d, "weakening shape")
            return
        (p,) = d.premises
        if (
            Counter(p.conclusion.hypotheses) + Counter([d.principal]) != hyps
            or p.conclusion.goal != goal
        ):
            _complain(out, d, "weakening must add exactly one hypothesis")
        _check(p, out)
        return
    if d.rule == "C":
        if len(d.premises) != 1 or d.principal is None:
            _complain(out, d, "contraction shape")
            return
        (p,) = d.premises
        if (
            Counter(p.conclusion.hypotheses) != hyps + Counter([d.principal])
            or hyps[d.principal] < 1
            or p.conclusion.goal != goal
        ):
            _complain(out, d, "contraction must remove exactly one duplicate")
        _check(p, out)
        return
    _complain(out, d, f"unknown rule {d.rule!r}")


def print_sck(d: SckDerivation, indent: int = 0) -> str:
    c = d.conclusion
    lines = [" " * indent + f"{d.rule}: {print_sequent(c.hypotheses, c.goal)}"]
    for p in d.premises:
        lines.append(print_sck(p, indent + 2))
    return "\n".join(lines)

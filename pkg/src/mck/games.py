"""Views, strategies and their validation; bounded strategy search.

A view is an alternating justified sequence of non-box vertices: the
first move is the arena root, every even-position move points to the
immediately preceding move, every odd-position move repeats the label of
its predecessor and points to any earlier justifying move.

A strategy is a finite prefix-closed set of views that is complete for
even-length views (every successor present) and deterministic-total for
odd-length views (exactly one successor present).  On top of that, the
box discipline: paired moves must have equal address length, and the
induced pairing of box vertices must put exactly one even-polarity box
in every class.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

from .arena import Arena, Polarity, UnknownVertex
from .surface import print_formula

# A view is a tuple of (vertex, pointer) pairs; the pointer of position 0
# is None, every later pointer is an index of an earlier position.
Move = tuple[str, int | None]
View = tuple[Move, ...]

EMPTY_VIEW: View = ()


class NotPrefixClosed(Exception):
    pass


class NotWellBatched(Exception):
    pass


def is_view(arena: Arena, candidate: View) -> bool:
    for v, _ in candidate:
        if v not in arena.labels:
            raise UnknownVertex(v)
    if not candidate:
        return True
    for i, (v, ptr) in enumerate(candidate):
        if arena.is_box(v):
            return False
        if i == 0:
            if ptr is not None or arena.depth(v) != 0:
                return False
            continue
        if ptr is None or not 0 <= ptr < i:
            return False
        if not arena.justifies(v, candidate[ptr][0]):
            return False
        if arena.depth(v) % 2 == arena.depth(candidate[i - 1][0]) % 2:
            return False
        if i % 2 == 0 and ptr != i - 1:
            return False
        if i % 2 == 1 and arena.label(v) != arena.label(candidate[i - 1][0]):
            return False
    return arena.depth(candidate[0][0]) % 2 == 0


def view_successors(arena: Arena, p: View) -> list[View]:
    """All one-move extensions of ``p`` that are views."""
    if not p:
        return [((arena.root_move(), None),)]
    out: list[View] = []
    last = p[-1][0]
    if len(p) % 2 == 1:
        # a bullet extension: any justified earlier target, same label
        label = arena.label(last)
        for j in range(len(p)):
            target = p[j][0]
            for v in arena.enabled_from(target):
                if not arena.is_box(v) and arena.label(v) == label:
                    if arena.depth(v) % 2 == 1:
                        out.append(p + ((v, j),))
    else:
        # a circle extension is shortsighted: it points at the last move
        for v in arena.enabled_from(last):
            if not arena.is_box(v) and arena.depth(v) % 2 == 0:
                out.append(p + ((v, len(p) - 1),))
    out.sort()
    return out


def _check_prefix_closed(s: frozenset[View] | set[View]) -> None:
    for p in s:
        if p and p[:-1] not in s:
            raise NotPrefixClosed(f"missing prefix of {p!r}")


def is_wis(arena: Arena, s) -> bool:
    """Winning innocent strategy: prefix-closed views, all successors after
    even length, exactly one successor after odd length."""
    s = set(s)
    if EMPTY_VIEW not in s:
        return False
    _check_prefix_closed(s)
    for p in s:
        if not is_view(arena, p):
            return False
        succs = view_successors(arena, p)
        present = [q for q in succs if q in s]
        if len(p) % 2 == 0:
            if len(present) != len(succs):
                return False
        else:
            if len(present) != 1:
                return False
    return True


# ---------------------------------------------------------------------------
# Batched views and linking


def batched_view(arena: Arena, p: View) -> list[list[str]]:
    """Address-alignment matrix: one column per move; row 0 is the move,
    higher rows stack its address (outermost first), padded with '' up to
    one more than the maximal height in the view."""
    if not p:
        return []
    h = 1 + max(arena.height(v) for v, _ in p)
    cols = []
    for v, _ in p:
        addr = arena.address(v)
        col = [v] + list(addr) + [""] * (h - 1 - len(addr))
        cols.append(col)
    return cols


def is_well_batched(arena: Arena, p: View) -> bool:
    """Paired moves (positions 2k, 2k+1) must have equal address length."""
    for k in range(0, len(p) - 1, 2):
        if arena.height(p[k][0]) != arena.height(p[k + 1][0]):
            return False
    return True


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: str, y: str) -> None:
        self.parent[self.find(x)] = self.find(y)

    def classes(self) -> list[frozenset[str]]:
        groups: dict[str, set[str]] = {}
        for x in self.parent:
            groups.setdefault(self.find(x), set()).add(x)
        return [frozenset(g) for g in groups.values()]


def link_classes(arena: Arena, p: View) -> list[frozenset[str]]:
    """Partition of the box vertices paired by the view: position-wise
    pairing of the addresses of each (2k, 2k+1) move pair, closed under
    equivalence.  Only boxes touched by some pairing appear."""
    if not is_well_batched(arena, p):
        raise NotWellBatched(f"view pairs moves of different heights")
    uf = _UnionFind()
    for k in range(0, len(p) - 1, 2):
        a1 = arena.address(p[k][0])
        a2 = arena.address(p[k + 1][0])
        for u, w in zip(a1, a2):
            uf.union(u, w)
    return sorted(uf.classes(), key=sorted)


def _linked_view(arena: Arena, p: View) -> bool:
    for cls in link_classes(arena, p):
        evens = sum(1 for v in cls if arena.polarity(v) is Polarity.EVEN)
        if evens != 1:
            return False
    return True


def is_linked(arena: Arena, s) -> bool:
    """Every view well-batched and every per-view class holds exactly one
    even-polarity box."""
    for p in s:
        if not is_well_batched(arena, p):
            raise NotWellBatched(f"view pairs moves of different heights")
        if not _linked_view(arena, p):
            return False
    return True


@dataclass(frozen=True)
class CkReport:
    ok: bool
    wis: bool
    well_batched: bool
    linked: bool
    offending_view: View | None = None

    def describe(self) -> str:
        if self.ok:
            return "valid"
        if not self.wis:
            return "not a winning innocent strategy"
        if not self.well_batched:
            return f"not well-batched at view {view_to_list(self.offending_view)}"
        return f"not linked at view {view_to_list(self.offending_view)}"


def ck_report(arena: Arena, s) -> CkReport:
    s = set(s)
    try:
        wis = is_wis(arena, s)
    except NotPrefixClosed:
        wis = False
    if not wis:
        return CkReport(False, False, False, False)
    for p in sorted(s):
        if not is_well_batched(arena, p):
            return CkReport(False, True, False, False, p)
    for p in sorted(s):
        if not _linked_view(arena, p):
            return CkReport(False, True, True, False, p)
    return CkReport(True, True, True, True)


def is_ck_wis(arena: Arena, s) -> bool:
    return ck_report(arena, s).ok


# ---------------------------------------------------------------------------
# Search


class BoundExceeded(Exception):
    pass


def search_ck_wis(arena: Arena, max_views: int = 4000):
    """Backtracking search for a strategy passing ``is_ck_wis``.

    Circle extensions are forced; bullet responses are the branch points,
    tried in deterministic order.  Returns the first strategy found, or
    None after exhausting the space.  Raises BoundExceeded when some
    branch would outgrow ``max_views``.
    """
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * max_views + 100))
    hit_bound = False

    def viable(p: View) -> bool:
        if not is_well_batched(arena, p):
            return False
        return _linked_view(arena, p)

    def expand(s: set[View], worklist: list[View]):
        nonlocal hit_bound
        if not worklist:
            return frozenset(s)
        p = worklist[0]
        rest = worklist[1:]
        if len(p) % 2 == 0:
            succs = view_successors(arena, p)
            if len(s) + len(succs) > max_views:
                hit_bound = True
                return None
            added = [q for q in succs if q not in s]
            s.update(added)
            result = expand(s, rest + added)
            if result is None:
                s.difference_update(added)
            return result
        for q in view_successors(arena, p):
            if q in s or not viable(q):
                continue
            if len(s) + 1 > max_views:
                hit_bound = True
                continue
            s.add(q)
            result = expand(s, rest + [q])
            if result is not None:
                return result
            s.discard(q)
        return None

    found = expand({EMPTY_VIEW}, [EMPTY_VIEW])
    if found is not None:
        assert is_ck_wis(arena, found)
        return found
    if hit_bound:
        raise BoundExceeded(f"no strategy within {max_views} views")
    return None


# ---------------------------------------------------------------------------
# Serialization


def view_to_list(p: View) -> list:
    return [{"vertex": v, "pointer": ptr} for v, ptr in p]


def strategy_to_json(arena: Arena, s) -> str:
    doc = {
        "arena_formula": print_formula(arena.formula),
        "views": [view_to_list(p) for p in sorted(set(s))],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def strategy_from_dict(doc: dict) -> set[View]:
    views = set()
    for view in doc["views"]:
        views.add(tuple((m["vertex"], m["pointer"]) for m in view))
    views.add(EMPTY_VIEW)
    return views

"""Two-colored arenas of formulas and sequents.

A formula becomes a dag with one vertex per atom and per box.  An arrow
adds edges from every root of the domain part to every root of the
codomain part; a box adds a box vertex with modal edges to the roots of
its scope.  Vertex ids are the 0/1 paths of the construction (0 = left
operand, 1 = right operand, read from the outermost operation inwards),
so ids are stable across reconstruction.

The address of a vertex lists the box vertices enclosing it in the
formula tree, outermost first; its height is the address length.  Depth
is the (uniform) length of edge paths to a root; a vertex is an
even-polarity vertex iff its depth is even.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .surface import print_formula
from .syntax import Arrow, Atom, Box, Formula, arrow

BOX_LABEL = "#"


class Polarity(Enum):
    EVEN = "O"  # the circle player
    ODD = "P"  # the bullet player


class UnknownVertex(Exception):
    pass


@dataclass(frozen=True)
class Arena:
    formula: Formula
    labels: dict[str, str]  # vertex id -> atom name or BOX_LABEL
    arrow_edges: frozenset[tuple[str, str]]
    modal_edges: frozenset[tuple[str, str]]
    addresses: dict[str, tuple[str, ...]]
    depths: dict[str, int]

    @property
    def vertices(self) -> list[str]:
        return sorted(self.labels)

    def is_box(self, v: str) -> bool:
        return self.labels[v] == BOX_LABEL

    def moves(self) -> list[str]:
        return [v for v in self.vertices if not self.is_box(v)]

    def label(self, v: str) -> str:
        if v not in self.labels:
            raise UnknownVertex(v)
        return self.labels[v]

    def address(self, v: str) -> tuple[str, ...]:
        if v not in self.labels:
            raise UnknownVertex(v)
        return self.addresses[v]

    def height(self, v: str) -> int:
        return len(self.address(v))

    def depth(self, v: str) -> int:
        if v not in self.labels:
            raise UnknownVertex(v)
        return self.depths[v]

    def polarity(self, v: str) -> Polarity:
        return Polarity.EVEN if self.depth(v) % 2 == 0 else Polarity.ODD

    def justifies(self, v: str, w: str) -> bool:
        """True when v points into w (v is one step farther from the roots)."""
        return (v, w) in self.arrow_edges

    def enabled_from(self, w: str) -> list[str]:
        """Vertices with an arrow edge into w."""
        return sorted(v for (v, u) in self.arrow_edges if u == w)

    def root_move(self) -> str:
        """The unique non-box vertex of depth 0."""
        roots = [v for v in self.moves() if self.depths[v] == 0]
        assert len(roots) == 1
        return roots[0]


def _build(f: Formula, prefix: str, addr: tuple[str, ...], labels, arrows, modals, addresses):
    """Returns the arrow-edge roots of the sub-dag of ``f`` at ``prefix``."""
    if isinstance(f, Atom):
        labels[prefix] = f.name
        addresses[prefix] = addr
        return [prefix]
    if isinstance(f, Box):
        box_id = prefix + "0"
        labels[box_id] = BOX_LABEL
        addresses[box_id] = addr
        inner_roots = _build(f.body, prefix + "1", addr + (box_id,), labels, arrows, modals, addresses)
        for r in inner_roots:
            modals.add((box_id, r))
        return [box_id] + inner_roots
    assert isinstance(f, Arrow)
    left_roots = _build(f.domain, prefix + "0", addr, labels, arrows, modals, addresses)
    right_roots = _build(f.codomain, prefix + "1", addr, labels, arrows, modals, addresses)
    for u in left_roots:
        for v in right_roots:
            arrows.add((u, v))
    return right_roots


def arena_of_formula(f: Formula) -> Arena:
    labels: dict[str, str] = {}
    arrows: set[tuple[str, str]] = set()
    modals: set[tuple[str, str]] = set()
    addresses: dict[str, tuple[str, ...]] = {}
    _build(f, "", (), labels, arrows, modals, addresses)
    depths: dict[str, int] = {}

    succ: dict[str, list[str]] = {v: [] for v in labels}
    for u, v in arrows:
        succ[u].append(v)

    def depth(v: str) -> int:
        if v not in depths:
            depths[v] = 0 if not succ[v] else 1 + depth(succ[v][0])
        return depths[v]

    for v in labels:
        depth(v)
    return Arena(f, labels, frozenset(arrows), frozenset(modals), addresses, depths)


def arena_of_sequent(hypotheses, goal: Formula) -> Arena:
    """The arena of A1, ..., An |- C, i.e. of (A1, ..., An) -> C."""
    return arena_of_formula(arrow(hypotheses, goal))


def hypothesis_prefix(i: int) -> str:
    """Vertex-id prefix of the i-th hypothesis part (0-based)."""
    return "1" * i + "0"


def goal_prefix(n: int) -> str:
    """Vertex-id prefix of the goal part of a sequent with n hypotheses."""
    return "1" * n


def root_path(f: Formula) -> str:
    """Path from a formula part to its unique non-box root vertex."""
    if isinstance(f, Atom):
        return ""
    if isinstance(f, Box):
        return "1" + root_path(f.body)
    assert isinstance(f, Arrow)
    return "1" + root_path(f.codomain)


def vertex_info(arena: Arena, v: str):
    return (
        arena.label(v),
        arena.address(v),
        arena.height(v),
        arena.depth(v),
        arena.polarity(v),
    )


# ---------------------------------------------------------------------------
# Rendering


def _vid(v: str) -> str:
    return v if v else "e"


def render(arena: Arena, format: str = "text") -> str:
    if format == "dot":
        lines = ["digraph arena {"]
        for v in arena.vertices:
            shape = "square" if arena.is_box(v) else "circle"
            lines.append(
                f'  "{_vid(v)}" [label="{arena.labels[v]}" shape={shape}];'
            )
        for u, v in sorted(arena.arrow_edges):
            lines.append(f'  "{_vid(u)}" -> "{_vid(v)}" [style=solid];')
        for u, v in sorted(arena.modal_edges):
            lines.append(f'  "{_vid(u)}" -> "{_vid(v)}" [style=dashed];')
        lines.append("}")
        return "\n".join(lines) + "\n"
    if format == "json":
        doc = {
            "formula": print_formula(arena.formula),
            "vertices": [
                {
                    "id": v,
                    "label": arena.labels[v],
                    "address": list(arena.addresses[v]),
                    "height": arena.height(v),
                    "depth": arena.depths[v],
                    "polarity": arena.polarity(v).value,
                }
                for v in arena.vertices
            ],
            "arrow_edges": sorted([u, v] for u, v in arena.arrow_edges),
            "modal_edges": sorted([u, v] for u, v in arena.modal_edges),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if format == "text":
        lines = [f"arena of {print_formula(arena.formula)}"]
        for v in arena.vertices:
            pol = "o" if arena.polarity(v) is Polarity.EVEN else "*"
            addr = ".".join(_vid(a) for a in arena.addresses[v]) or "-"
            lines.append(
                f"  {_vid(v)}: {arena.labels[v]}{pol} depth={arena.depths[v]} address={addr}"
            )
        lines.append(
            "  arrow: " + ", ".join(f"{_vid(u)}>{_vid(v)}" for u, v in sorted(arena.arrow_edges))
        )
        lines.append(
            "  modal: " + ", ".join(f"{_vid(u)}~{_vid(v)}" for u, v in sorted(arena.modal_edges))
        )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {format!r}")

"""Concrete syntax: parse and print formulas, terms and sequents.

Grammar summary (ASCII, with unicode aliases for box, lambda, arrow):

    formula  :=  unary ('->' formula)?            right associative
    unary    :=  '#' unary | atom | '(' formula ')'
    term     :=  '\\' ident ':' formula '.' term
              |  'let' idents '=' terms 'in' term   (equal-length lists,
              |  atom+                               both may be empty)
    atom     :=  ident | '(' term ')'
    sequent  :=  decls '|-' term ':' formula        (type assignment)
              |  formulas '|-' formula              (bare sequent)

Application is by juxtaposition, left associative, and binds tighter than
'let'/'\\' whose bodies extend maximally to the right.
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
    canonical,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self) -> None:
        assert self.start <= self.end


class ParseError(Exception):
    def __init__(self, span: SourceSpan, message: str, expected: tuple[str, ...] = ()):
        assert message
        self.span = span
        self.message = message
        self.expected = expected
        where = f" at {span.start}..{span.end}"
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(message + where + hint)


class ArityMismatch(ParseError):
    pass


class DuplicateContextVariable(ParseError):
    pass


KEYWORDS = {"let", "in"}

_PUNCT = [
    ("|-", "TURNSTILE"),
    ("⊢", "TURNSTILE"),
    ("->", "ARROW"),
    ("→", "ARROW"),
    ("#", "BOX"),
    ("□", "BOX"),
    ("\\", "LAMBDA"),
    ("λ", "LAMBDA"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
    (".", "DOT"),
    (",", "COMMA"),
    (":", "COLON"),
    ("=", "EQUALS"),
]


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        for lit, kind in _PUNCT:
            if src.startswith(lit, i):
                toks.append(Token(kind, lit, SourceSpan(i, i + len(lit))))
                i += len(lit)
                break
        else:
            if c.isascii() and c.islower():
                j = i + 1
                while j < n and (src[j].isascii() and (src[j].isalnum() or src[j] == "_")):
                    j += 1
                text = src[i:j]
                kind = "KEYWORD" if text in KEYWORDS else "IDENT"
                toks.append(Token(kind, text, SourceSpan(i, j)))
                i = j
            else:
                raise ParseError(SourceSpan(i, i + 1), f"unexpected character {c!r}")
    toks.append(Token("EOF", "", SourceSpan(n, n)))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = tokenize(src)
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(tok.span, f"unexpected {tok.text or 'end of input'!r}", (what,))
        return self.next()

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def eat(self, kind: str) -> bool:
        if self.at(kind):
            self.next()
            return True
        return False

    def done(self) -> bool:
        return self.at("EOF")

    def expect_done(self) -> None:
        if not self.done():
            tok = self.peek()
            raise ParseError(tok.span, f"trailing input {tok.text!r}")

    # -- formulas

    def formula(self) -> Formula:
        left = self.formula_unary()
        if self.eat("ARROW"):
            return Arrow(left, self.formula())
        return left

    def formula_unary(self) -> Formula:
        if self.eat("BOX"):
            return Box(self.formula_unary())
        if self.at("IDENT"):
            return Atom(self.next().text)
        if self.eat("LPAREN"):
            f = self.formula()
            self.expect("RPAREN", "')'")
            return f
        tok = self.peek()
        raise ParseError(tok.span, f"unexpected {tok.text or 'end of input'!r}", ("formula",))

    # -- terms

    def term(self) -> Term:
        if self.eat("LAMBDA"):
            binder = self.expect("IDENT", "binder").text
            self.expect("COLON", "':'")
            ann = self.formula()
            self.expect("DOT", "'.'")
            return Abs(binder, ann, self.term())
        if self.at("KEYWORD") and self.peek().text == "let":
            return self.let_term()
        return self.application()

    def let_term(self) -> Term:
        start = self.next().span.start  # 'let'
        binders: list[Token] = []
        if self.at("IDENT"):
            binders.append(self.next())
            while self.eat("COMMA"):
                binders.append(self.expect("IDENT", "binder"))
        eq = self.expect("EQUALS", "'='")
        bounds: list[Term] = []
        if not (self.at("KEYWORD") and self.peek().text == "in"):
            bounds.append(self.application_or_value())
            while self.eat("COMMA"):
                bounds.append(self.application_or_value())
        tok = self.peek()
        if not (tok.kind == "KEYWORD" and tok.text == "in"):
            raise ParseError(tok.span, f"unexpected {tok.text or 'end of input'!r}", ("'in'",))
        self.next()
        body = self.term()
        if len(binders) != len(bounds):
            raise ArityMismatch(
                SourceSpan(start, eq.span.end),
                f"let binds {len(binders)} variables to {len(bounds)} terms",
            )
        names = [b.text for b in binders]
        for i, name in enumerate(names):
            if name in names[:i]:
                raise ParseError(binders[i].span, f"duplicate let binder {name!r}")
        return BoxSubst(body, tuple(zip(names, bounds)))

    def application_or_value(self) -> Term:
        # bound-term position of a let: lambdas allowed, commas end the item
        if self.at("LAMBDA"):
            return self.term()
        return self.application()

    def application(self) -> Term:
        t = self.atom_term()
        while self.at("IDENT") or self.at("LPAREN"):
            t = App(t, self.atom_term())
        return t

    def atom_term(self) -> Term:
        if self.at("IDENT"):
            return Var(self.next().text)
        if self.eat("LPAREN"):
            t = self.term()
            self.expect("RPAREN", "')'")
            return t
        tok = self.peek()
        raise ParseError(tok.span, f"unexpected {tok.text or 'end of input'!r}", ("term",))


def parse_formula(src: str) -> Formula:
    p = _Parser(src)
    f = p.formula()
    p.expect_done()
    return f


def parse_term(src: str) -> Term:
    p = _Parser(src)
    t = p.term()
    p.expect_done()
    return canonical(t)


def parse_sequent(src: str):
    """Parse ``x1:F1, ..., xn:Fn |- M : F`` or ``F1, ..., Fn |- F``.

    Returns ``(context, term_or_None, formula)`` where context is a tuple of
    (name, Formula) pairs; bare sequents auto-name hypotheses v1..vn.
    """
    p = _Parser(src)
    entries: list = []  # either ('decl', name_token, F) or ('form', F)
    if not p.at("TURNSTILE"):
        while True:
            if p.at("IDENT") and p.toks[p.pos + 1].kind == "COLON":
                name = p.next()
                p.next()  # colon
                entries.append(("decl", name, p.formula()))
            else:
                start = p.peek().span
                entries.append(("form", start, p.formula()))
            if not p.eat("COMMA"):
                break
    p.expect("TURNSTILE", "'|-'")
    # right-hand side: try "term : formula" first, else a bare formula
    mark = p.pos
    term = None
    goal = None
    try:
        t = p.term()
        p.expect("COLON", "':'")
        goal = p.formula()
        p.expect_done()
        term = t
    except ParseError:
        p.pos = mark
        goal = p.formula()
        p.expect_done()

    if term is not None:
        bad = [e for e in entries if e[0] != "decl"]
        if bad:
            raise ParseError(bad[0][1], "type assignments need named hypotheses (x : F)")
        ctx = tuple((e[1].text, e[2]) for e in entries)
    else:
        bad = [e for e in entries if e[0] != "form"]
        if bad:
            raise ParseError(bad[0][1].span, "bare sequents take formulas, not declarations")
        ctx = tuple((f"v{i + 1}", e[2]) for i, e in enumerate(entries))
    seen: set[str] = set()
    for i, (name, _) in enumerate(ctx):
        if name in seen:
            span = entries[i][1].span if entries[i][0] == "decl" else SourceSpan(0, 0)
            raise DuplicateContextVariable(span, f"duplicate context variable {name!r}")
        seen.add(name)
    return ctx, (canonical(term) if term is not None else None), goal


# ---------------------------------------------------------------------------
# Printing


def print_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Box):
        inner = print_formula(f.body)
        if isinstance(f.body, Arrow):
            inner = f"({inner})"
        return f"#{inner}"
    assert isinstance(f, Arrow)
    left = print_formula(f.domain)
    if isinstance(f.domain, Arrow):
        left = f"({left})"
    return f"{left} -> {print_formula(f.codomain)}"


def _print_atomic(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return f"({print_term(t)})"


def _print_app(t: Term) -> str:
    if isinstance(t, App):
        return f"{_print_app(t.fun)} {_print_atomic(t.arg)}"
    return _print_atomic(t)


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Abs):
        return f"\\{t.binder}:{print_formula(t.annotation)}. {print_term(t.body)}"
    if isinstance(t, App):
        return _print_app(t)
    assert isinstance(t, BoxSubst)
    binders = ",".join(x for x, _ in t.bindings)
    bounds = ",".join(_print_bound(b) for _, b in t.bindings)
    lhs = f"let {binders} = {bounds}" if t.bindings else "let ="
    return f"{lhs} in {print_term(t.body)}"


def _print_bound(t: Term) -> str:
    # lets and lambdas would swallow the rest of the list; parenthesize
    if isinstance(t, (BoxSubst, Abs)):
        return f"({print_term(t)})"
    return print_term(t)


def print_context(ctx) -> str:
    return ", ".join(f"{x}:{print_formula(f)}" for x, f in ctx)


def print_assignment(ctx, term: Term, goal: Formula) -> str:
    left = print_context(ctx)
    sep = " " if left else ""
    return f"{left}{sep}|- {print_term(term)} : {print_formula(goal)}"


def print_sequent(formulas, goal: Formula) -> str:
    left = ", ".join(print_formula(f) for f in formulas)
    sep = " " if left else ""
    return f"{left}{sep}|- {print_formula(goal)}"

"""Formula syntax shared by the adequate logic and the mu-calculus.

Concrete grammar::

    phi  ::= "tt" | "ff" | "~" phi | phi "&" phi | phi "|" phi
           | "<" act ">" "(" psi ")" | "[" act "]" "(" psi ")"
           | var | "mu" var "." phi | "nu" var "." phi | "(" phi ")"
    psi  ::= choice { "||" choice }
    choice ::= prob "*" phi { "(+)" prob "*" phi }
             | "[" phi "]_" prob

``[phi]_p`` abbreviates ``p*phi (+) (1-p)*tt``.  ``||`` is a disjunction of
distribution formulae, needed by characteristic equations.  Precedence
from loose to tight: ``mu``/``nu`` (extend right), ``|``, ``&``, prefix
operators.

Formula nodes are hash-consed: structurally equal formulae are the same
object, so equality and hashing are O(1) and shared subterms stay shared.
"""

from __future__ import annotations

import re
import weakref
from fractions import Fraction
from typing import Iterable, Iterator

from .core import format_prob

__all__ = [
    "Formula",
    "Top",
    "Bot",
    "Neg",
    "And",
    "Or",
    "Diamond",
    "Box",
    "Var",
    "Mu",
    "Nu",
    "DistFormula",
    "DistOr",
    "FormulaSyntaxError",
    "parse",
    "show",
    "conj",
    "disj",
    "free_vars",
    "actions_of",
    "dag_size",
    "tree_size",
    "modal_depth",
    "alpha_normalise",
    "fresh_name",
]


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, column: int | None = None):
        where = f"column {column}: " if column is not None else ""
        super().__init__(where + message)
        self.column = column


class Formula:
    """Interned immutable syntax node."""

    __slots__ = ("__weakref__",)
    _fields: tuple[str, ...] = ()
    _interned: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, *args):
        args = cls._normalise(*args)
        key = (cls, *args)
        node = Formula._interned.get(key)
        if node is None:
            node = object.__new__(cls)
            for name, value in zip(cls._fields, args):
                object.__setattr__(node, name, value)
            Formula._interned[key] = node
        return node

    @classmethod
    def _normalise(cls, *args):
        if len(args) != len(cls._fields):
            raise TypeError(f"{cls.__name__} takes {len(cls._fields)} arguments")
        return args

    def __setattr__(self, name, value):
        raise AttributeError("formulae are immutable")

    def __reduce__(self):
        return (type(self), tuple(getattr(self, f) for f in self._fields))

    def children(self) -> Iterator["Formula"]:
        for name in self._fields:
            value = getattr(self, name)
            if isinstance(value, Formula):
                yield value

    def __repr__(self) -> str:
        return show(self)


class Top(Formula):
    __slots__ = ()


class Bot(Formula):
    __slots__ = ()


class Var(Formula):
    __slots__ = ("name",)
    _fields = ("name",)


class Neg(Formula):
    __slots__ = ("body",)
    _fields = ("body",)


class And(Formula):
    __slots__ = ("left", "right")
    _fields = ("left", "right")


class Or(Formula):
    __slots__ = ("left", "right")
    _fields = ("left", "right")


class Mu(Formula):
    __slots__ = ("var", "body")
    _fields = ("var", "body")


class Nu(Formula):
    __slots__ = ("var", "body")
    _fields = ("var", "body")


class DistFormula(Formula):
    """Probabilistic choice ``p1*phi1 (+) ... (+) pk*phik``."""

    __slots__ = ("parts",)
    _fields = ("parts",)

    @classmethod
    def _normalise(cls, parts):
        parts = tuple((Fraction(p), f) for p, f in parts)
        if not parts:
            raise ValueError("probabilistic choice needs at least one part")
        if any(p <= 0 for p, _ in parts):
            raise ValueError("choice weights must be positive")
        total = sum((p for p, _ in parts), Fraction(0))
        if total != 1:
            raise ValueError(f"choice weights sum to {format_prob(total)}, not 1")
        return (parts,)

    def children(self):
        for _, f in self.parts:
            yield f


class DistOr(Formula):
    """Disjunction of two or more probabilistic choices."""

    __slots__ = ("options",)
    _fields = ("options",)

    @classmethod
    def _normalise(cls, options):
        options = tuple(options)
        if len(options) < 2 or not all(isinstance(o, DistFormula) for o in options):
            raise ValueError("DistOr needs at least two DistFormula options")
        return (options,)

    def children(self):
        return iter(self.options)


class Diamond(Formula):
    __slots__ = ("action", "psi")
    _fields = ("action", "psi")


class Box(Formula):
    __slots__ = ("action", "psi")
    _fields = ("action", "psi")


def choices(psi: DistFormula | DistOr) -> tuple[DistFormula, ...]:
    return psi.options if isinstance(psi, DistOr) else (psi,)


def conj(parts: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; empty gives ``tt``."""
    out: Formula | None = None
    for f in parts:
        out = f if out is None else And(out, f)
    return Top() if out is None else out


def disj(parts: Iterable[Formula]) -> Formula:
    """Left-nested disjunction; empty gives ``ff``."""
    out: Formula | None = None
    for f in parts:
        out = f if out is None else Or(out, f)
    return Bot() if out is None else out


def _postorder(f: Formula) -> list[Formula]:
    seen: set[int] = set()
    order: list[Formula] = []
    stack: list[tuple[Formula, bool]] = [(f, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in node.children():
            if id(c) not in seen:
                stack.append((c, False))
    return order


_fv_cache: "weakref.WeakKeyDictionary[Formula, frozenset[str]]" = weakref.WeakKeyDictionary()


def free_vars(f: Formula) -> frozenset[str]:
    cache = _fv_cache
    cached = cache.get(f)
    if cached is not None:
        return cached
    stack: list[tuple[Formula, bool]] = [(f, False)]
    while stack:
        node, expanded = stack.pop()
        if node in cache:
            continue
        if not expanded:
            stack.append((node, True))
            stack.extend((c, False) for c in node.children() if c not in cache)
            continue
        if isinstance(node, Var):
            fv = frozenset([node.name])
        elif isinstance(node, (Mu, Nu)):
            fv = cache[node.body] - {node.var}
        else:
            fv = frozenset().union(*(cache[c] for c in node.children()))
        cache[node] = fv
    return cache[f]


def actions_of(f: Formula) -> set[str]:
    return {n.action for n in _postorder(f) if isinstance(n, (Diamond, Box))}


def dag_size(f: Formula) -> int:
    """Number of distinct subformulae (shared nodes counted once)."""
    return len(_postorder(f))


def tree_size(f: Formula) -> int:
    sizes: dict[int, int] = {}
    for node in _postorder(f):
        sizes[id(node)] = 1 + sum(sizes[id(c)] for c in node.children())
    return sizes[id(f)]


def modal_depth(f: Formula) -> int:
    depth: dict[int, int] = {}
    for node in _postorder(f):
        inner = max((depth[id(c)] for c in node.children()), default=0)
        depth[id(node)] = inner + (1 if isinstance(node, (Diamond, Box)) else 0)
    return depth[id(f)]


def fresh_name(base: str, taken: set[str]) -> str:
    stem = base.rstrip("0123456789").rstrip("_") or "X"
    k = 1
    while f"{stem}_{k}" in taken:
        k += 1
    return f"{stem}_{k}"


def _all_names(f: Formula) -> set[str]:
    names = set()
    for n in _postorder(f):
        if isinstance(n, Var):
            names.add(n.name)
        elif isinstance(n, (Mu, Nu)):
            names.add(n.var)
    return names


def alpha_normalise(f: Formula) -> Formula:
    """Rename binders so no two bind the same name and none shadows a free variable."""
    taken = set(free_vars(f))
    names = _all_names(f) | taken

    def go(node: Formula, env: dict[str, str]) -> Formula:
        if isinstance(node, Var):
            return Var(env.get(node.name, node.name))
        if isinstance(node, (Mu, Nu)):
            new = node.var
            if new in taken:
                new = fresh_name(node.var, names)
            taken.add(new)
            names.add(new)
            return type(node)(new, go(node.body, {**env, node.var: new}))
        return _rebuild(node, lambda c: go(c, env))

    return go(f, {})


def _rebuild(node: Formula, fn) -> Formula:
    """Apply ``fn`` to each direct child and reassemble."""
    if isinstance(node, (Top, Bot, Var)):
        return node
    if isinstance(node, Neg):
        return Neg(fn(node.body))
    if isinstance(node, (And, Or)):
        return type(node)(fn(node.left), fn(node.right))
    if isinstance(node, (Mu, Nu)):
        return type(node)(node.var, fn(node.body))
    if isinstance(node, (Diamond, Box)):
        return type(node)(node.action, fn(node.psi))
    if isinstance(node, DistFormula):
        return DistFormula(tuple((p, fn(g)) for p, g in node.parts))
    if isinstance(node, DistOr):
        return DistOr(tuple(fn(o) for o in node.options))
    raise TypeError(f"unknown node {type(node).__name__}")


# ---------------------------------------------------------------- printing

_PREC = {Mu: 0, Nu: 0, Or: 1, And: 2}


def show(f: Formula) -> str:
    """Concrete syntax accepted back by :func:`parse`."""
    memo: dict[tuple[int, int], str] = {}

    def go(node: Formula, ctx: int) -> str:
        key = (id(node), ctx)
        if key in memo:
            return memo[key]
        prec = _PREC.get(type(node), 3)
        if isinstance(node, Top):
            text = "tt"
        elif isinstance(node, Bot):
            text = "ff"
        elif isinstance(node, Var):
            text = node.name
        elif isinstance(node, Neg):
            text = "~" + go(node.body, 3)
        elif isinstance(node, And):
            text = f"{go(node.left, 2)} & {go(node.right, 3)}"
        elif isinstance(node, Or):
            text = f"{go(node.left, 1)} | {go(node.right, 2)}"
        elif isinstance(node, (Mu, Nu)):
            kw = "mu" if isinstance(node, Mu) else "nu"
            text = f"{kw} {node.var}. {go(node.body, 0)}"
        elif isinstance(node, Diamond):
            text = f"<{node.action}>({go(node.psi, 0)})"
        elif isinstance(node, Box):
            text = f"[{node.action}]({go(node.psi, 0)})"
        elif isinstance(node, DistFormula):
            text = " (+) ".join(f"{format_prob(p)}*{go(g, 0)}" for p, g in node.parts)
        elif isinstance(node, DistOr):
            text = " || ".join(go(o, 0) for o in node.options)
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        if prec < ctx:
            text = f"({text})"
        memo[key] = text
        return text

    return go(f, 0)


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<oplus>\(\+\))
  | (?P<oror>\|\|)
  | (?P<rbsub>\]_)
  | (?P<prob>\d+/\d+|\d*\.\d+|\d+\.?(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>[~&|()<>\[\].*])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"tt", "ff", "mu", "nu"}

# connectives outside each fragment, as (name, reason)
_L_ONLY = {"~": "negation"}
_MU_ONLY = {
    "ff": "'ff'",
    "|": "disjunction '|'",
    "||": "distribution disjunction '||'",
    "box": "box modality '[a]'",
    "var": "variables",
    "mu": "'mu'",
    "nu": "'nu'",
}


class _Parser:
    def __init__(self, text: str, mode: str):
        if mode not in ("L", "mu"):
            raise ValueError("mode must be 'L' or 'mu'")
        self.mode = mode
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
            kind = m.lastgroup
            if kind == "sym":
                kind = m.group()
            elif kind == "oplus":
                kind = "(+)"
            elif kind == "oror":
                kind = "||"
            elif kind == "rbsub":
                kind = "]_"
            elif kind == "ident" and m.group() in _KEYWORDS:
                kind = m.group()
            if kind != "ws":
                self.toks.append((kind, m.group(), pos + 1))
            pos = m.end()
        self.toks.append(("eof", "", len(text) + 1))
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def col(self) -> int:
        return self.toks[self.i][2]

    def take(self, kind: str) -> str:
        k, text, col = self.toks[self.i]
        if k != kind:
            shown = "end of input" if k == "eof" else repr(text)
            raise FormulaSyntaxError(f"expected {kind!r}, got {shown}", col)
        self.i += 1
        return text

    def gate(self, feature: str) -> None:
        if self.mode == "L" and feature in _MU_ONLY:
            raise FormulaSyntaxError(
                f"{_MU_ONLY[feature]} is not part of the adequate logic L", self.col()
            )
        if self.mode == "mu" and feature in _L_ONLY:
            raise FormulaSyntaxError(
                f"{_L_ONLY[feature]} is not allowed in positive normal form", self.col()
            )

    def formula(self) -> Formula:
        if self.peek() in ("mu", "nu"):
            kw = self.peek()
            self.gate(kw)
            self.i += 1
            var = self.take("ident")
            self.take(".")
            body = self.formula()
            return (Mu if kw == "mu" else Nu)(var, body)
        left = self.conjunction()
        while self.peek() == "|":
            self.gate("|")
            self.i += 1
            left = Or(left, self.conjunction_or_binder())
        return left

    def conjunction_or_binder(self) -> Formula:
        if self.peek() in ("mu", "nu"):
            return self.formula()
        return self.conjunction()

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.peek() == "&":
            self.i += 1
            right = self.formula() if self.peek() in ("mu", "nu") else self.unary()
            left = And(left, right)
        return left

    def unary(self) -> Formula:
        k = self.peek()
        if k == "~":
            self.gate("~")
            self.i += 1
            if self.peek() in ("mu", "nu"):
                return Neg(self.formula())
            return Neg(self.unary())
        if k == "<":
            self.i += 1
            act = self.take("ident")
            self.take(">")
            return Diamond(act, self.continuation())
        if k == "[":
            self.gate("box")
            self.i += 1
            act = self.take("ident")
            self.take("]")
            return Box(act, self.continuation())
        if k == "tt":
            self.i += 1
            return Top()
        if k == "ff":
            self.gate("ff")
            self.i += 1
            return Bot()
        if k == "ident":
            self.gate("var")
            return Var(self.take("ident"))
        if k == "(":
            self.i += 1
            f = self.formula()
            self.take(")")
            return f
        if k in ("mu", "nu"):
            return self.formula()
        shown = "end of input" if k == "eof" else repr(self.toks[self.i][1])
        raise FormulaSyntaxError(f"expected a formula, got {shown}", self.col())

    def continuation(self) -> Formula:
        self.take("(")
        psi = self.dist_formula()
        self.take(")")
        return psi

    def dist_formula(self) -> Formula:
        options = [self.choice()]
        while self.peek() == "||":
            self.gate("||")
            self.i += 1
            options.append(self.choice())
        return options[0] if len(options) == 1 else DistOr(tuple(options))

    def prob(self) -> Fraction:
        col = self.col()
        text = self.take("prob")
        if "/" in text and int(text.split("/")[1]) == 0:
            raise FormulaSyntaxError("zero denominator", col)
        return Fraction(text)

    def choice(self) -> DistFormula:
        start = self.col()
        if self.peek() == "[":
            self.i += 1
            body = self.formula()
            self.take("]_")
            p = self.prob()
            if p > 1:
                raise FormulaSyntaxError(f"probability {format_prob(p)} exceeds 1", start)
            if p == 0:
                return DistFormula(((1, Top()),))
            if p == 1:
                return DistFormula(((1, body),))
            return DistFormula(((p, body), (1 - p, Top())))
        parts = []
        while True:
            pcol = self.col()
            p = self.prob()
            if p <= 0:
                raise FormulaSyntaxError("choice weights must be positive", pcol)
            self.take("*")
            parts.append((p, self.formula()))
            if self.peek() != "(+)":
                break
            self.i += 1
        total = sum((p for p, _ in parts), Fraction(0))
        if total != 1:
            raise FormulaSyntaxError(
                f"probabilities sum to {format_prob(total)}, not 1", start
            )
        return DistFormula(tuple(parts))


def parse(text: str, mode: str = "mu") -> Formula:
    """Parse a state formula in ``mode`` ``"L"`` or ``"mu"``."""
    parser = _Parser(text, mode)
    f = parser.formula()
    if parser.peek() != "eof":
        k, tok, col = parser.toks[parser.i]
        raise FormulaSyntaxError(f"unexpected {tok!r} after formula", col)
    return alpha_normalise(f) if mode == "mu" else f

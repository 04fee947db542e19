"""pLTS data model, exact distributions and the text-format parser.

States and actions are dense integer indices into a :class:`Plts`'s name
tables.  Probabilities are :class:`fractions.Fraction` throughout.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Dist",
    "Plts",
    "PltsError",
    "PltsSyntaxError",
    "ProbabilitySumError",
    "DuplicateTransitionError",
    "UnknownNameError",
    "parse_plts",
    "parse_dist",
    "format_plts",
    "parse_prob",
    "format_prob",
    "point_dist",
    "convex_sum",
    "dist_product",
    "der",
]


class PltsError(ValueError):
    """Base class for malformed models and bad lookups."""


class PltsSyntaxError(PltsError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ProbabilitySumError(PltsError):
    def __init__(self, total: Fraction, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}probabilities sum to {format_prob(total)}, not 1")
        self.total = total
        self.line = line


class DuplicateTransitionError(PltsError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class UnknownNameError(PltsError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


_PROB_RE = re.compile(r"\d+/\d+|\d*\.\d+|\d+\.?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


def parse_prob(text: str) -> Fraction:
    """Exact rational from a ``p/q``, integer or finite decimal literal."""
    text = text.strip()
    if not _PROB_RE.fullmatch(text):
        raise ValueError(f"not a probability literal: {text!r}")
    if "/" in text and int(text.split("/")[1]) == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(text)


def format_prob(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


class Dist:
    """Finite-support probability distribution with exact weights.

    Stored canonically: support sorted, zero weights dropped, so ``==`` is
    mathematical equality.  Keys are usually state indices but any sortable
    hashable works (products use pairs).
    """

    __slots__ = ("_items", "_map", "_hash", "_support")

    def __init__(self, weights: Mapping[Hashable, Fraction | int] | Iterable[tuple[Hashable, Fraction | int]]):
        pairs = weights.items() if isinstance(weights, Mapping) else weights
        acc: dict = {}
        for k, w in pairs:
            w = Fraction(w)
            if w < 0:
                raise ValueError(f"negative weight {w} for {k!r}")
            if w:
                acc[k] = acc.get(k, Fraction(0)) + w
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise ProbabilitySumError(total)
        self._items = tuple(sorted(acc.items()))
        self._map = dict(self._items)
        self._hash = hash(self._items)
        self._support = frozenset(self._map)

    @classmethod
    def point(cls, s: Hashable) -> "Dist":
        return cls({s: 1})

    def __getitem__(self, s: Hashable) -> Fraction:
        return self._map.get(s, Fraction(0))

    def __contains__(self, s: Hashable) -> bool:
        return s in self._map

    def __iter__(self) -> Iterator:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._items)

    def items(self) -> tuple[tuple[Hashable, Fraction], ...]:
        return self._items

    @property
    def support(self) -> tuple:
        return tuple(k for k, _ in self._items)

    @property
    def support_set(self) -> frozenset:
        return self._support

    def mass(self, states: Iterable[Hashable]) -> Fraction:
        return sum((self[s] for s in set(states)), Fraction(0))

    def is_point(self) -> bool:
        return len(self._items) == 1

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dist) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}: {format_prob(w)}" for k, w in self._items)
        return f"Dist({{{inner}}})"


def point_dist(s: Hashable) -> Dist:
    return Dist.point(s)


def convex_sum(parts: Sequence[tuple[Fraction | int, Dist]]) -> Dist:
    """Pointwise weighted sum of distributions; weights must sum to 1."""
    weights = [Fraction(p) for p, _ in parts]
    if any(p < 0 for p in weights):
        raise ValueError("convex_sum weights must be nonnegative")
    total = sum(weights, Fraction(0))
    if total != 1:
        raise ProbabilitySumError(total)
    acc: dict = {}
    for p, (_, d) in zip(weights, parts):
        for s, w in d.items():
            acc[s] = acc.get(s, Fraction(0)) + p * w
    return Dist(acc)


def dist_product(d1: Dist, d2: Dist) -> Dist:
    """Product distribution over pairs ``(s, t)``."""
    return Dist({(s, t): p * q for s, p in d1.items() for t, q in d2.items()})


class Plts:
    """Finitary probabilistic labelled transition system.

    ``transitions`` maps ``(state, action)`` to the tuple of successor
    distributions in model (file) order.  Instances are treated as
    immutable after construction.
    """

    def __init__(
        self,
        states: Sequence[str],
        actions: Sequence[str],
        transitions: Mapping[tuple[int, int], Sequence[Dist]],
    ):
        self.states: tuple[str, ...] = tuple(states)
        self.actions: tuple[str, ...] = tuple(actions)
        if len(set(self.states)) != len(self.states):
            raise PltsError("duplicate state names")
        if len(set(self.actions)) != len(self.actions):
            raise PltsError("duplicate action names")
        self._state_index = {name: i for i, name in enumerate(self.states)}
        self._action_index = {name: i for i, name in enumerate(self.actions)}
        n, k = len(self.states), len(self.actions)
        trans: dict[tuple[int, int], tuple[Dist, ...]] = {}
        for (s, a), ds in transitions.items():
            if not (0 <= s < n and 0 <= a < k):
                raise PltsError(f"transition key {(s, a)} out of range")
            ds = tuple(ds)
            if len(set(ds)) != len(ds):
                raise DuplicateTransitionError(
                    f"duplicate transition {self.states[s]} {self.actions[a]}"
                )
            for d in ds:
                for t in d.support:
                    if not (isinstance(t, int) and 0 <= t < n):
                        raise PltsError(f"distribution support {t!r} is not a state")
            if ds:
                trans[(s, a)] = ds
        self.transitions: dict[tuple[int, int], tuple[Dist, ...]] = trans

    @classmethod
    def build(
        cls,
        transitions: Iterable[tuple[str, str, Mapping[str, Fraction | int | str]]],
        states: Iterable[str] = (),
        actions: Iterable[str] = (),
    ) -> "Plts":
        """Build from name-level triples ``(source, action, {target: p})``.

        States and actions are registered in order of first appearance,
        after any explicitly given ones.
        """
        state_names: dict[str, None] = dict.fromkeys(states)
        action_names: dict[str, None] = dict.fromkeys(actions)
        raw = []
        for s, a, targets in transitions:
            state_names.setdefault(s)
            action_names.setdefault(a)
            for t in targets:
                state_names.setdefault(t)
            raw.append((s, a, targets))
        sidx = {name: i for i, name in enumerate(state_names)}
        aidx = {name: i for i, name in enumerate(action_names)}
        trans: dict[tuple[int, int], list[Dist]] = {}
        for s, a, targets in raw:
            d = Dist({sidx[t]: Fraction(p) for t, p in targets.items()})
            trans.setdefault((sidx[s], aidx[a]), []).append(d)
        return cls(list(state_names), list(action_names), trans)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def state(self, name: str | int) -> int:
        if isinstance(name, int):
            if 0 <= name < len(self.states):
                return name
            raise UnknownNameError(f"state index {name} out of range")
        try:
            return self._state_index[name]
        except KeyError:
            raise UnknownNameError(f"unknown state {name!r}") from None

    def action(self, name: str | int) -> int:
        if isinstance(name, int):
            if 0 <= name < len(self.actions):
                return name
            raise UnknownNameError(f"action index {name} out of range")
        try:
            return self._action_index[name]
        except KeyError:
            raise UnknownNameError(f"unknown action {name!r}") from None

    def has_action(self, name: str) -> bool:
        return name in self._action_index

    def der(self, s: int, a: int) -> tuple[Dist, ...]:
        return self.transitions.get((s, a), ())

    def moves(self, s: int) -> list[tuple[int, Dist]]:
        """All ``(action, dist)`` pairs leaving ``s``, action-major model order."""
        return [(a, d) for a in range(len(self.actions)) for d in self.der(s, a)]

    def enabled(self, s: int) -> list[int]:
        return [a for a in range(len(self.actions)) if (s, a) in self.transitions]

    def distributions(self) -> list[Dist]:
        """Every distinct successor distribution, in first-seen order."""
        return list(dict.fromkeys(d for ds in self.transitions.values() for d in ds))

    def format_dist(self, d: Dist) -> str:
        return ", ".join(f"{format_prob(p)} {self.states[t]}" for t, p in d.items())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Plts)
            and self.states == other.states
            and self.actions == other.actions
            and self.transitions == other.transitions
        )

    def __repr__(self) -> str:
        ntrans = sum(len(ds) for ds in self.transitions.values())
        return f"<Plts {len(self.states)} states, {len(self.actions)} actions, {ntrans} transitions>"


def der(p: Plts, s: int, a: int) -> tuple[Dist, ...]:
    return p.der(s, a)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<arrow>->)
  | (?P<comma>,)
  | (?P<prob>\d+/\d+|\d*\.\d+|\d+\.?(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


def _tokens(text: str, lineno: int) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PltsSyntaxError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return out


def parse_plts(text: str) -> Plts:
    """Parse the line-oriented pLTS format.

    ::

        # comment
        states: s t u v
        actions: a b
        s a -> 1/2 u, 1/2 v

    The ``states:`` and ``actions:`` declarations are optional; undeclared
    names are registered on first use.
    """
    states: dict[str, None] = {}
    actions: dict[str, None] = {}
    raw: list[tuple[int, str, str, dict[str, Fraction]]] = []
    seen: dict[tuple[str, str, Dist], int] = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        decl = re.match(r"\s*(states|actions)\s*:", body)
        if decl:
            table = states if decl.group(1) == "states" else actions
            for kind, value, col in _tokens(body[decl.end():], lineno):
                if kind != "ident":
                    raise PltsSyntaxError(f"expected a name, got {value!r}", lineno, col + decl.end())
                table.setdefault(value)
            continue

        toks = _tokens(body, lineno)

        def expect(i: int, kind: str, what: str) -> str:
            if i >= len(toks):
                raise PltsSyntaxError(f"expected {what} at end of line", lineno, len(body.rstrip()) + 1)
            if toks[i][0] != kind:
                raise PltsSyntaxError(f"expected {what}, got {toks[i][1]!r}", lineno, toks[i][2])
            return toks[i][1]

        src = expect(0, "ident", "source state")
        act = expect(1, "ident", "action")
        expect(2, "arrow", "'->'")
        i = 3
        targets: dict[str, Fraction] = {}
        while True:
            ptxt = expect(i, "prob", "probability")
            pcol = toks[i][2]
            if "/" in ptxt and int(ptxt.split("/")[1]) == 0:
                raise PltsSyntaxError("zero denominator", lineno, pcol)
            p = Fraction(ptxt)
            if p <= 0 or p > 1:
                raise PltsSyntaxError(f"probability {ptxt} outside (0, 1]", lineno, pcol)
            tgt = expect(i + 1, "ident", "target state")
            if tgt in targets:
                raise PltsSyntaxError(f"target {tgt!r} repeated in one distribution", lineno, toks[i + 1][2])
            targets[tgt] = p
            i += 2
            if i == len(toks):
                break
            expect(i, "comma", "',' or end of line")
            i += 1
        total = sum(targets.values(), Fraction(0))
        if total != 1:
            raise ProbabilitySumError(total, lineno)

        states.setdefault(src)
        actions.setdefault(act)
        for t in targets:
            states.setdefault(t)
        raw.append((lineno, src, act, targets))

    sidx = {name: i for i, name in enumerate(states)}
    aidx = {name: i for i, name in enumerate(actions)}
    trans: dict[tuple[int, int], list[Dist]] = {}
    for lineno, src, act, targets in raw:
        d = Dist({sidx[t]: p for t, p in targets.items()})
        key = (src, act, d)
        if key in seen:
            raise DuplicateTransitionError(
                f"transition {src} {act} duplicates line {seen[key]}", lineno
            )
        seen[key] = lineno
        trans.setdefault((sidx[src], aidx[act]), []).append(d)
    return Plts(list(states), list(actions), trans)


def format_plts(p: Plts) -> str:
    """Render in the input format; ``parse_plts(format_plts(p)) == p``."""
    lines = ["states: " + " ".join(p.states)]
    if p.actions:
        lines.append("actions: " + " ".join(p.actions))
    for s in range(p.n_states):
        for a, d in p.moves(s):
            lines.append(f"{p.states[s]} {p.actions[a]} -> {p.format_dist(d)}")
    return "\n".join(lines) + "\n"


def parse_dist(p: Plts, text: str) -> Dist:
    """Read an inline distribution such as ``1/2 u, 1/2 v`` (or a bare state name)."""
    toks = _tokens(text.strip(), 1)
    if len(toks) == 1 and toks[0][0] == "ident":
        return Dist.point(p.state(toks[0][1]))
    weights: dict[int, Fraction] = {}
    i = 0
    while i < len(toks):
        if i + 1 >= len(toks) or toks[i][0] != "prob" or toks[i + 1][0] != "ident":
            col = toks[i][2]
            raise PltsSyntaxError("expected 'probability state' pairs", 1, col)
        s = p.state(toks[i + 1][1])
        if s in weights:
            raise PltsSyntaxError(f"state {toks[i + 1][1]!r} repeated", 1, toks[i + 1][2])
        weights[s] = parse_prob(toks[i][1])
        i += 2
        if i < len(toks):
            if toks[i][0] != "comma":
                raise PltsSyntaxError(f"expected ',', got {toks[i][1]!r}", 1, toks[i][2])
            i += 1
    total = sum(weights.values(), Fraction(0))
    if total != 1:
        raise ProbabilitySumError(total)
    return Dist(weights)

"""The adequate modal logic: satisfaction and distinguishing formulae.

A distribution satisfies ``p1*phi1 (+) ... (+) pk*phik`` when its mass can
be split into pieces of size ``pi`` each sitting on states satisfying
``phii``.  That is a transportation feasibility question, answered by
max-flow.
"""

from __future__ import annotations

import warnings
from fractions import Fraction
from typing import Callable, Sequence

from .bisim import approximant_blocks, bisim, refine
from .core import Dist, Plts
from .flow import SINK, SOURCE, FlowNetwork, max_flow
from .lifting import class_masses
from .syntax import (
    And,
    Diamond,
    DistFormula,
    Formula,
    Neg,
    Top,
    _postorder,
    actions_of,
    conj,
    parse,
)

__all__ = [
    "parse_formula",
    "sat_state",
    "sat_set",
    "sat_dist",
    "feasible",
    "distinguish",
    "logically_equivalent",
]


def parse_formula(text: str) -> Formula:
    """Parse a formula of the adequate logic (``tt``, ``&``, ``~``, ``<a>``)."""
    return parse(text, mode="L")


def feasible(d: Dist, parts: Sequence[tuple[Fraction, Callable[[int], bool] | frozenset]]) -> bool:
    """Can ``d`` be split into pieces of mass ``p_i`` carried by states allowed for part ``i``?

    ``parts`` pairs each weight with either a set of allowed states or a
    predicate on states.
    """
    support = d.support
    allowed = [
        (Fraction(p), frozenset(s for s in support if (s in a if isinstance(a, (set, frozenset)) else a(s))))
        for p, a in parts
    ]
    return _feasible(d, tuple(allowed))


def _feasible(d: Dist, allowed: tuple[tuple[Fraction, frozenset], ...]) -> bool:
    """``feasible`` with each allowed set already restricted to the support."""
    support = d.support_set
    if any(not a for _, a in allowed):
        return False
    covered = frozenset().union(*(a for _, a in allowed))
    if covered != support:
        return False
    if all(a == support for _, a in allowed):
        return True
    nodes = [SOURCE, SINK]
    edges = []
    for s, q in d.items():
        nodes.append(("S", s))
        edges.append((SOURCE, ("S", s), q))
    for i, (p, a) in enumerate(allowed):
        nodes.append(("I", i))
        edges.append((("I", i), SINK, p))
        for s in sorted(a):
            edges.append((("S", s), ("I", i), Fraction(1)))
    return max_flow(FlowNetwork(nodes, edges, SOURCE, SINK)).value == 1


def _check_actions(p: Plts, f: Formula) -> None:
    unknown = sorted(actions_of(f) - set(p.actions))
    if unknown:
        warnings.warn(
            f"actions {', '.join(unknown)} do not occur in the model; their diamonds are false",
            stacklevel=3,
        )


def sat_set(p: Plts, f: Formula) -> frozenset[int]:
    """All states satisfying ``f``, computed bottom-up over shared subformulae."""
    _check_actions(p, f)
    return _Checker(p).states(f)


class _Checker:
    def __init__(self, p: Plts):
        self.p = p
        self.memo: dict[Formula, frozenset[int]] = {}

    def states(self, f: Formula) -> frozenset[int]:
        p = self.p
        every = frozenset(range(p.n_states))
        for node in _postorder(f):
            if node in self.memo:
                continue
            if isinstance(node, Top):
                out = every
            elif isinstance(node, Neg):
                out = every - self.memo[node.body]
            elif isinstance(node, And):
                out = self.memo[node.left] & self.memo[node.right]
            elif isinstance(node, DistFormula):
                continue
            elif isinstance(node, Diamond):
                out = self._diamond(node)
            else:
                raise TypeError(f"{type(node).__name__} is not part of the adequate logic")
            self.memo[node] = out
        return self.memo[f]

    def _diamond(self, node: Diamond) -> frozenset[int]:
        p = self.p
        if not p.has_action(node.action):
            return frozenset()
        a = p.action(node.action)
        parts = [(q, self.memo[g]) for q, g in node.psi.parts]
        seen: dict[Dist, bool] = {}

        def ok(d: Dist) -> bool:
            if d not in seen:
                seen[d] = feasible(d, parts)
            return seen[d]

        return frozenset(s for s in range(p.n_states) if any(ok(d) for d in p.der(s, a)))


def sat_state(p: Plts, s: int | str, f: Formula) -> bool:
    return p.state(s) in sat_set(p, f)


def sat_dist(p: Plts, d: Dist, psi: DistFormula) -> bool:
    _check_actions(p, psi)
    checker = _Checker(p)
    return feasible(d, [(q, checker.states(g)) for q, g in psi.parts])


def distinguish(p: Plts, s: int | str, t: int | str) -> Formula | None:
    """A formula true at ``s`` and false at ``t``, or ``None`` if they are bisimilar.

    Works on the least approximant level ``n`` separating the pair.  Some
    move ``s -a-> D`` (or, symmetrically, a move of ``t``, giving a negated
    formula) is matched by no ``a``-move of ``t`` up to level ``n-1``.  The
    result is ``<a>`` of a choice over the support of ``D`` where each
    state's weight goes to a conjunction separating it from every
    differently classed state reachable by the offending moves.
    """
    s, t = p.state(s), p.state(t)
    levels = approximant_blocks(p, 0)
    while True:
        nxt = refine(p, levels[-1])
        if nxt == levels[-1]:
            break
        levels.append(nxt)
    if levels[-1][s] == levels[-1][t]:
        return None
    return _Distinguisher(p, levels).formula(s, t)


class _Distinguisher:
    def __init__(self, p: Plts, levels: list[tuple[int, ...]]):
        self.p = p
        self.levels = levels
        self.memo: dict[tuple[int, int], Formula] = {}

    def level(self, s: int, t: int) -> int:
        return next(n for n, b in enumerate(self.levels) if b[s] != b[t])

    def formula(self, s: int, t: int) -> Formula:
        key = (s, t)
        if key not in self.memo:
            self.memo[key] = self._build(s, t)
        return self.memo[key]

    def _build(self, s: int, t: int) -> Formula:
        p = self.p
        n = self.level(s, t)
        blocks = self.levels[n - 1]
        masses = lambda d: class_masses(d, blocks)
        for a in range(p.n_actions):
            theirs = {masses(e) for e in p.der(t, a)}
            for d in p.der(s, a):
                if masses(d) not in theirs:
                    return self._diamond(a, d, p.der(t, a), blocks)
        for a in range(p.n_actions):
            ours = {masses(d) for d in p.der(s, a)}
            for e in p.der(t, a):
                if masses(e) not in ours:
                    return Neg(self.formula(t, s))
        raise AssertionError("pair separated at a level but no offending move found")

    def _diamond(self, a: int, d: Dist, others: Sequence[Dist], blocks: Sequence[int]) -> Formula:
        reps: dict[int, int] = {}
        for e in others:
            for y in e.support:
                reps.setdefault(blocks[y], y)
        weights: dict[Formula, Fraction] = {}
        for x, q in d.items():
            chi = conj(
                self.formula(x, y) for b, y in reps.items() if b != blocks[x]
            )
            weights[chi] = weights.get(chi, Fraction(0)) + q
        return Diamond(self.p.actions[a], DistFormula(tuple((q, g) for g, q in weights.items())))


def logically_equivalent(p: Plts, s: int | str, t: int | str) -> bool:
    """Same formulae hold at ``s`` and ``t``; decided through bisimilarity."""
    return bisim(p, s, t)[0]

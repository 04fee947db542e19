"""Probabilistic bisimilarity and similarity.

Two routes that must agree:

* :class:`OnTheFly` explores state pairs reachable from a query, assuming
  revisited pairs bisimilar and restarting whenever such an assumption
  turns out wrong.  Distribution matching goes through max-flow.
* :func:`approximant` / :func:`bisimilarity` compute the inductive
  approximants ``~n`` globally, deciding liftings by class masses.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

from .core import Dist, Plts
from .lifting import StateRelation, check, class_masses

__all__ = [
    "Partition",
    "OnTheFly",
    "WrongAssumption",
    "bisim",
    "similar",
    "approximant",
    "approximant_blocks",
    "refine",
    "bisimilarity",
    "is_bisimulation",
    "is_simulation",
    "stabilisation_level",
]

T = TypeVar("T")


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]

    @classmethod
    def from_block_of(cls, block_of: Sequence[int]) -> "Partition":
        blocks: dict[int, list[int]] = {}
        for s, b in enumerate(block_of):
            blocks.setdefault(b, []).append(s)
        return cls(tuple(sorted(tuple(v) for v in blocks.values())))

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    def block_of(self) -> tuple[int, ...]:
        out = [0] * self.size
        for k, block in enumerate(self.blocks):
            for s in block:
                out[s] = k
        return tuple(out)

    def relation(self) -> StateRelation:
        return StateRelation.from_blocks(self.size, self.blocks)

    def format(self, names: Sequence[str]) -> str:
        return " ".join("{" + ", ".join(names[s] for s in b) + "}" for b in self.blocks)


def _canonical(keys: Sequence) -> tuple[int, ...]:
    """Renumber keys by first appearance so equal partitions compare equal."""
    ids: dict = {}
    return tuple(ids.setdefault(k, len(ids)) for k in keys)


def refine(p: Plts, block_of: Sequence[int]) -> tuple[int, ...]:
    """One approximant step: ``~(n+1)`` from the class map of ``~n``.

    ``~n`` is an equivalence, so ``D (~n)^ E`` holds iff ``D`` and ``E``
    give every class the same mass.  Two states are then related at the
    next level iff, per action, they reach the same set of class-mass
    vectors.
    """
    memo: dict[Dist, tuple] = {}

    def masses(d: Dist) -> tuple:
        if d not in memo:
            memo[d] = class_masses(d, block_of)
        return memo[d]

    sigs = [
        tuple(frozenset(masses(d) for d in p.der(s, a)) for a in range(p.n_actions))
        for s in range(p.n_states)
    ]
    return _canonical(sigs)


def approximant_blocks(p: Plts, n: int) -> list[tuple[int, ...]]:
    """Class maps of ``~0 .. ~n``."""
    levels = [tuple([0] * p.n_states)]
    for _ in range(n):
        levels.append(refine(p, levels[-1]))
    return levels


def approximant(p: Plts, n: int) -> StateRelation:
    return Partition.from_block_of(approximant_blocks(p, n)[-1]).relation()


def bisimilarity(p: Plts) -> Partition:
    """Refine approximants until ``~n = ~(n+1)``; the fixpoint is ``~``."""
    return Partition.from_block_of(_stable_blocks(p)[0])


def _stable_blocks(p: Plts) -> tuple[tuple[int, ...], int]:
    current = tuple([0] * p.n_states)
    level = 0
    while True:
        nxt = refine(p, current)
        if nxt == current:
            return current, level
        current, level = nxt, level + 1


def stabilisation_level(p: Plts) -> int:
    """Least ``n`` with ``~n = ~(n+1)``."""
    return _stable_blocks(p)[1]


class WrongAssumption(Exception):
    """Control signal: a pair assumed bisimilar was refuted; restart."""


@dataclass
class Stats:
    restarts: int = 0
    matches: int = 0
    checks: int = 0


class OnTheFly:
    """On-the-fly (bi)simulation checker for one pLTS.

    ``not_bisim`` and the union of previously returned witness relations
    persist across queries on the same checker; both only ever hold pairs
    whose verdict is settled.  ``visited`` and ``assumed`` are reset on
    every restart of a query.
    """

    def __init__(self, p: Plts, symmetric: bool = True):
        self.p = p
        self.symmetric = symmetric
        self.not_bisim: set[tuple[int, int]] = set()
        self.proven: set[tuple[int, int]] = set()
        self.visited: set[tuple[int, int]] = set()
        self.assumed: set[tuple[int, int]] = set()
        self.stats = Stats()

    def query(self, s: int, t: int) -> tuple[bool, StateRelation | None]:
        p = self.p
        s, t = p.state(s), p.state(t)
        limit = p.n_states ** 2
        restarts = 0
        while True:
            self.visited = set()
            self.assumed = set()
            before = len(self.not_bisim)
            try:
                result = _with_deep_stack(lambda: self._match(s, t), 12 * p.n_states ** 2 + 100)
            except WrongAssumption:
                restarts += 1
                self.stats.restarts += 1
                assert len(self.not_bisim) > before, "restart without new non-bisimilar pair"
                assert restarts <= limit, "restart bound |S|^2 exceeded"
                continue
            if not result:
                return False, None
            found = (self.visited - self.not_bisim) | self.proven
            self.proven = found
            return True, StateRelation(p.n_states, found)

    def _match(self, s: int, t: int) -> bool:
        self.stats.matches += 1
        self.visited.add((s, t))
        b = all(self._match_action(s, t, a) for a in range(self.p.n_actions))
        if not b:
            self.not_bisim.add((s, t))
            if self.symmetric:
                self.not_bisim.add((t, s))
            if (s, t) in self.assumed or (self.symmetric and (t, s) in self.assumed):
                raise WrongAssumption((s, t))
        return b

    def _match_action(self, s: int, t: int, a: int) -> bool:
        left, right = self.p.der(s, a), self.p.der(t, a)
        memo: dict[tuple[int, int], bool] = {}

        def b(i: int, j: int) -> bool:
            if (i, j) not in memo:
                memo[(i, j)] = self.match_distribution(left[i], right[j])
            return memo[(i, j)]

        forward = all(any(b(i, j) for j in range(len(right))) for i in range(len(left)))
        if not self.symmetric:
            return forward
        return forward and all(any(b(i, j) for i in range(len(left))) for j in range(len(right)))

    def match_distribution(self, d1: Dist, d2: Dist) -> bool:
        """Build the relation of ``close`` pairs over the supports, then lift."""
        rel = {(x, y) for x in d1.support for y in d2.support if self._close(x, y)}
        self.stats.checks += 1
        return check(d1, d2, rel)

    def _close(self, s: int, t: int) -> bool:
        if (s, t) in self.not_bisim:
            return False
        if (s, t) in self.proven:
            return True
        if (s, t) in self.visited:
            self.assumed.add((s, t))
            return True
        return self._match(s, t)


def _with_deep_stack(fn: Callable[[], T], depth: int) -> T:
    """Run ``fn`` with room for ``depth`` nested Python frames."""
    if depth < sys.getrecursionlimit() - 200:
        return fn()
    box: dict[str, object] = {}

    def runner():
        try:
            box["value"] = fn()
        except BaseException as exc:  # re-raised in the caller's thread
            box["error"] = exc

    old_limit = sys.getrecursionlimit()
    old_size = threading.stack_size()
    sys.setrecursionlimit(depth + 1000)
    try:
        threading.stack_size(min(1 << 30, max(64 << 20, depth * 4096)))
        worker = threading.Thread(target=runner)
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]  # type: ignore[misc]
    return box["value"]  # type: ignore[return-value]


def bisim(p: Plts, s: int | str, t: int | str, checker: OnTheFly | None = None) -> tuple[bool, StateRelation | None]:
    """Decide ``s ~ t``; on success also return a bisimulation containing it."""
    checker = checker or OnTheFly(p)
    if not checker.symmetric:
        raise ValueError("bisim needs a symmetric checker")
    return checker.query(s, t)


def similar(p: Plts, s: int | str, t: int | str) -> bool:
    """Decide whether ``t`` probabilistically simulates ``s``."""
    return OnTheFly(p, symmetric=False).query(s, t)[0]


def is_simulation(p: Plts, r: StateRelation) -> bool:
    """Transfer-condition replay: every move of ``s`` matched by ``t`` under ``R^``."""
    for s, t in r.pairs:
        for a in range(p.n_actions):
            for d in p.der(s, a):
                if not any(check(d, e, r) for e in p.der(t, a)):
                    return False
    return True


def is_bisimulation(p: Plts, r: StateRelation) -> bool:
    return is_simulation(p, r) and is_simulation(p, r.inverse())

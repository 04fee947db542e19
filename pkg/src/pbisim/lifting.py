"""Lifting relations on states to relations on distributions.

``check`` decides the lifting by maximum flow; ``check_equiv_classes``
decides it by comparing class masses and is only valid for equivalences.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .core import Dist, format_prob
from .flow import build_network, max_flow

__all__ = [
    "StateRelation",
    "NotAnEquivalenceError",
    "WeightFunction",
    "LiftWitness",
    "check",
    "weight_function",
    "decompose",
    "check_equiv_classes",
    "class_masses",
    "left_decompose",
]


class NotAnEquivalenceError(ValueError):
    pass


class StateRelation:
    """Finite binary relation over the states ``0 .. size-1``."""

    def __init__(self, size: int, pairs: Iterable[tuple[int, int]] = ()):
        self.size = size
        self.pairs = frozenset(pairs)
        for s, t in self.pairs:
            if not (0 <= s < size and 0 <= t < size):
                raise ValueError(f"pair {(s, t)} outside the universe of {size} states")

    @classmethod
    def identity(cls, size: int) -> "StateRelation":
        return cls(size, ((s, s) for s in range(size)))

    @classmethod
    def full(cls, size: int) -> "StateRelation":
        return cls(size, ((s, t) for s in range(size) for t in range(size)))

    @classmethod
    def from_blocks(cls, size: int, blocks: Iterable[Iterable[int]]) -> "StateRelation":
        pairs = []
        for block in blocks:
            block = list(block)
            pairs += [(s, t) for s in block for t in block]
        return cls(size, pairs)

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return pair in self.pairs

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StateRelation) and self.size == other.size and self.pairs == other.pairs

    def __hash__(self) -> int:
        return hash((self.size, self.pairs))

    def __le__(self, other: "StateRelation") -> bool:
        return self.pairs <= other.pairs

    def __or__(self, other: "StateRelation") -> "StateRelation":
        return StateRelation(self.size, self.pairs | other.pairs)

    def inverse(self) -> "StateRelation":
        return StateRelation(self.size, ((t, s) for s, t in self.pairs))

    @cached_property
    def is_equivalence(self) -> bool:
        n, p = self.size, self.pairs
        if any((s, s) not in p for s in range(n)):
            return False
        if any((t, s) not in p for s, t in p):
            return False
        succ: dict[int, set[int]] = {}
        for s, t in p:
            succ.setdefault(s, set()).add(t)
        return all(
            (s, u) in p for s, t in p for u in succ.get(t, ())
        )

    @cached_property
    def block_of(self) -> tuple[int, ...]:
        """Class index of each state; requires an equivalence."""
        if not self.is_equivalence:
            raise NotAnEquivalenceError("relation is not an equivalence")
        block = [-1] * self.size
        k = 0
        for s in range(self.size):
            if block[s] == -1:
                for t in range(s, self.size):
                    if (s, t) in self.pairs:
                        block[t] = k
                k += 1
        return tuple(block)

    def classes(self) -> list[tuple[int, ...]]:
        blocks: dict[int, list[int]] = {}
        for s, b in enumerate(self.block_of):
            blocks.setdefault(b, []).append(s)
        return [tuple(v) for _, v in sorted(blocks.items())]

    def __repr__(self) -> str:
        return f"StateRelation({self.size}, {sorted(self.pairs)})"


def check(d1: Dist, d2: Dist, r: StateRelation | Iterable[tuple[int, int]]) -> bool:
    """Decide ``d1 R^ d2``: the lifting network must carry a flow of 1."""
    pairs = r.pairs if isinstance(r, StateRelation) else frozenset(r)
    return max_flow(build_network(d1, d2, pairs)).value == 1


@dataclass(frozen=True)
class WeightFunction:
    d1: Dist
    d2: Dist
    w: dict[tuple[int, int], Fraction]

    def validate(self, r: StateRelation | None = None) -> None:
        for s, p in self.d1.items():
            got = sum((v for (x, _), v in self.w.items() if x == s), Fraction(0))
            assert got == p, f"row {s}: {got} != {p}"
        for t, q in self.d2.items():
            got = sum((v for (_, y), v in self.w.items() if y == t), Fraction(0))
            assert got == q, f"column {t}: {got} != {q}"
        assert all(v > 0 for v in self.w.values()), "non-positive stored weight"
        assert all(x in self.d1 and y in self.d2 for x, y in self.w), "weight outside supports"
        if r is not None:
            assert all(k in r for k in self.w), "weight on a pair outside R"


@dataclass(frozen=True)
class LiftWitness:
    """Decomposition ``d1 = sum p_i s_i``, ``d2 = sum p_i t_i`` with ``s_i R t_i``."""

    decomposition: tuple[tuple[Fraction, int, int], ...]

    def validate(self, d1: Dist, d2: Dist, r: StateRelation) -> None:
        assert sum((p for p, _, _ in self.decomposition), Fraction(0)) == 1
        left: dict[int, Fraction] = {}
        right: dict[int, Fraction] = {}
        for p, s, t in self.decomposition:
            assert p > 0
            assert (s, t) in r, f"{(s, t)} not related"
            left[s] = left.get(s, Fraction(0)) + p
            right[t] = right.get(t, Fraction(0)) + p
        assert Dist(left) == d1 and Dist(right) == d2

    def to_json(self, names: Sequence[str] | None = None) -> list[dict]:
        name = (lambda i: names[i]) if names is not None else str
        return [
            {"p": format_prob(p), "left": name(s), "right": name(t)}
            for p, s, t in self.decomposition
        ]


def weight_function(d1: Dist, d2: Dist, r: StateRelation | Iterable[tuple[int, int]]) -> WeightFunction | None:
    """Weight function read off the middle edges of a maximum flow."""
    pairs = r.pairs if isinstance(r, StateRelation) else frozenset(r)
    net = build_network(d1, d2, pairs)
    res = max_flow(net)
    if res.value != 1:
        return None
    w = {}
    for k, (u, v, _) in enumerate(net.edges):
        if isinstance(u, tuple) and isinstance(v, tuple) and res.flow[k] > 0:
            w[(u[1], v[1])] = res.flow[k]
    return WeightFunction(d1, d2, w)


def decompose(wf: WeightFunction) -> LiftWitness:
    return LiftWitness(tuple((p, s, t) for (s, t), p in sorted(wf.w.items())))


def class_masses(d: Dist, block_of: Sequence[int]) -> tuple[tuple[int, Fraction], ...]:
    """Mass of ``d`` in each equivalence class, as a canonical sorted tuple."""
    acc: dict[int, Fraction] = {}
    for s, p in d.items():
        b = block_of[s]
        acc[b] = acc.get(b, Fraction(0)) + p
    return tuple(sorted(acc.items()))


def check_equiv_classes(d1: Dist, d2: Dist, r: StateRelation) -> bool:
    """Decide ``d1 R^ d2`` for an equivalence ``R`` by class masses."""
    if not r.is_equivalence:
        raise NotAnEquivalenceError("class-mass test needs an equivalence relation")
    return class_masses(d1, r.block_of) == class_masses(d2, r.block_of)


def left_decompose(
    parts: Sequence[tuple[Fraction | int, Dist]],
    theta: Dist,
    r: StateRelation | Iterable[tuple[int, int]],
) -> list[Dist] | None:
    """Split ``theta`` along a convex decomposition of the left side.

    Given ``(sum p_i d_i) R^ theta`` returns ``theta_i`` with
    ``d_i R^ theta_i`` and ``theta = sum p_i theta_i``.  Each part takes the
    share ``d_i(s) / d(s)`` of every weight ``w(s, t)``.
    """
    weights = [Fraction(p) for p, _ in parts]
    if any(p <= 0 for p in weights) or sum(weights, Fraction(0)) != 1:
        return None
    combined: dict[int, Fraction] = {}
    for p, (_, d) in zip(weights, parts):
        for s, q in d.items():
            combined[s] = combined.get(s, Fraction(0)) + p * q
    delta = Dist(combined)
    wf = weight_function(delta, theta, r)
    if wf is None:
        return None
    out = []
    for _, d in parts:
        share: dict[int, Fraction] = {}
        for (s, t), w in wf.w.items():
            if s in d:
                share[t] = share.get(t, Fraction(0)) + d[s] * w / delta[s]
        out.append(Dist(share))
    return out

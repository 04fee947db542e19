"""Pseudometrics on states and the bisimulation functional.

Distances are exact rationals.  The functional ``F`` compares the
transition sets of two states with the Hausdorff distance induced by the
Kantorovich lifting of the current metric; iterating it from the
constant-0 metric approaches the greatest state-metric, whose kernel is
bisimilarity.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from typing import Sequence

from .core import Dist, Plts, format_prob
from .flow import dual_potentials, min_cost_transport
from .lifting import NotAnEquivalenceError, StateRelation

__all__ = [
    "PseudoMetric",
    "kantorovich",
    "kantorovich_dual",
    "metric_from_relation",
    "hausdorff",
    "metric_step",
    "is_state_metric",
    "iterate_metric",
    "metric_iterates",
    "kernel",
    "stabilise",
    "precedes",
]

ZERO = Fraction(0)
ONE = Fraction(1)


class PseudoMetric:
    """Symmetric 1-bounded distance table over states ``0 .. size-1``."""

    __slots__ = ("size", "table", "_hash")

    def __init__(self, table: Sequence[Sequence[Fraction | int]]):
        self.table = tuple(tuple(Fraction(x) for x in row) for row in table)
        self.size = len(self.table)
        if any(len(row) != self.size for row in self.table):
            raise ValueError("distance table must be square")
        self._hash = hash(self.table)

    @classmethod
    def top(cls, n: int) -> "PseudoMetric":
        """Constant 0: the greatest element of the metric order."""
        return cls([[ZERO] * n for _ in range(n)])

    @classmethod
    def bottom(cls, n: int) -> "PseudoMetric":
        """Discrete 0/1 metric: the least element."""
        return cls([[ZERO if i == j else ONE for j in range(n)] for i in range(n)])

    def __call__(self, s: int, t: int) -> Fraction:
        return self.table[s][t]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PseudoMetric) and self.table == other.table

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        rows = "; ".join(" ".join(format_prob(x) for x in row) for row in self.table)
        return f"PseudoMetric([{rows}])"

    def violations(self) -> list[str]:
        """Broken pseudometric axioms; empty when the table is valid."""
        n, d = self.size, self.table
        out = []
        for i in range(n):
            if d[i][i] != 0:
                out.append(f"d({i},{i}) = {d[i][i]}")
            for j in range(n):
                if not 0 <= d[i][j] <= 1:
                    out.append(f"d({i},{j}) = {d[i][j]} outside [0,1]")
                if d[i][j] != d[j][i]:
                    out.append(f"d({i},{j}) != d({j},{i})")
                for k in range(n):
                    if d[i][j] > d[i][k] + d[k][j]:
                        out.append(f"triangle fails at ({i},{k},{j})")
        return out

    def to_json(self, names: Sequence[str]) -> dict:
        return {
            names[i]: {names[j]: format_prob(self.table[i][j]) for j in range(self.size)}
            for i in range(self.size)
        }

    def to_csv(self, names: Sequence[str]) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([""] + list(names))
        for i, row in enumerate(self.table):
            writer.writerow([names[i]] + [format_prob(x) for x in row])
        return buf.getvalue()


def precedes(m1: PseudoMetric, m2: PseudoMetric) -> bool:
    """``m1 <= m2`` in the reversed order: ``m1`` is pointwise at least ``m2``."""
    return all(
        a >= b for r1, r2 in zip(m1.table, m2.table) for a, b in zip(r1, r2)
    )


def kantorovich(m: PseudoMetric, d1: Dist, d2: Dist) -> Fraction:
    """Optimal transport cost of ``d1`` onto ``d2`` with ground cost ``m``."""
    if d1 == d2:
        return ZERO
    if d1.is_point():
        (s,) = d1.support
        return sum((q * m(s, t) for t, q in d2.items()), ZERO)
    if d2.is_point():
        (t,) = d2.support
        return sum((p * m(s, t) for s, p in d1.items()), ZERO)
    return min_cost_transport(d1, d2, m).cost


def kantorovich_dual(m: PseudoMetric, d1: Dist, d2: Dist) -> dict[int, Fraction]:
    """A maximiser ``x`` of the dual program over all states of ``m``.

    Feasible: ``x[s] - x[t] <= m(s, t)`` and ``0 <= x[s] <= 1``; the value
    ``sum (d1(s) - d2(s)) x[s]`` equals :func:`kantorovich`.  Built from the
    transport potentials by a c-transform, which is 1-Lipschitz for ``m``.
    """
    plan = min_cost_transport(d1, d2, m)
    _, v = dual_potentials(plan)
    x = {s: min(m(s, y) + v[y] for y in v) for s in range(m.size)}
    low = min(x.values())
    return {s: w - low for s, w in x.items()}


def metric_from_relation(r: StateRelation) -> PseudoMetric:
    """0 on related pairs, 1 elsewhere; only a pseudometric for equivalences."""
    if not r.is_equivalence:
        raise NotAnEquivalenceError("0/1 metric needs an equivalence relation")
    n = r.size
    return PseudoMetric([[ZERO if (i, j) in r else ONE for j in range(n)] for i in range(n)])


class _Lifted:
    """Kantorovich values memoised on the metric's restriction to the supports."""

    def __init__(self):
        self.memo: dict = {}

    def __call__(self, m: PseudoMetric, d1: Dist, d2: Dist) -> Fraction:
        if d2.support < d1.support:
            d1, d2 = d2, d1
        key = (d1, d2, tuple(m(s, t) for s in d1.support for t in d2.support))
        value = self.memo.get(key)
        if value is None:
            value = self.memo[key] = kantorovich(m, d1, d2)
        return value


def hausdorff(m: PseudoMetric, xs: Sequence[Dist], ys: Sequence[Dist], lifted=kantorovich) -> Fraction:
    """Hausdorff distance of two distribution sets under the lifted ``m``.

    ``inf`` of nothing is 1 and ``sup`` of nothing is 0.
    """
    def directed(a: Sequence[Dist], b: Sequence[Dist]) -> Fraction:
        worst = ZERO
        for x in a:
            best = min((lifted(m, x, y) for y in b), default=ONE)
            worst = max(worst, best)
        return worst

    return max(directed(xs, ys), directed(ys, xs))


def metric_step(p: Plts, m: PseudoMetric, lifted=None) -> PseudoMetric:
    """``F(m)(s,t)``: supremum over all actions of the Hausdorff distance."""
    lifted = lifted or _Lifted()
    n = p.n_states
    table = [[ZERO] * n for _ in range(n)]
    for s in range(n):
        for t in range(s + 1, n):
            d = max(
                (hausdorff(m, p.der(s, a), p.der(t, a), lifted) for a in range(p.n_actions)),
                default=ZERO,
            )
            table[s][t] = table[t][s] = d
    return PseudoMetric(table)


def is_state_metric(p: Plts, m: PseudoMetric) -> bool:
    """``m`` precedes ``F(m)``, i.e. ``F(m)(s,t) <= m(s,t)`` everywhere."""
    return precedes(m, metric_step(p, m))


def iterate_metric(p: Plts, k: int) -> PseudoMetric:
    """``F^k`` applied to the constant-0 metric."""
    return _iterates(p, k)[-1]


def _iterates(p: Plts, k: int) -> list[PseudoMetric]:
    lifted = _Lifted()
    out = [PseudoMetric.top(p.n_states)]
    for _ in range(k):
        out.append(metric_step(p, out[-1], lifted))
    return out


def metric_iterates(p: Plts, k: int) -> list[PseudoMetric]:
    """``[F^0(top), ..., F^k(top)]`` sharing one Kantorovich cache."""
    return _iterates(p, k)


def kernel(m: PseudoMetric) -> StateRelation:
    n = m.size
    return StateRelation(n, ((s, t) for s in range(n) for t in range(n) if m(s, t) == 0))


def stabilise(p: Plts, max_iters: int | None = None) -> tuple[int, PseudoMetric]:
    """Iterate ``F`` from the top until the kernel stops changing.

    Returns the least ``k`` with ``kernel(F^k) == kernel(F^(k+1))`` and
    ``F^k``.  Kernels are the approximants, so this happens within
    ``|S|`` steps; the values themselves need not have converged.
    """
    limit = max_iters if max_iters is not None else p.n_states + 1
    lifted = _Lifted()
    current = PseudoMetric.top(p.n_states)
    for k in range(limit + 1):
        nxt = metric_step(p, current, lifted)
        if kernel(nxt) == kernel(current):
            return k, current
        current = nxt
    raise RuntimeError(f"kernel did not stabilise within {limit} iterations")


"""Exact-rational maximum flow and minimum-cost transportation.

Two independent max-flow solvers are provided: :func:`max_flow`
(Edmonds-Karp, breadth-first augmenting paths) and :func:`preflow_push`
(FIFO push-relabel).  They share nothing but the :class:`FlowNetwork`
container, so either can serve as the test oracle of the other.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Hashable, Mapping, Sequence

from .core import Dist, format_prob

__all__ = [
    "FlowNetwork",
    "FlowResult",
    "TransportPlan",
    "SOURCE",
    "SINK",
    "build_network",
    "max_flow",
    "preflow_push",
    "min_cut",
    "check_flow",
    "min_cost_transport",
    "dual_potentials",
    "to_dot",
]

SOURCE = "source"
SINK = "sink"


@dataclass
class FlowNetwork:
    """Directed network with one source and one sink.

    Node labels are arbitrary hashables; the lifting network uses
    ``("L", s)`` for left copies and ``("R", t)`` for primed right copies.
    """

    nodes: list[Hashable]
    edges: list[tuple[Hashable, Hashable, Fraction]]
    source: Hashable = SOURCE
    sink: Hashable = SINK

    def __post_init__(self):
        if self.source not in self.nodes or self.sink not in self.nodes:
            raise ValueError("source and sink must be nodes")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        known = set(self.nodes)
        for u, v, c in self.edges:
            if u not in known or v not in known:
                raise ValueError(f"edge {(u, v)} references an unknown node")
            if c < 0:
                raise ValueError(f"negative capacity on {(u, v)}")


@dataclass
class FlowResult:
    value: Fraction
    flow: dict[int, Fraction]  # edge index -> flow

    def on(self, net: FlowNetwork, u: Hashable, v: Hashable) -> Fraction:
        """Total flow on all edges ``u -> v``."""
        return sum(
            (self.flow[i] for i, (a, b, _) in enumerate(net.edges) if a == u and b == v),
            Fraction(0),
        )


def build_network(
    d1: Dist,
    d2: Dist,
    pairs,
    universe: Sequence[int] | None = None,
) -> FlowNetwork:
    """The lifting network for ``(d1, d2, R)``.

    Edges ``source -> (L,s)`` carry ``d1(s)``, ``(R,t) -> sink`` carry
    ``d2(t)`` and every ``(s, t)`` in ``pairs`` gives ``(L,s) -> (R,t)``
    with capacity 1.  By default only the supports are materialised;
    passing ``universe`` builds the full-state-space network instead.
    """
    if universe is None:
        left, right = d1.support, d2.support
    else:
        left = right = tuple(universe)
    in_left, in_right = set(left), set(right)
    nodes: list[Hashable] = [SOURCE]
    nodes += [("L", s) for s in left]
    nodes += [("R", t) for t in right]
    nodes.append(SINK)
    edges = [(SOURCE, ("L", s), d1[s]) for s in left]
    edges += [
        (("L", s), ("R", t), Fraction(1))
        for s, t in sorted(pairs)
        if s in in_left and t in in_right
    ]
    edges += [(("R", t), SINK, d2[t]) for t in right]
    return FlowNetwork(nodes, edges)


class _Residual:
    """Adjacency-list residual graph over integer node ids.

    Capacities are scaled by their common denominator so the solvers run
    on plain integers; :meth:`result` scales back.
    """

    def __init__(self, net: FlowNetwork):
        self.index = {v: i for i, v in enumerate(net.nodes)}
        n = len(net.nodes)
        self.adj: list[list[int]] = [[] for _ in range(n)]
        caps = [Fraction(c) for _, _, c in net.edges]
        self.scale = lcm(*(c.denominator for c in caps)) if caps else 1
        # arc arrays; arc 2k is edge k forward, 2k+1 its reverse
        self.head: list[int] = []
        self.cap: list[int] = []
        for (u, v, _), c in zip(net.edges, caps):
            iu, iv = self.index[u], self.index[v]
            self.adj[iu].append(len(self.head))
            self.head.append(iv)
            self.cap.append(c.numerator * (self.scale // c.denominator))
            self.adj[iv].append(len(self.head))
            self.head.append(iu)
            self.cap.append(0)
        self.n = n
        self.s = self.index[net.source]
        self.t = self.index[net.sink]

    def result(self, net: FlowNetwork) -> dict[int, Fraction]:
        return {k: Fraction(self.cap[2 * k + 1], self.scale) for k in range(len(net.edges))}

    def value(self, units: int) -> Fraction:
        return Fraction(units, self.scale)


def max_flow(net: FlowNetwork) -> FlowResult:
    """Edmonds-Karp: shortest augmenting paths by BFS, exact arithmetic.

    Neighbours are scanned in edge-insertion order, so ties break toward
    the lowest-numbered node and the returned flow is deterministic.
    """
    g = _Residual(net)
    value = 0
    while True:
        pred = [-1] * g.n
        pred[g.s] = -2
        queue = deque([g.s])
        while queue and pred[g.t] == -1:
            u = queue.popleft()
            for arc in g.adj[u]:
                v = g.head[arc]
                if pred[v] == -1 and g.cap[arc] > 0:
                    pred[v] = arc
                    queue.append(v)
        if pred[g.t] == -1:
            break
        bottleneck = None
        v = g.t
        while v != g.s:
            arc = pred[v]
            if bottleneck is None or g.cap[arc] < bottleneck:
                bottleneck = g.cap[arc]
            v = g.head[arc ^ 1]
        v = g.t
        while v != g.s:
            arc = pred[v]
            g.cap[arc] -= bottleneck
            g.cap[arc ^ 1] += bottleneck
            v = g.head[arc ^ 1]
        value += bottleneck
    return FlowResult(g.value(value), g.result(net))


def preflow_push(net: FlowNetwork) -> FlowResult:
    """FIFO push-relabel maximum flow (independent of :func:`max_flow`)."""
    g = _Residual(net)
    n = g.n
    height = [0] * n
    excess = [0] * n
    height[g.s] = n
    active: deque[int] = deque()
    for arc in g.adj[g.s]:
        c = g.cap[arc]
        if c > 0:
            v = g.head[arc]
            g.cap[arc] -= c
            g.cap[arc ^ 1] += c
            excess[v] += c
            excess[g.s] -= c
            if v not in (g.s, g.t) and excess[v] == c:
                active.append(v)
    while active:
        u = active.popleft()
        while excess[u] > 0:
            pushed = False
            for arc in g.adj[u]:
                v = g.head[arc]
                if g.cap[arc] > 0 and height[u] == height[v] + 1:
                    delta = min(excess[u], g.cap[arc])
                    g.cap[arc] -= delta
                    g.cap[arc ^ 1] += delta
                    excess[u] -= delta
                    was_idle = excess[v] == 0
                    excess[v] += delta
                    if was_idle and v not in (g.s, g.t):
                        active.append(v)
                    pushed = True
                    if excess[u] == 0:
                        break
            if excess[u] > 0 and not pushed:
                height[u] = 1 + min(
                    height[g.head[arc]] for arc in g.adj[u] if g.cap[arc] > 0
                )
    return FlowResult(g.value(excess[g.t]), g.result(net))


def min_cut(net: FlowNetwork, result: FlowResult) -> tuple[set, Fraction]:
    """Source side of the residual-reachability cut and its capacity."""
    residual: dict[Hashable, list[Hashable]] = {v: [] for v in net.nodes}
    for k, (u, v, c) in enumerate(net.edges):
        f = result.flow[k]
        if f < c:
            residual[u].append(v)
        if f > 0:
            residual[v].append(u)
    side = {net.source}
    stack = [net.source]
    while stack:
        u = stack.pop()
        for v in residual[u]:
            if v not in side:
                side.add(v)
                stack.append(v)
    capacity = sum(
        (c for u, v, c in net.edges if u in side and v not in side), Fraction(0)
    )
    return side, capacity


def check_flow(net: FlowNetwork, result: FlowResult) -> None:
    """Raise AssertionError unless ``result`` is a valid maximum flow."""
    balance = {v: Fraction(0) for v in net.nodes}
    for k, (u, v, c) in enumerate(net.edges):
        f = result.flow[k]
        assert 0 <= f <= c, f"capacity violated on {(u, v)}: {f} not in [0, {c}]"
        balance[u] -= f
        balance[v] += f
    for v, b in balance.items():
        if v not in (net.source, net.sink):
            assert b == 0, f"conservation violated at {v!r}: {b}"
    assert -balance[net.source] == result.value, "value is not the source outflow"
    side, cut = min_cut(net, result)
    assert net.sink not in side, "sink reachable in residual graph"
    assert cut == result.value, f"cut {cut} != flow {result.value}"


@dataclass
class TransportPlan:
    """Optimal transportation plan between two marginals.

    ``plan`` holds the positive entries only; ``cost`` is the total cost.
    The marginals and cost matrix are kept so the plan can be re-certified.
    """

    plan: dict[tuple[Hashable, Hashable], Fraction]
    cost: Fraction
    mu: dict[Hashable, Fraction] = field(repr=False)
    nu: dict[Hashable, Fraction] = field(repr=False)
    costs: dict[tuple[Hashable, Hashable], Fraction] = field(repr=False)

    def to_json(self) -> dict:
        return {
            "cost": format_prob(self.cost),
            "plan": [
                {"from": str(x), "to": str(y), "mass": format_prob(w)}
                for (x, y), w in sorted(self.plan.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1])))
            ],
        }


def _marginal(m: Mapping[Hashable, Fraction] | Dist) -> dict[Hashable, Fraction]:
    items = m.items() if isinstance(m, Mapping) else m.items()
    out = {k: Fraction(w) for k, w in items if w}
    if any(w < 0 for w in out.values()):
        raise ValueError("marginal has negative mass")
    return out


def min_cost_transport(
    mu: Mapping[Hashable, Fraction] | Dist,
    nu: Mapping[Hashable, Fraction] | Dist,
    cost: Mapping[tuple[Hashable, Hashable], Fraction] | Callable[[Hashable, Hashable], Fraction],
) -> TransportPlan:
    """Minimum-cost plan moving ``mu`` onto ``nu``.

    Successive shortest augmenting paths with Bellman-Ford over the
    residual graph.  Masses are scaled to integers by their common
    denominator so the inner loop runs on ints; costs stay exact rationals.
    Among equal-cost paths the lowest-indexed predecessor wins.
    """
    mu_m, nu_m = _marginal(mu), _marginal(nu)
    if not mu_m or not nu_m:
        raise ValueError("marginals must have nonempty support")
    if sum(mu_m.values()) != sum(nu_m.values()):
        raise ValueError("marginals carry different total mass")
    left = sorted(mu_m, key=_sort_key)
    right = sorted(nu_m, key=_sort_key)
    lookup = cost if callable(cost) else (lambda x, y: cost[(x, y)])
    c = [[Fraction(lookup(x, y)) for y in right] for x in left]
    costs = {(x, y): c[i][j] for i, x in enumerate(left) for j, y in enumerate(right)}
    nl, nr = len(left), len(right)

    scale = lcm(*(w.denominator for w in list(mu_m.values()) + list(nu_m.values())))
    supply = [int(mu_m[x] * scale) for x in left]
    demand = [int(nu_m[y] * scale) for y in right]
    flow = [[0] * nr for _ in range(nl)]

    # nodes: 0 = source, 1..nl = left, nl+1..nl+nr = right, nl+nr+1 = sink
    n = nl + nr + 2
    sink = n - 1
    remaining = sum(supply)
    zero = Fraction(0)
    while remaining:
        dist: list[Fraction | None] = [None] * n
        pred: list[int] = [-1] * n
        dist[0] = zero
        for i in range(nl):
            if supply[i]:
                dist[1 + i] = zero
                pred[1 + i] = 0
        changed = True
        while changed:
            changed = False
            for i in range(nl):
                di = dist[1 + i]
                if di is None:
                    continue
                for j in range(nr):
                    nd = di + c[i][j]
                    dj = dist[1 + nl + j]
                    if dj is None or nd < dj:
                        dist[1 + nl + j] = nd
                        pred[1 + nl + j] = 1 + i
                        changed = True
            for j in range(nr):
                dj = dist[1 + nl + j]
                if dj is None:
                    continue
                for i in range(nl):
                    if flow[i][j]:
                        nd = dj - c[i][j]
                        di = dist[1 + i]
                        if di is None or nd < di:
                            dist[1 + i] = nd
                            pred[1 + i] = 1 + nl + j
                            changed = True
        best = None
        for j in range(nr):
            if demand[j] and dist[1 + nl + j] is not None:
                if best is None or dist[1 + nl + j] < dist[1 + nl + best]:
                    best = j
        assert best is not None, "no augmenting path while mass remains"
        pred[sink] = 1 + nl + best

        # walk back to find the bottleneck
        path = []
        v = sink
        while v != 0:
            path.append((pred[v], v))
            v = pred[v]
        path.reverse()
        amount = remaining
        for u, v in path:
            if u == 0:
                amount = min(amount, supply[v - 1])
            elif v == sink:
                amount = min(amount, demand[u - 1 - nl])
            elif u > nl:  # backward arc right -> left cancels flow
                amount = min(amount, flow[v - 1][u - 1 - nl])
        for u, v in path:
            if u == 0:
                supply[v - 1] -= amount
            elif v == sink:
                demand[u - 1 - nl] -= amount
            elif u <= nl:
                flow[u - 1][v - 1 - nl] += amount
            else:
                flow[v - 1][u - 1 - nl] -= amount
        remaining -= amount

    plan = {
        (left[i], right[j]): Fraction(flow[i][j], scale)
        for i in range(nl)
        for j in range(nr)
        if flow[i][j]
    }
    total = sum((w * costs[k] for k, w in plan.items()), Fraction(0))
    return TransportPlan(plan, total, mu_m, nu_m, costs)


def dual_potentials(plan: TransportPlan) -> tuple[dict[Hashable, Fraction], dict[Hashable, Fraction]]:
    """Optimal dual ``(u, v)`` for an optimal plan.

    Feasible means ``u[x] - v[y] <= cost(x, y)`` for every pair, and the
    objective ``sum mu*u - sum nu*v`` equals ``plan.cost``.  Potentials are
    read off shortest distances in the residual graph of the plan, then
    tightened by alternating c-transforms and shifted into ``[0, 1]``
    (possible whenever costs lie in ``[0, 1]``).
    """
    left = sorted(plan.mu, key=_sort_key)
    right = sorted(plan.nu, key=_sort_key)
    c = plan.costs
    # residual arcs: x -> y at cost c, y -> x at cost -c where the plan is positive
    pot: dict[tuple[str, Hashable], Fraction] = {("L", x): Fraction(0) for x in left}
    pot.update({("R", y): Fraction(0) for y in right})
    for _ in range(len(pot) + 1):
        changed = False
        for x in left:
            for y in right:
                if pot[("L", x)] + c[(x, y)] < pot[("R", y)]:
                    pot[("R", y)] = pot[("L", x)] + c[(x, y)]
                    changed = True
                if plan.plan.get((x, y), 0) > 0 and pot[("R", y)] - c[(x, y)] < pot[("L", x)]:
                    pot[("L", x)] = pot[("R", y)] - c[(x, y)]
                    changed = True
        if not changed:
            break
    else:
        raise ValueError("plan is not optimal: negative residual cycle")
    u = {x: -pot[("L", x)] for x in left}
    v = {y: -pot[("R", y)] for y in right}
    u = {x: min(c[(x, y)] + v[y] for y in right) for x in left}
    v = {y: max(u[x] - c[(x, y)] for x in left) for y in right}
    low = min(min(u.values()), min(v.values()))
    u = {x: w - low for x, w in u.items()}
    v = {y: w - low for y, w in v.items()}
    return u, v


def _sort_key(x: Hashable):
    return (type(x).__name__, x) if not isinstance(x, (int, Fraction)) else ("", x)


def to_dot(net: FlowNetwork, result: FlowResult | None = None, label: Callable[[Hashable], str] = str) -> str:
    """Graphviz rendering for debugging; flows shown as ``f/c`` when given."""
    ids = {v: f"n{i}" for i, v in enumerate(net.nodes)}
    lines = ["digraph network {", "  rankdir=LR;"]
    for v in net.nodes:
        lines.append(f'  {ids[v]} [label="{label(v)}"];')
    for k, (u, v, c) in enumerate(net.edges):
        text = format_prob(c) if result is None else f"{format_prob(result.flow[k])}/{format_prob(c)}"
        lines.append(f'  {ids[u]} -> {ids[v]} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

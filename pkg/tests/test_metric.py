from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from models import corpus
from oracles import total_variation, transport_brute
from pbisim.bisim import approximant, bisimilarity, is_bisimulation
from pbisim.core import Dist, parse_plts, point_dist
from pbisim.lifting import NotAnEquivalenceError, StateRelation, check
from pbisim.metric import (
    PseudoMetric,
    hausdorff,
    is_state_metric,
    iterate_metric,
    kantorovich,
    kantorovich_dual,
    kernel,
    metric_from_relation,
    metric_iterates,
    metric_step,
    precedes,
    stabilise,
)
from strategies import dists, equivalences, models

U, V = 3, 4
HALF = Dist({U: F(1, 2), V: F(1, 2)})
TWO_THIRDS = Dist({U: F(2, 3), V: F(1, 3)})
CORPUS = corpus(11, 25, max_states=6)


def line_metric(xs, scale=F(1)):
    """Truncated distance between points on a line: always a pseudometric."""
    return PseudoMetric([[min(F(1), scale * abs(a - b)) for b in xs] for a in xs])


points = st.lists(st.fractions(0, 1, max_denominator=6), min_size=6, max_size=6)


def test_order_extremes():
    top, bottom = PseudoMetric.top(3), PseudoMetric.bottom(3)
    assert precedes(bottom, top) and not precedes(top, bottom)
    assert kernel(top) == StateRelation.full(3)
    assert kernel(bottom) == StateRelation.identity(3)
    assert top.violations() == [] and bottom.violations() == []


def test_violations_reported():
    bad = PseudoMetric([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    assert any("triangle" in v for v in bad.violations())
    assert PseudoMetric([[1, 0], [0, 0]]).violations()
    with pytest.raises(ValueError):
        PseudoMetric([[0, 1]])


def test_kantorovich_examples():
    bottom = PseudoMetric.bottom(5)
    assert kantorovich(line_metric([0, F(1, 3), 1, F(1, 2), 0]), HALF, HALF) == 0
    assert kantorovich(bottom, point_dist(0), point_dist(1)) == 1
    assert kantorovich(bottom, HALF, TWO_THIRDS) == F(1, 6) == total_variation(HALF, TWO_THIRDS)


def test_metric_from_relation_examples():
    assert metric_from_relation(StateRelation.identity(3)) == PseudoMetric.bottom(3)
    assert metric_from_relation(StateRelation.full(3)) == PseudoMetric.top(3)
    m = metric_from_relation(StateRelation.from_blocks(3, [[0, 2], [1]]))
    assert m.table == ((0, 1, 0), (1, 0, 1), (0, 1, 0))
    with pytest.raises(NotAnEquivalenceError):
        metric_from_relation(StateRelation(3, {(0, 1)}))


def test_hausdorff_conventions():
    m = PseudoMetric.bottom(5)
    assert hausdorff(m, [], []) == 0
    assert hausdorff(m, [HALF], []) == 1
    assert hausdorff(m, [], [HALF]) == 1
    assert hausdorff(m, [HALF], [TWO_THIRDS]) == F(1, 6)


def test_step_examples(e1):
    dead = parse_plts("states: x y\n")
    assert metric_step(dead, PseudoMetric.bottom(2)) == PseudoMetric.top(2)
    assert is_state_metric(dead, PseudoMetric.bottom(2))
    s, t, t2, u, v = range(5)
    one = metric_step(e1, PseudoMetric.top(5))
    assert one(u, v) == 1
    two = metric_step(e1, one)
    assert two(s, t2) == F(1, 6) and two(s, t) == 0


def test_iterates_e1(e1):
    s, t, t2, u, v = range(5)
    assert iterate_metric(e1, 0) == PseudoMetric.top(5)
    assert iterate_metric(e1, 1)(u, v) == 1
    m = iterate_metric(e1, 2)
    assert m(s, t2) == F(1, 6) and m(s, t) == 0
    for k in range(2, 5):
        assert kernel(iterate_metric(e1, k)) == bisimilarity(e1).relation()
    assert metric_iterates(e1, 3)[2] == m


def test_state_metric_examples(e1):
    assert is_state_metric(e1, metric_from_relation(bisimilarity(e1).relation()))
    assert not is_state_metric(e1, metric_from_relation(StateRelation.full(5)))


def test_stabilise_e1(e1):
    k, m = stabilise(e1)
    assert k == 2
    assert m(0, 1) == 0 and m(0, 2) == F(1, 6)
    assert kernel(m) == bisimilarity(e1).relation()


def test_tables_serialise(e1):
    m = iterate_metric(e1, 2)
    assert m.to_json(e1.states)["s"]["t2"] == "1/6"
    rows = m.to_csv(e1.states).splitlines()
    assert rows[0] == ",s,t,t2,u,v"
    assert rows[1].split(",")[3] == "1/6"


@given(dists(max_support=3, max_weight=3), dists(max_support=3, max_weight=3), points)
def test_kantorovich_matches_enumeration(d1, d2, xs):
    m = line_metric(xs)
    grid = 1
    for _, q in list(d1.items()) + list(d2.items()):
        grid = grid * q.denominator // __import__("math").gcd(grid, q.denominator)
    assert kantorovich(m, d1, d2) == transport_brute(d1, d2, m, grid)


@given(dists(), dists(), points)
def test_kantorovich_dual_certificate(d1, d2, xs):
    m = line_metric(xs)
    x = kantorovich_dual(m, d1, d2)
    assert all(0 <= x[s] <= 1 for s in x)
    assert all(x[s] - x[t] <= m(s, t) for s in x for t in x)
    assert sum((d1[s] - d2[s]) * x[s] for s in x) == kantorovich(m, d1, d2)


@given(dists(), dists(), equivalences())
def test_zero_distance_iff_lifted(d1, d2, r):
    assert check(d1, d2, r) == (kantorovich(metric_from_relation(r), d1, d2) == 0)


@given(models(max_states=6), points, st.integers(1, 4))
def test_step_is_monotone(p, xs, c):
    xs = xs[: p.n_states]
    loose, tight = line_metric(xs), line_metric(xs, F(c))
    assert precedes(tight, loose)
    assert precedes(metric_step(p, tight), metric_step(p, loose))


@given(models(max_states=6), points)
def test_step_yields_pseudometrics(p, xs):
    assert metric_step(p, line_metric(xs[: p.n_states])).violations() == []


@pytest.mark.parametrize("k", range(len(CORPUS)))
def test_kernels_are_approximants(k):
    p = CORPUS[k]
    for n, m in enumerate(metric_iterates(p, 5)):
        assert kernel(m) == approximant(p, n)
        assert m.violations() == []
    _, m = stabilise(p)
    assert kernel(m) == bisimilarity(p).relation()


@given(models(max_states=5), equivalences(n_states=5))
def test_state_metric_iff_bisimulation(p, r):
    r = StateRelation.from_blocks(p.n_states, [[s for s in b if s < p.n_states] for b in r.classes()])
    assert is_state_metric(p, metric_from_relation(r)) == is_bisimulation(p, r)

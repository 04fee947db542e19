from __future__ import annotations

import random
import warnings
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from formulas import random_l
from models import corpus
from oracles import gale_feasible
from pbisim.bisim import OnTheFly, bisim
from pbisim.core import Dist, convex_sum
from pbisim.logic import (
    distinguish,
    feasible,
    logically_equivalent,
    parse_formula,
    sat_dist,
    sat_set,
    sat_state,
)
from pbisim.syntax import DistFormula, Neg, Top, show
from strategies import dists, models

seeds = st.integers(0, 2**32 - 1)
CORPUS = corpus(23, 60)
B = parse_formula("<b>(1*tt)")


def test_sat_state_examples(e1):
    assert all(sat_state(e1, s, Top()) for s in e1.states)
    assert sat_state(e1, "u", B) and not sat_state(e1, "v", B)
    f = parse_formula("<a>(1/2*<b>(1*tt) (+) 1/2*tt)")
    assert sat_state(e1, "s", f) and sat_state(e1, "t2", f)
    assert not sat_state(e1, "u", f)


def test_sat_dist_examples(e1):
    u, v = e1.state("u"), e1.state("v")
    d = Dist({u: F(1, 2), v: F(1, 2)})
    assert sat_dist(e1, d, DistFormula(((1, Top()),)))
    half = DistFormula(((F(1, 2), B), (F(1, 2), Top())))
    assert sat_dist(e1, d, half)
    # independent check: u feeds the first index, v the second
    assert gale_feasible(d, [(F(1, 2), {u}), (F(1, 2), {u, v})])
    assert not sat_dist(e1, d, DistFormula(((F(3, 4), B), (F(1, 4), Top()))))


def test_unknown_action_is_false_with_warning(e1):
    with pytest.warns(UserWarning, match="do not occur"):
        assert sat_set(e1, parse_formula("<z>(1*tt)")) == frozenset()


def test_distinguish_examples(e1):
    assert distinguish(e1, "s", "t") is None
    assert distinguish(e1, "u", "v") == B
    f = distinguish(e1, "s", "t2")
    assert sat_state(e1, "s", f) and not sat_state(e1, "t2", f)
    assert show(f).startswith("<a>(1/2*")
    assert parse_formula(show(f)) == f
    g = distinguish(e1, "v", "u")
    assert sat_state(e1, "v", g) and not sat_state(e1, "u", g)


def test_logical_equivalence(e1):
    assert logically_equivalent(e1, "s", "t")
    assert not logically_equivalent(e1, "u", "v")


def test_feasible_accepts_predicates():
    d = Dist({0: F(1, 3), 1: F(2, 3)})
    assert feasible(d, [(F(2, 3), lambda s: s == 1), (F(1, 3), {0, 1})])
    assert not feasible(d, [(F(1, 2), {0}), (F(1, 2), {0, 1})])


@pytest.mark.parametrize("k", range(len(CORPUS)))
def test_distinguish_sound_and_complete(k):
    p = CORPUS[k]
    checker = OnTheFly(p)
    for s in range(p.n_states):
        for t in range(p.n_states):
            f = distinguish(p, s, t)
            if bisim(p, s, t, checker)[0]:
                assert f is None
            else:
                assert f is not None
                sat = sat_set(p, f)
                assert s in sat and t not in sat


@given(models(max_states=6), seeds)
def test_negation_duality(p, seed):
    f = random_l(random.Random(seed), 3, list(p.actions))
    every = frozenset(range(p.n_states))
    assert sat_set(p, Neg(f)) == every - sat_set(p, f)


@given(models(max_states=5), seeds)
def test_bisimilar_states_agree_on_formulas(p, seed):
    f = random_l(random.Random(seed), 3, list(p.actions))
    sat = sat_set(p, f)
    checker = OnTheFly(p)
    for s in range(p.n_states):
        for t in range(s + 1, p.n_states):
            if bisim(p, s, t, checker)[0]:
                assert (s in sat) == (t in sat)


allowed = st.frozensets(st.integers(0, 5), max_size=6)


@st.composite
def demands(draw):
    k = draw(st.integers(1, 3))
    raw = draw(st.lists(st.integers(1, 6), min_size=k, max_size=k))
    return [(F(w, sum(raw)), draw(allowed)) for w in raw]


@given(dists(max_support=3), demands())
def test_feasibility_matches_hall_condition(d, parts):
    assert feasible(d, parts) == gale_feasible(d, parts)


@given(dists(), dists(), demands())
def test_feasibility_is_convex(d1, d2, parts):
    if feasible(d1, parts) and feasible(d2, parts):
        assert feasible(convex_sum([(F(1, 2), d1), (F(1, 2), d2)]), parts)


def test_diamond_never_warns_for_known_actions(e1):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sat_set(e1, parse_formula("<a>(1*tt) & <b>(1*tt)"))

from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given

from models import corpus, random_plts
from oracles import literal_approximants, literal_bisimilarity, lts_partition, same_partition, simulation_preorder
from pbisim.bisim import (
    OnTheFly,
    Partition,
    approximant,
    approximant_blocks,
    bisim,
    bisimilarity,
    is_bisimulation,
    is_simulation,
    similar,
    stabilisation_level,
)
from pbisim.core import PltsError, parse_plts
from pbisim.lifting import StateRelation
from strategies import models

DATA = Path(__file__).parent / "data"
CORPUS = corpus(7, 40)


def names(p, part: Partition):
    return {frozenset(p.states[s] for s in b) for b in part.blocks}


def test_e1_verdicts(e1):
    ok, rel = bisim(e1, "s", "t")
    assert ok and (e1.state("s"), e1.state("t")) in rel
    assert is_bisimulation(e1, rel)
    assert bisim(e1, "u", "v") == (False, None)
    assert bisim(e1, "s", "t2") == (False, None)


def test_e1_approximants(e1):
    s, t2, u, v = (e1.state(x) for x in ("s", "t2", "u", "v"))
    assert approximant(e1, 0) == StateRelation.full(5)
    one = approximant(e1, 1)
    assert (u, v) not in one and (s, t2) in one
    assert (s, t2) not in approximant(e1, 2)


def test_e1_partition(e1):
    assert names(e1, bisimilarity(e1)) == {
        frozenset({"s", "t"}), frozenset({"t2"}), frozenset({"u"}), frozenset({"v"})
    }
    assert stabilisation_level(e1) == 2
    assert bisimilarity(e1).format(e1.states) == "{s, t} {t2} {u} {v}"


def test_e1_similarity(e1):
    assert similar(e1, "v", "u")
    assert not similar(e1, "u", "v")


def test_no_transitions_single_block():
    p = parse_plts("states: x y z\n")
    assert bisimilarity(p).blocks == ((0, 1, 2),)


def test_unknown_state(e1):
    with pytest.raises(PltsError):
        bisim(e1, "s", "nope")


def test_match_distribution_example(e1):
    checker = OnTheFly(e1)
    u, v = e1.state("u"), e1.state("v")
    checker.not_bisim |= {(u, v), (v, u)}
    checker.proven |= {(u, u), (v, v)}
    move = lambda x: e1.der(e1.state(x), e1.action("a"))[0]
    assert not checker.match_distribution(move("s"), move("t2"))
    assert checker.match_distribution(move("s"), move("t"))


def test_mutual_similarity_is_not_bisimilarity():
    p = parse_plts((DATA / "mutual_sim.plts").read_text())
    assert similar(p, "p", "q") and similar(p, "q", "p")
    assert not bisim(p, "p", "q")[0]
    # cross-checked against the approximant oracle
    blocks = bisimilarity(p).block_of()
    assert blocks[p.state("p")] != blocks[p.state("q")]


@pytest.mark.parametrize("k", range(len(CORPUS)))
def test_on_the_fly_agrees_with_literal_definition(k):
    p = CORPUS[k]
    truth = literal_bisimilarity(p)
    checker = OnTheFly(p)
    for s in range(p.n_states):
        for t in range(p.n_states):
            ok, rel = bisim(p, s, t, checker)
            assert ok == ((s, t) in truth)
            if ok:
                assert (s, t) in rel and is_bisimulation(p, rel)
    assert bisimilarity(p).relation() == StateRelation(p.n_states, truth)


@pytest.mark.parametrize("k", range(len(CORPUS)))
def test_approximants_agree_with_literal_definition(k):
    p = CORPUS[k]
    levels = literal_approximants(p, 4)
    for n, level in enumerate(levels):
        assert approximant(p, n) == StateRelation(p.n_states, level)


@given(models(max_states=6))
def test_approximants_shrink(p):
    rels = [approximant(p, n) for n in range(5)]
    assert all(b <= a for a, b in zip(rels, rels[1:]))
    assert all(r.is_equivalence for r in rels)


@given(models(max_states=6))
def test_similarity_matches_preorder(p):
    pre = simulation_preorder(p)
    for s in range(p.n_states):
        for t in range(p.n_states):
            assert similar(p, s, t) == ((s, t) in pre)
            if bisim(p, s, t)[0]:
                assert similar(p, s, t)
    assert is_simulation(p, StateRelation(p.n_states, pre))


@given(models(max_states=6))
def test_reflexive(p):
    checker = OnTheFly(p)
    assert all(bisim(p, s, s, checker)[0] for s in range(p.n_states))


@pytest.mark.parametrize("seed", range(30))
def test_point_models_match_lts_bisimulation(seed):
    p = random_plts(random.Random(seed), max_states=10, point_only=True)
    assert same_partition(bisimilarity(p).block_of(), lts_partition(p))


def test_shared_checker_remembers_verdicts(e1):
    checker = OnTheFly(e1)
    assert bisim(e1, "s", "t", checker)[0]
    before = checker.stats.matches
    assert bisim(e1, "s", "t", checker)[0]
    assert checker.stats.matches == before + 1


def test_bisim_rejects_asymmetric_checker(e1):
    with pytest.raises(ValueError):
        bisim(e1, "s", "t", OnTheFly(e1, symmetric=False))


def test_deep_chain_does_not_overflow():
    n = 400
    lines = ["states: " + " ".join(f"x{i}" for i in range(n)) + " " + " ".join(f"y{i}" for i in range(n))]
    for i in range(n - 1):
        lines.append(f"x{i} a -> 1 x{i + 1}")
        lines.append(f"y{i} a -> 1 y{i + 1}")
    p = parse_plts("\n".join(lines))
    assert bisim(p, "x0", "y0")[0]
    assert len(approximant_blocks(p, 3)) == 4

from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from formulas import random_l, random_mu
from pbisim.syntax import (
    And,
    Bot,
    Box,
    Diamond,
    DistFormula,
    DistOr,
    FormulaSyntaxError,
    Mu,
    Neg,
    Nu,
    Or,
    Top,
    Var,
    alpha_normalise,
    conj,
    dag_size,
    disj,
    free_vars,
    modal_depth,
    parse,
    show,
    tree_size,
)

seeds = st.integers(0, 2**32 - 1)


def test_parse_l_example():
    f = parse("<a>(1/2*<b>(1*tt) (+) 1/2*tt)", mode="L")
    inner = Diamond("b", DistFormula(((1, Top()),)))
    assert f == Diamond("a", DistFormula(((F(1, 2), inner), (F(1, 2), Top()))))
    assert parse("~tt", mode="L") == Neg(Top())


def test_probability_sum_checked():
    with pytest.raises(FormulaSyntaxError, match="sum to 2/3"):
        parse("<a>(1/3*tt (+) 1/3*tt)", mode="L")
    with pytest.raises(FormulaSyntaxError):
        parse("<a>(0*tt (+) 1*tt)")
    with pytest.raises(FormulaSyntaxError, match="zero denominator"):
        parse("<a>(1/0*tt)")


def test_decimal_probabilities():
    assert parse("<a>(0.25*tt (+) .75*tt)") == parse("<a>(1/4*tt (+) 3/4*tt)")


@pytest.mark.parametrize(
    "text",
    ["ff", "tt | tt", "[a](1*tt)", "X", "mu X. X", "nu X. X", "<a>(1*tt || 1*tt)"],
)
def test_l_mode_rejects_mu_connectives(text):
    with pytest.raises(FormulaSyntaxError, match="not part of the adequate logic"):
        parse(text, mode="L")


def test_mu_mode_rejects_negation():
    with pytest.raises(FormulaSyntaxError, match="positive normal form") as err:
        parse("tt & ~tt")
    assert err.value.column == 6


@pytest.mark.parametrize("text", ["", "tt &", "<a>(tt)", "<a>(1*tt", "(tt", "tt tt", "tt $", "nu . X"])
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse(text)


def test_probabilistic_threshold_macro():
    assert parse("<a>([<b>(1*tt)]_1/3)") == parse("<a>(1/3*<b>(1*tt) (+) 2/3*tt)")
    assert parse("<a>([ff]_0)") == parse("<a>(1*tt)")
    assert parse("<a>([ff]_1)") == parse("<a>(1*ff)")
    with pytest.raises(FormulaSyntaxError, match="exceeds 1"):
        parse("<a>([tt]_3/2)")


def test_precedence():
    assert parse("tt | tt & ff") == Or(Top(), And(Top(), Bot()))
    assert parse("mu X. X | tt") == Mu("X", Or(Var("X"), Top()))
    assert parse("tt & mu X. X & tt") == And(Top(), Mu("X", And(Var("X"), Top())))
    assert show(And(Top(), Or(Top(), Bot()))) == "tt & (tt | ff)"
    assert show(Neg(And(Top(), Top()))) == "~(tt & tt)"


def test_distribution_disjunction():
    f = parse("[a](1*X || 1/2*X (+) 1/2*tt)".replace("X", "ff"))
    assert isinstance(f, Box) and isinstance(f.psi, DistOr)
    assert len(f.psi.options) == 2
    with pytest.raises(ValueError):
        DistOr((DistFormula(((1, Top()),)),))


def test_bad_choices_rejected():
    with pytest.raises(ValueError):
        DistFormula(())
    with pytest.raises(ValueError):
        DistFormula(((F(1, 2), Top()),))
    with pytest.raises(ValueError):
        DistFormula(((F(-1), Top()), (F(2), Top())))


def test_hash_consing():
    a = And(Top(), Diamond("a", DistFormula(((1, Top()),))))
    b = And(Top(), Diamond("a", DistFormula(((F(1), Top()),))))
    assert a is b
    assert dag_size(And(a, a)) == dag_size(a) + 1
    assert tree_size(And(a, a)) == 2 * tree_size(a) + 1
    with pytest.raises(AttributeError):
        a.left = Bot()


def test_conj_disj_units():
    assert conj([]) == Top() and disj([]) == Bot()
    assert conj([Bot()]) == Bot()
    assert conj([Top(), Bot()]) == And(Top(), Bot())


def test_free_variables_and_depth():
    f = parse("nu X. <a>(1/2*X (+) 1/2*Y) & mu Z. [b](1*Z)")
    assert free_vars(f) == {"Y"}
    assert modal_depth(f) == 1
    assert modal_depth(parse("<a>(1*<b>(1*tt))")) == 2


def test_alpha_normalise_separates_binders():
    f = parse("(nu X. <a>(1*X)) & (mu X. [a](1*X))")
    assert isinstance(f, And)
    assert f.left.var != f.right.var
    g = parse("nu X. nu X. X")
    assert g.var != g.body.var and g.body.body == Var(g.body.var)
    # free names are never captured by renamed binders
    h = alpha_normalise(And(Var("X_1"), And(Nu("X", Var("X")), Nu("X", Var("X")))))
    assert free_vars(h) == {"X_1"}


@given(seeds)
def test_l_round_trip(seed):
    f = random_l(random.Random(seed), 3, ["a", "b"])
    assert parse(show(f), mode="L") == f


@given(seeds)
def test_mu_round_trip(seed):
    f = alpha_normalise(random_mu(random.Random(seed), 4, ["a", "b"], ("Y",)))
    assert parse(show(f)) == f
    assert free_vars(f) <= {"Y"}

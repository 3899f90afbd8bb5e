from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qslie.freealg import (
    CONTINUOUS,
    EMPTY,
    FREE,
    ZERO,
    Poly,
    TensorPoly,
    WordSyntaxError,
    bracket_letters,
    deconcat,
    dequasishuffle,
    deshuffle,
    extended_alphabet,
    format_coeff,
    format_word,
    parse_coeff,
    parse_word,
    qshuffle,
    qshuffle_poly,
    shuffle,
    weight,
    words_up_to,
)

W = parse_word


def poly(*pairs):
    return Poly({W(w): Fraction(c) for w, c in pairs})


base_letter = st.integers(1, 3).map(lambda i: (i,))
bracket_letter = st.lists(st.integers(1, 3), min_size=2, max_size=3).map(lambda xs: tuple(sorted(xs)))
free_word = st.lists(st.one_of(base_letter, bracket_letter), max_size=3).map(tuple)
cont_word = st.lists(st.one_of(base_letter, st.integers(1, 3).map(lambda i: (i, i))), max_size=3).map(tuple)


@given(free_word)
def test_parse_format_round_trip(w):
    assert W(format_word(w)) == w


def test_parse_examples():
    assert W("e") == EMPTY
    assert W("1.[2,3].12") == ((1,), (2, 3), (12,))
    assert W("[3,1]") == ((1, 3),)
    assert W("a1.a2.a3") == W("1.2.3")


@pytest.mark.parametrize("text,pos", [("", 0), ("1..2", 2), ("1.", 2), ("[1]", 3), ("[1,2", 4), ("0", 0), ("1,2", 1), ("x", 0)])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(WordSyntaxError) as exc:
        W(text)
    assert exc.value.pos == pos


def test_weight_counts_bracket_entries():
    assert weight(W("1.[1,2].[2,2,3]")) == 6
    assert weight(EMPTY) == 0


def test_bracket_modes():
    assert bracket_letters((1,), (2,), FREE) == (1, 2)
    assert bracket_letters((1,), (2,), CONTINUOUS) is None
    assert bracket_letters((2,), (2,), CONTINUOUS) == (2, 2)
    assert bracket_letters((2, 2), (2,), CONTINUOUS) is None
    assert bracket_letters((1,), (1,), ZERO) is None


def test_qshuffle_small_cases():
    assert qshuffle(W("1"), W("2"), FREE) == poly(("1.2", 1), ("2.1", 1), ("[1,2]", 1))
    assert qshuffle(W("1"), W("1"), CONTINUOUS) == poly(("1.1", 2), ("[1,1]", 1))
    assert qshuffle(W("1"), W("2"), CONTINUOUS) == poly(("1.2", 1), ("2.1", 1))
    assert qshuffle(EMPTY, W("1.2"), FREE) == poly(("1.2", 1))


def test_shuffle_term_count_is_binomial():
    p = shuffle(W("1.2.3"), W("4.5"))
    assert len(p.terms) == comb(5, 2)
    assert all(c == 1 for _, c in p.items())


@settings(max_examples=60, deadline=None)
@given(free_word, free_word)
def test_qshuffle_commutative(u, v):
    assert qshuffle(u, v, FREE) == qshuffle(v, u, FREE)


@settings(max_examples=40, deadline=None)
@given(cont_word, cont_word, cont_word)
def test_qshuffle_associative_continuous(u, v, w):
    lhs = qshuffle_poly(qshuffle(u, v, CONTINUOUS), Poly.from_word(w), CONTINUOUS)
    rhs = qshuffle_poly(Poly.from_word(u), qshuffle(v, w, CONTINUOUS), CONTINUOUS)
    assert lhs == rhs


@settings(max_examples=40, deadline=None)
@given(free_word)
def test_coproducts_are_counital(w):
    for cop in (deconcat(w), dequasishuffle(w, FREE), deshuffle(w)):
        left = Poly({u: c for (u, v), c in cop.items() if v == EMPTY})
        right = Poly({v: c for (u, v), c in cop.items() if u == EMPTY})
        assert left == Poly.from_word(w) == right


def test_deconcat_and_dequasishuffle():
    assert deconcat(W("1.2")) == TensorPoly({(EMPTY, W("1.2")): 1, (W("1"), W("2")): 1, (W("1.2"), EMPTY): 1})
    dq = dequasishuffle(W("[1,2]"), FREE)
    assert dq == TensorPoly({(W("[1,2]"), EMPTY): 1, (W("1"), W("2")): 1, (W("2"), W("1")): 1, (EMPTY, W("[1,2]")): 1})


def test_deshuffle_counts_subsets():
    assert sum(deshuffle(W("1.2.3")).terms.values()) == 8


def test_poly_arithmetic():
    p = poly(("1", 1), ("2", "1/2"))
    assert p - p == 0
    assert (2 * p).coeff(W("2")) == 1
    assert (p / 2).coeff(W("1")) == Fraction(1, 2)
    assert str(Poly()) == "0"


def test_coeff_format():
    assert format_coeff(Fraction(1)) == "1/1"
    assert format_coeff(Fraction(-2, 4)) == "-1/2"
    assert parse_coeff("6/4") == Fraction(3, 2)


def test_enumeration_by_weight():
    alpha = extended_alphabet(1)
    assert alpha == ((1,), (1, 1))
    words = words_up_to(alpha, 2)
    assert set(words) == {EMPTY, W("1"), W("1.1"), W("[1,1]")}
    assert len(words_up_to(((1,), (2,)), 3, by="length")) == 1 + 2 + 4 + 8

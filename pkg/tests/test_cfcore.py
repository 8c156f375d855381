from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cftransfer import cfcore
from cftransfer.cfcore import DigitWord, InvalidWord

import oracles

words = st.lists(st.integers(1, 1000), min_size=1, max_size=12)
small_words = st.lists(st.integers(1, 30), min_size=1, max_size=8)


@pytest.mark.parametrize("digits, value", [((1, 1, 1), Fraction(2, 3)), ((2,), Fraction(1, 2)), ((1, 2, 3), Fraction(7, 10))])
def test_convergent_examples(digits, value):
    assert cfcore.convergents(digits)[-1].value == value


@pytest.mark.parametrize(
    "digits, lo, hi, lo_closed, hi_closed, diam",
    [
        ((1,), Fraction(1, 2), Fraction(1), False, True, Fraction(1, 2)),
        ((2,), Fraction(1, 3), Fraction(1, 2), False, True, Fraction(1, 6)),
        ((1, 1), Fraction(1, 2), Fraction(2, 3), True, False, Fraction(1, 6)),
    ],
)
def test_fundamental_interval_examples(digits, lo, hi, lo_closed, hi_closed, diam):
    iv = cfcore.fundamental_interval(digits)
    assert (iv.lo, iv.hi, iv.lo_closed, iv.hi_closed, iv.diameter) == (lo, hi, lo_closed, hi_closed, diam)


def test_semi_regular_examples():
    plus = cfcore.semi_regular_interval(DigitWord((2,), (1,)))
    minus = cfcore.semi_regular_interval(DigitWord((2,), (-1,)))
    assert (plus.lo, plus.hi) == (Fraction(1, 3), Fraction(1, 2))
    assert (minus.lo, minus.hi) == (Fraction(1, 2), Fraction(1))
    with pytest.raises(InvalidWord):
        DigitWord((1,), (-1,))


@pytest.mark.parametrize("bad", [(), (0,), (3, -2)])
def test_invalid_words(bad):
    with pytest.raises(InvalidWord):
        DigitWord(bad)


def test_signed_word_needs_matching_length():
    with pytest.raises(InvalidWord):
        DigitWord((2, 3), (1,))
    with pytest.raises(InvalidWord):
        cfcore.convergents(DigitWord((2, 3), (1, -1)))


@given(words)
def test_interval_matches_direct_evaluation(digits):
    iv = cfcore.fundamental_interval(digits)
    lo, hi = oracles.cylinder(digits)
    assert (iv.lo, iv.hi) == (lo, hi)


@given(words)
def test_diameter_formula_and_sandwich(digits):
    iv = cfcore.fundamental_interval(digits)
    c = cfcore.convergents(digits)
    q = c[-1].q
    q_prev = c[-2].q if len(c) > 1 else 1
    assert iv.diameter == Fraction(1, q * (q + q_prev))
    lower = Fraction(1, 2)
    upper = Fraction(1)
    for a in digits:
        lower /= (a + 1) ** 2
        upper /= a * a
    assert lower <= iv.diameter <= upper
    assert iv.sandwich.holds


@given(words, st.integers(1, 1000))
def test_child_nested_in_parent(digits, a):
    parent = cfcore.fundamental_interval(digits)
    child = cfcore.fundamental_interval(digits + [a])
    assert parent.contains_interval(child)


@given(small_words, st.integers(1, 50), st.integers(1, 50))
def test_siblings_disjoint(digits, a, b):
    if a == b:
        return
    i1 = cfcore.fundamental_interval(digits + [a])
    i2 = cfcore.fundamental_interval(digits + [b])
    # half-open siblings can share at most an endpoint that belongs to one of them
    assert cfcore.gap(i1, i2) >= 0
    assert i1.hi <= i2.lo or i2.hi <= i1.lo


@given(small_words)
def test_all_plus_signs_agree_with_regular(digits):
    reg = cfcore.fundamental_interval(digits)
    semi = cfcore.semi_regular_interval(DigitWord(tuple(digits), (1,) * len(digits)))
    assert (reg.lo, reg.hi) == (semi.lo, semi.hi)


@given(st.lists(st.tuples(st.integers(2, 40), st.sampled_from([1, -1])), min_size=1, max_size=7))
def test_semi_regular_matches_mobius_oracle(pairs):
    digits, signs = zip(*pairs)
    iv = cfcore.semi_regular_interval(DigitWord(digits, signs))
    assert (iv.lo, iv.hi) == oracles.mobius_interval(digits, signs)


@given(st.lists(st.tuples(st.integers(3, 40), st.sampled_from([1, -1])), min_size=1, max_size=6))
def test_semi_regular_constant_reported(pairs):
    digits, signs = zip(*pairs)
    iv = cfcore.semi_regular_interval(DigitWord(digits, signs), C=10**9)
    C = iv.constant_observed
    plus = minus = Fraction(1)
    for a in digits:
        plus /= (a + 1) ** 2
        minus /= (a - 1) ** 2
    assert plus / C <= iv.diameter <= C * minus
    assert iv.constant_ok


@given(small_words, st.integers(1, 30), st.integers(1, 30), st.lists(st.integers(1, 9), max_size=3))
def test_sibling_logs_match_exact(prefix, d1, d2, tail):
    from cftransfer.numerics import MP

    if d1 == d2:
        return
    state = cfcore.cf_state(prefix)
    x1 = cfcore.fundamental_interval(prefix + [d1] + tail)
    x2 = cfcore.fundamental_interval(prefix + [d2] + tail)
    lg, lh = cfcore.sibling_log_gap_hull(state, cfcore.tail_interval(d1, tail), cfcore.tail_interval(d2, tail))
    exact_gap = cfcore.gap(x1, x2)
    exact_hull = cfcore.hull_diameter(x1, x2)
    assert abs(lh - MP.log(MP.mpf(exact_hull.numerator) / exact_hull.denominator)) < 1e-25
    if exact_gap == 0:
        assert lg is None
    else:
        assert abs(lg - MP.log(MP.mpf(exact_gap.numerator) / exact_gap.denominator)) < 1e-25


def test_gap_and_hull_on_tuples():
    a = (Fraction(0), Fraction(1, 4))
    b = (Fraction(1, 2), Fraction(1))
    assert cfcore.gap(a, b) == Fraction(1, 4)
    assert cfcore.hull_diameter(a, b) == 1
    assert cfcore.gap(a, (Fraction(1, 8), Fraction(1, 2))) == 0


@given(st.lists(st.integers(2, 10**6), min_size=1, max_size=10), st.booleans())
def test_word_text_roundtrip(digits, signed):
    w = DigitWord(tuple(digits), tuple((-1) ** i for i in range(len(digits))) if signed else None)
    assert cfcore.parse_word(cfcore.format_word(w)) == w


def test_parse_word_rejects_mixed_and_garbage():
    with pytest.raises(InvalidWord):
        cfcore.parse_word("+2\n3\n")
    with pytest.raises(InvalidWord):
        cfcore.parse_word("2\nx\n")

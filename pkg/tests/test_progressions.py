import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cftransfer.insertion import InsertionPlan
from cftransfer.intsets import ExplicitSet, Naturals, P1Primes, PiatetskiShapiro, Primes, ResidueClass
from cftransfer.progressions import (IntPolynomial, WitnessError, find_ap, find_graph_ap, find_poly_progression,
                                     locate_in_digits, witness_from_json)
from cftransfer.thinning import ThinSubset

import oracles


def revalidate(S, w):
    assert all(S.contains(v) for v in w.values)
    if w.kind == "ap":
        assert w.values == [w.k + j * w.m for j in range(1, w.length + 1)]
    if w.kind == "poly":
        assert w.values == [w.k + h(w.m) for h in w.polys]


@pytest.mark.parametrize(
    "S, ell, values, k, m",
    [
        (ResidueClass(2, 0), 4, [2, 4, 6, 8], 0, 2),
        (Primes(), 5, [5, 11, 17, 23, 29], -1, 6),
        (PiatetskiShapiro("3/2"), 3, [2, 5, 8], -1, 3),
        (P1Primes(), 4, [59, 83, 107, 131], None, None),
    ],
    ids=["evens", "primes", "ps", "p1"],
)
def test_ap_examples(S, ell, values, k, m):
    w = find_ap(S, ell, 10**3, 10**3)
    assert w.values == values
    if k is not None:
        assert (w.k, w.m) == (k, m)
    revalidate(S, w)


def test_ap_threads_deterministic():
    a = find_ap(Primes(), 5, 10**3, 10**3)
    b = find_ap(Primes(), 5, 10**3, 10**3, threads=4)
    assert (a.k, a.m, a.values) == (b.k, b.m, b.values)


@given(st.lists(st.integers(1, 120), min_size=0, max_size=60, unique=True), st.integers(1, 4),
       st.integers(0, 30), st.integers(1, 30))
def test_ap_matches_brute_force(values, ell, k_bound, m_bound):
    S = ExplicitSet(sorted(values))
    w = find_ap(S, ell, k_bound, m_bound)
    ref = oracles.smallest_ap(values, ell, k_bound, m_bound)
    assert (None if w is None else (w.m, w.k)) == ref


@given(st.lists(st.integers(1, 200), min_size=0, max_size=80, unique=True), st.integers(2, 5))
def test_truncated_witness_is_no_later(values, ell):
    S = ExplicitSet(sorted(values))
    long = find_ap(S, ell, 50, 50)
    short = find_ap(S, ell - 1, 50, 50)
    if long is not None:
        assert short is not None and (short.m, short.k) <= (long.m, long.k)


def test_ap_argument_errors():
    with pytest.raises(ValueError):
        find_ap(Naturals(), 0, 1, 1)
    with pytest.raises(ValueError):
        find_ap(Naturals(), 3, 1, 0)


def test_poly_examples():
    w = find_poly_progression(Naturals(), ["X", "X^2"], 10, 10)
    assert (w.m, w.k, w.values) == (1, 0, [1, 1])
    # the same polynomials evaluated at (m, k) = (2, 1)
    assert [1 + IntPolynomial.parse(h)(2) for h in ("X", "X^2")] == [3, 5]
    w = find_poly_progression(ResidueClass(2, 0), ["X", "2X"], 10, 10)
    assert (w.m, w.k, w.values) == (2, 0, [2, 4])
    w = find_poly_progression(ResidueClass(2, 0), ["X", "2X"], 10, 10, positive_k=True)
    assert (w.k, w.values) == (2, [4, 6])
    w = find_poly_progression(Primes(), ["X", "2X"], 10, 10)
    assert (w.m, w.k, w.values) == (1, 1, [2, 3])
    revalidate(Primes(), w)


def test_poly_as_ap():
    ap = find_ap(Primes(), 3, 100, 100)
    poly = find_poly_progression(Primes(), ["X", "2X", "3X"], 100, 100)
    assert (ap.m, ap.k, ap.values) == (poly.m, poly.k, poly.values)


@pytest.mark.parametrize("text, coeffs, shown", [("X", (1,), "X"), ("2X", (2,), "2X"), ("X^2-3X", (-3, 1), "-3X+X^2"),
                                                 ("x^3", (0, 0, 1), "X^3")])
def test_polynomial_parse(text, coeffs, shown):
    h = IntPolynomial.parse(text)
    assert h.coeffs == coeffs and str(h) == shown
    assert IntPolynomial.parse(str(h)) == h


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=4), st.integers(-50, 50))
def test_polynomial_evaluation(coeffs, m):
    if not any(coeffs):
        return
    h = IntPolynomial(tuple(coeffs))
    assert h(m) == sum(c * m ** (i + 1) for i, c in enumerate(coeffs))
    assert h(0) == 0


@pytest.mark.parametrize("bad", ["", "X+1", "3", "Y"])
def test_polynomial_rejects(bad):
    with pytest.raises(ValueError):
        IntPolynomial.parse(bad)


def test_graph_examples():
    w = find_graph_ap("3/2", 3, 100)
    assert (w.k, w.m, w.m2) == (2, 1, 3)
    assert w.values == [(2, 2), (3, 5), (4, 8)]
    w4 = find_graph_ap("3/2", 4, 100)
    assert [y for _, y in w4.values] == [2, 5, 8, 11]
    assert find_graph_ap("3/2", 3, 2) is None
    with pytest.raises(ValueError):
        find_graph_ap(2, 3, 100)


@given(st.integers(2, 5))
def test_graph_witness_lies_on_graph(ell):
    w = find_graph_ap(Fraction(3, 2), ell, 2000)
    assert w is not None
    for j, (n, y) in enumerate(w.values):
        assert n == w.k + j * w.m
        assert y == oracles.ps_floor(n, 3, 2)
        assert y == w.values[0][1] + j * w.m2


def test_witness_json_roundtrip():
    for w in (find_ap(Primes(), 4, 100, 100), find_poly_progression(Naturals(), ["X", "X^2"], 5, 5),
              find_graph_ap("3/2", 3, 50)):
        back = witness_from_json(json.loads(json.dumps(w.to_json())))
        assert (back.kind, back.k, back.m, back.values) == (w.kind, w.k, w.m, w.values)


def test_locate_examples():
    plan = InsertionPlan.toy([5], [[2, 4, 6, 8]])
    loc = locate_in_digits(plan, find_ap(ResidueClass(2, 0), 4, 10, 10))
    assert loc.indices == [6, 7, 8, 9] and loc.blocks == [1, 1, 1, 1]

    thin = InsertionPlan.toy([5], [[5, 7]], base=ThinSubset(Naturals()))
    diag = []
    assert locate_in_digits(thin, find_ap(ResidueClass(2, 0), 4, 10, 10), diag) is None
    assert "base digit set" in diag[0]

    with pytest.raises(WitnessError):
        locate_in_digits(plan, find_ap(Primes(), 3, 10, 10))
    with pytest.raises(WitnessError):
        locate_in_digits(plan, find_graph_ap("3/2", 3, 50))


def test_locate_out_of_order():
    plan = InsertionPlan.toy([1, 4], [[4, 6], [2]])
    diag = []
    assert locate_in_digits(plan, find_ap(ExplicitSet([2, 4, 6]), 3, 5, 5), diag) is None
    assert "increasing" in diag[0]

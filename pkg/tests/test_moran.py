import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cftransfer import moran
from cftransfer.intsets import ExplicitSet, Naturals, PolyDensityParams, fit_poly_density
from cftransfer.moran import (MoranError, MoranLevels, ParameterSearchError, choose_seed_params, dimension_report,
                              mass_dimension_estimate, seed_L, seed_moran_levels)
from cftransfer.thinning import ThinSubset

import oracles


@pytest.fixture(scope="module")
def nat_params():
    fit = fit_poly_density(Naturals(), 1, 0, (10, 10**4))
    return choose_seed_params(fit, Naturals(), n_max=60)


def test_naturals_seed(nat_params):
    assert nat_params.L == 12 and nat_params.t == 13
    assert nat_params.window(1) == (13, 156)


def test_ps_seed_L_from_unit_constants():
    fit = PolyDensityParams(Fraction(3, 2), Fraction(0), Fraction(1), Fraction(1), (10, 10**4))
    L = seed_L(fit)
    assert float(L) >= 12**1.5 - 1e-12
    assert abs(float(L) - 12**1.5) < 1e-5


def test_seed_L_with_log_factor():
    fit = PolyDensityParams(Fraction(1), Fraction(1), Fraction(1), Fraction(2), (10, 10**4))
    assert seed_L(fit) == 48


def test_seed_levels_for_naturals(nat_params):
    lv = seed_moran_levels(Naturals(), nat_params, 5)
    assert lv.levels[0].r == 144
    num, den = lv.levels[0].delta
    assert Fraction(num, den) == Fraction(1, 2) / (12 * 13**2) ** 2
    for level in lv.levels:
        lo, hi = nat_params.window(level.n)
        assert level.r == hi - lo + 1


def test_seed_levels_on_thin_set_match_oracle(nat_params):
    lv = seed_moran_levels(ThinSubset(Naturals()), nat_params, 2)
    q = oracles.q_set(12 * 13**2)
    for level in lv.levels:
        lo, hi = nat_params.window(level.n)
        assert level.r == sum(1 for v in q if lo <= v <= hi)


def test_deltas_strictly_decrease(nat_params):
    lv = seed_moran_levels(ThinSubset(Naturals()), nat_params, 40)
    logs = [x.log_delta for x in lv.levels]
    assert all(b < a for a, b in zip(logs, logs[1:]))
    assert all(x.r >= 2 for x in lv.levels)


def test_threads_do_not_change_levels(nat_params):
    a = seed_moran_levels(ThinSubset(Naturals()), nat_params, 30)
    b = seed_moran_levels(ThinSubset(Naturals()), nat_params, 30, threads=4)
    assert [x.r for x in a.levels] == [x.r for x in b.levels]


def test_too_few_children(nat_params):
    with pytest.raises(MoranError):
        seed_moran_levels(ExplicitSet([20, 400]), nat_params, 1)


def test_parameter_search_gives_up():
    fit = fit_poly_density(Naturals(), 1, 0, (10, 100))
    with pytest.raises(ParameterSearchError):
        choose_seed_params(fit, Naturals(), t_ceiling=5)


def test_mass_estimate_closed_form():
    lv = MoranLevels.from_sequences([2, 2, 2], [Fraction(1, 4), Fraction(1, 16), Fraction(1, 64)])
    m = mass_dimension_estimate(lv)
    assert m.values[0] == 0
    assert abs(float(m.values[2]) - 0.4) < 1e-20
    # d_2 = log 2 / -log(2/16)
    assert abs(float(m.values[1]) - 1 / 3) < 1e-20


@given(st.integers(2, 9), st.integers(2, 30))
def test_geometric_matches_formula(r, inv):
    if r >= inv:
        return
    m = mass_dimension_estimate(MoranLevels.geometric(r, Fraction(1, inv), 200))
    n = 200
    expect = (n - 1) * math.log(r) / (n * math.log(inv) - math.log(r))
    assert abs(float(m.last) - expect) < 1e-12


def test_geometric_limits():
    cantor = mass_dimension_estimate(MoranLevels.geometric(2, Fraction(1, 3), 10**4))
    assert abs(float(cantor.last) - math.log(2) / math.log(3)) < 1e-3
    half = mass_dimension_estimate(MoranLevels.geometric(2, Fraction(1, 4), 10**4))
    assert abs(float(half.last) - 0.5) < 1e-3


def test_dimension_report_naturals(nat_params):
    rep = dimension_report(Naturals(), nat_params, depth=80, horizon=10**5)
    assert rep.consistent
    assert 0.3 < float(rep.lower) <= float(rep.upper) + rep.tolerance
    js = rep.to_json()
    assert js["seed"]["t"] == 13 and js["consistent"]


def test_levels_json_compacts_huge_delta(nat_params):
    lv = seed_moran_levels(ThinSubset(Naturals()), nat_params, 60)
    js = lv.to_json()
    assert js["perLevel"][0]["delta"].startswith("1/")
    assert js["perLevel"][-1]["delta"].startswith("(1/2)*prod")
    assert moran.LAMBDA_GRID[0] > 1

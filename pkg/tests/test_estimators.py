import math

import pytest
from hypothesis import assume, given, strategies as st

from flarecount import Bound, FrequencyTable, Target
from flarecount.errors import DegenerateInputError, EmptyTableError, InapplicableError
from flarecount.estimators import (_with_variance, ambartsumian_bounds, ambartsumian_unseen,
                                   chao_variance_total, chao_variance_unseen, estimate_all,
                                   good_turing, good_turing_class_mass,
                                   heterogeneity_sequence, mean_rate, mle_total,
                                   plackett_total, plackett_unseen, robust_pair,
                                   stirling_total, zelterman_total)
from flarecount.simulator import discrete, exponential, expected_table, gamma, point
from oracles import (bisect_truncated_rate, chao_variance_total_exact,
                     chao_variance_unseen_exact, expected_poisson_table)

tables = st.dictionaries(st.integers(1, 10), st.integers(0, 300), max_size=8).map(FrequencyTable)


def table_with(*required):
    return tables.filter(lambda t: all(t[k] > 0 for k in required))


# -- Ambartsumian ------------------------------------------------------------

def test_ambartsumian_basic(small):
    est = ambartsumian_unseen(small)
    assert est.value == 10.0
    assert est.target is Target.UNSEEN and est.bound is Bound.LOWER


def test_ambartsumian_zero_singletons():
    assert ambartsumian_unseen({1: 0, 2: 5}).value == 0.0


def test_ambartsumian_refuses_without_doubles():
    with pytest.raises(InapplicableError, match="n_2"):
        ambartsumian_unseen({1: 10})


def test_ambartsumian_below_truth_for_gamma_mixture():
    exp = expected_table(gamma(2, 2), 1000, 1.0)
    assert ambartsumian_unseen(exp.table).value <= exp.unseen


@pytest.mark.parametrize("table, lower, upper", [
    ({1: 10, 2: 5}, 10, 20),
    ({1: 1, 2: 1}, 0.5, 1),
])
def test_bounds(table, lower, upper):
    lo, hi = ambartsumian_bounds(table)
    assert (lo.value, hi.value) == (lower, upper)
    assert hi.bound is Bound.UPPER


def test_upper_bound_tight_for_exponential_mixture():
    exp = expected_table(exponential(1.0), 1000, 1.0)
    assert ambartsumian_bounds(exp.table)[1].value == pytest.approx(exp.unseen, rel=1e-12)


@given(table_with(2))
def test_upper_is_twice_lower(table):
    lo, hi = ambartsumian_bounds(table)
    assert hi.value == 2 * lo.value


# -- robust family ------------------------------------------------------------

def test_robust_1_1_is_ambartsumian(small):
    assert robust_pair(small, 1, 1).value == ambartsumian_unseen(small).value == 10.0


@given(table_with(2))
def test_robust_1_1_bitwise(table):
    assert robust_pair(table, 1, 1).value == ambartsumian_unseen(table).value


def test_robust_constant_derivation():
    # Poisson: p1 p2 / p3 = (mu e^-mu)(mu^2 e^-mu / 2) / (mu^3 e^-mu / 6) = 3 e^-mu = 3 p0
    mu = 0.7
    p = [mu ** k * math.exp(-mu) / math.factorial(k) for k in range(4)]
    assert p[1] * p[2] / p[3] == pytest.approx(3 * p[0], rel=1e-14)
    assert math.comb(3, 1) == 3


def test_robust_1_2_exact_under_poisson():
    table = expected_poisson_table(1000, 1.0)
    assert robust_pair(table, 1, 2).value == pytest.approx(1000 * math.exp(-1), rel=1e-12)


def test_robust_zero_denominator():
    with pytest.raises(InapplicableError):
        robust_pair({1: 4, 2: 3, 3: 0}, 1, 2)


# -- rate and variances ---------------------------------------------------------

@pytest.mark.parametrize("table, expected", [({1: 10, 2: 5}, 1.0), ({1: 10, 2: 0}, 0.0)])
def test_mean_rate(table, expected):
    assert mean_rate(table).value == expected


def test_mean_rate_under_poisson():
    assert mean_rate(expected_poisson_table(1000, 0.5)).value == pytest.approx(0.5, rel=1e-12)


def test_mean_rate_needs_singletons():
    with pytest.raises(InapplicableError):
        mean_rate({2: 4})


def test_variance_total_re_derived(small):
    # exact rational evaluation of the printed expression: 178/3
    exact = chao_variance_total_exact(10, 5, 15)
    assert float(exact) == pytest.approx(59.3333333333, rel=1e-10)
    assert chao_variance_total(small) == pytest.approx(float(exact), rel=1e-14)


def test_variance_unseen_re_derived(small):
    exact = chao_variance_unseen_exact(10, 5, 15)
    assert exact * 3 == 160
    assert chao_variance_unseen(small) == pytest.approx(float(exact), rel=1e-14)


def test_variances_vanish_without_singletons():
    assert chao_variance_total({1: 0, 2: 5}) == 0
    assert chao_variance_unseen({1: 0, 2: 5}) == 0


@given(table_with(2))
def test_printed_total_variance_non_negative(table):
    # each subtracted term is dominated (n_1 <= N1), so the printed form stays >= 0
    assert chao_variance_total(table) >= 0


def test_negative_variance_is_flagged_not_clamped():
    est = _with_variance("chao-total", 5.0, Target.TOTAL, Bound.LOWER, -2.5)
    assert est.variance is None
    assert "formula-out-of-range" in est.notes[0]


# -- zero-truncated Poisson family ------------------------------------------------

def test_mle_small_table():
    rate, total = mle_total({1: 1, 2: 1})
    x = bisect_truncated_rate(1.5)
    assert rate.value == pytest.approx(x, abs=1e-12)
    assert total.value == pytest.approx(2 / (1 - math.exp(-x)), rel=1e-12)
    assert total.value == pytest.approx(3.432, abs=5e-4)


def test_mle_degenerate():
    with pytest.raises(DegenerateInputError):
        mle_total({1: 5})


@given(table_with(1).filter(lambda t: sum(k * v for k, v in t.items()) > sum(t.values())))
def test_mle_total_not_below_observed(table):
    _, total = mle_total(table)
    assert total.value >= sum(table.values())


def test_mle_total_decreases_with_more_events():
    # N1 fixed at 20 while n grows
    totals_ = [mle_total({1: 20 - j, 2: j})[1].value for j in range(1, 21)]
    assert all(b < a for a, b in zip(totals_, totals_[1:]))


def test_plackett_a0(small):
    assert plackett_unseen(small).value == 15
    assert plackett_total(small).value == 30


def test_plackett_a1():
    assert plackett_unseen({1: 4, 2: 3, 3: 2}, a=1).value == pytest.approx(10 / 3, rel=1e-15)


def test_plackett_lower_bound_under_gamma():
    exp = expected_table(gamma(2, 2), 1000, 1.0)
    assert plackett_unseen(exp.table).value <= exp.unseen


def test_plackett_total_pairs_with_unseen(small):
    assert plackett_total(small).value == sum(small.values()) + plackett_unseen(small).value


@pytest.mark.parametrize("table, expected", [
    ({1: 1, 2: 1}, 3.0),          # (n, N1) = (3, 2): S(3,2)/S(2,2) = 3/1
    ({1: 1, 3: 1}, 7 / 3),        # (4, 2): S(4,2)/S(3,2) = 7/3
])
def test_stirling_total(table, expected):
    assert stirling_total(table).value == pytest.approx(expected, rel=1e-15)


def test_stirling_total_degenerate():
    with pytest.raises(DegenerateInputError):
        stirling_total({1: 2})


def test_zelterman_conventional(small):
    assert zelterman_total(small).value == pytest.approx(15 / (1 - math.exp(-1)), rel=1e-14)
    assert zelterman_total(small).value == pytest.approx(23.73, abs=5e-3)


def test_zelterman_degenerate():
    with pytest.raises(DegenerateInputError):
        zelterman_total({1: 10, 2: 0})


def test_zelterman_generalized():
    est = zelterman_total({1: 6, 2: 3, 3: 1}, l=2)
    assert est.value == pytest.approx(10 / (1 - math.exp(-1)), rel=1e-14)
    assert est.value == pytest.approx(15.82, abs=5e-3)


# -- Good-Turing ------------------------------------------------------------------

def test_good_turing_small(small):
    p0, pi = good_turing(small)
    assert p0 == 0.5
    assert pi[1] == pytest.approx(0.05, rel=1e-15)
    assert pi[2] == 0


def test_good_turing_mass_example():
    p0, pi = good_turing({1: 4, 2: 2, 3: 1})
    assert p0 == 4 / 11
    assert p0 + 4 * pi[1] + 2 * pi[2] + pi[3] == pytest.approx(1.0, abs=1e-15)


def test_good_turing_no_singletons():
    assert good_turing({2: 5})[0] == 0


def test_good_turing_empty():
    with pytest.raises(EmptyTableError):
        good_turing({})


@given(tables.filter(lambda t: sum(t.values()) > 0))
def test_good_turing_conserves_mass(table):
    p0, _ = good_turing(table)
    assert abs(p0 + math.fsum(good_turing_class_mass(table).values()) - 1) <= 1e-12


@given(st.lists(st.integers(1, 300), min_size=1, max_size=8))
def test_good_turing_conserves_mass_contiguous(counts):
    table = FrequencyTable({k: v for k, v in enumerate(counts, start=1)})
    p0, pi = good_turing(table)
    assert abs(p0 + math.fsum(table[k] * v for k, v in pi.items()) - 1) <= 1e-12


def test_good_turing_class_mass_bridges_gaps():
    # no singletons: the doubletons' mass moves to the empty k = 1 class
    assert good_turing_class_mass({2: 1}) == {1: 1.0, 2: 0.0}


# -- heterogeneity -------------------------------------------------------------

def test_heterogeneity_homogeneous():
    het = heterogeneity_sequence(expected_table(point(1.0), 1000, 1.0).table)
    assert all(v == pytest.approx(1.0, rel=1e-9) for v in het.sequence)
    assert het.trend == pytest.approx(0.0, abs=1e-9)


def test_heterogeneity_gamma_mixture():
    het = heterogeneity_sequence(expected_table(gamma(2, 2), 1000, 1.0).table)
    assert all(b > a for a, b in zip(het.sequence, het.sequence[1:]))
    assert het.trend > 0
    for k, v in zip(het.ks, het.sequence):
        assert v == pytest.approx((k + 1) / 3, rel=1e-9)


def test_heterogeneity_explicit_zero():
    assert heterogeneity_sequence({1: 10, 2: 5, 3: 0}).sequence == (1.0, 0.0)


def test_heterogeneity_too_short(small):
    with pytest.raises(InapplicableError):
        heterogeneity_sequence(small)


# -- expectation-level properties ---------------------------------------------------

@given(st.floats(0.1, 5.0), st.floats(10, 1e6))
def test_poisson_exactness(mu, N):
    table = expected_table(point(mu), N, 1.0).table
    n0 = N * math.exp(-mu)
    assert ambartsumian_unseen(table).value == pytest.approx(n0, rel=1e-9)
    assert robust_pair(table, 1, 2).value == pytest.approx(n0, rel=1e-9)
    assert robust_pair(table, 2, 2).value == pytest.approx(n0, rel=1e-9)
    assert plackett_unseen(table).value == pytest.approx(n0, rel=1e-9)
    assert mle_total(table)[1].value == pytest.approx(N, rel=1e-9)
    assert zelterman_total(table).value == pytest.approx(N, rel=1e-9)
    assert zelterman_total(table, l=3).value == pytest.approx(N, rel=1e-9)


MIXTURES = [gamma(2, 2), gamma(0.5, 1), exponential(1.0), discrete([(0.2, .5), (2, .5)]),
            discrete([(0.1, .2), (1, .5), (4, .3)])]


@pytest.mark.parametrize("mix", MIXTURES)
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_lower_bounds_at_expectation(mix, t):
    exp = expected_table(mix, 1000, t)
    assert ambartsumian_unseen(exp.table).value <= exp.unseen + 1e-9
    assert plackett_unseen(exp.table).value <= exp.unseen + 1e-9


@given(table_with(1, 2), st.integers(2, 9))
def test_scale_invariance(table, c):
    assume(sum(k * v for k, v in table.items()) > table[1])
    big = table.scaled(c)
    assert ambartsumian_unseen(big).value == pytest.approx(c * ambartsumian_unseen(table).value)
    assert plackett_unseen(big).value == pytest.approx(c * plackett_unseen(table).value)
    assert zelterman_total(big).value == pytest.approx(c * zelterman_total(table).value)
    assert mean_rate(big).value == pytest.approx(mean_rate(table).value)
    assert good_turing(big)[0] == pytest.approx(good_turing(table)[0])
    try:
        het = heterogeneity_sequence(table)
    except InapplicableError:
        return
    assert heterogeneity_sequence(big).sequence == pytest.approx(het.sequence)


# -- catalogue --------------------------------------------------------------------

def test_estimate_all_small(small):
    report = estimate_all(small)
    assert report.get("ambartsumian").value == 10
    assert report.get("ambartsumian-upper").value == 20
    assert report.get("plackett").value == 15
    assert report.get("mle-total") is not None
    assert report.get("zelterman-total") is not None
    assert report.get("good-turing").value == 0.5
    assert "robust-1-2" in report.inapplicable
    names = [e.estimator for e in report.estimates]
    assert names == sorted(names)


def test_estimate_all_empty():
    report = estimate_all({})
    assert report.estimates == ()
    assert report.inapplicable and report.heterogeneity is None


def test_estimate_all_singletons():
    report = estimate_all({1: 5})
    got = {e.estimator: e.value for e in report.estimates}
    assert got["good-turing"] == 1.0
    # the mean-rate estimator is defined (and zero) whenever n_1 > 0
    assert set(got) == {"good-turing", "mean-rate"}
    assert report.heterogeneity is None
    assert "ambartsumian" in report.inapplicable


def test_estimate_all_extra_variants():
    report = estimate_all({1: 6, 2: 3, 3: 1}, a=1, l=2)
    assert report.get("plackett-1") is not None
    assert report.get("zelterman-total-2").value == pytest.approx(15.82, abs=5e-3)


def test_report_catalogue_contract():
    expected = {
        "ambartsumian": (Target.UNSEEN, Bound.LOWER),
        "ambartsumian-upper": (Target.UNSEEN, Bound.UPPER),
        "chao-total": (Target.TOTAL, Bound.LOWER),
        "ambartsumian-upper-total": (Target.TOTAL, Bound.UPPER),
        "plackett": (Target.UNSEEN, Bound.LOWER),
        "plackett-total": (Target.TOTAL, Bound.LOWER),
        "zelterman-total": (Target.TOTAL, Bound.UPPER),
        "mle-total": (Target.TOTAL, Bound.POINT),
        "mle-rate": (Target.RATE, Bound.POINT),
        "mean-rate": (Target.RATE, Bound.POINT),
        "good-turing": (Target.PROBABILITY, Bound.POINT),
        "stirling-total": (Target.TOTAL, Bound.POINT),
        "robust-1-2": (Target.UNSEEN, Bound.POINT),
    }
    report = estimate_all({1: 10, 2: 5, 3: 2})
    for e in report.estimates:
        assert (e.target, e.bound) == expected[e.estimator]

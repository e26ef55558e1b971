import math

import pytest
from hypothesis import given, settings, strategies as st

from gauss_maxtail import bounds, exact
from gauss_maxtail.corrmodel import build_equicorrelated, min_residual_variance
from gauss_maxtail.special import std_normal_quantile


def test_rate_params():
    p = bounds.rate_params(0.5, 0.5)
    assert (p.alpha0, p.beta0) == pytest.approx((0.25, 0.5))
    p = bounds.rate_params(0.5, 0.1)
    assert (p.alpha0, p.beta0) == pytest.approx((2.25, 4.5))


@pytest.mark.parametrize("d,r", [(1.0, 0.5), (0.0, 0.5), (0.5, 0.0), (0.5, 1.0)])
def test_rate_params_domain(d, r):
    with pytest.raises(ValueError):
        bounds.rate_params(d, r)


def test_main_rate_value():
    ev = bounds.main_rate(100, 0.5, 0.5)
    assert ev.kind == bounds.RATE
    assert ev.value == pytest.approx(100**-0.25 * math.log(100) ** -0.25, rel=1e-14)
    assert ev.value == pytest.approx(0.21588, abs=1e-4)
    assert ev.threshold == pytest.approx(exact.threshold(100, 0.5, 0.5))


def test_main_rate_beta_one():
    # beta0 = 1 when (1 - rho)(1 - delta) = rho, e.g. delta = 0.5, rho = 1/3
    ev = bounds.main_rate(1000, 0.5, 1 / 3)
    p = bounds.rate_params(0.5, 1 / 3)
    assert p.beta0 == pytest.approx(1.0)
    assert ev.value == pytest.approx(1000 ** -p.alpha0, rel=1e-12)


@given(st.integers(3, 10**6), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_main_rate_square_identity(n, d, r):
    p = bounds.rate_params(d, r)
    lhs = bounds.log_main_rate(n * n, d, r) - 2 * bounds.log_main_rate(n, d, r)
    assert lhs == pytest.approx(0.5 * (p.beta0 - 1) * (math.log(2) - math.log(math.log(n))),
                                abs=1e-9)


def test_borell_tis():
    ev = bounds.borell_tis(3.0, 2.0)
    assert ev.threshold == 1.0
    assert ev.value == pytest.approx(math.exp(-2))
    assert bounds.borell_tis(3.0, 1e-9).value == pytest.approx(1.0)
    with pytest.raises(ValueError):
        bounds.borell_tis(3.0, 0.0)


def test_borell_tis_validity_at_threshold():
    med = exact.median_exact(10**4, 0.5)
    t = exact.threshold(10**4, 0.5, 0.5)
    ev = bounds.borell_tis(med, med - t)
    assert ev.threshold == pytest.approx(t)
    assert ev.value >= exact.lower_tail_exact(10**4, 0.5, t).value


def test_paouris_valettas():
    ev = bounds.paouris_valettas(3.0, 1.0, 2.0)
    assert ev.value == pytest.approx(0.5 * math.exp(-4 * math.pi / 1024), rel=1e-14)
    assert ev.value == pytest.approx(0.49390, abs=1e-5)
    assert bounds.paouris_valettas(3.0, 1e-9, 2.0).value < 1e-100


def test_pv_fixed_ratio_validity():
    n, rho, d = 1000, 0.5, 0.5
    med = exact.median_exact(n, rho)
    var = exact.moments_exact(n, rho)[1]
    ev = bounds.pv_fixed_ratio(med, var, d)
    assert ev.threshold == pytest.approx(d * med)
    assert ev.value >= exact.lower_tail_exact(n, rho, ev.threshold).value


def test_hartigan_values():
    kappa = 2 * math.log(1000 / math.sqrt(2 * math.pi)) - 2 * math.log(math.log(10))
    assert bounds.hartigan_kappa(1000, 0.1) == pytest.approx(kappa)
    assert kappa == pytest.approx(10.30957, abs=1e-5)
    s2 = 0.6
    ev = bounds.hartigan(1000, 0.1, s2)
    expect = math.sqrt(s2) * math.sqrt(kappa - math.log(kappa)) - math.sqrt(1 - s2) * abs(
        std_normal_quantile(0.1))
    assert ev.threshold == pytest.approx(expect)
    assert ev.value == pytest.approx(0.2)
    ind = bounds.hartigan(1000, 0.1, 1.0)
    assert ind.threshold == pytest.approx(math.sqrt(kappa - math.log(kappa)))


def test_hartigan_not_applicable_small_kappa():
    ev = bounds.hartigan(100, 0.1, 1.0)
    assert not ev.applicable
    assert ev.inputs["kappa"] == pytest.approx(5.70440, abs=1e-5)
    assert "< 6" in ev.reason


def test_hartigan_validity_equicorrelated():
    n, rho = 10**4, 0.3
    s2 = min_residual_variance(build_equicorrelated(n, rho))
    ev = bounds.hartigan(n, 0.01, s2)
    assert ev.applicable
    assert ev.value >= exact.lower_tail_exact(n, rho, ev.threshold).value


def test_worstcase_exponents():
    pv, main = bounds.worstcase_exponents(10**4, 0.5, 0.5)
    assert main == pytest.approx(-0.25 * math.log(10**4))
    assert main == pytest.approx(-2.30259, abs=1e-5)
    assert pv == pytest.approx(-(2 * math.pi / 1024) * 0.25 * math.log(10**4))
    assert main / pv == pytest.approx(512 / math.pi)


@given(st.integers(3, 10**9), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_worstcase_ratio_constant(n, d, r):
    pv, main = bounds.worstcase_exponents(n, d, r)
    assert main / pv == pytest.approx(512 / math.pi)


def test_reference_level():
    lo, hi = bounds.reference_level(10**4, 0.5, 4)
    assert hi == pytest.approx(math.sqrt(math.log(10**4)))
    assert hi == pytest.approx(3.034854, abs=1e-6)
    assert lo == pytest.approx(hi - 4 * math.sqrt(math.log(math.log(10**4))))
    lo0, hi0 = bounds.reference_level(10**4, 0.5, 0.0)
    assert lo0 == hi0


def test_subset_rate():
    a = bounds.subset_rate(500, 0.5, 0.4)
    b = bounds.main_rate(500, 0.5, 0.4)
    assert a.log_value == b.log_value and a.threshold == b.threshold
    lo = bounds.subset_rate(500, 0.5, 0.2).inputs["alpha0"]
    assert lo > a.inputs["alpha0"]


def test_subset_rate_tradeoff_two_blocks():
    # two independent blocks: 2 indices at rho ~ 0 vs all 6 at 0.9
    small = bounds.subset_rate(2, 0.5, 1e-6)
    full = bounds.subset_rate(6, 0.5, 0.9)
    assert small.inputs["alpha0"] > full.inputs["alpha0"]
    assert math.isfinite(small.log_value) and math.isfinite(full.log_value)


def test_small_ball_rates_identities():
    a, b = bounds.small_ball_rates(1000, 0.5, 0.5)
    assert a.log_value == bounds.log_main_rate(2000, 0.5, 0.5)
    assert b.log_value == 2 * bounds.log_main_rate(1000, 0.5, 0.5)
    assert b.value == pytest.approx(bounds.main_rate(1000, 0.5, 0.5).value ** 2)


def test_small_ball_exact_over_rate_bounded():
    n, rho, d = 1000, 0.5, 0.5
    _, b = bounds.small_ball_rates(n, d, rho)
    ratio = exact.small_ball_exact(n, rho, b.threshold).value / b.value
    assert 0 < ratio < 1.0


def test_latala_oleszkiewicz():
    ev = bounds.latala_oleszkiewicz(3.0, 0.25)
    assert ev.value == pytest.approx(0.5 * 2 ** -2.25, rel=1e-14)
    assert ev.value == pytest.approx(0.10511, abs=1e-5)
    assert bounds.latala_oleszkiewicz(3.0, 0.5 - 1e-12).value == pytest.approx(0.5)
    assert not bounds.latala_oleszkiewicz(3.0, 0.6).applicable


def test_latala_oleszkiewicz_validity():
    n, rho, d = 1000, 0.3, 0.25
    m = exact.absmax_median_exact(n, rho)
    ev = bounds.latala_oleszkiewicz(m, d)
    assert ev.value >= exact.small_ball_exact(n, rho, ev.threshold).value


def test_pv_small_ball():
    ev = bounds.pv_small_ball(3.0, 1.0, 0.5, c=1.0)
    assert ev.kind == bounds.PROBABILITY
    assert ev.value == pytest.approx(0.5 * 2.0 ** -9)
    assert bounds.pv_small_ball(3.0, 1.0, 0.5).kind == bounds.RATE
    assert bounds.pv_small_ball(3.0, 1.0, 1 - 1e-12).value == pytest.approx(0.5)
    assert bounds.pv_small_ball(3.0, 1e-6, 0.5).value < 1e-100


def test_variance_ratio_floor():
    assert bounds.variance_ratio_floor(3, 0.5, 2.0) == pytest.approx(2 / (0.5 + 1 / math.log(3)))
    assert bounds.variance_ratio_floor(10**300, 0.5, 1.0) == pytest.approx(2.0, rel=1e-2)


@pytest.mark.parametrize("n", [10**3, 10**6])
@pytest.mark.parametrize("rho", [0.1, 0.5])
def test_variance_floor_consistent_with_moments(n, rho):
    var = exact.moments_exact(n, rho)[1]
    assert 1 / var >= bounds.variance_ratio_floor(n, rho, 0.5)


def test_empirical_constant_single_point():
    study = bounds.empirical_constant([1000], 0.5, 0.5)
    assert study.band_ratio == 1.0
    assert len(study.rows) == 1


def test_empirical_constant_underflow_excluded():
    # P is about 1e-330 at n = 1e7 here, below the double range
    study = bounds.empirical_constant([100, 10**7], 0.05, 0.01)
    assert [r.included for r in study.rows] == [True, False]
    assert study.band_ratio == 1.0


@pytest.mark.parametrize("d,r", [(0.5, 0.5), (0.3, 0.7)])
def test_empirical_band(d, r):
    study = bounds.empirical_constant([10**2, 10**3, 10**4, 10**5, 10**6], d, r)
    assert study.band_ratio <= 10
    assert study.band_ratio <= 1.5


def test_inapplicable_value_is_nan():
    ev = bounds.not_applicable("x", "because")
    assert math.isnan(ev.value)
    assert ev.to_dict()["applicable"] is False

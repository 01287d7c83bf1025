"""Cumulant coefficients, Edgeworth expansion, bias-series corrections."""

import math
from fractions import Fraction as Q

import pytest

from momenta.asymptotics import (DegenerateVariance, ELEVEN_BRACKETS,
                                 ExpansionNonmonotone, Variant,
                                 bias_correction, confidence_interval,
                                 cumulant_coeffs, debias_estimate,
                                 edgeworth_cdf, edgeworth_model,
                                 edgeworth_quantile, g_of_mean_bias_terms,
                                 hermite_coeffs, hermite_eval)
from momenta.functionals import get_entry
from momenta.gateaux import CentralMomentF, MeanF
from momenta.poly import MomentPoly, format_poly


def C(r):
    return MomentPoly.central(r)


# -------------------------------------------------------------------------
# Hermite polynomials
# -------------------------------------------------------------------------

def test_hermite_printed_values():
    # [PAPER] He_1 = x, He_2 = x^2 - 1, He_3 = x^3 - 3x,
    # He_5 = x^5 - 10x^3 + 15x
    assert hermite_coeffs(1) == [0, 1]
    assert hermite_coeffs(2) == [-1, 0, 1]
    assert hermite_coeffs(3) == [0, -3, 0, 1]
    assert hermite_coeffs(5) == [0, 15, 0, -10, 0, 1]


def test_hermite_gauss_orthogonality():
    # [DERIVED] E He_r(Z) He_s(Z) = r! delta_rs under Z ~ N(0,1), computed
    # with Gauss-Hermite quadrature (independent of the recurrence).
    import numpy as np
    nodes, weights = np.polynomial.hermite_e.hermegauss(24)
    w = weights / weights.sum()
    for r in range(6):
        for s in range(6):
            val = sum(wi * hermite_eval(r, x) * hermite_eval(s, x)
                      for x, wi in zip(nodes, w))
            expect = math.factorial(r) if r == s else 0.0
            assert val == pytest.approx(expect, abs=1e-8)


# -------------------------------------------------------------------------
# cumulant coefficients
# -------------------------------------------------------------------------

def test_mean_coeffs():
    # [PAPER] for T = mu: a11 = 0, a21 = mu2, a32 = mu3
    cc = cumulant_coeffs(MeanF(), order=2)
    assert cc.a11 == MomentPoly.zero()
    assert cc.a21 == C(2)
    assert cc.a32 == C(3)


def test_mu2_coeffs():
    # [PAPER] for T = mu_2: a11 = -mu2, a21 = mu4 - mu2^2
    cc = cumulant_coeffs(CentralMomentF(2), order=2)
    assert cc.a11 == -C(2)
    assert cc.a21 == C(4) - C(2) ** 2


def test_mu3_bias_coeffs():
    # [PAPER] for T = mu_3: a11 = -3 mu3; a12 = 2 mu3 is fixed
    # independently by exact enumeration (test_enumeration)
    cc = cumulant_coeffs(CentralMomentF(3), order=3)
    assert cc.a11 == -3 * C(3)
    assert cc.a12 == 2 * C(3)
    assert cc.a13 == MomentPoly.zero()


def test_eleven_brackets_cover_coeffs():
    # [TRIVIAL] the eleven bracket keys drive every a_ri
    assert len(ELEVEN_BRACKETS) == 11
    assert "1,2,3,123" in ELEVEN_BRACKETS


# -------------------------------------------------------------------------
# Edgeworth expansion
# -------------------------------------------------------------------------

def _nu3_model(values):
    return edgeworth_model(get_entry("nu3").spec, values, order=2)


NORMAL_VALUES = {"mu2": 1.0, "mu3": 0.0, "mu4": 3.0, "mu5": 0.0,
                 "mu6": 15.0, "mu7": 0.0, "mu8": 105.0, "mu9": 0.0,
                 "mu10": 945.0, "mu11": 0.0, "mu12": 10395.0}


def test_edgeworth_cdf_midpoint_and_tails():
    # [TRIVIAL] symmetric model: CDF(0) = 1/2 exactly; tails -> 0, 1
    m = _nu3_model(NORMAL_VALUES)
    assert float(edgeworth_cdf(m, 0.0, 50)) == pytest.approx(0.5, abs=1e-14)
    assert float(edgeworth_cdf(m, -10.0, 50)) == pytest.approx(0.0, abs=1e-6)
    assert float(edgeworth_cdf(m, 10.0, 50)) == pytest.approx(1.0, abs=1e-6)


def test_edgeworth_reduces_to_normal_limit():
    # [DERIVED] as n -> infinity the expansion approaches Phi(x)
    m = _nu3_model(NORMAL_VALUES)
    phi_1 = 0.8413447460685429
    assert float(edgeworth_cdf(m, 1.0, 10 ** 9)) == \
        pytest.approx(phi_1, abs=1e-6)


def test_quantile_round_trip():
    # [DERIVED] CDF(quantile(alpha)) == alpha
    m = _nu3_model(NORMAL_VALUES)
    # alpha = 1/2 is excluded: for a symmetric model the truncated CDF
    # touches 1/2 at the origin with zero slope, so inversion there is
    # legitimately refused as non-monotone.
    for alpha in (0.025, 0.1, 0.9, 0.975):
        q = edgeworth_quantile(m, alpha, 50)
        assert float(edgeworth_cdf(m, q, 50)) == pytest.approx(alpha,
                                                               abs=1e-9)


def test_degenerate_variance_token():
    # [TRIVIAL] error token contract
    with pytest.raises(DegenerateVariance, match="degenerate-variance"):
        edgeworth_model(MeanF(), {"mu": 0.0, "mu2": 0.0, "mu3": 0.0},
                        order=1)


def test_nonmonotone_token():
    # [DERIVED] absurd coefficients at tiny n make the expansion
    # non-monotone; quantile inversion must refuse with the token
    cc = cumulant_coeffs(get_entry("nu3").spec, order=3)
    vals = dict(NORMAL_VALUES)
    m = edgeworth_model(cc, vals, order=2)
    with pytest.raises(ExpansionNonmonotone,
                       match="expansion-nonmonotone"):
        edgeworth_quantile(m, 0.5, 2)


def test_confidence_interval_brackets_point():
    # [DERIVED] two-sided interval straddles the point value and shrinks
    T = CentralMomentF(2)
    vals = NORMAL_VALUES
    lo1, hi1 = confidence_interval(T, vals, 50, alpha=0.05, j=1)
    lo2, hi2 = confidence_interval(T, vals, 5000, alpha=0.05, j=1)
    assert lo1 < 1.0 < hi1
    assert hi2 - lo2 < hi1 - lo1


# -------------------------------------------------------------------------
# bias series
# -------------------------------------------------------------------------

def test_factorial_series_reproduces_k_statistics():
    # [PAPER] the factorial-variant corrections reproduce Fisher's exactly
    # unbiased k-statistics: k2 = n/(n-1) m2 and k3 = n^2/((n-1)(n-2)) m3.
    import random
    rng = random.Random(4)
    data = [rng.uniform(0, 10) for _ in range(9)]
    n = len(data)
    mean = sum(data) / n
    m2 = sum((x - mean) ** 2 for x in data) / n
    m3 = sum((x - mean) ** 3 for x in data) / n
    values = {"mu": mean, "mu2": m2, "mu3": m3}
    bc2 = bias_correction(CentralMomentF(2), 1, Variant.FACTORIAL_SERIES)
    est2 = debias_estimate(bc2, m2, values, n)
    assert est2 == pytest.approx(n / (n - 1) * m2, rel=1e-12)
    bc3 = bias_correction(CentralMomentF(3), 2, Variant.FACTORIAL_SERIES)
    est3 = debias_estimate(bc3, m3, values, n)
    assert est3 == pytest.approx(n ** 2 / ((n - 1) * (n - 2)) * m3,
                                 rel=1e-12)


def test_power_and_factorial_agree_to_leading_order():
    # [DERIVED] both variants share the same 1/n term
    T = CentralMomentF(2)
    p = bias_correction(T, 1, "power")
    f = bias_correction(T, 1, "factorial")
    assert p.terms[0] == f.terms[0]


def test_g_of_mean_bias_terms_printed():
    # [PAPER] transcribed S1, S2, S3 for abstract g(mean) match the engine
    s1, s2, s3 = g_of_mean_bias_terms()
    from momenta.functionals import closed_form_poly
    assert s1 == closed_form_poly("g_of_mean", "bias", "S1")
    assert s2 == closed_form_poly("g_of_mean", "bias", "S2")
    assert s3 == closed_form_poly("g_of_mean", "bias", "S3")


def test_variant_parsing():  # [TRIVIAL]
    assert bias_correction(MeanF(), 1, "power").variant \
        is Variant.POWER_SERIES
    with pytest.raises(ValueError):
        bias_correction(MeanF(), 1, "nope")
    with pytest.raises(ValueError):
        bias_correction(MeanF(), 4, "power")

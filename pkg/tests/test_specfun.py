"""Special functions against independent high-precision oracles."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from ris_sostat import specfun as sf
from ris_sostat.errors import DomainError, NumericError

mp.mp.dps = 50

ORACLE_TOL = 1e-10


def mp_j0_series(x: mp.mpf) -> mp.mpf:
    """Power-series oracle for J0, summed at 50 digits."""
    term = mp.mpf(1)
    total = mp.mpf(1)
    q = x * x / 4
    for k in range(1, 200):
        term *= -q / (k * k)
        total += term
        if abs(term) < mp.mpf(10) ** -45:
            break
    return total


class TestBesselJ0:
    def test_zero(self):
        assert sf.bessel_j0(0.0) == 1.0

    def test_oracle_grid(self):
        xs = np.linspace(0.0, 30.0, 50)
        err = max(abs(sf.bessel_j0(float(x)) - float(mp.besselj(0, mp.mpf(x)))) for x in xs)
        assert err < ORACLE_TOL

    def test_even(self):
        xs = np.linspace(0.1, 20.0, 9)
        assert np.allclose(sf.bessel_j0(xs), sf.bessel_j0(-xs), rtol=0, atol=1e-14)

    def test_bounded(self):
        xs = np.linspace(0.0, 100.0, 400)
        assert np.all(np.abs(sf.bessel_j0(xs)) <= 1.0 + 1e-12)

    def test_first_root_from_series_bisection(self):
        lo, hi = mp.mpf(2), mp.mpf(3)
        for _ in range(120):
            mid = (lo + hi) / 2
            if mp_j0_series(lo) * mp_j0_series(mid) <= 0:
                hi = mid
            else:
                lo = mid
        root = float((lo + hi) / 2)
        assert abs(root - 2.404826) < 1e-6
        assert abs(sf.bessel_j0(root)) < 1e-5

    def test_first_trough_bracketed_by_series_derivative(self):
        # derivative of the series changes sign across the reported trough
        d = lambda x: mp.diff(mp_j0_series, mp.mpf(x))
        assert d(3.80) < 0 < d(3.86)
        x0 = 3.831706
        h = 1e-4
        mid = sf.bessel_j0(x0)
        assert mid < sf.bessel_j0(x0 - h) and mid < sf.bessel_j0(x0 + h)

    def test_nonfinite_rejected(self):
        with pytest.raises(DomainError):
            sf.bessel_j0(math.nan)


class TestGamma:
    def test_trivials(self):
        assert sf.gamma_complete(1.0) == 1.0
        assert abs(sf.gamma_complete(0.5) - math.sqrt(math.pi)) < 1e-14
        assert sf.gamma_complete(5.0) == 24.0

    def test_oracle_grid(self):
        xs = np.linspace(0.05, 25.0, 50)
        err = max(
            abs(sf.gamma_complete(float(x)) - float(mp.gamma(mp.mpf(x))))
            / float(mp.gamma(mp.mpf(x)))
            for x in xs
        )
        assert err < ORACLE_TOL

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=0.1, max_value=40.0))
    def test_recurrence(self, x):
        assert sf.gamma_complete(x + 1.0) == pytest.approx(x * sf.gamma_complete(x), rel=1e-12)

    def test_domain(self):
        for bad in (0.0, -1.0, -0.5):
            with pytest.raises(DomainError):
                sf.gamma_complete(bad)


class TestRegLowerIncompleteGamma:
    def test_at_zero(self):
        assert sf.reg_lower_incomplete_gamma(2.3, 0.0) == 0.0

    def test_exponential_cdf(self):
        for x in (0.1, 1.0, 5.0):
            assert sf.reg_lower_incomplete_gamma(1.0, x) == pytest.approx(
                1.0 - math.exp(-x), abs=1e-13
            )

    def test_quadrature_oracle(self):
        # gamma(3.5, 3.5) / Gamma(3.5) by adaptive quadrature
        val, err = integrate.quad(
            lambda t: t**2.5 * math.exp(-t), 0.0, 3.5, epsabs=1e-13, epsrel=1e-13
        )
        assert err < 1e-10
        expected = val / math.gamma(3.5)
        assert sf.reg_lower_incomplete_gamma(3.5, 3.5) == pytest.approx(expected, abs=1e-10)

    def test_oracle_grid(self):
        rs = [0.4, 1.7, 3.5, 9.0, 50.0]
        xs = np.linspace(0.0, 80.0, 10)
        err = max(
            abs(
                sf.reg_lower_incomplete_gamma(r, float(x))
                - float(mp.gammainc(mp.mpf(r), 0, mp.mpf(x), regularized=True))
            )
            for r in rs
            for x in xs
        )
        assert err < ORACLE_TOL

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=0.2, max_value=20.0), st.floats(min_value=0.0, max_value=60.0))
    def test_cdf_bounds(self, r, x):
        p = sf.reg_lower_incomplete_gamma(r, x)
        assert 0.0 <= p <= 1.0
        assert sf.reg_lower_incomplete_gamma(r, x + 1.0) >= p - 1e-13

    def test_domain(self):
        with pytest.raises(DomainError):
            sf.reg_lower_incomplete_gamma(-1.0, 2.0)
        with pytest.raises(DomainError):
            sf.reg_lower_incomplete_gamma(1.0, -2.0)


class TestHyp2f1:
    def test_trivial_at_zero(self):
        assert sf.hyp2f1(-0.5, -0.5, 1.0, 0.0) == 1.0

    def test_gauss_summation_values(self):
        # Gamma(c) Gamma(c-a-b) / (Gamma(c-a) Gamma(c-b)) at z = 1
        assert sf.hyp2f1(-0.5, -0.5, 1.0, 1.0) == pytest.approx(4.0 / math.pi, abs=1e-12)
        expected = (
            sf.gamma_complete(2.0)
            * sf.gamma_complete(1.0)
            / sf.gamma_complete(1.5) ** 2
        )
        assert expected == pytest.approx(4.0 / math.pi, abs=1e-14)
        assert sf.hyp2f1(0.5, 0.5, 2.0, 1.0) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("a,b,c", [(-0.5, -0.5, 1.0), (0.5, 0.5, 2.0)])
    def test_oracle_grid(self, a, b, c):
        zs = np.linspace(0.0, 1.0, 50)
        err = max(
            abs(sf.hyp2f1(a, b, c, float(z)) - float(mp.hyp2f1(a, b, c, mp.mpf(z))))
            for z in zs
        )
        assert err < ORACLE_TOL

    def test_elliptic_route_matches_series(self):
        zs = np.linspace(0.0, 1.0, 101)
        neg = sf.hyp2f1_neghalf(zs)
        pos = sf.hyp2f1_poshalf(zs)
        for z, vn, vp in zip(zs, neg, pos):
            assert vn == pytest.approx(sf.hyp2f1(-0.5, -0.5, 1.0, float(z)), abs=5e-11)
            assert vp == pytest.approx(sf.hyp2f1(0.5, 0.5, 2.0, float(z)), abs=5e-11)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
    def test_neghalf_monotone_bounded(self, z1, z2):
        lo, hi = sorted((z1, z2))
        vlo, vhi = sf.hyp2f1_neghalf(lo), sf.hyp2f1_neghalf(hi)
        assert 1.0 - 1e-12 <= vlo <= 4.0 / math.pi + 1e-12
        assert vhi >= vlo - 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            sf.hyp2f1(-0.5, -0.5, 1.0, 1.5)
        with pytest.raises(DomainError):
            sf.hyp2f1(-0.5, -0.5, 1.0, -0.1)
        with pytest.raises(DomainError):
            sf.hyp2f1(0.5, 0.5, 0.0, 0.5)
        with pytest.raises(DomainError):
            sf.hyp2f1(1.0, 1.0, 2.0, 1.0)  # c - a - b = 0 diverges at z = 1


class TestHyp1f1:
    def test_trivial(self):
        assert sf.hyp1f1(1.0, 2.5, 0.0) == 1.0

    def test_high_precision_point(self):
        expected = float(mp.hyp1f1(1, mp.mpf(2.5), -5))
        assert abs(sf.hyp1f1(1.0, 2.5, -5.0) - expected) < 1e-10

    def test_oracle_grid(self):
        zs = np.linspace(-60.0, 4.0, 50)
        err = max(
            abs(sf.hyp1f1(1.0, 2.5, float(z)) - float(mp.hyp1f1(1, mp.mpf(2.5), mp.mpf(z))))
            for z in zs
        )
        assert err < ORACLE_TOL

    def test_kummer_identity(self):
        lhs = sf.hyp1f1(1.0, 2.5, -3.0)
        rhs = math.exp(-3.0) * sf.hyp1f1(1.5, 2.5, 3.0)
        assert lhs == pytest.approx(rhs, abs=sf.DEFAULT_TOL.abs_tol)

    def test_huge_negative_argument_stable(self):
        v = sf.hyp1f1(1.0, 2.5, -2000.0)
        expected = float(mp.hyp1f1(1, mp.mpf(2.5), -2000))
        assert v == pytest.approx(expected, rel=1e-9)

    def test_nonconvergence_reports_terms(self):
        with pytest.raises(NumericError, match="terms"):
            sf.hyp1f1(1.0, 2.5, -50.0, tol=sf.SpecTolerance(abs_tol=1e-12, max_terms=5))

    def test_domain(self):
        with pytest.raises(DomainError):
            sf.hyp1f1(1.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            sf.hyp1f1(1.0, -2.0, 1.0)


class TestElliptic:
    def test_trivials(self):
        assert sf.elliptic_k(0.0) == pytest.approx(math.pi / 2.0, abs=1e-14)
        assert sf.elliptic_e(0.0) == pytest.approx(math.pi / 2.0, abs=1e-14)
        assert sf.elliptic_e(1.0) == 1.0
        assert sf.elliptic_k(1.0) == math.inf

    def test_quadrature_oracle_at_half(self):
        k = 0.5
        K, eK = integrate.quad(lambda t: 1.0 / math.sqrt(1.0 - k * k * math.sin(t) ** 2), 0, math.pi / 2)
        E, eE = integrate.quad(lambda t: math.sqrt(1.0 - k * k * math.sin(t) ** 2), 0, math.pi / 2)
        assert max(eK, eE) < 1e-12
        assert sf.elliptic_k(k) == pytest.approx(K, abs=1e-12)
        assert sf.elliptic_e(k) == pytest.approx(E, abs=1e-12)

    def test_oracle_grid(self):
        ks = np.linspace(0.0, 0.999, 50)
        err_k = max(abs(sf.elliptic_k(float(k)) - float(mp.ellipk(mp.mpf(k) ** 2))) for k in ks)
        err_e = max(abs(sf.elliptic_e(float(k)) - float(mp.ellipe(mp.mpf(k) ** 2))) for k in ks)
        assert err_k < ORACLE_TOL and err_e < ORACLE_TOL

    def test_slope_variance_limit_identity(self):
        # E(k) - (1 - k^2) K(k): 0 at k = 0, 1 at k = 1
        f = lambda k: sf.elliptic_e(k) - (1.0 - k * k) * sf.elliptic_k(k)
        assert abs(f(0.0)) < 1e-14
        assert abs(f(1.0 - 1e-14) - 1.0) < 1e-10
        ks = np.linspace(0.0, 0.999999, 200)
        vals = sf.elliptic_e(ks) - (1.0 - ks * ks) * sf.elliptic_k(ks)
        assert np.all(np.diff(vals) > 0.0)

    def test_domain(self):
        for f in (sf.elliptic_k, sf.elliptic_e):
            with pytest.raises(DomainError):
                f(-0.1)
            with pytest.raises(DomainError):
                f(1.1)


class TestSinc:
    def test_values(self):
        assert sf.sinc(0.0) == 1.0
        assert abs(sf.sinc(1.0)) < 1e-15
        assert sf.sinc(0.5) == pytest.approx(2.0 / math.pi, abs=1e-15)

    def test_oracle_grid(self):
        xs = np.linspace(-5.0, 5.0, 50)
        err = max(
            abs(float(sf.sinc(float(x))) - float(mp.sincpi(mp.mpf(x)))) for x in xs
        )
        assert err < ORACLE_TOL


def test_spec_tolerance_invariants():
    with pytest.raises(DomainError):
        sf.SpecTolerance(abs_tol=0.0)
    with pytest.raises(DomainError):
        sf.SpecTolerance(max_terms=0)
    tol = sf.SpecTolerance()
    assert tol.abs_tol == 1e-12 and tol.max_terms == 10000

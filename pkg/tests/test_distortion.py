import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from distdelay import distortion as dist
from distdelay.channel import ChannelSpec, make_stream, sample_eigenvalues
from distdelay.specfun import DomainError, PoleError

RHO15 = 10**1.5


def siso_oracle(rho, eta, tau_n):
    nu = eta / tau_n
    f = lambda x: mp.power(1 + rho * x, -nu) * mp.exp(-x)
    return float(mp.quad(f, [0, 1 / rho, 1, 10, mp.inf]) ** tau_n)


def mc_log_mgf(ch, s, n, seed):
    ev = sample_eigenvalues(ch, make_stream(seed), n)
    w = np.exp(-s * np.log1p(ch.gain * ev).sum(axis=1))
    return math.log(w.mean()), w.std(ddof=1) / (w.mean() * math.sqrt(n))


class TestAnchors:
    def test_ergodic_capacity_m1(self):
        assert dist.ergodic_capacity_m1(RHO15) == pytest.approx(3.0015, abs=2e-3)
        ref = float(mp.quad(lambda x: mp.log(1 + RHO15 * x) * mp.exp(-x), [0, 1, mp.inf]))
        assert dist.ergodic_capacity_m1(RHO15) == pytest.approx(ref, rel=1e-13)

    def test_ergodic_capacity_routes_agree(self):
        assert dist.ergodic_capacity(ChannelSpec(1, 1, RHO15)) == pytest.approx(
            dist.ergodic_capacity_m1(RHO15), rel=1e-10)

    def test_d_infinite(self):
        assert dist.d_infinite(ChannelSpec(1, 1, RHO15), 2.0) == pytest.approx(0.0025, abs=1e-4)


class TestSiso:
    @pytest.mark.parametrize("rho", [1.0, 10.0, 100.0, 1e4])
    @pytest.mark.parametrize("eta,tau_n", [(1, 2), (2, 5), (1, 10), (2, 1), (3, 1.5)])
    def test_quadrature_vs_mpmath(self, rho, eta, tau_n):
        assert dist.d_delay_siso(rho, eta, tau_n) == pytest.approx(siso_oracle(rho, eta, tau_n),
                                                                   rel=1e-8)

    @pytest.mark.parametrize("nu", [0.1, 0.25, 0.5, 0.9])
    @pytest.mark.parametrize("rho", [1.0, 10.0, 100.0])
    def test_closed_form_matches_quadrature(self, nu, rho):
        tau_n = 2.0
        a = dist.d_delay_siso(rho, nu * tau_n, tau_n, method="closed_form")
        b = dist.d_delay_siso(rho, nu * tau_n, tau_n)
        assert a == pytest.approx(b, rel=1e-10)

    def test_closed_form_domain(self):
        with pytest.raises(DomainError):
            dist.d_delay_siso(10.0, 2.0, 2.0, method="closed_form")

    def test_tau_one_is_no_delay(self):
        ch = ChannelSpec(1, 1, 10.0)
        assert dist.d_delay_siso(10.0, 2.0, 1.0) == pytest.approx(dist.d_zero(ch, 2.0), rel=1e-12)

    @given(st.floats(0.5, 500.0), st.floats(0.2, 4.0), st.floats(1.0, 200.0))
    def test_jensen_sandwich(self, rho, eta, tau_n):
        ch = ChannelSpec(1, 1, rho)
        d = dist.d_delay_siso(rho, eta, tau_n)
        assert dist.d_infinite(ch, eta) <= d * (1 + 1e-10)
        assert d <= dist.d_zero(ch, eta) * (1 + 1e-10)

    @given(st.floats(0.5, 500.0), st.floats(0.2, 4.0))
    def test_monotone_in_delay(self, rho, eta):
        vals = [dist.d_delay_siso(rho, eta, t) for t in (1, 2, 5, 20, 100)]
        assert np.all(np.diff(vals) <= 1e-12 * vals[0])

    def test_converges_to_infinite_delay(self):
        d_inf = dist.d_infinite(ChannelSpec(1, 1, RHO15), 2.0)
        assert dist.d_delay_siso(RHO15, 2.0, 1e4) == pytest.approx(d_inf, rel=1e-3)

    @pytest.mark.parametrize("rho", [1.0, 10.0, RHO15, 100.0])
    def test_log_distortion_affine_in_lambda(self, rho):
        lam = np.linspace(0.01, 0.1, 10)
        y = [math.log(dist.d_delay_siso(rho, 1.0, 1 / l)) for l in lam]
        slope, icept = np.polyfit(lam, y, 1)
        r2 = 1 - np.var(y - (slope * lam + icept)) / np.var(y)
        assert r2 >= 0.999
        assert slope > 0
        assert icept == pytest.approx(math.log(dist.d_infinite(ChannelSpec(1, 1, rho), 1.0)), abs=1e-2)


class TestSimo:
    @staticmethod
    def oracle(m, rho, tau_n):
        lam = 1.0 / tau_n
        f = lambda x: (1 + rho * x) ** -lam * x ** (m - 1) * math.exp(-x) / math.gamma(m)
        return integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)[0] ** tau_n

    @pytest.mark.parametrize("m", [2, 3])
    @pytest.mark.parametrize("rho", [1.0, 10.0, 100.0])
    @pytest.mark.parametrize("tau_n", [1.5, 2.0, 3.0, 5.0, 10.0])
    def test_against_chi_square_quadrature(self, m, rho, tau_n):
        assert dist.d_delay_simo(m, rho, tau_n) == pytest.approx(self.oracle(m, rho, tau_n),
                                                                 rel=1e-9)

    def test_miso_divides_power(self):
        assert dist.d_delay_simo(2, 10.0, 3.0, power_divided=True) == pytest.approx(
            self.oracle(2, 5.0, 3.0), rel=1e-9)
        ch = ChannelSpec(2, 1, 10.0)
        assert dist.d_delay_simo(2, 10.0, 3.0, power_divided=True) == pytest.approx(
            dist.d_delay_mimo(ch, 1.0, 3.0), rel=1e-9)

    @pytest.mark.parametrize("tau_n", [1.0, 0.5])
    def test_integer_lambda_is_a_pole(self, tau_n):
        with pytest.raises(PoleError):
            dist.d_delay_simo(2, 10.0, tau_n)


class TestMimo:
    @pytest.mark.parametrize("tau_n", [1.0, 2.0, 7.5, 100.0])
    def test_siso_reduction(self, tau_n):
        ch = ChannelSpec(1, 1, 10.0)
        assert dist.d_delay_mimo(ch, 2.0, tau_n) == pytest.approx(
            dist.d_delay_siso(10.0, 2.0, tau_n), rel=1e-10)

    def test_simo_reduction(self):
        ch = ChannelSpec(1, 3, 10.0)
        assert dist.d_delay_mimo(ch, 1.0, 3.0) == pytest.approx(dist.d_delay_simo(3, 10.0, 3.0),
                                                                rel=1e-9)

    def test_k_drops_out(self):
        ch = ChannelSpec(2, 2, 10.0)
        a = dist.d_delay_mimo(ch, 1.0, 2.0, k=200)
        assert dist.d_delay_mimo(ch, 1.0, 2.0, k=17) == pytest.approx(a, rel=1e-12)

    @pytest.mark.parametrize("mt,mr,rho,s", [(2, 2, 10.0, 0.5), (3, 3, 10.0, 1.0),
                                              (2, 4, 31.6, 1.0), (4, 3, 3.0, 2.0)])
    def test_log_mgf_against_monte_carlo(self, mt, mr, rho, s):
        ch = ChannelSpec(mt, mr, rho)
        est, se = mc_log_mgf(ch, s, 200_000, seed=11)
        assert abs(dist.log_wishart_mgf(ch, s) - est) < 4 * se

    def test_hankel_literal_matches_gram(self):
        for mt, mr in [(2, 2), (3, 4), (3, 3)]:
            ch = ChannelSpec(mt, mr, 10.0)
            g = dist.hankel_matrix(ch, 0.5)
            lit = math.log(np.linalg.det(g)) - math.log(dist.hankel_normalizer(ch))
            assert lit == pytest.approx(dist.log_wishart_mgf(ch, 0.5), rel=1e-8)

    def test_normalizer_gamma_i_factor(self):
        # with only prod Gamma(d+i) the 3x3 mgf at s=0 would be 2, not 1
        ch = ChannelSpec(3, 3, 10.0)
        g = dist.hankel_matrix(ch, 0.0)
        assert np.linalg.det(g) / dist.hankel_normalizer(ch) == pytest.approx(1.0, rel=1e-10)
        bare = math.prod(math.gamma(ch.d + i) for i in range(1, 4))
        assert np.linalg.det(g) / bare == pytest.approx(2.0, rel=1e-10)

    def test_ergodic_capacity_mimo_mc(self):
        ch = ChannelSpec(2, 3, 10.0)
        ev = sample_eigenvalues(ch, make_stream(4), 200_000)
        c = np.log1p(ch.gain * ev).sum(axis=1)
        assert abs(dist.ergodic_capacity(ch) - c.mean()) < 4 * c.std() / math.sqrt(c.size)

    @pytest.mark.parametrize("mt,mr", [(2, 2), (3, 2), (4, 4)])
    def test_sandwich(self, mt, mr):
        ch = ChannelSpec(mt, mr, 10.0)
        vals = [dist.d_zero(ch, 1.0)] + [dist.d_delay_mimo(ch, 1.0, t) for t in (2, 5, 50)]
        vals.append(dist.d_infinite(ch, 1.0))
        assert np.all(np.diff(vals) < 0)

    def test_high_snr_stays_finite(self):
        ch = ChannelSpec(4, 4, 1e6)
        v = dist.d_delay_mimo(ch, 2.0, 3.0)
        assert 0 < v < dist.d_zero(ch, 2.0)


class TestAsymptotics:
    @pytest.mark.parametrize("rho", [10.0, RHO15, 100.0])
    def test_upper_bound_holds(self, rho):
        for lam in np.linspace(0.01, 0.2, 20):
            assert dist.d_upper_asymptotic(rho, 1 / lam) >= dist.d_delay_siso(rho, 1.0, 1 / lam)

    def test_upper_bound_domain(self):
        with pytest.raises(DomainError):
            dist.d_upper_asymptotic(10.0, 0.5)

    @pytest.mark.parametrize("rho", [10.0, RHO15, 100.0])
    def test_constants_are_taylor_coefficients(self, rho):
        a, b = dist.asymptotic_constants(rho)
        # d/dlam and d2/dlam2 of the bracket at 0, numerically with mpmath
        ex = mp.e ** (1 / mp.mpf(rho))

        def base(lam):
            return ((ex - 1) / (lam - 1) + mp.power(rho, -lam) * ex
                    / (1 - dist.XI * lam + dist.PHI * lam**2))

        assert a == pytest.approx(float(mp.diff(base, 0)), rel=1e-12)
        assert b == pytest.approx(float(mp.diff(base, 0, 2) / 2), rel=1e-12)
        a2, b2 = dist.asymptotic_constants(rho, as_printed=True)
        assert a2 == a and b2 != pytest.approx(b)

    def test_upper_bound_limit(self):
        # lam -> 0 gives exp(a), close to D(inf) at high SNR
        a, _ = dist.asymptotic_constants(1000.0)
        d_inf = dist.d_infinite(ChannelSpec(1, 1, 1000.0), 1.0)
        assert dist.d_upper_asymptotic(1000.0, 1e5) == pytest.approx(math.exp(a), rel=1e-3)
        assert math.exp(a) == pytest.approx(d_inf, rel=1e-3)

    def test_a8_gap(self):
        gaps = [dist.appendix_a8_gap(r) for r in (10, 100, 1000, 1e4)]
        assert max(gaps) <= 0.01
        assert gaps[2] <= 1e-5
        assert np.all(np.diff(gaps) < 0)


class TestTypes:
    def test_point_validation(self):
        with pytest.raises(ValueError):
            dist.DistortionPoint(10.0, 1.0, 1.0, 1.5, "d0")
        with pytest.raises(ValueError):
            dist.DistortionPoint(10.0, 1.0, 1.0, 0.5, "guess")
        p = dist.DistortionPoint(10.0, 1.0, 1.0, 0.1, "d0")
        assert p.value_db == pytest.approx(-10.0)
        assert p.snr_db == pytest.approx(10.0)

    def test_snr_curve(self):
        c = dist.snr_curve(1, 1, 2.0, "inf", [0, 5, 10, 15])
        vals = c.values()
        assert np.all(np.diff(vals) < 0)
        assert vals[-1] == pytest.approx(0.00247, abs=1e-5)
        methods = {p.method for p in dist.snr_curve(2, 2, 1.0, 3.0, [0, 10]).points}
        assert methods == {"mimo_hankel"}

"""Simulation oracle: generator laws, estimators, determinism."""

import dataclasses
import math

import numpy as np
import pytest
from scipy import stats

from ris_sostat import analytic as an
from ris_sostat import channel as ch
from ris_sostat import montecarlo as mc
from ris_sostat.errors import DomainError

LOS_DESK = ch.default_scenario("A", kappa_rb=math.inf, M_x=4, M_z=2, N_x=8, N_z=4)
RICE_DESK = ch.default_scenario("A", M_x=4, M_z=2, N_x=8, N_z=4)


class TestGenVector:
    def test_unit_variance(self):
        rng = mc.replicate_rng(1, 0)
        x = mc.gen_vector(np.eye(4), 1.0, rng, size=50_000)
        assert (np.abs(x) ** 2).mean() == pytest.approx(1.0, abs=0.02)

    def test_rank_one_identical_entries(self):
        rng = mc.replicate_rng(2, 0)
        x = mc.gen_vector(np.ones((5, 5)), 1.0, rng, size=100)
        # equal up to the PSD-root's eigendecomposition noise
        assert np.max(np.abs(x - x[:, :1])) < 1e-7

    def test_empirical_covariance(self):
        R = ch.spatial_correlation(4, 2, 0.1, ch.SincModel())
        rng = mc.replicate_rng(3, 0)
        x = mc.gen_vector(R, 2.0, rng, size=100_000)
        emp = (x[:, :, None] * x[:, None, :].conj()).mean(axis=0)
        assert np.max(np.abs(emp - 2.0 * R)) < 0.02 * 2.0


class TestGenPair:
    def test_rho_one_identical(self):
        rng = mc.replicate_rng(4, 0)
        a, b = mc.gen_pair(np.eye(3), 1.0, 1.0, rng, size=10)
        assert a is b

    def test_rho_zero_uncorrelated(self):
        rng = mc.replicate_rng(5, 0)
        a, b = mc.gen_pair(np.eye(2), 1.0, 0.0, rng, size=100_000)
        cross = (a * b.conj()).mean(axis=0)
        assert np.max(np.abs(cross)) < 0.02

    def test_lag_correlation_matches_jakes(self):
        rho = float(ch.jakes_rho(10.0, 0.01))
        rng = mc.replicate_rng(6, 0)
        R = ch.spatial_correlation(2, 1, 0.25, ch.SincModel())
        a, b = mc.gen_pair(R, 1.5, rho, rng, size=150_000)
        lag = (a[:, 0] * b[:, 0].conj()).mean() / 1.5
        assert lag.real == pytest.approx(rho, abs=0.02)
        # cross-element lag correlation carries the spatial factor too
        lag01 = (a[:, 0] * b[:, 1].conj()).mean() / 1.5
        assert lag01.real == pytest.approx(rho * R[0, 1], abs=0.02)

    def test_marginals_match(self):
        rng = mc.replicate_rng(7, 0)
        a, b = mc.gen_pair(np.eye(1), 1.0, 0.7, rng, size=20_000)
        ks = stats.ks_2samp(np.abs(a).ravel(), np.abs(b).ravel())
        assert ks.pvalue > 0.01


class TestGenTimeseries:
    def test_lag_zero_power(self):
        rng = mc.replicate_rng(8, 0)
        g = mc.gen_timeseries(np.eye(8), 1.0, 10.0, 1.0 / 640.0, 2048, rng)
        assert (np.abs(g) ** 2).mean() == pytest.approx(1.0, abs=0.05)

    def test_autocorrelation_tracks_bessel(self):
        f, rate = 10.0, 64
        dt = 1.0 / (f * rate)
        rng = mc.replicate_rng(9, 0)
        n = 4096
        series = [
            mc.gen_timeseries(np.eye(4), 1.0, f, dt, n, mc.replicate_rng(9, i))
            for i in range(32)
        ]
        g = np.vstack(series)  # 128 scalar processes
        for f_tau in (0.25, 2.404826 / (2.0 * math.pi), 1.0, 2.0):
            lag = int(round(f_tau * rate))
            emp = (g[:, :-lag] * g[:, lag:].conj()).mean().real
            assert emp == pytest.approx(float(ch.jakes_rho(f, lag * dt)), abs=0.02)

    def test_lag_zero_curvature(self):
        f, rate = 10.0, 256
        dt = 1.0 / (f * rate)
        g = np.vstack(
            [
                mc.gen_timeseries(np.eye(8), 1.0, f, dt, 2048, mc.replicate_rng(10, i))
                for i in range(128)
            ]
        )

        def curv_at(h):
            r0 = (np.abs(g) ** 2).mean()
            rh = (g[:, :-h] * g[:, h:].conj()).mean().real
            return 2.0 * (rh - r0) / (h * dt) ** 2

        # Richardson pair cancels the quartic term of the correlation
        h = 13
        curv = (4.0 * curv_at(h) - curv_at(2 * h)) / 3.0
        assert -curv == pytest.approx(2.0 * math.pi**2 * f * f, rel=0.03)

    def test_spatial_mixing(self):
        # snapshot covariance pooled over realizations (one path cannot
        # average out the cross-tone residues of the independent processes)
        R = ch.spatial_correlation(3, 1, 0.25, ch.SincModel())
        acc = np.zeros((3, 3), dtype=complex)
        reps = 256
        for i in range(reps):
            g = mc.gen_timeseries(R, 2.0, 5.0, 1.0 / 320.0, 4096, mc.replicate_rng(11, i))
            acc += (g[:, None, :] * g[None, :, :].conj()).mean(axis=2)
        assert np.max(np.abs(acc / reps - 2.0 * R)) < 0.02 * 2.0

    def test_undersampling_rejected(self):
        rng = mc.replicate_rng(12, 0)
        with pytest.raises(DomainError, match="undersampled"):
            mc.gen_timeseries(np.eye(2), 1.0, 10.0, 0.01, 100, rng)


class TestPhaseDesign:
    def test_unit_modulus_and_alignment(self):
        links = ch.build_links(LOS_DESK)
        rng = mc.replicate_rng(13, 0)
        hd = mc.gen_vector(links.R_d, links.gains.beta_d, rng, size=64)
        hur = mc.gen_vector(links.R_ur, links.gains.beta_ur, rng, size=64)
        phi, nu = mc.apply_phase_design(hur, hd, links.a_b, links.a_r)
        assert np.allclose(np.abs(phi), 1.0, atol=1e-12)
        assert np.allclose(np.abs(nu), 1.0, atol=1e-12)
        # LoS composite collapses to sqrt(beta) nu Y a_b
        beta = links.gains.beta_rb
        H = math.sqrt(beta) * np.outer(links.a_b, links.a_r.conj())
        composite = (phi * hur) @ H.T
        y = np.abs(hur).sum(axis=1)
        expected = math.sqrt(beta) * (nu * y)[:, None] * links.a_b[None, :]
        assert np.max(np.abs(composite - expected)) < 1e-10
        # alignment identity at the BS
        assert np.allclose(
            np.abs(composite @ links.a_b.conj()),
            math.sqrt(beta) * LOS_DESK.M * y,
            rtol=1e-10,
        )

    def test_real_positive_channel_identity_phase(self):
        a_r = np.ones(4, dtype=complex)
        h_ur = np.array([0.5, 1.0, 2.0, 0.1], dtype=complex)
        h_d = np.array([1.0 + 0j])
        phi, nu = mc.apply_phase_design(h_ur, h_d, np.ones(1, dtype=complex), a_r)
        assert np.allclose(phi, nu)

    def test_dead_direct_link_unit_nu(self):
        a_b = np.ones(3, dtype=complex)
        _, nu = mc.apply_phase_design(np.ones(4, dtype=complex), np.zeros(3, dtype=complex), a_b, np.ones(4, dtype=complex))
        assert nu == 1.0 + 0.0j


class TestSimulateSeries:
    def test_direct_mean(self):
        links = ch.build_links(LOS_DESK)
        ser = mc.simulate_snr_series(LOS_DESK, "direct", mc.McConfig(replicates=24, seed=5, duration=32.0), links)
        expected = LOS_DESK.tx_snr * LOS_DESK.M * links.gains.beta_d
        assert ser.values.mean() == pytest.approx(expected, rel=0.01)

    def test_ris_mean(self):
        links = ch.build_links(LOS_DESK)
        ser = mc.simulate_snr_series(LOS_DESK, "ris", mc.McConfig(replicates=24, seed=6, duration=32.0), links)
        mom = an.moments_Y(links.R_ur, links.gains.beta_ur)
        expected = an.ris_snr_scale(LOS_DESK, links) * mom.second
        assert ser.values.mean() == pytest.approx(expected, rel=0.01)

    def test_requires_los_for_ris_modes(self):
        with pytest.raises(DomainError):
            mc.simulate_snr_series(RICE_DESK, "full", mc.McConfig(replicates=1, seed=0))

    def test_deterministic(self):
        a = mc.simulate_snr_series(LOS_DESK, "direct", mc.McConfig(replicates=4, seed=42, duration=4.0))
        b = mc.simulate_snr_series(LOS_DESK, "direct", mc.McConfig(replicates=4, seed=42, duration=4.0))
        assert np.array_equal(a.values, b.values)


class TestEstimateLcr:
    def test_constant_series(self):
        est = mc.estimate_lcr(np.ones((2, 100)), 0.1, [2.0])[0]
        assert est == mc.McEstimate(0.0, 0.0, 0)

    def test_sine_wave(self):
        t = np.arange(0, 64 * 20) / 64.0
        x = np.sin(2.0 * np.pi * (t + 0.3))[None, :]  # crossings interior to the window
        est = mc.estimate_lcr(x, 1.0 / 64.0, [0.0])[0]
        assert est.count == 20
        assert est.value == pytest.approx(1.0, rel=0.02)  # one up-crossing per period

    def test_single_branch_vs_closed_form(self):
        theta, f = 1.0, 10.0
        cfg = mc.McConfig(replicates=48, seed=77, duration=128.0)
        dt = 1.0 / (f * cfg.sample_rate)
        n = int(cfg.duration * cfg.sample_rate)
        rows = [
            (np.abs(mc.gen_timeseries(np.eye(1), theta, f, dt, n, mc.replicate_rng(77, i))) ** 2)[0]
            for i in range(cfg.replicates)
        ]
        series = np.vstack(rows)
        thresholds = np.array([0.2, 0.5, 1.0, 2.0])
        ests = mc.estimate_lcr(series, dt, thresholds)
        for T, est in zip(thresholds, ests):
            if est.count < 100:
                continue
            exact = math.sqrt(2.0 * math.pi * T / theta) * f * math.exp(-T / theta)
            assert est.value == pytest.approx(exact, rel=0.10)


class TestEstimateAfd:
    def test_constant_below_flagged(self):
        est = mc.estimate_afd(np.zeros((1, 100)), 0.1, [1.0])[0]
        assert est.count == 0 and est.value == 0.0

    def test_square_wave(self):
        period = 64
        x = np.tile(np.r_[np.ones(period // 2), -np.ones(period // 2)], 20)[None, :]
        est = mc.estimate_afd(x, 1.0, [0.0])[0]
        assert est.value == pytest.approx(period / 2.0, rel=1e-9)

    def test_accounting_identity(self):
        # on a window trimmed to start/end above T, up-crossings equal
        # completed fades, so afd * lcr == below-threshold time fraction
        rng = mc.replicate_rng(21, 0)
        g = (np.abs(mc.gen_timeseries(np.eye(1), 1.0, 10.0, 1.0 / 640.0, 30_000, rng)) ** 2)[0]
        T = 0.7
        above = np.flatnonzero(g >= T)
        row = g[above[0] : above[-1] + 1][None, :]
        dt = 1.0 / 640.0
        afd = mc.estimate_afd(row, dt, [T])[0]
        lcr = mc.estimate_lcr(row, dt, [T])[0]
        assert afd.count == lcr.count
        below = mc._fade_durations(row[0], dt, T).sum()
        span = (row.shape[1] - 1) * dt
        assert afd.value * lcr.value == pytest.approx(below / span, rel=1e-12)


class TestEstimateSnrCorr:
    def test_zero_lag_is_one(self):
        est = mc.estimate_snr_corr(LOS_DESK, [0.0], mc.McConfig(replicates=2000, seed=1))[0]
        assert est.value == pytest.approx(1.0, abs=1e-12)

    def test_long_lag_decorrelates(self):
        est = mc.estimate_snr_corr(LOS_DESK, [50.0], mc.McConfig(replicates=40_000, seed=2))[0]
        assert abs(est.value) < max(0.01, 3.0 * est.stderr) + 0.02

    def test_matches_analytic(self):
        links = ch.build_links(LOS_DESK)
        taus = [0.01, 0.02, 0.05]
        ests = mc.estimate_snr_corr(LOS_DESK, taus, mc.McConfig(replicates=60_000, seed=3), links)
        for tau, est in zip(taus, ests):
            assert abs(est.value - an.snr_correlation(LOS_DESK, tau, links=links)) <= 0.03

    def test_deterministic(self):
        a = mc.estimate_snr_corr(LOS_DESK, [0.01], mc.McConfig(replicates=20_000, seed=9))[0]
        b = mc.estimate_snr_corr(LOS_DESK, [0.01], mc.McConfig(replicates=20_000, seed=9))[0]
        assert a == b


class TestEstimateChannelCorr:
    def test_direct_only(self):
        links = ch.build_links(RICE_DESK)
        links = dataclasses.replace(links, gains=dataclasses.replace(links.gains, beta_rb=0.0))
        r_hat, _ = mc.estimate_channel_corr(RICE_DESK, mc.McConfig(replicates=60_000, seed=4), links)
        assert np.max(np.abs(r_hat - links.R_d)) < 0.02

    def test_rank_two_at_full_correlation(self):
        cfg = dataclasses.replace(RICE_DESK, spatial_model=ch.ExponentialModel(1.0))
        r_hat, _ = mc.estimate_channel_corr(cfg, mc.McConfig(replicates=40_000, seed=5))
        w = np.linalg.eigvalsh(r_hat)[::-1]
        frac = np.clip(w, 0.0, None) / np.clip(w, 0.0, None).sum()
        assert frac[2] < 0.01

    def test_matches_analytic(self):
        links = ch.build_links(RICE_DESK)
        res = an.channel_corr(RICE_DESK, links=links)
        r_hat, se = mc.estimate_channel_corr(RICE_DESK, mc.McConfig(replicates=60_000, seed=6), links)
        assert np.max(np.abs(r_hat - res.R_h)) < 0.02
        assert np.all(se >= 0.0)


class TestEstimateAgeing:
    def test_zero_lag_exact_zero(self):
        est = mc.estimate_ageing(RICE_DESK, [0.0], mc.McConfig(replicates=5000, seed=7))[0]
        assert est.loss.value == 0.0 and est.percent.value == 0.0

    def test_matches_analytic(self):
        links = ch.build_links(RICE_DESK)
        taus = [0.02, 0.05]
        ests = mc.estimate_ageing(RICE_DESK, taus, mc.McConfig(replicates=80_000, seed=8), links)
        for tau, est in zip(taus, ests):
            _, pct = an.ageing_loss(RICE_DESK, tau, links=links)
            assert est.percent.value == pytest.approx(pct, abs=max(2.0, 4.0 * est.percent.stderr))

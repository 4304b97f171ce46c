import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iterlearn.errors import ParameterError
from iterlearn.gaussian import (
    GaussianConfig,
    chained_moments,
    config_schedule,
    hopped_moments,
    hopped_variance,
    hopped_variance_terms,
    posterior_update,
    simulate_gaussian_mc,
)
from iterlearn.schedules import SampleSchedule

DEFAULT = GaussianConfig()


class TestUpdate:
    def test_hand_example(self):
        post = posterior_update(DEFAULT, [2.0])
        assert post.mu == pytest.approx(1.0)
        assert post.tau == pytest.approx(2.0)
        assert post.var == pytest.approx(0.5)

    def test_fixed_point(self):
        cfg = GaussianConfig(mu_bar=0.7)
        assert posterior_update(cfg, [0.7] * 9).mu == pytest.approx(0.7, abs=1e-15)

    def test_washout(self):
        for m in (10, 100, 1000):
            assert abs(posterior_update(DEFAULT, [3.0] * m).mu - 3.0) <= 3.0 / m + 1e-12

    def test_precision_floor(self):
        post = posterior_update(GaussianConfig(var_bar=2.0, var_noise=5.0), [1.0, -1.0])
        assert post.tau >= 1 / 2.0

    def test_validation(self):
        with pytest.raises(ParameterError):
            GaussianConfig(var_noise=0.0)
        with pytest.raises(ParameterError):
            posterior_update(DEFAULT, [])
        with pytest.raises(ParameterError):
            GaussianConfig.from_dict({"sigma": 1})


class TestChained:
    def test_halving(self):
        track = chained_moments(DEFAULT, SampleSchedule.constant(1), 30)
        t = np.arange(1, 31)
        assert np.allclose(track.mean[1:], 0.5**t, atol=1e-15)
        assert np.allclose(track.beta[1:], 0.5)

    def test_mean_at_prior(self):
        cfg = GaussianConfig(mu0=0.0)
        track = chained_moments(cfg, SampleSchedule.theorem3(gap=1, eps=0.1, sigma=1, sigma_bar=1, c=0.5), 40)
        assert np.all(track.mean == 0.0)

    def test_posterior_variance_below(self):
        track = chained_moments(DEFAULT, SampleSchedule.table([1, 2, 5, 50]), 4)
        assert np.all(track.sigma2[1:] < 1 / (track.m[1:] * DEFAULT.tau))
        assert np.all((track.beta[1:] > 0) & (track.beta[1:] < 1))

    @pytest.mark.parametrize("coupling", ["iid", "session"])
    def test_first_step_variance(self, coupling):
        cfg = GaussianConfig(var0=2.0, var_noise=0.5)
        m = 3
        track = chained_moments(cfg, SampleSchedule.constant(m), 1, coupling=coupling)
        b = track.beta[1]
        expected = (b / m) ** 2 * m * (cfg.var0 + cfg.var_noise)
        if coupling == "session":
            expected = b**2 * (cfg.var0 + cfg.var_noise / m)
        assert track.var[1] == pytest.approx(expected, rel=1e-14)

    def test_rows_and_header(self):
        track = chained_moments(DEFAULT, SampleSchedule.constant(2), 3)
        rows = list(track.rows())
        assert track.header() == ["t", "m_t", "E_mu", "Var_mu", "sigma2_t", "beta_t"]
        assert [r[0] for r in rows] == [1, 2, 3]
        assert all(len(r) == 6 for r in rows)

    def test_bad_coupling(self):
        with pytest.raises(ParameterError):
            chained_moments(DEFAULT, SampleSchedule.constant(2), 3, coupling="paired")

    @settings(max_examples=40, deadline=None)
    @given(
        mu0=st.floats(-5, 5),
        mu_bar=st.floats(-5, 5),
        var_bar=st.floats(0.1, 10),
        var_noise=st.floats(0.1, 10),
        m=st.integers(1, 50),
    )
    def test_closed_form_property(self, mu0, mu_bar, var_bar, var_noise, m):
        cfg = GaussianConfig(mu0=mu0, mu_bar=mu_bar, var_bar=var_bar, var_noise=var_noise)
        track = chained_moments(cfg, SampleSchedule.constant(m), 25)
        b = m / var_noise / (1 / var_bar + m / var_noise)
        t = np.arange(1, 26)
        assert np.allclose(track.mean[1:] - mu_bar, b**t * (mu0 - mu_bar), atol=1e-10)
        assert np.all(track.var >= 0)


class TestHopped:
    def test_first_step_matches_chained(self):
        for coupling in ("iid", "session"):
            sch = SampleSchedule.table([4, 9])
            h = hopped_moments(DEFAULT, sch, 2, coupling=coupling)
            c = chained_moments(DEFAULT, sch, 2, coupling=coupling)
            assert h.mean[1] == pytest.approx(c.mean[1], abs=1e-15)
            assert h.var[1] == pytest.approx(c.var[1], abs=1e-15)

    def test_half_beta_example(self):
        h = hopped_moments(DEFAULT, SampleSchedule.constant(1), 2)
        assert h.mean[1] == pytest.approx(0.5)
        assert h.mean[2] == pytest.approx(0.375)
        assert h.gamma[2] == pytest.approx((1 + 0.5) * (0.5 / 2))
        assert h.gamma[2] == pytest.approx(0.375)

    def test_first_step_variance_formula(self):
        cfg = GaussianConfig(var0=1.5, var_noise=0.8)
        m = 5
        h = hopped_moments(cfg, SampleSchedule.constant(m), 1)
        b = h.beta[1]
        assert h.var[1] == pytest.approx((b / m) ** 2 * m * (cfg.var0 + cfg.var_noise), rel=1e-14)

    def test_degenerate_noise(self):
        cfg = GaussianConfig(mu0=0.0, var0=1e-14, var_noise=1e-14)
        v = hopped_variance(cfg, SampleSchedule.constant(2), 10)
        assert np.all(v < 1e-10)

    @pytest.mark.parametrize("coupling", ["iid", "session"])
    def test_running_sums_match_quadratic_oracle(self, coupling):
        cfg = GaussianConfig(mu0=1.3, var0=0.7, mu_bar=-0.2, var_bar=1.9, var_noise=0.6)
        sch = SampleSchedule.table([1, 3, 2, 7, 4, 4, 10, 6])
        track = hopped_moments(cfg, sch, 8, coupling=coupling)
        for t in range(1, 9):
            terms, cov = hopped_variance_terms(cfg, track, t)
            oracle = (track.beta[t] / track.m[t]) ** 2 * (terms.sum() + cov.sum())
            assert track.var[t] == pytest.approx(oracle, rel=1e-10, abs=1e-15)

    def test_gamma_range(self):
        sch = config_schedule(DEFAULT, {"kind": "theorem4", "eps_rel": 0.1, "c": 0.5, "max_m": None})
        h = hopped_moments(DEFAULT, sch, 500)
        g = h.gamma[1:]
        assert np.all((g > 0) & (g <= 1))
        assert np.all(g >= 1 - 0.1)

    @settings(max_examples=30, deadline=None)
    @given(mu0=st.floats(-3, 3).filter(lambda x: abs(x) > 1e-3), m=st.integers(1, 20))
    def test_gamma_identity_property(self, mu0, m):
        cfg = GaussianConfig(mu0=mu0)
        h = hopped_moments(cfg, SampleSchedule.constant(m), 30)
        assert np.allclose(h.mean[1:], h.gamma[1:] * mu0, atol=1e-10)


class TestMonteCarlo:
    def test_chained_decay(self):
        mc = simulate_gaussian_mc(DEFAULT, SampleSchedule.constant(1), 20, "chained", replicates=10_000, seed=5)
        exact = 0.5 ** np.arange(1, 21)
        assert np.all(np.abs(mc.mean - exact) <= 3 * mc.stderr)

    @pytest.mark.parametrize("mode", ["chained", "hopped"])
    def test_session_moments_match(self, mode):
        sch = SampleSchedule.constant(2)
        fn = chained_moments if mode == "chained" else hopped_moments
        track = fn(DEFAULT, sch, 10, coupling="session")
        mc = simulate_gaussian_mc(DEFAULT, sch, 10, mode, replicates=10_000, seed=0)
        assert np.all(np.abs(mc.mean - track.mean[1:]) <= 3 * mc.stderr)
        assert np.all(np.abs(mc.var - track.var[1:]) <= 3 * mc.var_stderr)

    def test_iid_recursion_differs_from_agent_process(self):
        # the per-datum independent variance term understates the spread of
        # a session whose data share one sampled hypothesis
        sch = SampleSchedule.constant(4)
        iid = chained_moments(DEFAULT, sch, 3, coupling="iid")
        mc = simulate_gaussian_mc(DEFAULT, sch, 3, "chained", replicates=20_000, seed=3)
        assert np.all(mc.var - iid.var[1:] > 5 * mc.var_stderr)

    def test_theorem3_schedule(self):
        sch = config_schedule(DEFAULT, {"kind": "theorem3", "eps": 0.1, "c": 0.5})
        mc = simulate_gaussian_mc(DEFAULT, sch, 20, "chained", replicates=10_000, seed=8)
        assert abs(mc.mean[-1] - DEFAULT.mu0) <= 0.1 + 3 * mc.stderr[-1]

    def test_deterministic_and_worker_independent(self):
        sch = SampleSchedule.constant(3)
        a = simulate_gaussian_mc(DEFAULT, sch, 5, "hopped", replicates=9000, seed=1, keep_samples=True, workers=0)
        b = simulate_gaussian_mc(DEFAULT, sch, 5, "hopped", replicates=9000, seed=1, keep_samples=True, workers=3)
        assert np.array_equal(a.samples, b.samples)
        assert a.replicates == 9000

    def test_bad_mode(self):
        with pytest.raises(ParameterError):
            simulate_gaussian_mc(DEFAULT, SampleSchedule.constant(1), 2, "ring", replicates=10, seed=0)


def test_config_schedule_fills_from_config():
    cfg = GaussianConfig(mu0=3.0, mu_bar=1.0, var_bar=4.0, var_noise=1.0)
    sch = config_schedule(cfg, {"kind": "theorem3-chained", "eps": 0.5, "c": 1.0})
    # (2 / 0.5) * 2 * (1 / 2)**2 * t**2
    assert sch(3) == math.ceil(4 * 2 * 0.25 * 9)

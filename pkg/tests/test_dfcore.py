import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dfmonitor.dfcore import (
    ChartConfig,
    batch_statistics,
    default_lag_truncation,
    df_stat,
    df_stat_flat_oracle,
    df_t_stat,
    newey_west,
    trajectory,
    transformed_stat_E,
    transformed_stat_E_tilde,
    VARIANTS,
)
from dfmonitor.exceptions import (
    InsufficientDataError,
    ParameterError,
    RangeError,
    TruncationError,
)
from dfmonitor.innovations import GenSpec, gen_arma11
from dfmonitor.kernels import GAUSSIAN

HAND = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
HAND_CFG = ChartConfig(T=4, kappa=0.5, h=1.0, kernel="flat-test", oracle=True)


def ols_oracle(y, t):
    """No-intercept regression of Y_j on Y_{j-1}: coefficient, t-stat of rho - 1."""
    x, z = y[:t].reshape(-1, 1), y[1 : t + 1]
    coef, res, *_ = np.linalg.lstsq(x, z, rcond=None)
    rho = coef[0]
    s2 = np.sum((z - rho * x[:, 0]) ** 2) / (t - 1)
    se = math.sqrt(s2 / np.sum(x[:, 0] ** 2))
    return rho, (rho - 1.0) / se


def nw_oracle(d, m):
    t = len(d)
    sigma2 = sum(v * v for v in d) / t
    eta2 = sigma2
    for i in range(1, m + 1):
        gamma = sum(d[s] * d[s - i] for s in range(i, t)) / t
        eta2 += 2 * (m - i) / m * gamma
    return sigma2, max(eta2, 1e-8 * sigma2)


def two_pass(y, cfg, t):
    """Straight-line recomputation of D, Dt, E and Et at t."""
    num = sum(y[j - 1] * (y[j] - y[j - 1]) * float(cfg.kernel((t - j) / cfg.h))
              for j in range(1, t + 1)) / t
    sxx = sum(y[j - 1] ** 2 for j in range(1, t + 1))
    den = sxx / t**2
    mass = sum(float(cfg.kernel((t - j) / cfg.h)) for j in range(1, t + 1))
    d = num / den
    rho = sum(y[j - 1] * y[j] for j in range(1, t + 1)) / sxx
    s2 = sum((y[j] - rho * y[j - 1]) ** 2 for j in range(1, t + 1)) / (t - 1)
    dt = d / (t * math.sqrt(s2 / sxx))
    sigma2, eta2 = nw_oracle(np.diff(y[: t + 1]), default_lag_truncation(t))
    e = d + (sigma2 - eta2) / (2 * t) * mass / den
    et = (math.sqrt(s2) / math.sqrt(eta2)) * dt - (eta2 - sigma2) / (2 * t) * mass / (
        math.sqrt(eta2) * math.sqrt(den))
    return d, dt, e, et


class TestHandValues:
    def test_df_stat(self):
        assert df_stat(HAND, HAND_CFG, 4) == pytest.approx(12 / 7, rel=1e-15)
        assert df_stat_flat_oracle(HAND, 4) == pytest.approx(12 / 7, rel=1e-15)

    def test_t_type(self):
        # rho_hat = 10/7, s^2 = (1/3)(1 + 16/49 + 1/49 + 4/49) = 10/21
        xi = math.sqrt((10 / 21) / 14)
        expected = (12 / 7) / (4 * xi)
        assert expected == pytest.approx(2.3237900, abs=1e-7)
        assert df_t_stat(HAND, HAND_CFG, 4) == pytest.approx(expected, rel=1e-14)

    def test_newey_west_alternating(self):
        nu = newey_west(np.array([1.0, -1.0, 1.0, -1.0]), 4, 2)
        assert nu.sigma2 == 1.0
        assert nu.eta2 == 0.25
        assert nu.vartheta2 == 0.25
        assert nu.m == 2

    @pytest.mark.parametrize("t,m", [(1, 1), (99, 3), (100, 4), (250, 5), (1000, 7)])
    def test_lag_rule(self, t, m):
        assert default_lag_truncation(t) == m


class TestConventions:
    def test_zero_series(self):
        cfg = ChartConfig()
        y = np.zeros(251)
        for t in (50, 120, 250):
            assert df_stat(y, cfg, t) == 0.0
            assert df_t_stat(y, cfg, t) == 0.0
            assert transformed_stat_E(y, cfg, t) == 0.0
            assert transformed_stat_E_tilde(y, cfg, t) == 0.0
        for v in VARIANTS:
            assert np.all(trajectory(y, cfg, v).stats == 0.0)

    def test_range_errors(self, rw):
        cfg = ChartConfig()
        with pytest.raises(RangeError):
            df_stat(rw, cfg, 49)
        with pytest.raises(RangeError):
            df_stat(rw, cfg, 251)
        with pytest.raises(InsufficientDataError):
            df_stat(rw[:100], cfg, 150)
        with pytest.raises(InsufficientDataError):
            trajectory(rw[:200], cfg)

    def test_newey_west_errors(self):
        d = np.ones(10)
        with pytest.raises(TruncationError):
            newey_west(d, 5, 5)
        with pytest.raises(TruncationError):
            newey_west(d, 5, 0)
        with pytest.raises(InsufficientDataError):
            newey_west(d, 0, 1)
        with pytest.raises(InsufficientDataError):
            newey_west(d, 11, 2)

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            ChartConfig(T=250, kappa=0.004)
        with pytest.raises(ParameterError):
            ChartConfig(h=300.0)
        with pytest.raises(ParameterError):
            ChartConfig(alpha=1.0)
        with pytest.raises(ParameterError):
            ChartConfig(lag=0)
        cfg = ChartConfig()
        assert cfg.k == 50 and cfg.zeta == 10.0
        assert np.array_equal(cfg.times, np.arange(50, 251))


class TestOracles:
    def test_flat_kernel_equals_least_squares(self, flat_cfg):
        for seed in range(5):
            y = gen_arma11(GenSpec(seed=seed)).values
            for t in (50, 137, 250):
                rho, tstat = ols_oracle(y, t)
                assert df_stat(y, flat_cfg, t) == pytest.approx(t * (rho - 1), rel=1e-10)
                assert df_t_stat(y, flat_cfg, t) == pytest.approx(tstat, rel=1e-10)

    def test_newey_west_matches_loop(self):
        d = np.random.default_rng(3).standard_normal(120)
        for m in (1, 2, 5, 9):
            nu = newey_west(d, 120, m)
            s2, e2 = nw_oracle(d, m)
            assert nu.sigma2 == pytest.approx(s2, rel=1e-13)
            assert nu.eta2 == pytest.approx(e2, rel=1e-12)

    def test_newey_west_squared_variant(self):
        d = np.random.default_rng(4).standard_normal(50)
        nu = newey_west(d, 50, 3, squared_gamma=True)
        g1 = np.sum(d[1:] * d[:-1]) / 50
        g2 = np.sum(d[2:] * d[:-2]) / 50
        assert nu.eta2 == pytest.approx(nu.sigma2 + 2 * (2 / 3 * g1**2 + 1 / 3 * g2**2))

    def test_newey_west_consistency_iid(self):
        d = np.random.default_rng(5).standard_normal(100000)
        nu = newey_west(d, 100000, default_lag_truncation(100000))
        assert abs(nu.vartheta2 - 1.0) < 0.05

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=30), st.integers(1, 29))
    def test_eta2_positive_floor(self, d, m):
        d = np.array(d)
        if m >= len(d) or not np.any(d):
            return
        nu = newey_west(d, len(d), m)
        assert nu.eta2 >= 1e-8 * nu.sigma2 > 0
        assert nu.vartheta2 == nu.eta2 / nu.sigma2

    @pytest.mark.parametrize("beta", [0.5, -0.5])
    def test_transformed_statistics_two_pass(self, beta):
        cfg = ChartConfig()
        y = gen_arma11(GenSpec(rho=1.0, beta=beta, seed=21)).values
        d, dt, e, et = two_pass(y, cfg, 250)
        assert df_stat(y, cfg, 250) == pytest.approx(d, rel=1e-12)
        assert df_t_stat(y, cfg, 250) == pytest.approx(dt, rel=1e-12)
        assert transformed_stat_E(y, cfg, 250) == pytest.approx(e, rel=1e-12)
        assert transformed_stat_E_tilde(y, cfg, 250) == pytest.approx(et, rel=1e-12)

    def test_batch_matches_scalar(self):
        cfg = ChartConfig()
        y = gen_arma11(GenSpec(rho=0.95, beta=0.5, seed=8)).values
        b = batch_statistics(y, cfg)
        ts = np.random.default_rng(0).choice(cfg.times, 20, replace=False)
        scalar = {"D": df_stat, "D_t_type": df_t_stat, "E": transformed_stat_E,
                  "E_t_type": transformed_stat_E_tilde}
        for v, fn in scalar.items():
            traj = trajectory(y, cfg, v)
            assert np.array_equal(traj.stats, b.stat(v)[0])
            for t in ts:
                assert traj.stats[t - cfg.k] == pytest.approx(fn(y, cfg, int(t)),
                                                              rel=1e-10, abs=1e-12)


class TestProperties:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6),
           st.floats(1e-3, 1e3).flatmap(lambda c: st.sampled_from([c, -c])))
    def test_scale_invariance(self, seed, c):
        cfg = ChartConfig()
        y = gen_arma11(GenSpec(rho=1.0, beta=0.3, seed=seed)).values
        a, b = batch_statistics(y, cfg), batch_statistics(c * y, cfg)
        for v in VARIANTS:
            np.testing.assert_allclose(b.stat(v), a.stat(v), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(b.vartheta2, a.vartheta2, rtol=1e-10)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10**6))
    def test_lag_one_collapse(self, seed):
        cfg = ChartConfig(lag=1)
        y = gen_arma11(GenSpec(rho=0.98, beta=0.5, seed=seed)).values
        b = batch_statistics(y, cfg)
        assert np.all(b.vartheta2 == 1.0)
        assert np.array_equal(b.E, b.D)

    def test_e_tilde_collapse_with_injected_residual_sd(self, rw):
        cfg = ChartConfig(lag=1)
        for t in (60, 250):
            nu = newey_west(np.diff(rw), t, 1)
            value = transformed_stat_E_tilde(rw, cfg, t, nu=nu, resid_sd=math.sqrt(nu.eta2))
            assert value == df_t_stat(rw, cfg, t)

    def test_no_look_ahead(self, rw):
        cfg = ChartConfig()
        full = batch_statistics(rw, cfg)
        for t in (50, 173, 249):
            part = batch_statistics(rw[: t + 1], cfg, times=[t])
            for v in VARIANTS:
                assert part.stat(v)[0, 0] == full.stat(v)[0, t - cfg.k]

    def test_kernel_locality(self, rw):
        h = 1e-3
        assert GAUSSIAN(np.array(1 / h)) / GAUSSIAN(np.array(0.0)) < 1e-12
        cfg = ChartConfig(h=h)
        t = 200
        only_last = rw[t - 1] * (rw[t] - rw[t - 1]) * GAUSSIAN.at_zero / t
        den = np.sum(rw[:t] ** 2) / t**2
        assert df_stat(rw, cfg, t) == pytest.approx(only_last / den, rel=1e-12)


class TestTrajectory:
    def test_times_and_export(self, rw, tmp_path):
        cfg = ChartConfig()
        traj = trajectory(rw, cfg, "E")
        assert traj.times[0] == 50 and traj.times[-1] == 250
        assert np.all(np.diff(traj.times) == 1)
        assert np.all(np.isfinite(traj.stats))
        nus = traj.nuisance
        assert nus[0].t == 50 and nus[0].m == default_lag_truncation(50)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["t", "s", "stat", "sigma2", "eta2", "vartheta"]
        assert len(rows) == 202
        assert float(rows[1][2]) == traj.stats[0]

    def test_partial_series(self, rw):
        cfg = ChartConfig()
        traj = trajectory(rw[:101], cfg, "D", partial=True)
        assert traj.times[-1] == 100
        full = trajectory(rw, cfg, "D")
        assert np.array_equal(traj.stats, full.stats[:51])
        with pytest.raises(InsufficientDataError):
            trajectory(rw[:50], cfg, partial=True)

    def test_stride(self, rw):
        cfg = ChartConfig(stride=10)
        assert np.array_equal(trajectory(rw, cfg).times, np.arange(50, 251, 10))

import math

import numpy as np
import pytest

from lsv_shortmat.mc_engine import (
    McConfig,
    default_strike_grid,
    price_european,
    price_vix_proxy,
    proxy_error_bounds,
    simulate_paths,
    smile_from_mc,
    smile_rows_to_csv,
    vix_exact_meanrev,
    vix_proxy_values,
)
from lsv_shortmat.model import (
    ConstantDrift,
    ConstantLocalVol,
    LognormalVolOfVol,
    LsvModel,
    MeanRevertingDrift,
    SquareRootVolOfVol,
    TanhLocalVol,
    TaylorLocalVol,
)
from lsv_shortmat.smile import VixMapping

TANH = TanhLocalVol(1.0, -0.5, 0.0)


def table_model(rho, **kw):
    base = dict(s0=1.0, v0=0.1, rho=rho, local_vol=TANH, vol_of_vol=LognormalVolOfVol(2.0))
    base.update(kw)
    return LsvModel(**base)


class TestSimulatePaths:
    def test_deterministic_bytes(self):
        model = table_model(-0.7)
        config = McConfig(n_paths=20_000, n_steps=50, maturity=1 / 12, seed=99)
        a = simulate_paths(model, config)
        b = simulate_paths(model, config)
        assert a.terminal_s.tobytes() == b.terminal_s.tobytes()
        assert a.terminal_v.tobytes() == b.terminal_v.tobytes()

    def test_path_prefix_independent_of_n_paths(self):
        model = table_model(0.0)
        small = simulate_paths(model, McConfig(n_paths=1_000, n_steps=20, maturity=0.1, seed=5))
        large = simulate_paths(model, McConfig(n_paths=30_000, n_steps=20, maturity=0.1, seed=5))
        np.testing.assert_array_equal(small.terminal_s, large.terminal_s[:1_000])
        np.testing.assert_array_equal(small.terminal_v, large.terminal_v[:1_000])

    def test_thread_count_invariance(self):
        model = table_model(0.3)
        config = McConfig(n_paths=40_000, n_steps=25, maturity=0.1, seed=11)
        a = simulate_paths(model, config, threads=1)
        b = simulate_paths(model, config, threads=4)
        assert a.terminal_s.tobytes() == b.terminal_s.tobytes()

    def test_antithetic_layout(self):
        model = table_model(0.0)
        config = McConfig(n_paths=500, n_steps=10, maturity=0.1, seed=1, antithetic=True)
        s = simulate_paths(model, config)
        assert s.terminal_s.shape == (1000,)
        assert np.all(s.terminal_s > 0) and np.all(s.terminal_v > 0)

    def test_degenerate_vol_of_vol_lognormal_law(self):
        # vanishing vol-of-vol: exact lognormal terminal law for constant eta
        model = table_model(0.0, local_vol=ConstantLocalVol(),
                            vol_of_vol=LognormalVolOfVol(1e-12), v0=0.04)
        t = 0.5
        s = simulate_paths(model, McConfig(n_paths=50_000, n_steps=20, maturity=t, seed=3))
        logs = np.log(s.terminal_s)
        se = logs.std(ddof=1) / math.sqrt(logs.size)
        assert abs(logs.mean() - (-0.5 * 0.04 * t)) <= 3 * se
        assert logs.std(ddof=1) == pytest.approx(math.sqrt(0.04 * t), rel=0.02)

    def test_martingale(self):
        model = table_model(-0.7)
        s = simulate_paths(model, McConfig(n_paths=100_000, n_steps=100, maturity=1 / 12, seed=7))
        se = s.terminal_s.std(ddof=1) / math.sqrt(s.terminal_s.size)
        assert abs(s.terminal_s.mean() - 1.0) <= 4 * se

    def test_exact_gbm_variance_moments(self):
        # V is stepped exactly: terminal V matches the lognormal law
        model = table_model(0.0)
        t = 1 / 12
        s = simulate_paths(model, McConfig(n_paths=100_000, n_steps=10, maturity=t, seed=13))
        logs = np.log(s.terminal_v / 0.1)
        se = logs.std(ddof=1) / math.sqrt(logs.size)
        assert abs(logs.mean() + 0.5 * 4.0 * t) <= 4 * se
        assert logs.std(ddof=1) == pytest.approx(2.0 * math.sqrt(t), rel=0.02)

    def test_carry_drift(self):
        model = table_model(0.0, r=0.05, q=0.01)
        t = 0.25
        s = simulate_paths(model, McConfig(n_paths=100_000, n_steps=50, maturity=t, seed=21))
        se = s.terminal_s.std(ddof=1) / math.sqrt(s.terminal_s.size)
        assert abs(s.terminal_s.mean() - math.exp((0.05 - 0.01) * t)) <= 4 * se

    def test_v_scheme_flags(self):
        exact = simulate_paths(table_model(0.0), McConfig(1000, 5, 0.1, 1))
        assert exact.v_scheme == "exact-gbm"
        heston = simulate_paths(
            table_model(0.0, vol_of_vol=SquareRootVolOfVol(0.5, drift=MeanRevertingDrift(2.0, 0.1))),
            McConfig(1000, 5, 0.1, 1))
        assert heston.v_scheme == "euler-full-truncation"
        mr_ln = simulate_paths(
            table_model(0.0, vol_of_vol=LognormalVolOfVol(0.5, drift=MeanRevertingDrift(2.0, 0.1))),
            McConfig(1000, 5, 0.1, 1))
        assert mr_ln.v_scheme == "euler-full-truncation"

    def test_heston_variance_mean_reversion(self):
        # full-truncation Euler on a CIR factor: mean should pull towards b
        model = table_model(0.0, vol_of_vol=SquareRootVolOfVol(0.3, drift=MeanRevertingDrift(a=5.0, b=0.2)))
        s = simulate_paths(model, McConfig(n_paths=50_000, n_steps=200, maturity=1.0, seed=17))
        expected = 0.2 + (0.1 - 0.2) * math.exp(-5.0)
        assert s.terminal_v.mean() == pytest.approx(expected, rel=0.02)

    def test_aux_control_variate_track(self):
        model = table_model(0.0)
        cfg = McConfig(n_paths=30_000, n_steps=50, maturity=1 / 12, seed=29)
        s = simulate_paths(model, cfg, aux_const_vol=math.sqrt(0.1))
        assert s.terminal_s_aux is not None and s.terminal_s_aux.shape == s.terminal_s.shape
        # the auxiliary GBM is exactly lognormal with the constant vol
        logs = np.log(s.terminal_s_aux)
        assert logs.std(ddof=1) == pytest.approx(math.sqrt(0.1 / 12), rel=0.02)
        # driven by the same increments: highly correlated with the LSV spot
        corr = np.corrcoef(np.log(s.terminal_s), logs)[0, 1]
        assert corr > 0.97


@pytest.fixture(scope="module")
def samples():
    return simulate_paths(table_model(0.0), McConfig(100_000, 100, 1 / 12, 42))


class TestPricing:

    def test_zero_strike_call(self, samples):
        est = price_european(samples, 0.0, True, 0.0, 1 / 12)
        assert est.value == pytest.approx(samples.terminal_s.mean(), rel=1e-12)

    def test_discounting(self, samples):
        und = price_european(samples, 1.0, True, 0.0, 1 / 12)
        disc = price_european(samples, 1.0, True, 0.05, 1 / 12)
        assert disc.value == pytest.approx(und.value * math.exp(-0.05 / 12), rel=1e-12)

    def test_deep_otm_negligible(self, samples):
        est = price_european(samples, 100.0, True, 0.0, 1 / 12)
        assert est.value < 1e-6

    def test_put_call_parity_identity(self, samples):
        k = 0.97
        call = price_vix_proxy(samples, TANH, k, True, 0.0, 1 / 12)
        put = price_vix_proxy(samples, TANH, k, False, 0.0, 1 / 12)
        proxy_mean = vix_proxy_values(samples, TANH).mean()
        assert call.value - put.value == pytest.approx(proxy_mean - k, abs=1e-12)

    def test_vix_proxy_zero_strike(self, samples):
        est = price_vix_proxy(samples, TANH, 0.0, True, 0.0, 1 / 12)
        assert est.value == pytest.approx(vix_proxy_values(samples, TANH).mean(), rel=1e-12)

    def test_antithetic_variance_reduction(self):
        model = table_model(0.0)
        t = 1 / 12
        plain = simulate_paths(model, McConfig(100_000, 50, t, 314))
        anti = simulate_paths(model, McConfig(50_000, 50, t, 314, antithetic=True))
        se_plain = price_european(plain, 1.0, True, 0.0, t).std_error
        se_anti = price_european(anti, 1.0, True, 0.0, t).std_error
        # same total path budget; pairing must cut the variance measurably
        assert se_plain**2 / se_anti**2 >= 1.2

    def test_step_halving_stability(self):
        model = table_model(-0.7)
        t = 1 / 12
        coarse = simulate_paths(model, McConfig(100_000, 100, t, 2718))
        fine = simulate_paths(model, McConfig(100_000, 200, t, 2719))
        pc = price_european(coarse, 1.0, True, 0.0, t)
        pf = price_european(fine, 1.0, True, 0.0, t)
        assert abs(pc.value - pf.value) <= 2.0 * math.hypot(pc.std_error, pf.std_error) + 1e-5


class TestVixExactMeanrev:
    def test_identity_mapping(self):
        samples = simulate_paths(table_model(0.0), McConfig(1000, 5, 0.1, 1))
        np.testing.assert_allclose(
            vix_exact_meanrev(samples, VixMapping(1.0, 0.0)),
            np.sqrt(samples.terminal_v), rtol=1e-14)

    def test_fixed_point(self):
        samples = simulate_paths(table_model(0.0), McConfig(1000, 5, 0.1, 1))
        object.__setattr__(samples, "terminal_v", np.full(1000, 0.04))
        out = vix_exact_meanrev(samples, VixMapping(alpha=0.9, beta=0.004))
        np.testing.assert_allclose(out, 0.2, rtol=1e-14)


class TestProxyErrorBounds:
    def test_zero_carry_kills_c1(self):
        c1, c2 = proxy_error_bounds(table_model(0.0), 30 / 365)
        assert c1 == 0.0
        assert c2 > 0.0

    def test_c1_positive_with_carry(self):
        c1, c2 = proxy_error_bounds(table_model(0.0, r=0.01), 30 / 365)
        assert c1 == pytest.approx(2 * 0.5 * 1.5 * 0.01 * math.exp(0.01 * 30 / 365) * 30 / 365, rel=1e-12)

    def test_c2_is_half_power(self):
        model = table_model(0.0)
        ratios = []
        for tau in (1e-4, 1e-6, 1e-8):
            _, c2 = proxy_error_bounds(model, tau)
            ratios.append(c2 / math.sqrt(tau))
        assert ratios[1] == pytest.approx(ratios[2], rel=1e-2)
        assert ratios[0] == pytest.approx(ratios[2], rel=0.05)

    def test_unbounded_specs_rejected(self):
        with pytest.raises(ValueError):
            proxy_error_bounds(table_model(0.0, local_vol=TaylorLocalVol(1.0, -0.2)), 0.1)
        with pytest.raises(ValueError):
            proxy_error_bounds(table_model(0.0, vol_of_vol=SquareRootVolOfVol(0.5)), 0.1)
        with pytest.raises(ValueError):
            proxy_error_bounds(
                table_model(0.0, vol_of_vol=LognormalVolOfVol(0.5, drift=MeanRevertingDrift(1.0, 0.1))), 0.1)

    def test_constant_drift_supported(self):
        model = table_model(0.0, vol_of_vol=LognormalVolOfVol(2.0, drift=ConstantDrift(0.3)))
        c1, c2 = proxy_error_bounds(model, 0.05)
        assert c2 > 0.0 and math.isfinite(c2)


class TestSmileFromMc:
    def test_empty_strikes(self):
        model = table_model(0.0)
        out = smile_from_mc(model, McConfig(1000, 5, 0.1, 1), [], "european")
        assert out == []

    def test_european_atm_level(self):
        model = table_model(0.0)
        config = McConfig(50_000, 100, 1 / 12, 123)
        out = smile_from_mc(model, config, [1.0], "european")
        assert len(out) == 1 and out[0].skip_reason is None
        assert out[0].implied_vol == pytest.approx(0.3162, abs=0.012)
        assert out[0].iv_low < out[0].implied_vol < out[0].iv_high

    def test_vix_atm_level(self):
        model = table_model(-0.7)
        config = McConfig(50_000, 100, 1 / 52, 123)
        out = smile_from_mc(model, config, [math.sqrt(0.1)], "vix")
        assert out[0].skip_reason is None
        assert out[0].implied_vol == pytest.approx(1.116, abs=0.05)

    def test_far_strike_skipped_with_reason(self):
        model = table_model(0.0)
        config = McConfig(20_000, 50, 1 / 12, 7)
        out = smile_from_mc(model, config, [5.0], "european")
        assert out[0].skip_reason is not None
        assert math.isnan(out[0].implied_vol)

    def test_quantile_grid(self):
        model = table_model(0.0)
        samples = simulate_paths(model, McConfig(20_000, 50, 1 / 12, 7))
        grid = default_strike_grid(samples, "european", count=11)
        assert grid.shape == (11,)
        assert np.all(np.diff(grid) > 0)
        lo, hi = np.quantile(samples.terminal_s, [0.01, 0.99])
        assert grid[0] == pytest.approx(lo, rel=1e-10)
        assert grid[-1] == pytest.approx(hi, rel=1e-10)

    def test_csv_output(self):
        model = table_model(0.0)
        config = McConfig(20_000, 50, 1 / 12, 7)
        rows = smile_from_mc(model, config, [0.95, 1.0, 1.05, 5.0], "european")
        text = smile_rows_to_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "strike,log_moneyness,price,std_error,implied_vol,iv_low,iv_high"
        assert len(lines) == 4  # header + 3 valid rows (5.0 skipped)

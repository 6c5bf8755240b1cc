import json
import math

import numpy as np
import pytest

from lsv_shortmat.model import (
    ConstantLocalVol,
    LognormalVolOfVol,
    LsvModel,
    MeanRevertingDrift,
    SquareRootVolOfVol,
    TanhLocalVol,
    TaylorLocalVol,
    ZeroDrift,
    check_moment_condition,
    eta_eval,
    eta_log_coeffs,
    eta_sq_inverse,
    eta_sq_range,
    load_model,
    model_from_dict,
    model_to_dict,
    vix_spot,
)

TANH = TanhLocalVol(f0=1.0, f1=-0.5, x0=0.0)


def table_model(rho=-0.7, **kw):
    base = dict(s0=1.0, v0=0.1, rho=rho, local_vol=TANH, vol_of_vol=LognormalVolOfVol(sigma=2.0))
    base.update(kw)
    return LsvModel(**base)


class TestEtaEval:
    def test_tanh_at_spot(self):
        assert eta_eval(TANH, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_constant(self):
        assert eta_eval(ConstantLocalVol(), 17.3, 1.0) == 1.0

    def test_tanh_one_log_unit(self):
        # 1 - 0.5 tanh(1)
        expected = 1.0 - 0.5 * math.tanh(1.0)
        assert expected == pytest.approx(0.6192029220221175, abs=1e-12)
        assert eta_eval(TANH, math.e, 1.0) == pytest.approx(expected, abs=1e-15)

    def test_taylor(self):
        spec = TaylorLocalVol(eta0=1.0, eta1=-0.5, eta2=0.1, eta3=0.02)
        k = 0.3
        expected = 1.0 - 0.5 * k + 0.1 * k * k + 0.02 * k**3
        assert eta_eval(spec, math.exp(k), 1.0) == pytest.approx(expected, abs=1e-14)

    def test_nonpositive_spot(self):
        with pytest.raises(ValueError):
            eta_eval(TANH, 0.0, 1.0)


class TestEtaLogCoeffs:
    def test_tanh_centered(self):
        eta0, eta1, eta2, eta3 = eta_log_coeffs(TANH, 3)
        assert eta0 == pytest.approx(1.0, abs=1e-15)
        assert eta1 == pytest.approx(-0.5, abs=1e-15)
        assert eta2 == pytest.approx(0.0, abs=1e-15)
        assert eta3 == pytest.approx(1.0 / 6.0, abs=1e-15)

    def test_constant(self):
        assert eta_log_coeffs(ConstantLocalVol(), 3) == [1.0, 0.0, 0.0, 0.0]

    def test_order_cap(self):
        assert len(eta_log_coeffs(TANH, 1)) == 2
        with pytest.raises(ValueError):
            eta_log_coeffs(TANH, 4)

    @pytest.mark.parametrize("spec", [
        TANH,
        TanhLocalVol(f0=1.0, f1=-0.5, x0=0.5),
        TanhLocalVol(f0=1.2, f1=0.3, x0=-0.7),
        TaylorLocalVol(eta0=0.8, eta1=0.2, eta2=-0.1, eta3=0.05),
    ])
    def test_matches_finite_differences(self, spec):
        # centered stencils for the first three derivatives of eta(e^k) at k=0
        h = 1e-3
        f = [eta_eval(spec, math.exp(i * h), 1.0) for i in range(-3, 4)]
        d1 = (f[4] - f[2]) / (2 * h)
        d2 = (f[4] - 2 * f[3] + f[2]) / h**2
        d3 = (f[5] - 2 * f[4] + 2 * f[2] - f[1]) / (2 * h**3)
        coeffs = eta_log_coeffs(spec, 3)
        assert coeffs[0] == pytest.approx(f[3], abs=1e-12)
        assert coeffs[1] == pytest.approx(d1, abs=1e-6)
        assert coeffs[2] == pytest.approx(d2 / 2.0, abs=1e-6)
        assert coeffs[3] == pytest.approx(d3 / 6.0, abs=1e-6)


class TestEtaSqInverse:
    def test_unit_target(self):
        assert eta_sq_inverse(TANH, 1.0, 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_constant_degenerate(self):
        assert eta_sq_inverse(ConstantLocalVol(), 1.0, 2.5) == 2.5
        with pytest.raises(ValueError):
            eta_sq_inverse(ConstantLocalVol(), 1.1, 2.5)

    def test_forward_then_invert(self):
        w = eta_eval(TANH, math.e, 1.0) ** 2
        assert eta_sq_inverse(TANH, w, 1.0) == pytest.approx(math.e, rel=1e-10)

    @pytest.mark.parametrize("spec", [TANH, TanhLocalVol(1.1, 0.4, 0.3)])
    def test_round_trip_grid(self, spec):
        s0 = 1.3
        for k in np.linspace(-3.0, 3.0, 41):
            s = s0 * math.exp(k)
            w = eta_eval(spec, s, s0) ** 2
            assert eta_sq_inverse(spec, w, s0) == pytest.approx(s, rel=1e-10)

    def test_out_of_range(self):
        lo, hi = eta_sq_range(TANH)
        with pytest.raises(ValueError):
            eta_sq_inverse(TANH, hi * 1.01, 1.0)
        with pytest.raises(ValueError):
            eta_sq_inverse(TANH, lo * 0.99, 1.0)

    def test_non_monotone_rejected(self):
        bumpy = TaylorLocalVol(eta0=1.0, eta1=0.0, eta2=0.5)
        with pytest.raises(ValueError):
            eta_sq_inverse(bumpy, 1.2, 1.0)

    def test_monotone_taylor(self):
        spec = TaylorLocalVol(eta0=1.0, eta1=-0.2)
        w = eta_eval(spec, 1.5, 1.0) ** 2
        assert eta_sq_inverse(spec, w, 1.0) == pytest.approx(1.5, rel=1e-10)


class TestVixSpot:
    def test_table_model(self):
        assert vix_spot(table_model()) == pytest.approx(math.sqrt(0.1), rel=1e-12)

    def test_constant_unit_variance(self):
        model = table_model(local_vol=ConstantLocalVol(), v0=1.0)
        assert vix_spot(model) == 1.0

    def test_shifted_center(self):
        model = table_model(local_vol=TanhLocalVol(1.0, -0.5, 0.5), v0=0.04)
        expected = (1.0 - 0.5 * math.tanh(-0.5)) * 0.2
        assert expected == pytest.approx(0.246211715726001, abs=1e-12)
        assert vix_spot(model) == pytest.approx(expected, abs=1e-15)

    def test_identity_with_eta_eval(self):
        model = table_model(v0=0.07)
        assert vix_spot(model) == eta_eval(model.local_vol, model.s0, model.s0) * math.sqrt(model.v0)


class TestMomentCondition:
    def test_examples(self):
        assert check_moment_condition(-0.9, 2.0) is True
        assert check_moment_condition(0.0, 2.0) is False
        # -sqrt(3)/2 = -0.8660; -0.87 is below it
        assert check_moment_condition(-0.87, 4.0) is True
        assert check_moment_condition(-0.86, 4.0) is False

    def test_invalid_exponent(self):
        with pytest.raises(ValueError):
            check_moment_condition(-0.5, 1.0)


class TestValidation:
    def test_tanh_positivity(self):
        with pytest.raises(ValueError):
            TanhLocalVol(f0=0.4, f1=-0.5)

    def test_model_bounds(self):
        with pytest.raises(ValueError):
            table_model(s0=-1.0)
        with pytest.raises(ValueError):
            table_model(v0=0.0)
        with pytest.raises(ValueError):
            table_model(rho=-1.2)

    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            LognormalVolOfVol(sigma=0.0)
        with pytest.raises(ValueError):
            MeanRevertingDrift(a=0.0, b=1.0)


class TestJsonConfig:
    def test_round_trip(self, tmp_path):
        model = LsvModel(
            s0=100.0, v0=0.04, rho=-0.6, r=0.03, q=0.01,
            local_vol=TanhLocalVol(1.0, -0.3, 0.2),
            vol_of_vol=SquareRootVolOfVol(sigma=0.5, drift=MeanRevertingDrift(a=2.0, b=0.04)),
        )
        d = model_to_dict(model)
        assert model_from_dict(d) == model
        path = tmp_path / "model.json"
        path.write_text(json.dumps(d))
        assert load_model(str(path)) == model

    def test_defaults(self):
        cfg = {
            "s0": 1.0, "v0": 0.1, "rho": 0.0,
            "local_vol": {"kind": "constant"},
            "vol_of_vol": {"kind": "lognormal", "sigma": 2.0},
        }
        model = model_from_dict(cfg)
        assert model.r == 0.0 and model.q == 0.0
        assert model.vol_of_vol.drift == ZeroDrift()

    def test_unknown_kind(self):
        cfg = {
            "s0": 1.0, "v0": 0.1, "rho": 0.0,
            "local_vol": {"kind": "cubic-spline"},
            "vol_of_vol": {"kind": "lognormal", "sigma": 2.0},
        }
        with pytest.raises(ValueError):
            model_from_dict(cfg)

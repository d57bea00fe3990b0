import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from ortho_esn.checks import capacity_oracle
from ortho_esn.errors import InsufficientDataError, InvalidSpecError
from ortho_esn.fitting import (SigmoidFit, capacity, fit_mi_sigmoid, fit_mse_sigmoid,
                               fit_polynomial, mi_weight, polyval)

DELTAS = np.arange(19, dtype=float)


def mse_curve(d, a, b):
    return 1.0 / (4.0 + np.exp(a * d + b))


def mi_curve(d, a, b):
    return 1.0 / (1.0 + np.exp(a * d + b))


class TestMseFit:
    def test_roundtrip(self):
        fit = fit_mse_sigmoid(np.column_stack([DELTAS, mse_curve(DELTAS, 0.5, -3.0)]))
        assert fit.a == pytest.approx(0.5, abs=1e-9)
        assert fit.b == pytest.approx(-3.0, abs=1e-9)
        assert (fit.points_used, fit.points_dropped) == (19, 0)
        assert fit.variant == "mse_form"

    def test_floor_point_dropped(self):
        pts = [(0, mse_curve(0, 0.5, -3)), (1, mse_curve(1, 0.5, -3)), (2, 0.25), (3, 0.0)]
        fit = fit_mse_sigmoid(pts)
        assert (fit.points_used, fit.points_dropped) == (2, 2)

    def test_two_points_interpolate(self):
        fit = fit_mse_sigmoid([(1, 0.05), (4, 0.2)])
        np.testing.assert_allclose(fit([1, 4]), [0.05, 0.2], rtol=1e-12)

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            fit_mse_sigmoid([(0, 0.1), (1, 0.25), (2, 0.3)])

    def test_same_delay_twice(self):
        with pytest.raises(InsufficientDataError):
            fit_mse_sigmoid([(2, 0.1), (2, 0.2)])

    @given(st.floats(-3, 3), st.floats(-10, 10))
    def test_model_range(self, a, b):
        fit = SigmoidFit(a, b, "mse_form", 2, 0)
        vals = fit(np.arange(0, 20))
        # strictly inside in exact arithmetic; 0.25 can be reached by rounding
        assert np.all((vals > 0) & (vals <= 0.25))
        assert np.all(np.diff(vals) * np.sign(a) <= 1e-18)


class TestMiFit:
    def test_roundtrip(self):
        fit = fit_mi_sigmoid(np.column_stack([DELTAS, mi_curve(DELTAS, 0.4, -2.0)]))
        assert fit.a == pytest.approx(0.4, abs=1e-9)
        assert fit.b == pytest.approx(-2.0, abs=1e-9)

    def test_weights(self):
        assert mi_weight(0.5) == 1.0
        assert mi_weight(0.8) == pytest.approx(math.exp(-0.5), rel=1e-15)
        assert mi_weight(0.8) == pytest.approx(0.6065306597, rel=1e-9)

    def test_all_saturated(self):
        with pytest.raises(InsufficientDataError):
            fit_mi_sigmoid([(0, 1.0), (1, 1.0 - 1e-7), (2, 1.0)])

    def test_weighting_irrelevant_without_noise(self):
        pts = np.column_stack([DELTAS, mi_curve(DELTAS, 0.25, -1.5)])
        w = fit_mi_sigmoid(pts)
        u = fit_mi_sigmoid(pts, weighted=False)
        assert abs(w.a - u.a) < 1e-9 and abs(w.b - u.b) < 1e-9

    def test_weighting_matters_with_noise(self):
        rng = np.random.default_rng(0)
        y = np.clip(mi_curve(DELTAS, 0.3, -2.0) + rng.normal(0, 0.02, DELTAS.size), 1e-4, 1 - 1e-4)
        w = fit_mi_sigmoid(np.column_stack([DELTAS, y]))
        u = fit_mi_sigmoid(np.column_stack([DELTAS, y]), weighted=False)
        assert abs(w.a - u.a) > 1e-6

    def test_weighted_fit_matches_explicit_lstsq(self):
        rng = np.random.default_rng(1)
        y = np.clip(mi_curve(DELTAS, 0.3, -2.0) + rng.normal(0, 0.03, DELTAS.size), 0.01, 0.99)
        f = np.exp(-(y - 0.5) ** 2 / 0.18)
        lhs = np.log(1 / y - 1) * f
        design = np.column_stack([DELTAS * f, f])
        (a, b), *_ = np.linalg.lstsq(design, lhs, rcond=None)
        fit = fit_mi_sigmoid(np.column_stack([DELTAS, y]))
        assert fit.a == pytest.approx(a, rel=1e-12) and fit.b == pytest.approx(b, rel=1e-12)

    @given(st.floats(0.01, 2.0), st.floats(-8.0, 3.0))
    def test_roundtrip_property(self, a, b):
        d = np.arange(8, dtype=float)
        y = mi_curve(d, a, b)
        assume(np.all((y > 1e-5) & (y < 1 - 1e-5)))
        fit = fit_mi_sigmoid(np.column_stack([d, y]))
        assert abs(fit.a - a) < 1e-9 and abs(fit.b - b) < 1e-9
        mfit = fit_mse_sigmoid(np.column_stack([d, mse_curve(d, a, b)]))
        assert abs(mfit.a - a) < 1e-9 and abs(mfit.b - b) < 1e-9

    def test_bad_points(self):
        with pytest.raises(InvalidSpecError):
            fit_mi_sigmoid([1, 2, 3])


class TestCapacity:
    def test_constant(self):
        assert capacity(SigmoidFit(0.0, 0.0, "mi_form", 2, 0), 3000).i_hat == 1500.5

    def test_step(self):
        assert capacity(SigmoidFit(100.0, 0.0, "mi_form", 2, 0), 3000).i_hat == pytest.approx(
            0.5, abs=1e-40)

    @pytest.mark.parametrize("a,b", [(0.1, -2.0), (0.02, -1.0), (1.5, -8.0), (-0.001, 0.0)])
    def test_high_precision_oracle(self, a, b):
        assert abs(capacity(SigmoidFit(a, b, "mi_form", 2, 0), 3000).i_hat
                   - capacity_oracle(a, b, 3000)) <= 1e-12

    def test_oracle_closed_form(self):
        # a = 0: every summand is 1/(1+e^b)
        with mpmath.workdps(40):
            want = float(3001 / (1 + mpmath.exp(mpmath.mpf("-1.5"))))
        assert capacity_oracle(0.0, -1.5, 3000) == pytest.approx(want, rel=1e-15)

    def test_inclusive_bounds(self):
        assert capacity(SigmoidFit(0.0, 0.0, "mi_form", 2, 0), 0).i_hat == 0.5

    def test_needs_mi_form(self):
        with pytest.raises(InvalidSpecError):
            capacity(SigmoidFit(0.1, 0.0, "mse_form", 2, 0))

    @given(st.floats(-1, 2), st.floats(-10, 10), st.floats(0, 0.5), st.floats(0, 3))
    def test_monotone(self, a, b, da, db):
        base = capacity(SigmoidFit(a, b, "mi_form", 2, 0), 300).i_hat
        assert capacity(SigmoidFit(a + da, b, "mi_form", 2, 0), 300).i_hat <= base + 1e-9
        assert capacity(SigmoidFit(a, b + db, "mi_form", 2, 0), 300).i_hat <= base + 1e-9

    @given(st.floats(-1, 2), st.floats(-10, 10))
    def test_bounds(self, a, b):
        cap = capacity(SigmoidFit(a, b, "mi_form", 2, 0), 3000)
        assert 0 <= cap.i_hat <= 3001


class TestPolynomial:
    BETAS = np.array([0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0])

    def test_pure_quartic(self):
        coef = fit_polynomial(np.column_stack([self.BETAS, self.BETAS ** 4]), 4)
        np.testing.assert_allclose(coef, [0, 0, 0, 0, 1], atol=1e-8)

    def test_five_points_interpolate(self):
        x = np.array([0.1, 0.3, 0.5, 0.9, 1.4])
        y = np.array([3.0, -1.0, 2.0, 5.0, 0.5])
        coef = fit_polynomial(np.column_stack([x, y]), 4)
        np.testing.assert_allclose(polyval(coef, x), y, atol=1e-9)

    def test_noisy_quartic_monte_carlo(self):
        true = np.array([2.0, 30.0, -50.0, 20.0, 5.0])
        x = np.linspace(0.0, 1.5, 12)
        V = np.vander(x, 5, increasing=True)
        noise = 0.5
        sd = noise * np.sqrt(np.diag(np.linalg.inv(V.T @ V)))
        fits = []
        for seed in range(400):
            y = V @ true + np.random.default_rng(seed).normal(0, noise, x.size)
            fits.append(fit_polynomial(np.column_stack([x, y]), 4))
        fits = np.array(fits)
        z = np.abs(fits - true) / sd
        assert np.mean(np.all(z <= 3, axis=1)) >= 0.95
        assert np.all(np.abs(fits.mean(axis=0) - true) <= 3 * sd / np.sqrt(len(fits)))
        np.testing.assert_allclose(fits.std(axis=0), sd, rtol=0.15)

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            fit_polynomial([(0.1, 1), (0.2, 2), (0.3, 3), (0.4, 4)], 4)

    def test_rank_deficient(self):
        with pytest.raises(InsufficientDataError):
            fit_polynomial([(0.1, 1), (0.1, 2), (0.2, 3), (0.2, 4), (0.3, 5)], 4)

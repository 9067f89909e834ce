"""Quadrature layer against closed forms.

Every rule here has an analytic oracle: Gaussian Fourier transforms,
principal values via the Dawson function, Laplace transforms of simple
exponentials.  Tolerances sit well above observed errors but far below
anything a broken rule could reach.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import dawsn

from hartree_mix.quadrature import (
    EvaluationBudgetExceeded,
    PVIntegrand,
    PoleOnBoundary,
    adaptive_gauss,
    default_pv_window,
    filon_transform,
    filon_weights,
    halfline_laplace_fourier,
    inverse_fourier_line,
    pv_integral,
)


class TestFilonTransform:
    def test_gaussian_closed_form(self):
        # int exp(-x^2) exp(-i w x) dx = sqrt(pi) exp(-w^2/4)
        n = 2049
        x0, x1 = -8.0, 8.0
        h = (x1 - x0) / (n - 1)
        f = np.exp(-(x0 + h * np.arange(n)) ** 2)
        for om in (0.0, 1.0, 5.3, 11.0):
            got = filon_transform(f, x0, h, om)
            want = np.sqrt(np.pi) * np.exp(-om * om / 4.0)
            assert abs(got - want) < 1e-10

    def test_decayed_frequencies_stay_quiet(self):
        # past the band limit the true value is ~0; the rule must not ring
        n = 2049
        h = 16.0 / (n - 1)
        f = np.exp(-(-8.0 + h * np.arange(n)) ** 2)
        got = filon_transform(f, -8.0, h, np.array([40.0, 200.0]))
        assert np.max(np.abs(got)) < 1e-6

    def test_exact_on_quadratics(self):
        # the rule integrates its own interpolant; a quadratic is reproduced
        # at any frequency, even with only five samples
        x0, h, n = -1.0, 1.0, 5

        def f(x):
            return 2.0 * x * x - 3.0 * x + 0.5

        fv = f(x0 + h * np.arange(n))
        om = 7.3
        re = quad(lambda x: f(x) * np.cos(om * x), -1.0, 3.0, limit=200)[0]
        im = quad(lambda x: -f(x) * np.sin(om * x), -1.0, 3.0, limit=200)[0]
        got = filon_transform(fv, x0, h, om)
        assert abs(got - (re + 1j * im)) < 5e-12

    def test_weights_reproduce_transform(self):
        rng = np.random.default_rng(7)
        n = 33
        fv = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        oms = np.array([0.0, 2.2, -17.5])
        w = filon_weights(n, 0.5, 0.1, oms)
        direct = filon_transform(fv, 0.5, 0.1, oms)
        assert np.max(np.abs(w @ fv - direct)) < 1e-13

    def test_rejects_even_sample_counts(self):
        with pytest.raises(ValueError):
            filon_transform(np.ones(4), 0.0, 0.1, 1.0)
        with pytest.raises(ValueError):
            filon_weights(4, 0.0, 0.1, 1.0)


class TestPrincipalValue:
    def test_dawson_oracle(self):
        # PV int exp(-u^2)/(1-u) du = 2 sqrt(pi) dawsn(1)
        p = PVIntegrand(numerator=lambda u: np.exp(-u * u), pole=1.0,
                        window=default_pv_window(1.0, (-8.0, 8.0)))
        r = pv_integral(p, (-8.0, 8.0), tol_abs=1e-12)
        want = 2.0 * np.sqrt(np.pi) * dawsn(1.0)
        assert abs(r.value - want) < 1e-9

    def test_odd_integrand_cancels(self):
        p = PVIntegrand(numerator=lambda u: np.exp(-u * u), pole=0.0,
                        window=default_pv_window(0.0, (-6.0, 6.0)))
        r = pv_integral(p, (-6.0, 6.0), tol_abs=1e-12)
        assert abs(r.value) < 1e-10

    def test_pole_outside_support_is_regular(self):
        p = PVIntegrand(numerator=lambda u: np.exp(-u * u), pole=10.0,
                        window=0.5)
        r = pv_integral(p, (-6.0, 6.0), tol_abs=1e-12)
        want = quad(lambda u: np.exp(-u * u) / (10.0 - u), -6.0, 6.0)[0]
        assert abs(r.value - want) < 1e-9

    def test_pole_on_boundary_raises(self):
        p = PVIntegrand(numerator=lambda u: np.exp(-u * u), pole=6.0,
                        window=0.5)
        with pytest.raises(PoleOnBoundary):
            pv_integral(p, (-6.0, 6.0))


class TestAdaptiveGauss:
    def test_sine_area(self):
        r = adaptive_gauss(np.sin, 0.0, np.pi, tol_abs=1e-12)
        assert abs(r.value - 2.0) < 1e-11
        assert r.evaluations > 0
        assert r.abs_error_estimate >= 0.0

    def test_budget_cap(self):
        with pytest.raises(EvaluationBudgetExceeded):
            adaptive_gauss(lambda x: np.sin(1e4 * x), 0.0, 1.0,
                           tol_abs=1e-14, eval_cap=200)


class TestHalfline:
    def test_exponential_laplace(self):
        lam = 0.3 + 2.7j
        r = halfline_laplace_fourier(lambda t: np.exp(-t), lam, 40.0,
                                     tol_abs=1e-11)
        assert abs(r.value - 1.0 / (1.0 + lam)) < 1e-8

    def test_left_half_plane_rejected(self):
        with pytest.raises(ValueError):
            halfline_laplace_fourier(lambda t: np.exp(-t), -0.1 + 1j, 10.0)


class TestLineSynthesis:
    def test_gaussian_pair(self):
        # (1/2pi) int exp(i tau t) exp(-tau^2/4) dtau = exp(-t^2)/sqrt(pi)
        r = inverse_fourier_line(lambda tau: np.exp(-np.asarray(tau) ** 2 / 4),
                                 1.1, 60.0, tol_abs=1e-11)
        assert abs(r.value - np.exp(-1.1 ** 2) / np.sqrt(np.pi)) < 1e-9

    def test_lorentzian_with_tail_bound(self):
        # truncation at tau_max leaves an O(1/tau_max) tail; the analytic
        # bound must show up in the error estimate
        r = inverse_fourier_line(lambda tau: 1.0 / (1.0 + np.asarray(tau) ** 2),
                                 1.3, 300.0, tol_abs=1e-9,
                                 tail_amp=1.0, tail_scale=1.0)
        assert abs(r.value - np.exp(-1.3) / 2.0) < 2e-3
        assert r.abs_error_estimate > 0.0

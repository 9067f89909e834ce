"""Dispersion function routes and their agreement.

The same value is reachable through the Hilbert-transform form, the
time-integral form, and (on the boundary) the jump formula, so the
tests mostly play the routes against each other; a few structural
checks pin the branch logic and the sample bookkeeping.
"""

from __future__ import annotations

import numpy as np
import pytest

from hartree_mix.dispersion import (
    DispersionSample,
    HilbertTransformCache,
    dispersion_hilbert,
    dispersion_k_zero,
    dispersion_plemelj,
    dispersion_real_branch,
    dispersion_time_integral,
    evaluate,
)
from hartree_mix.profiles import delta_potential


def _richardson_boundary(m, w, tau_tilde, k, g0=1.6e-2, rungs=5):
    """gamma -> 0 limit of the Hilbert form along a halving ladder."""
    gs = [g0 / 2 ** j for j in range(rungs)]
    vals = [dispersion_hilbert(m, w, g + 1j * k * tau_tilde, k).value
            for g in gs]
    for j in range(1, rungs):
        vals = [(2 ** j * vals[i + 1] - vals[i]) / (2 ** j - 1)
                for i in range(len(vals) - 1)]
    return vals[0]


class TestRouteAgreement:
    def test_hilbert_vs_time_integral(self, gauss3, coulomb):
        rng = np.random.default_rng(11)
        for _ in range(12):
            k = float(rng.uniform(0.05, 3.0))
            lam = complex(rng.uniform(0.02, 2.0), rng.uniform(-4.0, 4.0))
            a = dispersion_hilbert(gauss3, coulomb, lam, k)
            b = dispersion_time_integral(gauss3, coulomb, lam, k)
            assert abs(a.value - b.value) < 1e-8

    def test_boundary_limit_matches_jump_formula(self, gauss3, coulomb):
        for k, tt in ((0.7, 0.9), (1.3, -1.7)):
            pl = dispersion_plemelj(gauss3, coulomb, tt, k).value
            ladder = _richardson_boundary(gauss3, coulomb, tt, k)
            assert abs(ladder - pl) < 1e-9

    def test_rescaled_limit_continues_small_k(self, gauss3, coulomb):
        lam_tilde = 0.4 + 0.7j
        v0 = dispersion_k_zero(gauss3, coulomb, lam_tilde).value
        vk = dispersion_hilbert(gauss3, coulomb, 1e-3 * lam_tilde, 1e-3).value
        assert abs(v0 - vk) < 1e-4


class TestRealBranch:
    def test_needs_compact_support(self, gauss3, coulomb):
        with pytest.raises(ValueError):
            dispersion_real_branch(gauss3, coulomb, 12.0, 0.5)

    def test_real_and_even(self, fermi5):
        w = delta_potential(0.1)
        k = 0.4
        tt = 2.0 * fermi5.upsilon + k + 0.8
        vp = dispersion_real_branch(fermi5, w, tt, k).value
        vm = dispersion_real_branch(fermi5, w, -tt, k).value
        assert vp.imag == 0.0
        assert vp == vm

    def test_unit_limit_far_out(self, fermi5):
        # far beyond the support the symbol tends to 1
        w = delta_potential(0.1)
        far = dispersion_real_branch(fermi5, w, 60.0, 0.4).value
        assert abs(far - 1.0) < 1e-2


class TestStaticBound:
    def test_zero_frequency_at_least_one(self, gauss3, coulomb):
        rng = np.random.default_rng(3)
        for _ in range(8):
            k = float(rng.uniform(0.05, 2.5))
            v = evaluate(gauss3, coulomb, 0.0 + 0.0j, k, tol_abs=1e-10).value
            assert v.imag == 0.0
            assert v.real >= 1.0


class TestDispatch:
    def test_routes_by_location(self, gauss3, fermi5, coulomb):
        w5 = delta_potential(0.1)
        assert evaluate(gauss3, coulomb, 0.5 + 1j, 0.7).route == "hilbert_form"
        assert evaluate(gauss3, coulomb, 1.2j, 0.7).route == "plemelj_boundary"
        far = 1j * 0.7 * (2.0 * fermi5.upsilon + 0.7 + 1.0)
        sample = evaluate(fermi5, w5, far, 0.7)
        assert sample.route == "plemelj_boundary"
        assert sample.value.imag == 0.0  # landed on the real branch
        assert evaluate(gauss3, coulomb, 0.4 + 0.7j, 0.0).route == "k_zero_limit"

    def test_sample_validation(self):
        with pytest.raises(ValueError):
            DispersionSample(lam=0.1 + 1j, k_mag=0.5, value=1.0 + 0j,
                             route="plemelj_boundary", error_estimate=0.0)
        with pytest.raises(ValueError):
            DispersionSample(lam=1j, k_mag=0.5, value=1.0 + 0j,
                             route="k_zero_limit", error_estimate=0.0)
        with pytest.raises(ValueError):
            DispersionSample(lam=1j, k_mag=0.5, value=1.0 + 0j,
                             route="no_such_route", error_estimate=0.0)


class TestCache:
    def test_snapping_is_deterministic_and_close(self, gauss3, coulomb):
        cache = HilbertTransformCache(gauss3)
        lam, k = 0.4 + 0.9j, 0.8
        direct = dispersion_hilbert(gauss3, coulomb, lam, k).value
        c1 = dispersion_hilbert(gauss3, coulomb, lam, k, cache=cache).value
        c2 = dispersion_hilbert(gauss3, coulomb, lam + 1e-6j, k, cache=cache).value
        # snapped arguments collapse to the same table entry
        assert c1 == c2
        # the snap step bounds the cache error; it is a scan tool, not a
        # high-precision route
        assert abs(c1 - direct) < 1e-3

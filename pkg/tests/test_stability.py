"""Stability certification chain.

The zero-temperature family in d = 5 with a delta coupling has a
closed-form criterion value 1 - 2 pi^2 g / 3, which makes it the exact
oracle for the criterion integral and the verdict flip.  The Gaussian
case pins the stable path, the d = 3 zero-temperature case the
divergence flag.
"""

from __future__ import annotations

import numpy as np
import pytest

from hartree_mix.profiles import delta_potential
from hartree_mix.stability import (
    ContourTooCoarse,
    ScanSettings,
    certify,
    criterion_integral,
    find_imaginary_zero,
    imaginary_axis_floor,
    phi_curve,
    winding_number,
)

# Phi(k) for the d = 5 zero-temperature profile at coupling 0.2
PHI_D5_G02 = {
    0.02: -0.1897,
    0.05: -0.081389,
    0.075: -0.014468,
    0.1: 0.040659,
    0.3: 0.302152,
    1.0: 0.615502,
}


class TestCriterionIntegral:
    def test_d5_closed_form(self, fermi5):
        for g in (0.05, 0.1, 0.2):
            r = criterion_integral(fermi5, delta_potential(g))
            assert r.kind == "finite"
            assert abs(r.value - (1.0 - 2.0 * np.pi ** 2 * g / 3.0)) < 1e-7

    def test_d3_divergence_flag(self, fermi3):
        r = criterion_integral(fermi3, delta_potential(0.1))
        assert r.kind == "divergent"
        assert r.value is None

    def test_unbounded_support_is_vacuous(self, gauss3, coulomb):
        r = criterion_integral(gauss3, coulomb)
        assert r.kind == "vacuous"


class TestPhiCurve:
    def test_frozen_values(self, fermi5):
        w = delta_potential(0.2)
        curve = phi_curve(fermi5, w, sorted(PHI_D5_G02))
        for (k, got) in curve.samples:
            assert abs(got - PHI_D5_G02[round(float(k), 4)]) < 1e-4

    def test_needs_compact_support(self, gauss3, coulomb):
        with pytest.raises(ValueError):
            phi_curve(gauss3, coulomb, [0.1, 0.2])


class TestWinding:
    def test_stable_rectangle_is_empty(self, gauss3, coulomb):
        wc = winding_number(gauss3, coulomb, 0.5, (0.05, 1.5, -2.0, 2.0))
        assert wc.winding == 0
        assert wc.min_abs_on_contour > 0.0
        assert abs(wc.residual) < 0.05

    def test_contour_budget(self, gauss3, coulomb):
        with pytest.raises(ContourTooCoarse):
            winding_number(gauss3, coulomb, 0.5, (0.05, 1.5, -2.0, 2.0),
                           max_nodes=8)

    def test_rejects_left_half_plane(self, gauss3, coulomb):
        with pytest.raises(ValueError):
            winding_number(gauss3, coulomb, 0.5, (-0.1, 1.0, -1.0, 1.0))


class TestZeroHunt:
    def test_unstable_coupling_zero_location(self, fermi5):
        w = delta_potential(0.2)
        tt = find_imaginary_zero(fermi5, w, 0.02)
        assert tt is not None
        assert abs(tt - 2.072680026580439) < 1e-6

    def test_stable_coupling_finds_none(self, fermi5):
        w = delta_potential(0.1)
        assert find_imaginary_zero(fermi5, w, 0.02) is None

    def test_axis_floor_positive_when_stable(self, fermi5):
        w = delta_potential(0.1)
        floor = imaginary_axis_floor(fermi5, w, 0.05,
                                     np.linspace(0.1, 4.0, 40))
        assert floor.min_abs > 0.0
        assert floor.abs_values.shape == (40,)


class TestCertify:
    def test_gaussian_coulomb_stable(self, gauss3, coulomb):
        cert = certify(gauss3, coulomb)
        assert cert.verdict == "Stable"
        assert cert.theta0 is not None and 0.15 < cert.theta0 < 0.25
        assert all(wc.winding == 0 for wc in cert.winding_checks)

    def test_d3_zero_temperature_divergence(self, fermi3):
        cert = certify(fermi3, delta_potential(0.1))
        assert cert.verdict == "CriterionDiverges"
        assert cert.notes

    @pytest.mark.slow
    def test_d5_coupling_flip(self, fermi5):
        stable = certify(fermi5, delta_potential(0.1))
        unstable = certify(fermi5, delta_potential(0.2))
        assert stable.verdict == "Stable"
        assert unstable.verdict == "Unstable"
        assert unstable.zero_residual is not None
        assert unstable.zero_residual < 1e-8

    def test_scan_settings_roundtrip(self):
        s = ScanSettings(n_k=8, zero_tol=1e-6)
        assert s.n_k == 8 and s.zero_tol == 1e-6

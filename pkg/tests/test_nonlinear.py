"""Self-consistent evolution on the coarse box grid.

The d = 1 default grid runs in about a second, so the structural facts
(contraction, symmetry, conservation at zero coupling, closeness to the
linear solution at small data) are all exercised directly.  The d = 3
grid is memory-hungry and lives behind the slow marker.
"""

from __future__ import annotations

import numpy as np
import pytest

from hartree_mix.dynamics import (
    free_density_trajectory,
    gaussian_pure_kernel,
    volterra_solve,
)
from hartree_mix.nonlinear import (
    KernelState,
    density_from_state,
    hermitian_defect,
    hs_norm,
    initial_state,
    scattering_diagnostic,
    solve_selfconsistent,
)
from hartree_mix.profiles import (
    build_marginal,
    custom_potential,
    gaussian_profile,
    screened_coulomb,
)

EPS = 1e-2


def _kernel(eps: float = EPS, d: int = 1):
    # gamma0_hat = eps exp(-2(|k|^2 + |p|^2))
    return gaussian_pure_kernel(d, 0.125, hat_amplitude=eps)


@pytest.fixture(scope="module")
def solved():
    state, rho, tracker, report = solve_selfconsistent(
        _kernel(), gaussian_profile(1), screened_coulomb(0.5, 1.0))
    return state, rho, tracker, report


class TestInitialState:
    def test_box_geometry(self):
        st = initial_state(_kernel(), 4.0, 33, 0.1, 30.0)
        assert isinstance(st, KernelState)
        assert st.axis.size == 33
        assert st.axis[0] == pytest.approx(-4.0)
        assert st.axis[-1] == pytest.approx(4.0)
        assert st.t_grid[-1] == pytest.approx(30.0)

    def test_initial_hs_norm_closed_form(self):
        st = initial_state(_kernel(), 4.0, 33, 0.1, 30.0)
        # ||gamma0_hat||_HS on the box equals eps sqrt(pi)/2 up to the
        # Gaussian tail beyond |k| = 4
        assert hs_norm(st, 0) == pytest.approx(EPS * np.sqrt(np.pi) / 2.0,
                                               rel=1e-6)

    def test_initial_density_matches_closed_form(self):
        st = initial_state(_kernel(), 4.0, 33, 0.1, 30.0)
        got = density_from_state(st, 0.0)
        want = EPS * np.sqrt(np.pi) / 2.0 * np.exp(-st.axis ** 2)
        assert np.max(np.abs(got - want)) < 1e-5

    def test_initial_state_is_hermitian(self):
        st = initial_state(_kernel(), 4.0, 33, 0.1, 30.0)
        assert hermitian_defect(st) < 1e-14


class TestSolve:
    def test_converges_with_contraction(self, solved):
        _, _, _, report = solved
        assert report.iterations <= 15
        assert report.distances[-1] < 1e-10
        assert max(report.contraction_factors) < 0.5

    def test_keeps_hermitian_symmetry(self, solved):
        state, _, _, _ = solved
        assert hermitian_defect(state) <= 1e-10

    def test_small_data_tracks_linear_solution(self, solved):
        state, rho, _, _ = solved
        free = free_density_trajectory(_kernel(), np.abs(state.axis),
                                       state.t_grid)
        lin = volterra_solve(build_marginal(gaussian_profile(1)),
                             screened_coulomb(0.5, 1.0), free)
        assert np.max(np.abs(rho.rho_hat - lin.rho_hat)) < 10.0 * EPS ** 2

    def test_scattering_distances_decrease(self, solved):
        state, _, _, _ = solved
        rows = scattering_diagnostic(state)
        vals = [r[1] for r in rows]
        assert vals[-1] == 0.0
        assert all(a >= b - 1e-14 for a, b in zip(vals, vals[1:]))

    def test_norm_tracker_levels(self, solved):
        _, _, tracker, _ = solved
        assert tracker.y_norm > 0.0
        assert tracker.z_norm > 0.0
        assert np.all(np.isfinite(tracker.x_norms))
        assert tracker.x_norms.shape[0] == tracker.t_grid.size


class TestDegenerateCouplings:
    def test_zero_potential_conserves_hs_exactly(self):
        w0 = custom_potential(
            lambda k: np.zeros_like(np.asarray(k, dtype=float)), 0.0)
        state, _, _, report = solve_selfconsistent(
            _kernel(), gaussian_profile(1), w0)
        norms = hs_norm(state)
        assert float(np.max(norms) - np.min(norms)) == 0.0
        assert report.iterations <= 2

    def test_zero_data_converges_immediately(self):
        state, rho, _, report = solve_selfconsistent(
            _kernel(0.0), gaussian_profile(1), screened_coulomb(0.5, 1.0))
        assert report.iterations == 1
        assert np.max(np.abs(rho.rho_hat)) == 0.0
        assert np.max(np.abs(state.mu_hat)) == 0.0


class TestAmplitudeScaling:
    def test_halved_data_halves_displacement(self):
        # the t = 0 scattering distance is the full nonlinear displacement
        # and scales linearly in the data at small amplitude
        d0 = {}
        for eps in (EPS, EPS / 2.0):
            state, _, _, _ = solve_selfconsistent(
                _kernel(eps), gaussian_profile(1), screened_coulomb(0.5, 1.0))
            d0[eps] = scattering_diagnostic(state)[0][1]
        ratio = d0[EPS / 2.0] / d0[EPS]
        assert 0.3 < ratio < 0.7


@pytest.mark.slow
class TestThreeDimensional:
    def test_symmetry_and_contraction_on_coarse_box(self):
        state, _, _, report = solve_selfconsistent(
            _kernel(d=3), gaussian_profile(3), screened_coulomb(0.5, 1.0),
            n_pts=9, t_max=3.0, tol=1e-9)
        assert hermitian_defect(state) <= 1e-10
        assert max(report.contraction_factors) < 0.9

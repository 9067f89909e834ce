"""Shared fixtures: the handful of equilibria every module exercises."""

from __future__ import annotations

import pytest

from hartree_mix.profiles import (
    build_marginal,
    fermi_zero_t_profile,
    gaussian_profile,
    screened_coulomb,
)


@pytest.fixture(scope="session")
def gauss1():
    return build_marginal(gaussian_profile(1))


@pytest.fixture(scope="session")
def gauss3():
    return build_marginal(gaussian_profile(3))


@pytest.fixture(scope="session")
def fermi3():
    return build_marginal(fermi_zero_t_profile(3))


@pytest.fixture(scope="session")
def fermi5():
    return build_marginal(fermi_zero_t_profile(5))


@pytest.fixture(scope="session")
def coulomb():
    return screened_coulomb(1.0, 1.0)

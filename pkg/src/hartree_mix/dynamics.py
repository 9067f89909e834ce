"""Free Hartree density, linearized Volterra evolution, and reconstruction.

The free density of an initial kernel gamma0_hat is the oscillatory integral

    rho0_hat(t, k) = 2^{-d} int exp(-i t k.v) gamma0_hat((k+v)/2, (k-v)/2) dv,

reduced here to cylindrical coordinates around k: the perpendicular
directions are integrated by Gauss-Legendre (the kernel enters only through
|a|^2, |b|^2, a.b for rotation-invariant data), and the remaining axis
integral is pushed through the Filon rule with omega = t|k|, so one pass
serves every requested time.

The linearized evolution is the second-kind Volterra equation

    rho_hat_k(t) + int_0^t K_k(t-s) rho_hat_k(s) ds = S_k(t),
    K_k(t) = 2 w_hat(k) sin(t k^2) phi_hat(2tk),

marched by the trapezoid rule (explicit once K(0) = 0).  Physical-space
sup norms of derivatives are majorized by radial Fourier mass integrals,
which is the quantity the decay fits run on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .profiles import Marginal, Potential, TruncationWarning, sphere_area
from .quadrature import filon_transform

__all__ = [
    "InitialKernel",
    "DensityTrajectory",
    "NonRadialInput",
    "StepTooLarge",
    "gaussian_pure_kernel",
    "separable_sum_kernel",
    "grid_custom_kernel",
    "hermitian_defect",
    "weighted_initial_norm",
    "free_density",
    "free_density_trajectory",
    "volterra_kernel",
    "volterra_march",
    "volterra_solve",
    "reconstruct_sup_norm",
    "origin_value",
]


class NonRadialInput(Exception):
    """Radial-only reduction was asked to process a cartesian trajectory."""


class StepTooLarge(UserWarning):
    """Trapezoid correction factor is far from 1; the time step is suspect."""


@dataclass(frozen=True)
class InitialKernel:
    """Initial data gamma0_hat(k, p) for the density-matrix evolution.

    ``gamma0_hat`` maps point arrays of shape (n, d) x (n, d) to complex
    values.  ``quadratic_form``, when present, evaluates the same kernel
    from the rotation invariants (|k|^2, |p|^2, k.p) and unlocks the
    cylindrical free-density reduction in d >= 2.  ``energy_radius`` is an
    R with gamma0_hat negligible once |k|^2 + |p|^2 > R^2; it controls all
    box truncations.  ``epsilon_norm`` is the weighted initial-size
    surrogate of the kernel on its truncation box (sup of the
    <(k,p)>^{N2}-weighted modulus and its first grid differences).
    """

    kind: str
    d: int
    gamma0_hat: Callable[[np.ndarray, np.ndarray], np.ndarray]
    quadratic_form: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] | None
    energy_radius: float
    epsilon_norm: float | None = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DensityTrajectory:
    """Fourier density rho_hat on a (k, t) product grid.

    ``kind`` is "radial" (k_grid holds radii, data radial in k) or
    "cartesian" (k_grid holds signed coordinates along a fixed axis).
    ``meta`` carries at least the dimension d and the decay weights
    N1, N2 used by the norm diagnostics.
    """

    k_grid: np.ndarray
    t_grid: np.ndarray
    rho_hat: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("radial", "cartesian"):
            raise ValueError("kind must be 'radial' or 'cartesian'")
        if self.rho_hat.shape != (len(self.k_grid), len(self.t_grid)):
            raise ValueError("rho_hat must have shape (n_k, n_t)")

    @property
    def dt(self) -> float:
        steps = np.diff(self.t_grid)
        if steps.size and (np.max(steps) - np.min(steps)) > 1e-9 * np.max(steps):
            raise ValueError("t_grid is not uniform")
        return float(steps[0]) if steps.size else 0.0


# ---------------------------------------------------------------------------
# initial kernels


def _probe_energy_radius(q, floor=1e-20):
    ref = abs(complex(np.asarray(q(np.array([0.0]), np.array([0.0]),
                                   np.array([0.0]))).ravel()[0])) + 1e-300
    r = 1.0
    for _ in range(60):
        e = r * r / 2.0
        val = abs(complex(np.asarray(q(np.array([e]), np.array([e]),
                                       np.array([0.0]))).ravel()[0]))
        if val < floor * ref:
            return r
        r *= 1.5
    return r


def gaussian_pure_kernel(d: int, alpha: float = 1.0, amplitude: float | None = None,
                         hat_amplitude: float | None = None) -> InitialKernel:
    """Pure Gaussian state gamma0(x, y) = A exp(-alpha(|x|^2 + |y|^2)).

    Its kernel transform is gamma0_hat(k, p) = A (pi/alpha)^d
    exp(-(|k|^2+|p|^2)/(4 alpha)).  Pass either the position-space
    ``amplitude`` A or the Fourier-side prefactor ``hat_amplitude``
    (exactly one; both default to amplitude = 1).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if amplitude is not None and hat_amplitude is not None:
        raise ValueError("give amplitude or hat_amplitude, not both")
    if hat_amplitude is not None:
        pref = float(hat_amplitude)
        amplitude = pref * (alpha / np.pi) ** d
    else:
        amplitude = 1.0 if amplitude is None else float(amplitude)
        pref = amplitude * (np.pi / alpha) ** d
    rate = 1.0 / (4.0 * alpha)

    def gamma0_hat(K, P):
        K = np.asarray(K, dtype=float)
        P = np.asarray(P, dtype=float)
        return pref * np.exp(-rate * ((K * K).sum(axis=-1) + (P * P).sum(axis=-1))) \
            + 0.0j

    def quadratic_form(a2, b2, ab):
        return pref * np.exp(-rate * (np.asarray(a2) + np.asarray(b2))) + 0.0j

    radius = float(np.sqrt(np.log(1e20) / rate))
    return InitialKernel(
        kind="gaussian_pure", d=d, gamma0_hat=gamma0_hat,
        quadratic_form=quadratic_form, energy_radius=radius,
        params={"alpha": alpha, "amplitude": amplitude, "hat_prefactor": pref})


def separable_sum_kernel(d: int, terms, symmetrize: bool = True) -> InitialKernel:
    """Sum of radial products: gamma0_hat = sum_j c_j g_j(|k|^2) h_j(|p|^2).

    ``terms`` is a list of (c, g, h) with vectorized radial factors.  With
    ``symmetrize`` the transposed conjugate term is added, which enforces
    the Hermitian symmetry gamma0_hat(k, p) = conj gamma0_hat(-p, -k)
    regardless of the factors.
    """
    terms = [(complex(c), g, h) for c, g, h in terms]

    def quadratic_form(a2, b2, ab):
        a2 = np.asarray(a2, dtype=float)
        b2 = np.asarray(b2, dtype=float)
        acc = np.zeros(np.broadcast(a2, b2).shape, dtype=complex)
        for c, g, h in terms:
            acc += c * np.asarray(g(a2)) * np.asarray(h(b2))
            if symmetrize:
                acc += np.conj(c) * np.conj(np.asarray(g(b2)) * np.asarray(h(a2)))
        return acc

    def gamma0_hat(K, P):
        K = np.asarray(K, dtype=float)
        P = np.asarray(P, dtype=float)
        return quadratic_form((K * K).sum(axis=-1), (P * P).sum(axis=-1),
                              (K * P).sum(axis=-1))

    radius = _probe_energy_radius(quadratic_form)
    return InitialKernel(
        kind="separable_sum", d=d, gamma0_hat=gamma0_hat,
        quadratic_form=quadratic_form, energy_radius=radius,
        params={"n_terms": len(terms), "symmetrized": symmetrize})


def grid_custom_kernel(axis: np.ndarray, values: np.ndarray) -> InitialKernel:
    """One-dimensional kernel given by samples on a (k, p) product grid.

    Bilinear interpolation inside the box, zero outside.  Only d = 1 is
    supported; higher-dimensional custom data should come in through
    ``separable_sum_kernel`` or an analytic ``quadratic_form``.
    """
    axis = np.asarray(axis, dtype=float)
    values = np.asarray(values, dtype=complex)
    if values.shape != (axis.size, axis.size):
        raise ValueError("values must be square over the axis grid")
    from scipy.interpolate import RegularGridInterpolator
    interp = RegularGridInterpolator((axis, axis), values,
                                     bounds_error=False, fill_value=0.0)

    def gamma0_hat(K, P):
        K = np.asarray(K, dtype=float).reshape(-1, 1)
        P = np.asarray(P, dtype=float).reshape(-1, 1)
        return interp(np.hstack([K, P]))

    radius = float(np.sqrt(2.0)) * float(np.max(np.abs(axis)))
    return InitialKernel(
        kind="grid_custom", d=1, gamma0_hat=gamma0_hat, quadratic_form=None,
        energy_radius=radius, params={"n_axis": axis.size})


def hermitian_defect(g0: InitialKernel, box: float | None = None,
                     n: int = 33, seed: int = 0) -> float:
    """max |gamma0_hat(k,p) - conj gamma0_hat(-p,-k)| over sampled points."""
    rng = np.random.default_rng(seed)
    box = box if box is not None else g0.energy_radius / np.sqrt(2.0)
    K = rng.uniform(-box, box, (n * n, g0.d))
    P = rng.uniform(-box, box, (n * n, g0.d))
    a = np.asarray(g0.gamma0_hat(K, P))
    b = np.asarray(g0.gamma0_hat(-P, -K))
    return float(np.max(np.abs(a - np.conj(b))))


def weighted_initial_norm(g0: InitialKernel, N1: int, N2: int,
                          box: float | None = None, n: int = 65) -> float:
    """Weighted size surrogate for the initial kernel on its truncation box.

    Evaluates gamma0_hat on an axis-aligned (k1, p1) slice and returns the
    sup of <(k,p)>^{N2} times the kernel modulus plus its centered grid
    differences along the (1,-1) diagonal up to order min(N1, 2).  A grid
    stand-in for the weighted norm controlling the initial data size; only
    relative magnitudes across runs are meaningful.
    """
    if box is None:
        box = g0.energy_radius / np.sqrt(2.0)
    if n % 2 == 0:
        n += 1
    ax = np.linspace(-box, box, n)
    h = ax[1] - ax[0]
    K = np.zeros((n * n, g0.d))
    P = np.zeros((n * n, g0.d))
    kk, pp = np.meshgrid(ax, ax, indexing="ij")
    K[:, 0] = kk.ravel()
    P[:, 0] = pp.ravel()
    vals = np.asarray(g0.gamma0_hat(K, P)).reshape(n, n)
    w = np.hypot(1.0, np.hypot(kk, pp)) ** N2
    total = np.max(w * np.abs(vals))
    if N1 >= 1:
        d1 = np.zeros_like(vals)
        d1[1:-1, 1:-1] = (vals[2:, :-2] - vals[:-2, 2:]) / (2 * np.sqrt(2.0) * h)
        total = max(total, float(np.max(w * np.abs(d1))))
    if N1 >= 2:
        d2 = np.zeros_like(vals)
        d2[1:-1, 1:-1] = (vals[2:, :-2] - 2 * vals[1:-1, 1:-1] + vals[:-2, 2:]) \
            / (2.0 * h * h)
        total = max(total, float(np.max(w * np.abs(d2))))
    return float(total)


# ---------------------------------------------------------------------------
# free density


_R_NODES, _R_WEIGHTS = leggauss(128)


def _free_density_row(g0: InitialKernel, k: float, t_grid: np.ndarray,
                      n_axis: int = 1025) -> np.ndarray:
    """rho0_hat(t, k) for one radius over all of t_grid."""
    d = g0.d
    v2_cap = 2.0 * g0.energy_radius ** 2 - k * k
    if v2_cap <= 0.0:
        return np.zeros(len(t_grid), dtype=complex)
    V = float(np.sqrt(v2_cap))
    v1 = np.linspace(-V, V, n_axis)

    if d == 1:
        K = ((k + v1) / 2.0).reshape(-1, 1)
        P = ((k - v1) / 2.0).reshape(-1, 1)
        H = np.asarray(g0.gamma0_hat(K, P)).astype(complex).ravel()
    else:
        if g0.quadratic_form is None:
            raise ValueError(
                "free density in d >= 2 needs a rotation-invariant kernel "
                "(quadratic_form)")
        R = V
        r = (_R_NODES + 1.0) * R / 2.0
        wr = _R_WEIGHTS * R / 2.0
        r2 = (r * r)[None, :]
        a2 = ((k + v1[:, None]) ** 2 + r2) / 4.0
        b2 = ((k - v1[:, None]) ** 2 + r2) / 4.0
        ab = (k * k - v1[:, None] ** 2 - r2) / 4.0
        vals = np.asarray(g0.quadratic_form(a2, b2, ab))
        H = sphere_area(d - 1) * ((vals * r[None, :] ** (d - 2)) @ wr)

    edge = max(abs(H[0]), abs(H[-1]))
    if edge > 1e-10 * (np.max(np.abs(H)) + 1e-300):
        warnings.warn("free-density axis truncation leaves kernel mass at the "
                      "box edge", TruncationWarning)
    h_v = v1[1] - v1[0]
    return 2.0 ** (-d) * filon_transform(H, -V, h_v, np.asarray(t_grid) * k)


def free_density(g0: InitialKernel, k: float, t) -> complex | np.ndarray:
    """Free density rho0_hat(t, k) at one radius, vectorized over t."""
    scalar = np.isscalar(t) or np.asarray(t).ndim == 0
    out = _free_density_row(g0, float(k), np.atleast_1d(np.asarray(t, dtype=float)))
    return complex(out[0]) if scalar else out


def free_density_trajectory(g0: InitialKernel, k_grid, t_grid,
                            N1: int | None = None, N2: int | None = None,
                            n_axis: int = 1025) -> DensityTrajectory:
    """Tabulate the free density over a radial k grid and uniform times."""
    k_grid = np.asarray(k_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    rho = np.empty((k_grid.size, t_grid.size), dtype=complex)
    for i, k in enumerate(k_grid):
        rho[i] = _free_density_row(g0, float(k), t_grid, n_axis=n_axis)
    meta = {"d": g0.d,
            "N1": int(N1) if N1 is not None else g0.d + 1,
            "N2": int(N2) if N2 is not None else g0.d + 1,
            "source": "free"}
    return DensityTrajectory(k_grid=k_grid, t_grid=t_grid, rho_hat=rho,
                             kind="radial", meta=meta)


# ---------------------------------------------------------------------------
# linearized evolution


def volterra_kernel(m: Marginal, w: Potential, k: float, t) -> float | np.ndarray:
    """Time-domain memory kernel K_k(t) = 2 w_hat(k) sin(t k^2) phi_hat(2tk)."""
    if k <= 0:
        raise ValueError("volterra_kernel needs k > 0")
    scalar = np.isscalar(t) or np.asarray(t).ndim == 0
    ta = np.atleast_1d(np.asarray(t, dtype=float))
    wk = float(np.asarray(w.w_hat(np.array([k])))[0])
    out = 2.0 * wk * np.sin(ta * k * k) * np.asarray(m.phi_hat(2.0 * ta * k))
    return float(out[0]) if scalar else out


def volterra_march(kernel_vals, source_vals, dt: float) -> np.ndarray:
    """Trapezoid solution of rho(t) + int_0^t K(t-s) rho(s) ds = S(t).

    Uniform grid, kernel and source sampled on it.  K(0) = 0 makes the
    update explicit; a nonzero K(0) only rescales by the trapezoid factor
    1 + dt K(0)/2, which is checked for sanity (StepTooLarge).
    """
    K = np.asarray(kernel_vals)
    S = np.asarray(source_vals)
    if K.shape != S.shape or K.ndim != 1:
        raise ValueError("kernel and source must share one uniform grid")
    n = K.size
    corr = 1.0 + 0.5 * dt * K[0]
    if abs(corr - 1.0) > 0.25:
        warnings.warn("trapezoid correction factor %.3g is far from 1; "
                      "reduce dt" % abs(corr), StepTooLarge)
    dtype = np.result_type(K.dtype, S.dtype, float)
    K = K.astype(dtype)
    rho = np.empty(n, dtype=dtype)
    rho[0] = S[0] / corr
    Krev = K[::-1]
    for i in range(1, n):
        acc = 0.5 * K[i] * rho[0]
        if i > 1:
            acc += np.dot(Krev[n - i:n - 1], rho[1:i])
        rho[i] = (S[i] - dt * acc) / corr
    return rho


def volterra_solve(m: Marginal, w: Potential, S: DensityTrajectory) -> DensityTrajectory:
    """Linearized density from the source trajectory, mode by mode."""
    dt = S.dt
    rho = np.empty_like(S.rho_hat)
    for i, k in enumerate(S.k_grid):
        if k == 0.0:
            rho[i] = S.rho_hat[i]
            continue
        K = volterra_kernel(m, w, float(abs(k)), S.t_grid)
        rho[i] = volterra_march(K, S.rho_hat[i], dt)
    meta = dict(S.meta)
    meta["source"] = "linear"
    return DensityTrajectory(k_grid=S.k_grid, t_grid=S.t_grid, rho_hat=rho,
                             kind=S.kind, meta=meta)


# ---------------------------------------------------------------------------
# physical-space reconstruction


def reconstruct_sup_norm(rho: DensityTrajectory, n: int = 0) -> np.ndarray:
    """Fourier-mass majorant of sup_x |d^n rho(t, x)| per time.

    Returns rows (t, bound) with

        bound(t) = (2 pi)^{-d} |S^{d-1}| int r^{n+d-1} |rho_hat_r(t)| dr

    over the stored radial grid.  The derivative order must respect the
    trajectory's decay weights: n <= N3 = min(N1, N2) - d - 1.
    """
    if rho.kind != "radial":
        raise NonRadialInput("sup-norm reconstruction needs a radial trajectory")
    d = int(rho.meta.get("d", 3))
    N1 = int(rho.meta.get("N1", d + 1))
    N2 = int(rho.meta.get("N2", d + 1))
    n3 = min(N1, N2) - d - 1
    if n > n3:
        raise ValueError(f"derivative order {n} exceeds N3 = {n3} for these weights")
    r = np.abs(rho.k_grid)
    weight = (2.0 * np.pi) ** (-d) * sphere_area(d) * r ** (n + d - 1)
    bounds = np.trapezoid(weight[:, None] * np.abs(rho.rho_hat), r, axis=0)
    return np.column_stack([rho.t_grid, bounds])


def origin_value(rho: DensityTrajectory) -> np.ndarray:
    """rho(t, x=0) = (2 pi)^{-d} int rho_hat dk for radial trajectories."""
    if rho.kind != "radial":
        raise NonRadialInput("origin reconstruction needs a radial trajectory")
    d = int(rho.meta.get("d", 3))
    r = np.abs(rho.k_grid)
    weight = (2.0 * np.pi) ** (-d) * sphere_area(d) * r ** (d - 1)
    return np.trapezoid(weight[:, None] * rho.rho_hat, r, axis=0)

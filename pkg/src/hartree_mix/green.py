"""Green symbol m_f, the regular Green function, and its time synthesis.

The memory symbol is the half-line Laplace-Fourier integral

    m_f(lambda, k) = 2 int_0^inf exp(-lambda t) sin(t k^2) phi_hat(2tk) dt,

evaluated by splitting the sine into exponentials so the quadrature grid
only has to resolve phi_hat while the Filon rule carries the phases
exactly.  The dispersion function is D = 1 + w_hat(k) m_f, and the regular
part of the Green symbol is G_reg = -w_hat(k) m_f / D.

Time-domain synthesis inverts G_reg(i tau) along the imaginary axis.  The
symbol only decays like tau^{-2}, so the Lorentzian model

    L(tau) = A / (a^2 + tau^2),  A = 2 w_hat(k) k^2 phi_hat(0),  a = k<k>,

which captures the exact tau^{-2} coefficient (integration by parts twice;
the tau^{-3} term vanishes because phi_hat'(0) = 0), is subtracted and
inverted in closed form as (A/2a) exp(-a|t|).  The residual decays like
tau^{-4} and a geometric ladder of Filon panels reaches absolute tails
below 1e-10 at moderate tau_max.  Rows are fully vectorized over the
requested times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .dynamics import DensityTrajectory
from .profiles import Marginal, Potential
from .quadrature import filon_transform, halfline_laplace_fourier

__all__ = [
    "MfSample",
    "GreenTable",
    "NearZeroDivisor",
    "GridMismatch",
    "m_f",
    "m_f_boundary",
    "green_symbol_regular",
    "green_time",
    "green_table",
    "convolve_green",
    "dyadic_envelope",
]


class NearZeroDivisor(Exception):
    """|D| fell below the certified floor; symbol division is unsafe."""


class GridMismatch(Exception):
    """Green table and source trajectory do not share their grids."""


@dataclass(frozen=True)
class MfSample:
    lam: complex
    k: float
    value: complex
    error_estimate: float


@dataclass(frozen=True)
class GreenTable:
    """Regular Green function on a (k, t) product grid.

    ``theta0`` is the dispersion floor the table was built against (0 when
    built unguarded) and ``tau_max_used`` the largest synthesis frequency
    any row needed.
    """

    k_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    theta0: float
    tau_max_used: float
    meta: dict = field(default_factory=dict)


def _support_time(m: Marginal, k: float) -> float:
    return 1.05 * m.t_support / (2.0 * k)


def m_f(m: Marginal, lam: complex, k: float, tol_abs: float = 1e-10) -> MfSample:
    """One symbol value for Re(lambda) >= 0, k > 0."""
    if k <= 0:
        raise ValueError("m_f needs k > 0")
    lam = complex(lam)
    T = _support_time(m, k)
    tail = 0.0
    if lam.real > 0 and lam.real * T > 60.0:
        T = 60.0 / lam.real
        tail = np.exp(-60.0) * m.phi_hat_l1 / (2.0 * k)

    g = lambda t: np.asarray(m.phi_hat(2.0 * t * k))
    up = halfline_laplace_fourier(g, lam - 1j * k * k, T, tol_abs=tol_abs,
                                  tail_bound=tail)
    dn = halfline_laplace_fourier(g, lam + 1j * k * k, T, tol_abs=tol_abs,
                                  tail_bound=tail)
    value = -1j * (up.value - dn.value)
    return MfSample(lam=lam, k=float(k), value=value,
                    error_estimate=up.abs_error_estimate + dn.abs_error_estimate)


def m_f_boundary(m: Marginal, k: float, taus, tol_abs: float = 1e-11,
                 n0: int = 4097) -> np.ndarray:
    """m_f(i tau, k) for a whole array of real tau in one Filon pass."""
    if k <= 0:
        raise ValueError("m_f_boundary needs k > 0")
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    T = _support_time(m, k)
    omegas = np.concatenate([taus - k * k, taus + k * k])
    n = n0 if n0 % 4 == 1 else (n0 | 1) + 2
    while True:
        h = T / (n - 1)
        g = np.asarray(m.phi_hat(2.0 * k * np.arange(n) * h))
        fine = filon_transform(g, 0.0, h, omegas)
        coarse = filon_transform(g[::2], 0.0, 2 * h, omegas)
        if float(np.max(np.abs(fine - coarse))) <= tol_abs or n > 2 ** 21:
            break
        n = 2 * n - 1
    half = taus.size
    return -1j * (fine[:half] - fine[half:])


def _dispersion_from_mf(w: Potential, k: float, mf_vals) -> np.ndarray:
    wk = float(np.asarray(w.w_hat(np.array([k])))[0])
    return 1.0 + wk * np.asarray(mf_vals)


def green_symbol_regular(m: Marginal, w: Potential, tau: float, k: float,
                         theta0: float | None = None) -> complex:
    """Regular Green symbol G_reg(i tau, k) = -w_hat(k) m_f / D."""
    if k <= 0:
        raise ValueError("green_symbol_regular needs k > 0")
    wk = float(np.asarray(w.w_hat(np.array([k])))[0])
    if wk == 0.0:
        return 0.0 + 0.0j
    mf = m_f(m, 1j * float(tau), k).value
    D = 1.0 + wk * mf
    floor = (theta0 / 2.0) if theta0 else 1e-12
    if abs(D) < floor:
        raise NearZeroDivisor(
            f"|D(i{tau:g}, {k:g})| = {abs(D):.3g} below floor {floor:.3g}")
    return -wk * mf / D


def _row_synthesis(m: Marginal, w: Potential, k: float, t_grid: np.ndarray,
                   theta0: float | None, tol: float, tail_tol: float):
    """One Green-table row: closed-form Lorentzian part plus Filon residual."""
    wk = float(np.asarray(w.w_hat(np.array([k])))[0])
    if wk == 0.0:
        return np.zeros(t_grid.size, dtype=complex), 0.0
    phat0 = float(np.asarray(m.phi_hat(0.0)))
    A = 2.0 * wk * k * k * phat0
    a = k * np.hypot(1.0, k)
    floor = (theta0 / 2.0) if theta0 else 1e-12

    def residual(taus):
        mf = m_f_boundary(m, k, taus, tol_abs=tol)
        D = _dispersion_from_mf(w, k, mf)
        dmin = float(np.min(np.abs(D)))
        if dmin < floor:
            raise NearZeroDivisor(
                f"|D| = {dmin:.3g} below floor {floor:.3g} at k = {k:g}")
        return -wk * mf / D - A / (a * a + taus * taus)

    # core panel wide enough to contain the resonances and the Lorentzian
    u_width = min(1.0, 12.0 / m.u_support)
    tau_core = k * k + 2.0 * k * m.u_support + 8.0 * a + 1.0
    delta = min(2.0 * k * u_width, a) / 20.0
    n_core = int(np.ceil(2.0 * tau_core / delta)) | 1
    n_core = max(n_core, 129)
    # keep count = 1 mod 4 so the half-sampled refinement probe stays odd
    # (doubling via 2n - 1 preserves the class)
    if n_core % 4 == 3:
        n_core += 2

    while True:
        taus = np.linspace(-tau_core, tau_core, n_core)
        h = taus[1] - taus[0]
        R = residual(taus)
        probe = t_grid[:: max(1, t_grid.size // 16)]
        fine = filon_transform(R, -tau_core, h, -probe)
        coarse = filon_transform(R[::2], -tau_core, 2 * h, -probe)
        if float(np.max(np.abs(fine - coarse))) / (2 * np.pi) <= tol or n_core > 2 ** 18:
            break
        n_core = 2 * n_core - 1

    acc = filon_transform(R, -tau_core, h, -np.asarray(t_grid))

    # geometric tail panels on the positive side; negative side by symmetry
    half = np.zeros(t_grid.size, dtype=complex)
    lo = tau_core
    tau_max = tau_core
    for _ in range(40):
        hi = 2.0 * lo
        n_seg = 257
        taus = np.linspace(lo, hi, n_seg)
        R_seg = residual(taus)
        half += filon_transform(R_seg, lo, taus[1] - taus[0], -np.asarray(t_grid))
        tau_max = hi
        tail_est = float(np.abs(R_seg[-1])) * hi / (3.0 * np.pi)
        lo = hi
        if tail_est < tail_tol:
            break

    vals = (A / (2.0 * a)) * np.exp(-a * np.abs(np.asarray(t_grid))) \
        + (acc + 2.0 * half.real) / (2.0 * np.pi)
    return vals.astype(complex), tau_max


def green_time(m: Marginal, w: Potential, k: float, t,
               theta0: float | None = None, tol: float = 1e-10) -> complex | np.ndarray:
    """Regular Green function value(s) at one k, vectorized over t."""
    if k <= 0:
        raise ValueError("green_time needs k > 0")
    scalar = np.isscalar(t) or np.asarray(t).ndim == 0
    t_grid = np.atleast_1d(np.asarray(t, dtype=float))
    vals, _ = _row_synthesis(m, w, float(k), t_grid, theta0, tol, 10.0 * tol)
    return complex(vals[0]) if scalar else vals


def green_table(m: Marginal, w: Potential, k_grid, t_grid,
                theta0: float | None = None, tol: float = 1e-10,
                tail_tol: float = 1e-10) -> GreenTable:
    """Tabulate the regular Green function over radial k and uniform t.

    The k = 0 row is identically zero: the symbol carries a |k| prefactor
    through m_f, and the zero row is its continuous limit.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    values = np.zeros((k_grid.size, t_grid.size), dtype=complex)
    tau_max_used = 0.0
    for i, k in enumerate(k_grid):
        if k == 0.0:
            continue
        values[i], tmax = _row_synthesis(m, w, float(k), t_grid, theta0,
                                         tol, tail_tol)
        tau_max_used = max(tau_max_used, tmax)
    return GreenTable(k_grid=k_grid, t_grid=t_grid, values=values,
                      theta0=float(theta0 or 0.0), tau_max_used=tau_max_used,
                      meta={"tol": tol, "tail_tol": tail_tol})


def convolve_green(G: GreenTable, S: DensityTrajectory) -> DensityTrajectory:
    """rho_k(t) = S_k(t) + int_0^t G_reg_k(t-s) S_k(s) ds, trapezoid in s.

    The delta part of the Green decomposition contributes the identity
    term; the convolution handles only the regular part.
    """
    if G.t_grid.size != S.t_grid.size or not np.allclose(G.t_grid, S.t_grid):
        raise GridMismatch("green table and source use different t grids")
    if G.k_grid.size != S.k_grid.size or not np.allclose(G.k_grid, S.k_grid):
        raise GridMismatch("green table and source use different k grids")
    dt = S.dt
    n = S.t_grid.size
    rho = np.empty_like(S.rho_hat)
    for i in range(S.k_grid.size):
        g = G.values[i]
        s = S.rho_hat[i]
        full = fftconvolve(g, s)[:n]
        full -= 0.5 * (g * s[0] + g[0] * s)
        rho[i] = s + dt * full
    meta = dict(S.meta)
    meta["source"] = "green_convolution"
    return DensityTrajectory(k_grid=S.k_grid, t_grid=S.t_grid, rho_hat=rho,
                             kind=S.kind, meta=meta)


def dyadic_envelope(t_grid, values, t_min: float = 1.0,
                    ratio: float = 2.0) -> np.ndarray:
    """Envelope of |values| over geometric time blocks, as rows (t_center, max).

    Block j covers [t_min r^j, t_min r^{j+1}); the representative time is
    the geometric midpoint.  The default ratio 2 gives dyadic blocks;
    shrink it toward 1 when a fit needs more points per decade.  Feed the
    rows to the decay fitter.
    """
    if ratio <= 1.0:
        raise ValueError("ratio must exceed 1")
    t = np.asarray(t_grid, dtype=float)
    v = np.abs(np.asarray(values))
    rows = []
    lo = t_min
    while lo < t[-1]:
        hi = ratio * lo
        mask = (t >= lo) & (t < hi)
        if np.any(mask):
            rows.append((np.sqrt(lo * min(hi, t[-1])), float(np.max(v[mask]))))
        lo = hi
    return np.asarray(rows)

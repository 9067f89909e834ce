"""Shared 1-D quadrature engine.

Four pieces, used throughout the package:

* ``adaptive_gauss``: adaptive Gauss-Legendre panels for regular (possibly
  complex-valued) integrands on a finite interval,
* ``pv_integral``: Cauchy principal values via symmetric-window singularity
  subtraction,
* ``filon_transform``: a composite Filon-Simpson rule for
  ``int f(x) exp(-i w x) dx`` on a uniform grid, vectorized over frequencies,
* ``halfline_laplace_fourier`` / ``inverse_fourier_line``: Laplace-Fourier
  integrals on the half line and Fourier synthesis on a symmetric window,
  both built on the Filon rule with explicit tail accounting.

All integrand callables must accept and return numpy arrays.  Every
operation reports an error estimate and its evaluation count; none of them
mutate shared state, so they are safe to call from parallel scans.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "QuadResult",
    "PVIntegrand",
    "QuadratureError",
    "PoleOnBoundary",
    "UnresolvedOscillation",
    "EvaluationBudgetExceeded",
    "adaptive_gauss",
    "gauss_panel",
    "geometric_panels",
    "pv_integral",
    "filon_transform",
    "halfline_laplace_fourier",
    "inverse_fourier_line",
    "DEFAULT_ABS_TOL",
    "DEFAULT_EVAL_CAP",
]

# Defaults shared by the whole package: absolute tolerance for adaptive
# rules and a hard cap on integrand evaluations per call.
DEFAULT_ABS_TOL = 1e-10
DEFAULT_EVAL_CAP = 2_000_000


class QuadratureError(Exception):
    """Base class for quadrature failures."""


class PoleOnBoundary(QuadratureError):
    """PV pole sits on (or within eps of) a support endpoint."""


class UnresolvedOscillation(QuadratureError):
    """Oscillatory rule could not meet tolerance within the sample cap."""


class EvaluationBudgetExceeded(QuadratureError):
    """Adaptive refinement hit the evaluation cap before converging."""


@dataclass(frozen=True)
class QuadResult:
    """Value of an integral together with its accounting."""

    value: complex
    abs_error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class PVIntegrand:
    """Numerator phi and pole location for PV int phi(u)/(x - u) du.

    ``window`` is the half-width h of the symmetric subtraction window
    [x - h, x + h]; it must keep the window inside the support interval
    whenever the pole itself is interior.
    """

    numerator: Callable[[np.ndarray], np.ndarray]
    pole: float
    window: float


# ---------------------------------------------------------------------------
# adaptive Gauss-Legendre panels

_GL_HI_X, _GL_HI_W = np.polynomial.legendre.leggauss(31)
_GL_LO_X, _GL_LO_W = np.polynomial.legendre.leggauss(15)


def _panel_pair(f, a, b):
    """31-node value and 15-node comparison on one panel."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    xs = np.concatenate([mid + half * _GL_HI_X, mid + half * _GL_LO_X])
    ys = np.asarray(f(xs))
    hi = half * (ys[: _GL_HI_X.size] @ _GL_HI_W)
    lo = half * (ys[_GL_HI_X.size:] @ _GL_LO_W)
    return hi, abs(hi - lo), xs.size


def adaptive_gauss(f, a, b, tol_abs=DEFAULT_ABS_TOL, eval_cap=DEFAULT_EVAL_CAP,
                   min_depth=0):
    """Adaptive 15/31 Gauss-Legendre bisection on [a, b].

    ``f`` is vectorized and may return complex values.  ``min_depth`` forces
    that many initial bisection levels, which guards against integrands
    whose structure a single panel would miss entirely.
    """
    if b <= a:
        return QuadResult(0.0 + 0.0j, 0.0, 0)
    stack = [(a, b, 0)]
    total = 0.0 + 0.0j
    err = 0.0
    evals = 0
    while stack:
        lo, hi, depth = stack.pop()
        val, e, n = _panel_pair(f, lo, hi)
        evals += n
        if evals > eval_cap:
            raise EvaluationBudgetExceeded(
                f"adaptive_gauss exceeded {eval_cap} evaluations on [{a}, {b}]")
        width_tol = tol_abs * (hi - lo) / (b - a)
        if depth >= min_depth and (e <= max(width_tol, 1e-16 * abs(val)) or hi - lo < 1e-14 * (abs(a) + abs(b) + 1)):
            total += val
            err += e
            continue
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid, depth + 1))
        stack.append((mid, hi, depth + 1))
    return QuadResult(total, err, evals)


def gauss_panel(f, a, b) -> QuadResult:
    """Single non-adaptive 31-node Gauss-Legendre panel on [a, b].

    The 15-node comparison is reported as the error estimate.  For an
    integrand analytic in a Bernstein ellipse around the panel (any dyadic
    shell approaching its own singularity qualifies) the 31-node value is
    already at roundoff, and unlike adaptive bisection this cannot be
    goaded into chasing cancellation noise near the singular endpoint.
    """
    if b <= a:
        return QuadResult(0.0 + 0.0j, 0.0, 0)
    val, e, n = _panel_pair(f, a, b)
    return QuadResult(val, e, n)


def geometric_panels(f, a, b, endpoint, tol_abs=DEFAULT_ABS_TOL, max_levels=52,
                     fixed_panels=False):
    """Integrate f over [a, b] with panels refined geometrically toward
    ``endpoint`` (which must be b or a).  Returns (value, error, evals,
    shell_values) where shell_values[j] is the contribution of the j-th
    dyadic shell, outermost first.  Used for integrable endpoint
    singularities; the caller decides how to extrapolate the remainder.

    ``fixed_panels`` evaluates each shell with one 31-node panel instead of
    adaptive bisection: the choice for integrands whose only structure is
    the approach to ``endpoint`` itself, where adaptive refinement would
    dive into cancellation noise long before reaching the tolerance.
    """
    if endpoint not in (a, b):
        raise ValueError("endpoint must be an end of the interval")
    length = b - a
    shells = []
    total = 0.0
    err = 0.0
    evals = 0
    prev = a if endpoint == b else b
    for j in range(1, max_levels + 1):
        frac = 2.0 ** (-j)
        cut = endpoint - frac * length if endpoint == b else endpoint + frac * length
        lo, hi = (prev, cut) if endpoint == b else (cut, prev)
        if fixed_panels:
            r = gauss_panel(f, lo, hi)
        else:
            r = adaptive_gauss(f, lo, hi, tol_abs=tol_abs)
        shells.append(r.value.real if abs(r.value.imag) == 0 else r.value)
        total += r.value
        err += r.abs_error_estimate
        evals += r.evaluations
        prev = cut
        if abs(shells[-1]) < tol_abs and j > 6:
            break
    return total, err, evals, shells


# ---------------------------------------------------------------------------
# principal values


def pv_integral(p: PVIntegrand, support: tuple[float, float],
                tol_abs=DEFAULT_ABS_TOL, eval_cap=DEFAULT_EVAL_CAP) -> QuadResult:
    """PV int_a^b phi(u) / (pole - u) du.

    Pole inside the support: the symmetric window [x-h, x+h] is handled by
    subtracting phi(x) (the subtracted constant integrates to zero over a
    symmetric window), the remainder by adaptive panels.  Pole outside: the
    integrand is regular and integrated directly.  Pole within ``eps`` of a
    support endpoint raises PoleOnBoundary.
    """
    a, b = support
    if b <= a:
        return QuadResult(0.0 + 0.0j, 0.0, 0)
    x, h = p.pole, p.window
    eps = 1e-12 * (1.0 + abs(a) + abs(b))
    if abs(x - a) < eps or abs(x - b) < eps:
        raise PoleOnBoundary(f"pole {x} on support boundary [{a}, {b}]")

    phi = p.numerator
    if x < a or x > b:
        r = adaptive_gauss(lambda u: phi(u) / (x - u), a, b,
                           tol_abs=tol_abs, eval_cap=eval_cap, min_depth=2)
        return r

    h = min(h, 0.999 * (x - a), 0.999 * (b - x))
    if h <= 0:
        raise PoleOnBoundary(f"no room for a symmetric window at pole {x}")
    phix = float(np.asarray(phi(np.array([x])))[0])

    def centered(u):
        du = x - u
        out = np.empty_like(np.asarray(u, dtype=float))
        smal = np.abs(du) < 1e-14 * (1 + abs(x))
        safe = np.where(smal, 1.0, du)
        vals = (phi(u) - phix) / safe
        if np.any(smal):
            # limit is -phi'(x); a centered difference is accurate enough here
            d = 1e-6 * (1 + abs(x))
            der = (phi(np.array([x + d]))[0] - phi(np.array([x - d]))[0]) / (2 * d)
            vals = np.where(smal, -der, vals)
        out[...] = vals
        return out

    inner = adaptive_gauss(centered, x - h, x + h, tol_abs=tol_abs,
                           eval_cap=eval_cap, min_depth=2)
    left = adaptive_gauss(lambda u: phi(u) / (x - u), a, x - h,
                          tol_abs=tol_abs, eval_cap=eval_cap, min_depth=2) \
        if x - h > a else QuadResult(0.0, 0.0, 0)
    right = adaptive_gauss(lambda u: phi(u) / (x - u), x + h, b,
                           tol_abs=tol_abs, eval_cap=eval_cap, min_depth=2) \
        if b > x + h else QuadResult(0.0, 0.0, 0)
    return QuadResult(inner.value + left.value + right.value,
                      inner.abs_error_estimate + left.abs_error_estimate + right.abs_error_estimate,
                      inner.evaluations + left.evaluations + right.evaluations)


def default_pv_window(pole, support):
    """h = 0.5 * min(distance to nearest support edge, 1)."""
    a, b = support
    return 0.5 * min(min(pole - a, b - pole), 1.0)


# ---------------------------------------------------------------------------
# composite Filon-Simpson rule


def filon_coefficients(theta):
    """Filon weights alpha (odd), beta, gamma (even) at theta = omega*h.

    Power series below |theta| = 0.05 avoids the theta^-3 cancellation; the
    switch point keeps both branches accurate to ~1e-16.
    """
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 0.05
    ts = np.where(small, theta, 0.0)
    tl = np.where(small, 1.0, theta)

    s, c = np.sin(tl), np.cos(tl)
    t3 = tl ** 3
    alpha_l = (tl * tl + tl * s * c - 2.0 * s * s) / t3
    beta_l = 2.0 * (tl * (1.0 + c * c) - 2.0 * s * c) / t3
    gamma_l = 4.0 * (s - tl * c) / t3

    s2 = ts * ts
    alpha_s = ts * s2 * (2.0 / 45.0 + s2 * (-2.0 / 315.0 + s2 * (2.0 / 4725.0)))
    beta_s = 2.0 / 3.0 + s2 * (2.0 / 15.0 + s2 * (-4.0 / 105.0 + s2 * (2.0 / 567.0)))
    gamma_s = 4.0 / 3.0 + s2 * (-2.0 / 15.0 + s2 * (1.0 / 210.0 - s2 / 11340.0))

    return (np.where(small, alpha_s, alpha_l),
            np.where(small, beta_s, beta_l),
            np.where(small, gamma_s, gamma_l))


def filon_transform(fvals, x0, h, omegas, chunk=512):
    """int f(x) exp(-i omega x) dx over the uniform grid x0 + j*h.

    ``fvals`` holds the n sample values (n odd; real or complex), and the
    rule is applied for every omega at once.  Exact for piecewise-quadratic
    f at any frequency, which is what keeps large omega*h panels honest.
    Work is chunked over omega to bound the phase-matrix footprint.
    """
    fvals = np.asarray(fvals)
    scalar = np.isscalar(omegas) or np.asarray(omegas).ndim == 0
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    n = fvals.shape[-1]
    if n < 3 or n % 2 == 0:
        raise ValueError("filon_transform needs an odd sample count >= 3")
    x = x0 + h * np.arange(n)
    out = np.empty(omegas.shape, dtype=complex)
    for lo in range(0, omegas.size, chunk):
        om = omegas[lo:lo + chunk]
        alpha, beta, gamma = filon_coefficients(om * h)
        fw = np.exp(-1j * np.outer(om, x))
        fw *= fvals
        even = fw[:, 0::2].sum(axis=1) - 0.5 * (fw[:, 0] + fw[:, -1])
        odd = fw[:, 1::2].sum(axis=1)
        out[lo:lo + chunk] = h * (1j * alpha * (fw[:, -1] - fw[:, 0])
                                  + beta * even + gamma * odd)
    return out[0] if scalar else out


def filon_weights(n, x0, h, omega):
    """Weights W with sum_j W[..., j] f_j = filon_transform(f, x0, h, omega).

    omega may be a scalar (shape (n,) result) or a vector (shape
    (len(omega), n)).  Handy when the same grid is hit with many different
    integrands (the nonlinear density sums do exactly that).
    """
    if n < 3 or n % 2 == 0:
        raise ValueError("need an odd sample count >= 3")
    om = np.asarray(omega, dtype=float)
    om1 = np.atleast_1d(om)
    alpha, beta, gamma = filon_coefficients(om1 * h)
    x = x0 + h * np.arange(n)
    even = np.arange(n) % 2 == 0
    w = np.where(even[None, :], beta[:, None], gamma[:, None]).astype(complex)
    w[:, 0] = beta / 2.0 - 1j * alpha
    w[:, -1] = beta / 2.0 + 1j * alpha
    w = h * w * np.exp(-1j * om1[:, None] * x[None, :])
    return w[0] if om.ndim == 0 else w


# ---------------------------------------------------------------------------
# half-line Laplace-Fourier and line synthesis


def _refined_filon(sample, t_max, omega, n0, tol_abs, eval_cap):
    """Filon value with coarse/fine Richardson error estimate, refining the
    grid until the estimate passes tol or the cap bites."""
    n = n0 if n0 % 4 == 1 else n0 + (4 - (n0 - 1) % 4) % 4 + 1
    evals = 0
    while True:
        h = t_max / (n - 1)
        fv = sample(np.arange(n) * h)
        evals += n
        fine = filon_transform(fv, 0.0, h, np.atleast_1d(omega))
        coarse = filon_transform(fv[::2], 0.0, 2 * h, np.atleast_1d(omega))
        est = float(np.max(np.abs(fine - coarse)))
        if est <= tol_abs or 2 * n - 1 > eval_cap:
            if est > tol_abs and 2 * n - 1 > eval_cap:
                raise UnresolvedOscillation(
                    f"filon grid capped at {n} samples, error estimate {est:g}")
            return fine, est, evals
        n = 2 * n - 1


def halfline_laplace_fourier(g, lam, t_max, tol_abs=DEFAULT_ABS_TOL,
                             eval_cap=DEFAULT_EVAL_CAP, n0=1025,
                             tail_bound=0.0) -> QuadResult:
    """int_0^{t_max} exp(-lam t) g(t) dt for Re(lam) >= 0.

    The decaying factor exp(-Re(lam) t) is absorbed into the sampled
    integrand; the oscillation exp(-i Im(lam) t) is carried by the Filon
    rule.  ``tail_bound`` is the caller's bound on the discarded tail
    |int_{t_max}^inf| and is added to the reported error estimate.
    """
    lam = complex(lam)
    if lam.real < -1e-12:
        raise ValueError("halfline_laplace_fourier needs Re(lam) >= 0")
    if t_max <= 0:
        return QuadResult(0.0 + 0.0j, tail_bound, 0)
    gam = max(lam.real, 0.0)

    def sample(t):
        return np.asarray(g(t)) * np.exp(-gam * t)

    # enough initial samples to resolve exp(-gam t) on top of g's own scale
    n_start = max(n0, int(8 * gam * t_max) | 1)
    vals, est, evals = _refined_filon(sample, t_max, lam.imag, n_start,
                                      tol_abs, eval_cap)
    return QuadResult(complex(vals[0]), est + tail_bound, evals)


def inverse_fourier_line(G, t, tau_max, tol_abs=DEFAULT_ABS_TOL,
                         eval_cap=DEFAULT_EVAL_CAP, n0=2049,
                         tail_amp=None, tail_scale=None) -> QuadResult:
    """(1/2pi) int_{-tau_max}^{tau_max} exp(i tau t) G(tau) dtau.

    When the caller knows |G(tau)| <= tail_amp / (tail_scale^2 + tau^2),
    the analytic bound on the discarded |tau| > tau_max tail is added to
    the error estimate.
    """
    t = float(t)

    def sample(s):
        # map [0, 2*tau_max] onto [-tau_max, tau_max]
        return np.asarray(G(s - tau_max))

    n = n0 if n0 % 4 == 1 else n0 + 2
    evals = 0
    while True:
        h = 2 * tau_max / (n - 1)
        fv = sample(np.arange(n) * h)
        evals += n
        fine = filon_transform(fv, -tau_max, h, np.atleast_1d(-t))
        coarse = filon_transform(fv[::2], -tau_max, 2 * h, np.atleast_1d(-t))
        est = float(np.max(np.abs(fine - coarse))) / (2 * np.pi)
        if est <= tol_abs or 2 * n - 1 > eval_cap:
            if est > tol_abs and 2 * n - 1 > eval_cap:
                raise UnresolvedOscillation(
                    f"synthesis grid capped at {n} samples, error estimate {est:g}")
            break
        n = 2 * n - 1

    tail = 0.0
    if tail_amp is not None:
        a = tail_scale if tail_scale else 1.0
        tail = (tail_amp / (np.pi * a)) * np.arctan2(a, tau_max)
    return QuadResult(complex(fine[0]) / (2 * np.pi), est + tail, evals)

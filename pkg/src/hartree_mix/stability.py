"""Penrose-Lindhard certification for the linearized Hartree dynamics.

The decision chain mirrors the analytic one.  First the criterion integral

    Phi(0) = 1 - (w_hat(0)/2) int phi(u) / (Upsilon - u)^2 du

is evaluated with dyadic shells toward the support edge; the fitted shell
decay legitimizes the value, flags divergence (slowly vanishing phi), or
declares the condition vacuous (Upsilon = inf).  A divergent integral is
its own verdict.  A negative value forces an imaginary-axis zero of the
dispersion function on the real branch, which monotonicity pins down to a
bisection.  Otherwise the certificate scans |D| over a compact boundary
region whose extents come from explicit tail bounds (|D - 1| <= w_hat(k)
L1 / k and an integration-by-parts bound in lambda), counts zeros in
right-half-plane rectangles by the argument principle, and reports

    theta0 = min sampled |D| - sampled modulus-of-continuity margin,

clamped by the analytic 1/2 floor outside the scanned box.  The floor is
sampled, not rigorous; the certificate says so in its notes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dispersion import (
    DivergentIntegral,
    HilbertTransformCache,
    dispersion_hilbert,
    dispersion_k_zero,
    dispersion_plemelj,
    dispersion_real_branch,
    evaluate,
)
from .profiles import Marginal, Potential
from .quadrature import adaptive_gauss, gauss_panel

__all__ = [
    "CriterionResult",
    "PhiCurve",
    "AxisFloor",
    "WindingCheck",
    "StabilityCertificate",
    "ScanSettings",
    "ContourTooCoarse",
    "criterion_integral",
    "phi_curve",
    "imaginary_axis_floor",
    "find_imaginary_zero",
    "winding_number",
    "certify",
]


class ContourTooCoarse(Exception):
    """Phase steps along the contour are too large to trust the winding."""


@dataclass(frozen=True)
class CriterionResult:
    """Outcome of the criterion integral.

    ``kind`` is "finite", "vacuous" (infinite support), or "divergent";
    ``value`` is the criterion left side when finite; ``shell_slope`` the
    fitted log2 decay rate of the dyadic edge shells (divergence shows up
    as a slope near or above zero).
    """

    kind: str
    value: float | None
    shell_slope: float | None
    integral: float | None
    remainder: float


@dataclass(frozen=True)
class PhiCurve:
    samples: np.ndarray
    phi_at_zero: float | None
    divergent_at_zero: bool
    phi_at_infinity: float = 1.0


@dataclass(frozen=True)
class AxisFloor:
    min_abs: float
    tau_at_min: float
    imag_bound_at_min: float
    taus: np.ndarray
    abs_values: np.ndarray


@dataclass(frozen=True)
class WindingCheck:
    k: float
    rectangle: tuple[float, float, float, float]
    winding: int
    residual: float
    min_abs_on_contour: float
    nodes: int


@dataclass(frozen=True)
class ScanSettings:
    """Extents and resolutions for the certification scan."""

    k_min: float = 1e-3
    k_max: float | None = None
    n_k: int = 24
    tau_pad: float = 2.0
    n_tail: int = 48
    rect_checks: int = 3
    rect_re_lo: float = 1e-3
    refine: bool = True
    zero_tol: float = 1e-8
    hunt_k: tuple[float, ...] = (0.02, 0.03, 0.05, 0.1, 0.2)
    tol_abs: float = 1e-9


@dataclass(frozen=True)
class StabilityCertificate:
    verdict: str
    theta0: float | None
    phi0: float | None
    criterion: CriterionResult
    zero_location: tuple[float, float] | None
    zero_residual: float | None
    scan_min: float | None
    scan_argmin: tuple[float, float] | None
    margin: float | None
    winding_checks: tuple[WindingCheck, ...]
    k_range: tuple[float, float] | None
    notes: tuple[str, ...] = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# criterion integral and the Phi curve


def _edge_weighted_integral(f, a: float, edge: float, tol_abs: float = 1e-12,
                            j_cap: int = 48, fit_count: int = 6):
    """int_a^edge f with dyadic shells toward the edge.

    Returns (total_without_remainder, error, shell_slope, remainder).
    ``shell_slope`` is the least-squares slope of log2 |I_j| over the last
    ``fit_count`` shells; geometric extrapolation of the tail is valid (and
    returned as ``remainder``) only when the slope is clearly negative.
    """
    length = edge - a
    bulk = adaptive_gauss(f, a, edge - length / 2.0, tol_abs=tol_abs)
    total = complex(bulk.value).real
    err = bulk.abs_error_estimate
    shells = []
    for j in range(1, j_cap + 1):
        w = length * 2.0 ** (-j)
        # fixed panel: the shell holds the singularity at arm's length, and
        # adaptive refinement would chase (edge - u) cancellation noise
        r = gauss_panel(f, edge - w, edge - w / 2.0)
        shells.append(complex(r.value).real)
        err += r.abs_error_estimate
        total += shells[-1]
        if abs(shells[-1]) < max(tol_abs, 1e-15 * abs(total)) and j > fit_count:
            break
    tail = np.asarray(shells[-fit_count:])
    if tail.size < 2 or np.any(np.abs(tail) < 1e-300):
        return total, err, -np.inf, 0.0
    js = np.arange(tail.size)
    slope = float(np.polyfit(js, np.log2(np.abs(tail)), 1)[0])
    remainder = 0.0
    if slope < -0.05:
        r_ratio = 2.0 ** slope
        remainder = shells[-1] * r_ratio / (1.0 - r_ratio)
    return total, err, slope, remainder


def criterion_integral(m: Marginal, w: Potential,
                       tol_abs: float = 1e-12) -> CriterionResult:
    """Left side of the stability criterion, or its divergence/vacuity flag.

    The integrand phi(u)/(Upsilon - u)^2 concentrates at the right edge;
    shells decaying like 2^{-j(alpha-1)} (phi ~ c (Upsilon-u)^alpha) give a
    finite value only for alpha > 1.  The fitted slope decides: slope >=
    -0.05 means the shell sums do not contract and the integral is flagged
    divergent.
    """
    if not np.isfinite(m.upsilon):
        return CriterionResult(kind="vacuous", value=None, shell_slope=None,
                               integral=None, remainder=0.0)
    ups = m.upsilon
    w0 = w.w_hat_zero

    def f(u):
        return np.asarray(m.phi(u)) / (ups - u) ** 2

    total, err, slope, remainder = _edge_weighted_integral(f, -ups, ups, tol_abs)
    if slope >= -0.05:
        return CriterionResult(kind="divergent", value=None, shell_slope=slope,
                               integral=None, remainder=0.0)
    integral = total + remainder
    return CriterionResult(kind="finite", value=1.0 - (w0 / 2.0) * integral,
                           shell_slope=slope, integral=integral,
                           remainder=remainder)


def _phi_at(m: Marginal, w: Potential, k: float, tol_abs: float = 1e-11) -> float:
    """Phi(k) = D(i(2 Upsilon + k) k, k), the real-branch edge value."""
    return float(dispersion_real_branch(
        m, w, 2.0 * m.upsilon + k, k, tol_abs=tol_abs).value.real)


def phi_curve(m: Marginal, w: Potential, k_grid) -> PhiCurve:
    """Phi over a grid of positive k, with the k = 0 criterion value."""
    if not np.isfinite(m.upsilon):
        raise ValueError("the Phi curve needs compact support")
    crit = criterion_integral(m, w)
    rows = []
    for k in np.asarray(k_grid, dtype=float):
        if k <= 0:
            continue
        rows.append((k, _phi_at(m, w, k)))
    return PhiCurve(samples=np.asarray(rows),
                    phi_at_zero=crit.value if crit.kind == "finite" else None,
                    divergent_at_zero=crit.kind == "divergent")


# ---------------------------------------------------------------------------
# axis floor and zero hunting


def _dtilde(m: Marginal, w: Potential, k: float, tau_tilde: float,
            tol_abs: float = 1e-10) -> complex:
    """Boundary value D(i k tau_tilde, k) with automatic branch routing."""
    return evaluate(m, w, 1j * tau_tilde * k, k, tol_abs=tol_abs).value


def imaginary_axis_floor(m: Marginal, w: Potential, k: float,
                         tau_grid, tol_abs: float = 1e-10) -> AxisFloor:
    """Minimum of |D| along the imaginary axis over the given tau_tilde grid."""
    taus = np.asarray(tau_grid, dtype=float)
    vals = np.array([_dtilde(m, w, k, t, tol_abs) for t in taus])
    mods = np.abs(vals)
    i = int(np.argmin(mods))
    wk = float(np.asarray(w.w_hat(np.array([k])))[0])
    x_p = (taus[i] + k) / 2.0
    x_m = (taus[i] - k) / 2.0
    phis = np.asarray(m.phi(np.array([x_p, x_m])))
    bound = np.pi * abs(wk) / (2.0 * k) * abs(float(phis[0] - phis[1]))
    return AxisFloor(min_abs=float(mods[i]), tau_at_min=float(taus[i]),
                     imag_bound_at_min=bound, taus=taus, abs_values=mods)


def find_imaginary_zero(m: Marginal, w: Potential, k: float,
                        xtol: float = 1e-12) -> float | None:
    """Root of the real branch tau_tilde -> D(i k tau_tilde, k), if any.

    On tau_tilde >= 2 Upsilon + k the branch is real and increases onto
    [Phi(k), 1), so a root exists exactly when Phi(k) < 0 and bisection is
    safe.  Returns None when Phi(k) >= 0; a divergent branch edge counts
    as Phi(k) = -inf and the bracket starts just inside the branch.
    """
    if not np.isfinite(m.upsilon):
        raise ValueError("imaginary-axis zero hunting needs compact support")
    tau0 = 2.0 * m.upsilon + k
    try:
        phi_k = _phi_at(m, w, k)
        lo = tau0
        lo_val = phi_k
    except DivergentIntegral:
        lo = tau0 * (1.0 + 1e-9)
        lo_val = float(dispersion_real_branch(m, w, lo, k).value.real)
    if lo_val >= 0.0:
        return None

    g = lambda t: float(dispersion_real_branch(m, w, t, k).value.real)
    hi = tau0 + max(1.0, k)
    for _ in range(60):
        if g(hi) > 0.0:
            break
        hi = 2.0 * hi
    else:
        return None
    if lo == tau0:
        lo = tau0 + 1e-13 * max(1.0, tau0)
    return float(brentq(g, lo, hi, xtol=xtol, rtol=8.9e-16))


# ---------------------------------------------------------------------------
# argument principle


def _rect_nodes(rect, n_per_edge: int) -> np.ndarray:
    re_lo, re_hi, im_lo, im_hi = rect
    top = np.linspace(re_lo + 1j * im_lo, re_hi + 1j * im_lo, n_per_edge,
                      endpoint=False)
    right = np.linspace(re_hi + 1j * im_lo, re_hi + 1j * im_hi, n_per_edge,
                        endpoint=False)
    back = np.linspace(re_hi + 1j * im_hi, re_lo + 1j * im_hi, n_per_edge,
                       endpoint=False)
    left = np.linspace(re_lo + 1j * im_hi, re_lo + 1j * im_lo, n_per_edge,
                       endpoint=False)
    return np.concatenate([top, right, back, left])


def winding_number(m: Marginal, w: Potential, k: float, rect,
                   cache: HilbertTransformCache | None = None,
                   n_per_edge: int = 64, max_nodes: int = 40000) -> WindingCheck:
    """Zero count of D inside a rectangle in the open right lambda_tilde
    half-plane, by total argument variation along its boundary.

    Nodes are inserted wherever a phase step exceeds pi/2 until every step
    is resolved; failure to get there, a vanishing symbol on the contour,
    or a rounding residual above 0.05 raise ContourTooCoarse.
    """
    re_lo, re_hi, im_lo, im_hi = (float(x) for x in rect)
    if re_lo <= 0:
        raise ValueError("contour must sit strictly inside Re lambda_tilde > 0")
    if re_hi <= re_lo or im_hi <= im_lo:
        raise ValueError("degenerate rectangle")
    pts = list(_rect_nodes((re_lo, re_hi, im_lo, im_hi), n_per_edge))

    def dval(lt: complex) -> complex:
        return dispersion_hilbert(m, w, k * lt, k, cache=cache).value

    vals = [dval(p) for p in pts]
    while True:
        n = len(pts)
        if n > max_nodes:
            raise ContourTooCoarse(
                f"{n} contour nodes still leave phase steps above pi/2")
        ratios = np.asarray([vals[(i + 1) % n] / vals[i] for i in range(n)])
        steps = np.angle(ratios)
        bad = np.nonzero(np.abs(steps) > np.pi / 2)[0]
        if bad.size == 0:
            break
        for i in sorted(bad, reverse=True):
            mid = 0.5 * (pts[i] + pts[(i + 1) % n])
            pts.insert(i + 1, mid)
            vals.insert(i + 1, dval(mid))

    mods = np.abs(np.asarray(vals))
    min_abs = float(np.min(mods))
    if min_abs < 1e-10:
        raise ContourTooCoarse("dispersion function vanishes on the contour")
    total = float(np.sum(steps)) / (2.0 * np.pi)
    wind = int(np.rint(total))
    residual = abs(total - wind)
    if residual > 0.05:
        raise ContourTooCoarse(
            f"winding residual {residual:.3g} exceeds 0.05")
    return WindingCheck(k=float(k), rectangle=(re_lo, re_hi, im_lo, im_hi),
                        winding=wind, residual=residual,
                        min_abs_on_contour=min_abs, nodes=len(pts))


# ---------------------------------------------------------------------------
# certification


def _tail_k_cap(m: Marginal, w: Potential, k_lo: float) -> float:
    """Smallest K with w_hat(k) * L1(phi_hat) / k < 1/2 for all k >= K."""
    beta = lambda k: float(np.asarray(w.w_hat(np.array([k])))[0]) \
        * m.phi_hat_l1 / k
    if beta(k_lo) < 0.5:
        return k_lo
    hi = max(1.0, 2.0 * k_lo)
    for _ in range(60):
        if beta(hi) < 0.5:
            break
        hi *= 2.0
    lo = hi / 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if beta(mid) < 0.5:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-6 * hi:
            break
    return hi


def _lambda_cap(m: Marginal, w: Potential, k: float) -> float:
    """|lambda_tilde| beyond which |D - 1| < 1/2 by integration by parts."""
    wk = float(np.asarray(w.w_hat(np.array([k])))[0])
    return max(4.0 * abs(wk) * (m.phi_hat_l1 / 2.0 + m.phi_hat_deriv_l1 / k), 1.0)


def certify(m: Marginal, w: Potential,
            scan: ScanSettings | None = None) -> StabilityCertificate:
    """Full certification flow; see the module docstring for the chain."""
    scan = scan or ScanSettings()
    notes: list[str] = []
    crit = criterion_integral(m, w)

    if crit.kind == "divergent":
        notes.append("criterion integral diverges at the support edge "
                     f"(shell slope {crit.shell_slope:.2f}); slowly vanishing "
                     "marginals admit oscillatory modes")
        return StabilityCertificate(
            verdict="CriterionDiverges", theta0=None, phi0=float("-inf"),
            criterion=crit, zero_location=None, zero_residual=None,
            scan_min=None, scan_argmin=None, margin=None, winding_checks=(),
            k_range=None, notes=tuple(notes))

    if crit.kind == "finite" and crit.value < 0.0:
        for k in scan.hunt_k:
            tau_star = find_imaginary_zero(m, w, k)
            if tau_star is not None:
                resid = abs(_dtilde(m, w, k, tau_star))
                notes.append("negative criterion forced an imaginary-axis zero")
                return StabilityCertificate(
                    verdict="Unstable", theta0=None, phi0=crit.value,
                    criterion=crit, zero_location=(tau_star, k),
                    zero_residual=resid, scan_min=None, scan_argmin=None,
                    margin=None, winding_checks=(), k_range=None,
                    notes=tuple(notes))
        notes.append("criterion negative but no axis zero found on the hunt "
                     "grid; widen hunt_k")
        return StabilityCertificate(
            verdict="Inconclusive", theta0=None, phi0=crit.value,
            criterion=crit, zero_location=None, zero_residual=None,
            scan_min=None, scan_argmin=None, margin=None, winding_checks=(),
            k_range=None, notes=tuple(notes))

    # criterion holds (or is vacuous): boundary scan + windings
    phi0 = crit.value
    k_hi = scan.k_max if scan.k_max is not None else _tail_k_cap(m, w, scan.k_min)
    k_hi = max(k_hi, 4.0 * scan.k_min)

    u_char = max(min(2.0, m.u_support / 3.0), 0.1)
    d_tau = u_char / 50.0
    tau_dense_max = 2.0 * m.u_support + k_hi + scan.tau_pad
    n_dense = int(np.ceil(tau_dense_max / d_tau)) + 1
    taus_dense = np.linspace(0.0, tau_dense_max, n_dense)

    rows: dict[float, np.ndarray] = {}

    def _bval(k: float, t: float) -> float:
        if k == 0.0:
            return abs(dispersion_k_zero(m, w, 1j * t).value)
        return abs(_dtilde(m, w, k, t, scan.tol_abs))

    def boundary_row(k: float) -> np.ndarray:
        if k not in rows:
            rows[k] = np.array([_bval(k, float(t)) for t in taus_dense])
        return rows[k]

    def pair_floor(a: np.ndarray, b: np.ndarray) -> float:
        # estimated min |D| between two sampled lines: smaller sample
        # minus half the gap, nodewise (linear modulus of continuity)
        return float(np.min(np.minimum(a, b) - 0.5 * np.abs(a - b)))

    def line_floor(r: np.ndarray) -> float:
        return pair_floor(r[1:], r[:-1])

    # the k = 0 row is the rescaled limit, so (0, k_min] interpolates it
    for k in [0.0] + [float(x) for x in np.geomspace(scan.k_min, k_hi, scan.n_k)]:
        boundary_row(k)

    scan_min, argmin = np.inf, (0.0, 0.0)
    tail_floor = np.inf
    for k in sorted(rows):
        row = rows[k]
        j = int(np.argmin(row))
        if row[j] < scan_min:
            scan_min, argmin = float(row[j]), (k, float(taus_dense[j]))
        if k == 0.0:
            continue

        lam_cap = _lambda_cap(m, w, k)
        if lam_cap > tau_dense_max:
            tail = np.geomspace(tau_dense_max, lam_cap, scan.n_tail)
            tmods = np.abs([_dtilde(m, w, k, float(t), scan.tol_abs)
                            for t in tail])
            jt = int(np.argmin(tmods))
            if tmods[jt] < scan_min:
                scan_min, argmin = float(tmods[jt]), (k, float(tail[jt]))
            tail_floor = min(tail_floor, line_floor(tmods))

        if np.isfinite(m.upsilon):
            pk = _phi_at(m, w, k)
            if pk < scan_min:
                scan_min, argmin = float(pk), (k, 2.0 * m.upsilon + k)

    # continuity floor: nodewise within each row, nodewise between adjacent
    # rows; insert k midpoints while an inter-row gap is the binding term
    extra = 2 * scan.n_k
    while True:
        ks = sorted(rows)
        floor_rows = min(line_floor(rows[k]) for k in ks)
        cells = [pair_floor(rows[ks[i]], rows[ks[i + 1]])
                 for i in range(len(ks) - 1)]
        i_cell = int(np.argmin(cells))
        if cells[i_cell] >= floor_rows - 1e-3 or extra <= 0:
            break
        lo, up = ks[i_cell], ks[i_cell + 1]
        mid = 0.5 * (lo + up) if lo == 0.0 else float(np.sqrt(lo * up))
        boundary_row(mid)
        row = rows[mid]
        j = int(np.argmin(row))
        if row[j] < scan_min:
            scan_min, argmin = float(row[j]), (mid, float(taus_dense[j]))
        extra -= 1

    theta_floor = min(floor_rows, cells[i_cell], tail_floor)

    if scan.refine:
        ks = np.array(sorted(rows))
        ki = int(np.argmin(np.abs(ks - argmin[0])))
        k_lo = ks[max(ki - 1, 0)]
        k_up = ks[min(ki + 1, ks.size - 1)]
        t_lo = max(argmin[1] - 5.0 * d_tau, 0.0)
        t_up = argmin[1] + 5.0 * d_tau
        for k in np.linspace(k_lo, k_up, 7):
            for t in np.linspace(t_lo, t_up, 21):
                v = _bval(float(k), float(t))
                if v < scan_min:
                    scan_min, argmin = float(v), (float(k), float(t))

    cache = HilbertTransformCache(m)
    winding_checks = []
    k_grid = np.array([k for k in sorted(rows) if k > 0.0])
    pick = sorted({0, k_grid.size // 2, k_grid.size - 1,
                   int(np.argmin(np.abs(k_grid - argmin[0])))})
    for idx in pick[: max(scan.rect_checks, 1) + 1]:
        k = float(k_grid[idx])
        lam_cap = _lambda_cap(m, w, k)
        rect = (scan.rect_re_lo, lam_cap, -lam_cap, lam_cap)
        winding_checks.append(winding_number(m, w, k, rect, cache=cache))

    theta0 = min(theta_floor, scan_min, 0.5)
    margin = max(scan_min - theta0, 0.0)
    notes.append("theta0 is a sampled estimate (boundary grid plus "
                 "continuity floor), not a rigorous bound")
    notes.append(f"strip 0 < Re lambda_tilde < {scan.rect_re_lo:g} is covered "
                 "by boundary continuity, not by contour checks")
    notes.append("tail region past the dense grid uses per-k line floors "
                 "only; |D - 1| is already small there")

    if any(c.winding != 0 for c in winding_checks):
        return StabilityCertificate(
            verdict="Inconclusive", theta0=None, phi0=phi0, criterion=crit,
            zero_location=None, zero_residual=None, scan_min=scan_min,
            scan_argmin=argmin, margin=margin,
            winding_checks=tuple(winding_checks),
            k_range=(float(scan.k_min), float(k_hi)),
            notes=tuple(notes + ["nonzero winding despite a positive "
                                 "criterion; scan extents are suspect"]))

    if theta0 <= 0.0:
        return StabilityCertificate(
            verdict="Inconclusive", theta0=None, phi0=phi0, criterion=crit,
            zero_location=None, zero_residual=None, scan_min=scan_min,
            scan_argmin=argmin, margin=margin,
            winding_checks=tuple(winding_checks),
            k_range=(float(scan.k_min), float(k_hi)),
            notes=tuple(notes + ["continuity margin swallows the sampled "
                                 "minimum; refine the scan"]))

    return StabilityCertificate(
        verdict="Stable", theta0=float(theta0), phi0=phi0, criterion=crit,
        zero_location=None, zero_residual=None, scan_min=scan_min,
        scan_argmin=argmin, margin=margin, winding_checks=tuple(winding_checks),
        k_range=(float(scan.k_min), float(k_hi)), notes=tuple(notes))

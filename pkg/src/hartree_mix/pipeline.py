"""Run configuration, artifact emission, and the experiment orchestrator.

A single JSON document drives every subcommand; all physical parameters
are dimensionless.  Artifacts are flat files: CSV for trajectories and
tables (17 significant digits, so re-reading reproduces the arrays
bit-exactly) and JSON for reports, each stamped with "schema": 1.  Exit
codes: 0 on success, 2 when a stability certificate comes back
Inconclusive, 1 on any error.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import dispersion as disp
from . import dynamics, green, nonlinear, profiles, stability

__all__ = [
    "ConfigError",
    "InsufficientSamples",
    "NonPositiveValue",
    "RunConfig",
    "DecayFit",
    "load_config",
    "parse_config",
    "fit_decay",
    "y_norm",
    "run",
    "SUBCOMMANDS",
]

SUBCOMMANDS = ("marginal", "dispersion", "stability", "green", "free",
               "linear", "nonlinear", "report")


class ConfigError(Exception):
    """Malformed run configuration; the message names the field."""


class InsufficientSamples(Exception):
    """Too few samples inside the fit window."""


class NonPositiveValue(Exception):
    """Log-log fitting needs strictly positive values."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    equilibrium: dict
    potential: dict
    d: int
    n1: int
    n2: int
    k_count: int
    k_min: float
    k_max: float
    dt: float
    t_max: float
    tau_max: float
    tau_count: int
    nl_box: float
    nl_points: int
    nl_dt: float
    nl_t_max: float
    epsilon: float
    out_dir: str
    seed: int
    initial: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def n3(self) -> int:
        return min(self.n1, self.n2) - self.d - 1

    @property
    def fit_window(self) -> tuple[float, float]:
        w = self.tolerances.get("fit_window", (5.0, 50.0))
        return (float(w[0]), float(w[1]))


def _need(doc: dict, name: str):
    if name not in doc:
        raise ConfigError(f"missing field '{name}'")
    return doc[name]


def _sub(doc: dict, group: str, name: str, default=None):
    g = doc.get(group)
    if g is None:
        if default is None:
            raise ConfigError(f"missing field '{group}'")
        return default
    if not isinstance(g, dict):
        raise ConfigError(f"field '{group}' must be an object")
    if name not in g:
        if default is None:
            raise ConfigError(f"missing field '{group}.{name}'")
        return default
    return g[name]


def parse_config(doc: dict, out: str | None = None,
                 seed: int | None = None) -> RunConfig:
    """Validate a parsed JSON document into a RunConfig.

    Field problems raise ConfigError naming the offending field; the
    ``out`` and ``seed`` arguments override the document when given.
    """
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object")
    d = int(_need(doc, "d"))
    if d < 1:
        raise ConfigError("field 'd': must be >= 1")
    eq = _need(doc, "equilibrium")
    if not isinstance(eq, dict) or "kind" not in eq:
        raise ConfigError("field 'equilibrium': needs a 'kind'")
    pot = _need(doc, "potential")
    if not isinstance(pot, dict) or "kind" not in pot:
        raise ConfigError("field 'potential': needs a 'kind'")

    prof = _make_profile(eq, d)
    n1 = int(doc.get("N1", 2 * prof.n1 - d + 1))
    n2 = int(doc.get("N2", d + 1))
    if min(n1, n2) - d - 1 < 0:
        raise ConfigError("fields 'N1'/'N2': min(N1, N2) - d - 1 must be "
                          ">= 0")

    k_count = int(_sub(doc, "k_grid", "count"))
    k_min = float(_sub(doc, "k_grid", "min"))
    k_max = float(_sub(doc, "k_grid", "max"))
    if k_count < 2 or not (0 < k_min < k_max):
        raise ConfigError("field 'k_grid': need count >= 2 and "
                          "0 < min < max")
    dt = float(_sub(doc, "t_grid", "dt"))
    t_max = float(_sub(doc, "t_grid", "t_max"))
    if dt <= 0 or t_max <= dt:
        raise ConfigError("field 't_grid': need dt > 0 and t_max > dt")
    tau_max = float(_sub(doc, "tau_grid", "max", 40.0))
    tau_count = int(_sub(doc, "tau_grid", "count", 401))
    if tau_count < 2 or tau_max <= 0:
        raise ConfigError("field 'tau_grid': need count >= 2 and max > 0")
    nl_box = float(_sub(doc, "nonlinear", "box", 4.0))
    nl_points = int(_sub(doc, "nonlinear", "points", 33))
    nl_dt = float(_sub(doc, "nonlinear", "dt", 0.1))
    nl_t_max = float(_sub(doc, "nonlinear", "t_max", 30.0))
    if nl_points < 3 or nl_points % 2 == 0:
        raise ConfigError("field 'nonlinear.points': need an odd count >= 3")
    if nl_dt <= 0 or nl_t_max <= 0 or nl_box <= 0:
        raise ConfigError("field 'nonlinear': box, dt, t_max must be "
                          "positive")

    epsilon = float(doc.get("epsilon", 1e-2))
    out_dir = out if out is not None else str(doc.get("out", "."))
    seed_v = int(seed if seed is not None else doc.get("seed", 0))
    initial = doc.get("initial", {})
    if initial and not isinstance(initial, dict):
        raise ConfigError("field 'initial' must be an object")
    tol = doc.get("tolerances", {})
    if tol and not isinstance(tol, dict):
        raise ConfigError("field 'tolerances' must be an object")
    return RunConfig(equilibrium=eq, potential=pot, d=d, n1=n1, n2=n2,
                     k_count=k_count, k_min=k_min, k_max=k_max, dt=dt,
                     t_max=t_max, tau_max=tau_max, tau_count=tau_count,
                     nl_box=nl_box, nl_points=nl_points, nl_dt=nl_dt,
                     nl_t_max=nl_t_max, epsilon=epsilon, out_dir=out_dir,
                     seed=seed_v, initial=initial, tolerances=tol)


def load_config(path: str, out: str | None = None,
                seed: int | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read '{path}': {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in '{path}' at line {e.lineno}: "
                          f"{e.msg}") from e
    return parse_config(doc, out=out, seed=seed)


def _make_profile(eq: dict, d: int) -> profiles.EquilibriumProfile:
    kind = eq["kind"]
    p = {k: v for k, v in eq.items() if k != "kind"}
    try:
        if kind == "gaussian":
            return profiles.gaussian_profile(d, **p)
        if kind == "fermi_zero_t":
            return profiles.fermi_zero_t_profile(d, **p)
        if kind == "smooth_bump":
            return profiles.smooth_bump_profile(d, **p)
        if kind == "power_decay":
            return profiles.power_decay_profile(d, **p)
    except TypeError as e:
        raise ConfigError(f"field 'equilibrium': {e}") from e
    raise ConfigError(f"field 'equilibrium.kind': unknown kind '{kind}'")


def _make_potential(pot: dict) -> profiles.Potential:
    kind = pot["kind"]
    p = {k: v for k, v in pot.items() if k != "kind"}
    try:
        if kind == "screened_coulomb":
            return profiles.screened_coulomb(**p)
        if kind == "delta":
            return profiles.delta_potential(**p)
        if kind == "gaussian":
            return profiles.gaussian_hat_potential(**p)
    except TypeError as e:
        raise ConfigError(f"field 'potential': {e}") from e
    raise ConfigError(f"field 'potential.kind': unknown kind '{kind}'")


def _make_initial(cfg: RunConfig) -> dynamics.InitialKernel:
    opts = dict(cfg.initial) if cfg.initial else {}
    kind = opts.pop("kind", "gaussian_pure")
    if kind != "gaussian_pure":
        raise ConfigError(f"field 'initial.kind': unknown kind '{kind}'")
    opts.setdefault("alpha", 1.0)
    if "amplitude" not in opts and "hat_amplitude" not in opts:
        opts["hat_amplitude"] = cfg.epsilon
    try:
        return dynamics.gaussian_pure_kernel(cfg.d, **opts)
    except TypeError as e:
        raise ConfigError(f"field 'initial': {e}") from e


# ---------------------------------------------------------------------------
# fitting and norms


@dataclass(frozen=True)
class DecayFit:
    window: tuple[float, float]
    slope: float
    intercept: float
    residual: float

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValueError("fit window must satisfy t_lo < t_hi")
        if self.residual < 0:
            raise ValueError("residual is an rms, hence nonnegative")


def fit_decay(samples, window: tuple[float, float] = (5.0, 50.0)) -> DecayFit:
    """Least-squares log-log line through the in-window samples.

    ``samples`` holds (t, value) rows; the slope estimates the decay
    exponent.  Raises InsufficientSamples below 8 in-window points and
    NonPositiveValue when the window contains a value <= 0.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be (t, value) rows")
    t_lo, t_hi = float(window[0]), float(window[1])
    sel = (arr[:, 0] >= t_lo) & (arr[:, 0] <= t_hi)
    pts = arr[sel]
    if pts.shape[0] < 8:
        raise InsufficientSamples(
            f"{pts.shape[0]} samples in [{t_lo:g}, {t_hi:g}]; need 8")
    if np.any(pts[:, 1] <= 0.0):
        bad = float(pts[pts[:, 1] <= 0.0][0, 0])
        raise NonPositiveValue(f"value <= 0 at t = {bad:g}")
    lt = np.log(pts[:, 0])
    lv = np.log(pts[:, 1])
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = float(np.sqrt(np.mean((lv - (slope * lt + intercept)) ** 2)))
    return DecayFit(window=(t_lo, t_hi), slope=float(slope),
                    intercept=float(intercept), residual=resid)


def y_norm(rho: dynamics.DensityTrajectory, n1: int, n2: int) -> float:
    """Grid sup of <kt>^{N1} <k>^{N2} |rho_hat|."""
    k = np.abs(rho.k_grid)[:, None]
    t = rho.t_grid[None, :]
    wt = (1.0 + (k * t) ** 2) ** (n1 / 2.0) * (1.0 + k ** 2) ** (n2 / 2.0)
    return float(np.max(wt * np.abs(rho.rho_hat)))


# ---------------------------------------------------------------------------
# artifact helpers


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path: str, header: list[str], rows) -> int:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        n = 0
        for row in rows:
            w.writerow([_fmt(x) for x in row])
            n += 1
    return n


def _write_json(path: str, payload: dict) -> None:
    doc = {"schema": 1}
    doc.update(payload)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    raise TypeError(f"not JSON serializable: {type(x)!r}")


def _fit_or_note(samples, window):
    try:
        f = fit_decay(samples, window)
        return {"window": list(f.window), "slope": f.slope,
                "intercept": f.intercept, "residual": f.residual}
    except (InsufficientSamples, NonPositiveValue) as e:
        return {"error": f"{type(e).__name__}: {e}"}


# ---------------------------------------------------------------------------
# subcommand implementations


def _k_grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(cfg.k_min, cfg.k_max, cfg.k_count)


def _t_grid(cfg: RunConfig) -> np.ndarray:
    n = int(round(cfg.t_max / cfg.dt)) + 1
    return np.arange(n) * cfg.dt


def _cmd_marginal(cfg: RunConfig, out: str) -> int:
    prof = _make_profile(cfg.equilibrium, cfg.d)
    pot = _make_potential(cfg.potential)
    m = profiles.build_marginal(prof)
    us = np.linspace(-m.u_support, m.u_support, 801)
    _write_csv(os.path.join(out, "marginal.csv"), ["u", "phi", "dphi"],
               ((u, m.phi(u), m.dphi(u)) for u in us))
    ts = np.linspace(0.0, m.t_support, 801)
    _write_csv(os.path.join(out, "marginal_hat.csv"), ["t", "phi_hat"],
               ((t, m.phi_hat(t)) for t in ts))
    report = profiles.validate_assumptions(prof, pot, m, seed=cfg.seed)
    _write_json(os.path.join(out, "marginal.json"), {
        "total_mass": m.total_mass,
        "upsilon": m.upsilon if np.isfinite(m.upsilon) else None,
        "u_support": m.u_support,
        "t_support": m.t_support,
        "phi_hat_l1": m.phi_hat_l1,
        "phi_hat_deriv_l1": m.phi_hat_deriv_l1,
        "assumptions": [
            {"name": c.name, "status": c.status, "detail": c.detail}
            for c in report.checks],
        "ok": report.ok,
    })
    return 0


def _cmd_dispersion(cfg: RunConfig, out: str) -> int:
    prof = _make_profile(cfg.equilibrium, cfg.d)
    pot = _make_potential(cfg.potential)
    m = profiles.build_marginal(prof)
    taus = np.linspace(0.0, cfg.tau_max, cfg.tau_count)
    rows = []
    for k in _k_grid(cfg):
        for tau in taus:
            s = disp.evaluate(m, pot, 1j * tau * k, float(k))
            rows.append((k, 0.0, tau * k, s.route, s.value.real,
                         s.value.imag, s.error_estimate))
    # a strip of strictly unstable-side samples documents the analytic route
    for k in _k_grid(cfg)[:: max(cfg.k_count // 6, 1)]:
        for g in (0.5, 0.1, 0.02):
            lam = complex(g * k, 0.5 * k)
            s = disp.evaluate(m, pot, lam, float(k))
            rows.append((k, lam.real, lam.imag, s.route, s.value.real,
                         s.value.imag, s.error_estimate))
    _write_csv(os.path.join(out, "dispersion.csv"),
               ["k", "re_lambda", "im_lambda", "route", "re_D", "im_D",
                "err"], rows)
    return 0


def _cmd_stability(cfg: RunConfig, out: str) -> int:
    prof = _make_profile(cfg.equilibrium, cfg.d)
    pot = _make_potential(cfg.potential)
    m = profiles.build_marginal(prof)
    cert = stability.certify(m, pot)
    payload = {
        "verdict": cert.verdict,
        "theta0": cert.theta0,
        "phi0": None if cert.phi0 is None or not math.isfinite(cert.phi0)
        else cert.phi0,
        "phi0_divergent": cert.criterion.kind == "divergent",
        "criterion": {
            "kind": cert.criterion.kind,
            "value": cert.criterion.value,
            "shell_slope": cert.criterion.shell_slope,
        },
        "zero_location": None if cert.zero_location is None else
        {"tau_tilde": cert.zero_location[0], "k": cert.zero_location[1],
         "abs_D": cert.zero_residual},
        "scan_min": cert.scan_min,
        "scan_argmin": None if cert.scan_argmin is None else
        {"k": cert.scan_argmin[0], "tau_tilde": cert.scan_argmin[1]},
        "margin": cert.margin,
        "k_range": cert.k_range,
        "windings": [
            {"k": c.k, "rectangle": list(c.rectangle), "winding": c.winding,
             "residual": c.residual, "nodes": c.nodes}
            for c in cert.winding_checks],
        "notes": list(cert.notes),
    }
    _write_json(os.path.join(out, "stability.json"), payload)
    if np.isfinite(m.upsilon):
        ks = np.linspace(cfg.k_min, cfg.k_max, min(cfg.k_count, 16))
        try:
            curve = stability.phi_curve(m, pot, ks)
            _write_csv(os.path.join(out, "phi_curve.csv"), ["k", "phi"],
                       ((r[0], r[1]) for r in curve.samples))
        except disp.DivergentIntegral:
            pass
    return 2 if cert.verdict == "Inconclusive" else 0


def _cmd_green(cfg: RunConfig, out: str) -> int:
    prof = _make_profile(cfg.equilibrium, cfg.d)
    pot = _make_potential(cfg.potential)
    m = profiles.build_marginal(prof)
    ks = _k_grid(cfg)
    ts = _t_grid(cfg)
    # decay diagnostics only need table entries well above the fit floor;
    # the library default 1e-10 is for solver-grade tables
    gtol = float(cfg.tolerances.get("green", 1e-8))
    table = green.green_table(m, pot, ks, ts, tol=gtol, tail_tol=10 * gtol)
    rows = ((k, t, table.values[i, j].real, table.values[i, j].imag)
            for i, k in enumerate(ks) for j, t in enumerate(ts))
    _write_csv(os.path.join(out, "green.csv"), ["k", "t", "re_G", "im_G"],
               rows)
    fits = {}
    peaks = {}
    for i, k in enumerate(ks):
        env = green.dyadic_envelope(ts, np.abs(table.values[i]))
        if env.shape[0]:
            fits[f"{k:.6g}"] = _fit_or_note(env, cfg.fit_window)
        peaks[f"{k:.6g}"] = float(np.max(np.abs(table.values[i])))
    _write_json(os.path.join(out, "green_envelope.json"), {
        "fit_window": list(cfg.fit_window),
        "envelope_fits": fits,
        "max_abs_by_k": peaks,
    })
    return 0


def _decay_payload(cfg: RunConfig, traj: dynamics.DensityTrajectory) -> dict:
    fits = {}
    for n in range(min(cfg.n3, 2) + 1):
        rows = dynamics.reconstruct_sup_norm(traj, n=n)
        fits[str(n)] = _fit_or_note(rows, cfg.fit_window)
    return {"fit_window": list(cfg.fit_window), "sup_norm_fits": fits,
            "y_norm": y_norm(traj, cfg.n1, cfg.n2)}


def _traj_rows(traj: dynamics.DensityTrajectory):
    for i, k in enumerate(traj.k_grid):
        for j, t in enumerate(traj.t_grid):
            v = traj.rho_hat[i, j]
            yield (t, k, v.real, v.imag)


def _cmd_free(cfg: RunConfig, out: str) -> int:
    g0 = _make_initial(cfg)
    traj = dynamics.free_density_trajectory(g0, _k_grid(cfg), _t_grid(cfg),
                                            N1=cfg.n1, N2=cfg.n2)
    _write_csv(os.path.join(out, "free.csv"),
               ["t", "k", "re_rho", "im_rho"], _traj_rows(traj))
    _write_json(os.path.join(out, "free_decay.json"), _decay_payload(cfg, traj))
    return 0


def _cmd_linear(cfg: RunConfig, out: str) -> int:
    prof = _make_profile(cfg.equilibrium, cfg.d)
    pot = _make_potential(cfg.potential)
    m = profiles.build_marginal(prof)
    g0 = _make_initial(cfg)
    source = dynamics.free_density_trajectory(g0, _k_grid(cfg), _t_grid(cfg),
                                              N1=cfg.n1, N2=cfg.n2)
    traj = dynamics.volterra_solve(m, pot, source)
    _write_csv(os.path.join(out, "linear.csv"),
               ["t", "k", "re_rho", "im_rho"], _traj_rows(traj))
    _write_json(os.path.join(out, "linear_decay.json"),
                _decay_payload(cfg, traj))
    return 0


def _cmd_nonlinear(cfg: RunConfig, out: str) -> int:
    prof = _make_profile(cfg.equilibrium, cfg.d)
    pot = _make_potential(cfg.potential)
    g0 = _make_initial(cfg)
    state, traj, tracker, report = nonlinear.solve_selfconsistent(
        g0, prof, pot, k_box=cfg.nl_box, n_pts=cfg.nl_points, dt=cfg.nl_dt,
        t_max=cfg.nl_t_max, n1=cfg.n1, n2=cfg.n2)
    _write_csv(os.path.join(out, "nonlinear_rho.csv"),
               ["t", "k", "re_rho", "im_rho"], _traj_rows(traj))
    scat = nonlinear.scattering_diagnostic(state)
    _write_csv(os.path.join(out, "scattering.csv"), ["t", "hs_distance"],
               (tuple(r) for r in scat))
    hs = nonlinear.hs_norm(state)
    positive = scat[scat[:, 1] > 0]
    _write_json(os.path.join(out, "nonlinear_report.json"), {
        "iterations": report.iterations,
        "distances": list(report.distances),
        "contraction_factors": list(report.contraction_factors),
        "leakage": report.leakage,
        "hermitian_defect": nonlinear.hermitian_defect(state),
        "hs_initial": float(hs[0]),
        "hs_final": float(hs[-1]),
        "y_norm": tracker.y_norm,
        "z_norm": tracker.z_norm,
        "available_x_orders": tracker.available_orders,
        "scattering_fit": _fit_or_note(positive, cfg.fit_window)
        if positive.shape[0] >= 8 else {"error": "too few positive samples"},
    })
    return 0


def _cmd_report(cfg: RunConfig, out: str) -> int:
    summary: dict[str, Any] = {"csv": {}, "json": {}}
    for name in sorted(os.listdir(out)):
        path = os.path.join(out, name)
        if name.endswith(".csv"):
            with open(path) as fh:
                n = sum(1 for _ in fh) - 1
            summary["csv"][name] = {"rows": max(n, 0)}
        elif name.endswith(".json") and name != "report.json":
            with open(path) as fh:
                summary["json"][name] = json.load(fh)
    _write_json(os.path.join(out, "report.json"), summary)
    return 0


_COMMANDS = {
    "marginal": _cmd_marginal,
    "dispersion": _cmd_dispersion,
    "stability": _cmd_stability,
    "green": _cmd_green,
    "free": _cmd_free,
    "linear": _cmd_linear,
    "nonlinear": _cmd_nonlinear,
    "report": _cmd_report,
}


def run(cfg: RunConfig, subcommand: str) -> int:
    """Dispatch one subcommand; returns the process exit code."""
    if subcommand not in _COMMANDS:
        raise ValueError(f"unknown subcommand '{subcommand}'; choose from "
                         f"{', '.join(SUBCOMMANDS)}")
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    np.random.seed(cfg.seed % (2 ** 32))
    return _COMMANDS[subcommand](cfg, out)

"""Numerical checks of the expansion: algebraic identities, derivative oracles,
PDE-residual scaling in eps, and the Monte Carlo sandwich bound."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import expansion as ex
from .model import ModelParams, classify_regime
from .simulator import SimConfig, check_stability, default_horizon, estimate_g_hat

__all__ = [
    "Check",
    "Report",
    "ResidualReport",
    "default_probe_points",
    "fd_oracle",
    "g2_cross_validation",
    "identity_suite",
    "make_grid",
    "pde_residual",
    "residual_scaling",
    "sandwich_check",
]

IDENTITY_RTOL = 1e-9
FD_RTOL = 1e-5
FD_ATOL = 1e-8


@dataclass
class Check:
    name: str
    passed: bool
    worst: float
    threshold: float
    details: dict = field(default_factory=dict)


@dataclass
class Report:
    suite: str
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def make_grid(p: ModelParams, s_range=(10.0, 1000.0), n_s=50, n_xi=50, xi_factor=3.0):
    """Rectangular grid in ``(s, xi / xi(s))`` covering ``[0, xi_factor * xi(s)]`` at each price."""
    s = np.linspace(s_range[0], s_range[1], n_s)
    frac = np.linspace(0.0, xi_factor, n_xi)
    S, F = np.meshgrid(s, frac, indexing="ij")
    return S, F * p.merton_dollars / S


def _rel_check(name, resid, scale, rtol, mask=None, **details):
    rel = np.abs(resid) / scale
    if mask is not None:
        rel = rel[mask]
    worst = float(np.max(rel)) if rel.size else 0.0
    return Check(name, bool(worst < rtol), worst, rtol, details)


def identity_suite(p: ModelParams, s_range=(10.0, 1000.0), n_s=50, n_xi=50, g1_shift: float = 0.0) -> Report:
    """Order-by-order identities of the expansion on a grid.

    ``g1_shift`` adds a constant to ``G1`` inside the order-sqrt(eps) check
    only, to confirm that the suite detects a wrong ``G1``.
    """
    regime = classify_regime(p)
    S, XI = make_grid(p, s_range, n_s, n_xi)
    G0 = ex.g0(p)
    gs = p.gamma * S
    checks = []

    gx1 = ex.g1_xi(p, S, XI)
    lg0 = ex.apply_L_xi(p, S, XI, G0, 0.0, 0.0)
    r1 = 1.0 - p.rho * G0 + lg0 - gx1**2 / (2.0 * gs * G0)
    checks.append(_rel_check("order_1", r1, max(1.0, G0), IDENTITY_RTOL))

    val, ds, dss, _ = ex.g1_derivatives(p, S, XI, regime)
    val = val + g1_shift
    off = ~ex.near_line_mask(p, S, XI)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ex.NearLineWarning)
        gx2 = ex.g2_xi(p, S, XI, "ratio", regime)
    pieces = [
        0.5 * p.sigma**2 * S**2 * dss,
        (p.mu * S - p.gamma * XI * p.sigma**2 * S**2) * ds,
        (0.5 * p.gamma**2 * p.sigma**2 * XI**2 * S**2 - p.gamma * p.mu * XI * S) * val,
        -p.rho * val,
        -gx1 * gx2 / (gs * G0),
        gx1**2 * val / (2.0 * gs * G0**2),
    ]
    r2 = sum(pieces)
    scale = sum(np.abs(t) for t in pieces)
    checks.append(_rel_check("order_sqrt_eps", r2, scale, IDENTITY_RTOL, mask=off, g1_shift=g1_shift))

    s_line = np.linspace(s_range[0], s_range[1], n_s)
    c, cs, css = ex.c_derivatives(p, s_line, regime)
    kappa = p.rho + p.mu**2 / (2.0 * p.sigma**2)
    forcing = p.mu**2 * G0 / (2.0 * np.sqrt(p.gamma * s_line) * p.sigma)
    ode = [0.5 * p.sigma**2 * s_line**2 * css, -kappa * c, forcing]
    checks.append(_rel_check("c_ode", sum(ode), sum(np.abs(t) for t in ode), IDENTITY_RTOL))

    xi_line = p.merton_dollars / s_line
    lv, lds, ldss, _ = ex.g1_derivatives(p, s_line, xi_line, regime)
    line_terms = [
        0.5 * p.sigma**2 * s_line**2 * ldss,
        (p.mu * s_line - p.gamma * xi_line * p.sigma**2 * s_line**2) * lds,
        (0.5 * p.gamma**2 * p.sigma**2 * xi_line**2 * s_line**2 - p.gamma * p.mu * xi_line * s_line) * lv,
        -p.rho * lv,
    ]
    checks.append(
        _rel_check("merton_line_annihilation", sum(line_terms), sum(np.abs(t) for t in line_terms), IDENTITY_RTOL)
    )
    expected_ss = css + p.mu**2 * G0 / (np.sqrt(p.gamma * s_line) * p.sigma**3 * s_line**2)
    checks.append(_rel_check("line_second_derivative", ldss - expected_ss, np.abs(expected_ss), IDENTITY_RTOL))

    lam_p, lam_m = ex.characteristic_roots(p)
    char = [
        0.5 * p.sigma**2 * np.array([lam_p, lam_m]) ** 2,
        -0.5 * p.sigma**2 * np.array([lam_p, lam_m]),
        -kappa * np.ones(2),
    ]
    checks.append(
        _rel_check(
            "characteristic_roots", sum(char), sum(np.abs(t) for t in char), 1e-12, lambda_plus=lam_p, lambda_minus=lam_m
        )
    )

    x = np.log(s_line)
    ct, ctx, ctxx = ex.c_tilde(p, x, regime)
    xode = [
        0.5 * p.sigma**2 * ctxx,
        -0.5 * p.sigma**2 * ctx,
        -kappa * ct,
        p.mu**2 * G0 / (2.0 * math.sqrt(p.gamma) * p.sigma) * np.exp(-0.5 * x),
    ]
    checks.append(
        _rel_check(
            "particular_amplitude",
            sum(xode),
            sum(np.abs(t) for t in xode),
            IDENTITY_RTOL,
            amplitude=ex.particular_amplitude(p, regime),
        )
    )

    lower = 1.0 / kappa
    checks.append(_rel_check("g0_lower_bound", np.array([G0 - lower]), lower, 1e-12, g0=G0, lower_bound=lower))

    for chk in checks:
        chk.details["regime"] = regime.kind.value
    return Report("identities", checks)


def _central(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def _second(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / h**2


def _fd_compare(name, analytic, numeric):
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    err = np.abs(analytic - numeric)
    bound = FD_RTOL * np.maximum(np.abs(analytic), np.abs(numeric)) + FD_ATOL
    ratio = err / bound
    return Check(name, bool(np.all(err <= bound)), float(np.max(ratio)), 1.0, {"max_abs_error": float(np.max(err))})


def fd_oracle(p: ModelParams, s_range=(10.0, 1000.0), n_s=12, n_xi=12) -> Report:
    """Compare every analytic derivative with central differences, step ``1e-5 max(1, |x|)``.

    ``worst`` is the largest error as a fraction of the allowed
    ``1e-5 * |value| + 1e-8``.
    """
    regime = classify_regime(p)
    S, XI = make_grid(p, s_range, n_s, n_xi)
    hs = 1e-5 * np.maximum(1.0, np.abs(S))
    hx = 1e-5 * np.maximum(1.0, np.abs(XI))
    val, ds, dss, dxi = ex.g1_derivatives(p, S, XI, regime)

    def g1_s(s):
        return ex.g1(p, s, XI, regime)

    def g1_x(x):
        return ex.g1(p, S, x, regime)

    checks = [
        _fd_compare("dG1_dxi", dxi, _central(g1_x, XI, hx)),
        _fd_compare("dG1_ds", ds, _central(g1_s, S, hs)),
        _fd_compare("d2G1_ds2", dss, _second(g1_s, S, hs)),
    ]
    s_line = S[:, 0]
    h_line = hs[:, 0]
    _, cs, css = ex.c_derivatives(p, s_line, regime)

    def c_fn(s):
        return ex.c_of_s(p, s, regime)

    checks.append(_fd_compare("dC_ds", cs, _central(c_fn, s_line, h_line)))
    checks.append(_fd_compare("d2C_ds2", css, _second(c_fn, s_line, h_line)))
    return Report("fd", checks)


def pde_residual(p: ModelParams, s, xi, eps: float, corrected: bool = False):
    """Residual of the reduced HJB equation for the truncated expansion at cost scale ``eps``.

    ``G = G0 + sqrt(eps) G1`` with ``G_xi = sqrt(eps) G1_xi`` (raw) or
    ``sqrt(eps) G1_xi + eps G2_xi`` (corrected).
    """
    r = math.sqrt(eps)
    val, ds, dss, dxi = ex.g1_derivatives(p, s, xi)
    G = ex.g0(p) + r * np.asarray(val)
    LG = ex.apply_L_xi(p, s, xi, G, r * np.asarray(ds), r * np.asarray(dss))
    gx = r * np.asarray(dxi)
    if corrected:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ex.NearLineWarning)
            gx = gx + eps * np.asarray(ex.g2_xi(p, s, xi, "ratio"))
    out = 1.0 + LG - p.rho * G - gx**2 / (2.0 * p.gamma * eps * np.asarray(s, dtype=float) * G)
    return out if np.ndim(out) else float(out)


@dataclass
class ResidualReport:
    point: tuple[float, float]
    eps_values: list[float]
    raw: list[float]
    corrected: list[float]
    fitted_exponents: tuple[float, float]


def _slope(eps_values, residuals):
    return float(np.polyfit(np.log(eps_values), np.log(np.abs(residuals)), 1)[0])


def default_probe_points(p: ModelParams):
    """Prices 50, 100, 500 at half and one-and-a-half times the Merton inventory."""
    return [(s, f * p.merton_dollars / s) for s in (50.0, 100.0, 500.0) for f in (0.5, 1.5)]


def residual_scaling(p: ModelParams, points=None, eps_values=(1e-2, 1e-3, 1e-4)) -> tuple[list[ResidualReport], Report]:
    points = default_probe_points(p) if points is None else points
    reports = []
    for s, xi in points:
        raw = [pde_residual(p, s, xi, e, corrected=False) for e in eps_values]
        cor = [pde_residual(p, s, xi, e, corrected=True) for e in eps_values]
        reports.append(
            ResidualReport((s, xi), list(eps_values), raw, cor, (_slope(eps_values, raw), _slope(eps_values, cor)))
        )
    raw_dev = max(abs(r.fitted_exponents[0] - 0.5) for r in reports)
    cor_dev = max(abs(r.fitted_exponents[1] - 1.0) for r in reports)
    detail = {"exponents": [[r.point[0], r.point[1], *r.fitted_exponents] for r in reports]}
    checks = [
        Check("raw_exponent", raw_dev <= 0.1, raw_dev, 0.1, dict(detail, target=0.5)),
        Check("corrected_exponent", cor_dev <= 0.15, cor_dev, 0.15, dict(detail, target=1.0)),
    ]
    return reports, Report("residual", checks)


def g2_cross_validation(p: ModelParams, s_range=(10.0, 1000.0), n_s=50, n_xi=50) -> Report:
    """Ratio-form ``G2_xi`` against the factored form.

    Off the near-line band the two must agree to ``1e-6`` relative. On the
    Merton line both are required to vanish to ``1e-10`` absolute.
    """
    S, XI = make_grid(p, s_range, n_s, n_xi)
    off = ~ex.near_line_mask(p, S, XI)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", (ex.NearLineWarning, ex.FactoredFormWarning))
        ratio = np.asarray(ex.g2_xi(p, S, XI, "ratio"))
        factored = np.asarray(ex.g2_xi(p, S, XI, "factored"))
        s_line = S[:, 0]
        xi_line = p.merton_dollars / s_line
        on_ratio = np.asarray(ex.g2_xi(p, s_line, xi_line, "ratio"))
        on_fact = np.asarray(ex.g2_xi(p, s_line, xi_line, "factored"))
    printed = np.asarray(ex.g2_xi_factored_printed(p, S, XI))
    rel = np.abs(ratio - factored)[off] / np.maximum(np.abs(ratio[off]), 1e-300)
    printed_rel = float(np.max(np.abs(printed - ratio)[off] / np.maximum(np.abs(ratio[off]), 1e-300)))
    on_line = float(max(np.max(np.abs(on_ratio)), np.max(np.abs(on_fact))))
    checks = [
        Check(
            "ratio_vs_factored",
            bool(np.max(rel) < 1e-6),
            float(np.max(rel)),
            1e-6,
            {"printed_coefficients_max_rel_error": printed_rel, "printed_coefficients_used": printed_rel < 1e-6},
        ),
        Check(
            "vanish_on_merton_line",
            on_line < 1e-10,
            on_line,
            1e-10,
            {"ratio_on_line_max": float(np.max(np.abs(on_ratio))), "factored_on_line_max": float(np.max(np.abs(on_fact)))},
        ),
    ]
    return Report("g2_cross_validation", checks)


def sandwich_check(
    p: ModelParams,
    eps_values=(1e-2, 1e-3, 1e-4),
    exit_M: float = 2e4,
    n_paths: int = 10_000,
    dt: float = 0.004,
    s0: float = 100.0,
    seed: int = 0,
    paired: bool = True,
    threads: int = 1,
) -> Report:
    """Monte Carlo check that ``G0 <= g_hat <= G0 + O(sqrt(eps))``.

    For each ``eps`` the leading strategy is run from the Merton line at
    ``s0``. Passes when every estimate satisfies ``g_hat >= G0 - 2 SE`` and
    the normalized gaps ``(g_hat - G0)/sqrt(eps)`` are positive with
    max/min ratio at most 10. All stability guards are checked before any
    simulation starts.
    """
    cfgs = []
    for e in eps_values:
        pe = p.replace(eps=e)
        cfg = SimConfig(s0=s0, T=default_horizon(pe), dt=dt, seed=seed, n_paths=n_paths, exit_M=exit_M)
        check_stability(pe, cfg)
        cfgs.append((pe, cfg))
    G0 = ex.g0(p)
    rows = []
    for pe, cfg in cfgs:
        est = estimate_g_hat(pe, cfg, threads=threads)
        mean = est.extras["cv_mean"] if paired else est.mean
        se = est.extras["cv_std_error"] if paired else est.std_error
        rows.append(
            {
                "eps": pe.eps,
                "g_hat": mean,
                "std_error": se,
                "plain_mean": est.mean,
                "plain_std_error": est.std_error,
                "normalized_gap": (mean - G0) / math.sqrt(pe.eps),
                "normalized_ci": [(mean - 2 * se - G0) / math.sqrt(pe.eps), (mean + 2 * se - G0) / math.sqrt(pe.eps)],
                "n_paths": est.n_paths,
                "n_exited": est.extras["n_exited"],
                "truncation_T": est.truncation_T,
                "truncation_bound": est.truncation_bound,
            }
        )
    lower_slack = min((r["g_hat"] + 2 * r["std_error"] - G0) for r in rows)
    gaps = [r["normalized_gap"] for r in rows]
    spread = max(gaps) / min(gaps) if min(gaps) > 0 else float("inf")
    common = {"g0": G0, "rows": rows, "paired": paired, "exit_M": exit_M, "dt": dt}
    checks = [
        Check("lower_bound", lower_slack >= 0.0, lower_slack, 0.0, common),
        Check("normalized_gap_spread", spread <= 10.0, spread, 10.0, {"gaps": gaps}),
    ]
    return Report("sandwich", checks)

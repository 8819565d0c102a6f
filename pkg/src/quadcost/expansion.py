"""Terms of the sqrt(eps) expansion of the value function.

With ``V(w, s, xi) = -(1/gamma) exp(-gamma w) G(s, xi)`` the reduced value
``G`` solves::

    1 + L G - rho G - G_xi^2 / (2 gamma eps s G) = 0,
    L = (sigma^2 s^2 / 2) d_ss + (mu s - gamma xi sigma^2 s^2) d_s
        + gamma^2 sigma^2 xi^2 s^2 / 2 - gamma mu xi s,

and ``G = G0 + sqrt(eps) G1 + eps G2 + ...``. ``G0`` is the Merton
coefficient, ``G1`` is quadratic in the dollar deviation
``u = xi s - mu/(gamma sigma^2)`` plus a line value ``C(s)`` chosen so that
``(L - rho) G1`` vanishes on the Merton line, and ``G2`` is known through
its ``xi``-derivative.

All evaluators broadcast over numpy arrays; scalar inputs give floats.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .merton import merton_value_coeff
from .model import DomainError, MarketState, ModelParams, Regime, classify_regime

__all__ = [
    "ExpansionTerms",
    "FactoredFormWarning",
    "NEAR_LINE_RTOL",
    "NearLineWarning",
    "RegimeError",
    "apply_L_xi",
    "apply_L_xi_to_g1",
    "c_derivatives",
    "c_of_s",
    "c_tilde",
    "characteristic_roots",
    "dollar_deviation",
    "expansion_terms",
    "g0",
    "g1",
    "g1_derivatives",
    "g1_xi",
    "g2_xi",
    "g2_xi_factored_printed",
    "g2_xi_quotient_coeffs",
    "g_approx",
    "near_line_mask",
    "particular_amplitude",
    "value_approx",
]

# Band |xi s - mu/(gamma sigma^2)| < NEAR_LINE_RTOL * max(1, mu/(gamma sigma^2)) where the
# ratio form of G2_xi is evaluated through the cancelled quotient.
NEAR_LINE_RTOL = 1e-6

# Agreement required between the printed factored G2_xi and the ratio form.
FACTORED_RTOL = 1e-6


class RegimeError(DomainError):
    """Formula evaluated in a regime where it does not apply."""


class NearLineWarning(UserWarning):
    """The ratio form of G2_xi was evaluated inside the near-line band via its limit."""


class FactoredFormWarning(UserWarning):
    """The printed factored G2_xi disagreed with the ratio form; re-derived coefficients used."""


def _out(x):
    return x if np.ndim(x) else float(x)


def _price(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0.0)):
        raise DomainError("price s must be positive")
    return s


def g0(p: ModelParams) -> float:
    return merton_value_coeff(p)


def dollar_deviation(p: ModelParams, s, xi):
    """``xi s - mu/(gamma sigma^2)``: dollars held above the Merton line."""
    return np.asarray(xi, dtype=float) * _price(s) - p.merton_dollars


def near_line_mask(p: ModelParams, s, xi):
    u = dollar_deviation(p, s, xi)
    return np.abs(u) < NEAR_LINE_RTOL * max(1.0, p.merton_dollars)


# --- line value C(s) -------------------------------------------------------


def characteristic_roots(p: ModelParams) -> tuple[float, float]:
    """Roots ``lambda_+ > 0 > lambda_-`` of ``(sigma^2/2)(l^2 - l) = rho + mu^2/(2 sigma^2)``."""
    disc = math.sqrt(0.25 + (2.0 * p.sigma**2 * p.rho + p.mu**2) / p.sigma**4)
    return 0.5 + disc, 0.5 - disc


def _forcing(p: ModelParams) -> float:
    # Coefficient F of the forcing F s^(-1/2) in the line ODE.
    return p.mu**2 * g0(p) / (2.0 * math.sqrt(p.gamma) * p.sigma)


def particular_amplitude(p: ModelParams, regime: Regime | None = None) -> float:
    """Amplitude of the particular solution of the line ODE in ``x = log s``.

    ``A exp(-x/2)`` off the critical manifold, ``A x exp(-x/2)`` on it. The
    homogeneous amplitudes are fixed to zero (the infinite-risk-aversion
    limit holds nothing).
    """
    regime = regime or classify_regime(p)
    if regime.is_critical:
        return _forcing(p) / p.sigma**2
    denom = p.rho + p.mu**2 / (2.0 * p.sigma**2) - 3.0 * p.sigma**2 / 8.0
    scale = max(1.0, p.rho, p.mu**2 / (2.0 * p.sigma**2), 3.0 * p.sigma**2 / 8.0)
    if abs(denom) < 1e-10 * scale:
        raise RegimeError("non-critical line value evaluated on the critical manifold")
    return _forcing(p) / denom


def c_tilde(p: ModelParams, x, regime: Regime | None = None):
    """``C(exp(x))`` and its first two x-derivatives."""
    regime = regime or classify_regime(p)
    a3 = particular_amplitude(p, regime)
    x = np.asarray(x, dtype=float)
    e = np.exp(-0.5 * x)
    if regime.is_critical:
        c = a3 * x * e
        cx = a3 * e * (1.0 - 0.5 * x)
        cxx = a3 * e * (0.25 * x - 1.0)
    else:
        c = a3 * e
        cx = -0.5 * c
        cxx = 0.25 * c
    return _out(c), _out(cx), _out(cxx)


def c_derivatives(p: ModelParams, s, regime: Regime | None = None):
    """``C(s), C'(s), C''(s)``."""
    regime = regime or classify_regime(p)
    s = _price(s)
    a3 = particular_amplitude(p, regime)
    r = 1.0 / np.sqrt(s)
    if regime.is_critical:
        ls = np.log(s)
        c = a3 * r * ls
        cs = a3 * r / s * (1.0 - 0.5 * ls)
        css = a3 * r / s**2 * (0.75 * ls - 2.0)
    else:
        c = a3 * r
        cs = -0.5 * c / s
        css = 0.75 * c / s**2
    return _out(c), _out(cs), _out(css)


def c_of_s(p: ModelParams, s, regime: Regime | None = None):
    return c_derivatives(p, s, regime)[0]


# --- first-order term ---------------------------------------------------------


def g1_xi(p: ModelParams, s, xi):
    """``dG1/dxi``; negative below the Merton line, positive above."""
    s = _price(s)
    xi = np.asarray(xi, dtype=float)
    out = -np.sqrt(p.gamma * s) * (p.mu / p.sigma - p.gamma * p.sigma * s * xi) * g0(p)
    return _out(out)


def _quad_coeff(p: ModelParams) -> float:
    # G1 = a s^(-1/2) u^2 + C(s)
    return 0.5 * math.sqrt(p.gamma**3 * p.sigma**2) * g0(p)


def g1_derivatives(p: ModelParams, s, xi, regime: Regime | None = None):
    """``G1, dG1/ds, d2G1/ds2, dG1/dxi`` with analytic derivatives."""
    regime = regime or classify_regime(p)
    s = _price(s)
    xi = np.asarray(xi, dtype=float)
    a = _quad_coeff(p)
    u = xi * s - p.merton_dollars
    r = 1.0 / np.sqrt(s)
    c, cs, css = c_derivatives(p, s, regime)
    val = a * r * u**2 + c
    ds = a * (-0.5 * r / s * u**2 + 2.0 * xi * r * u) + cs
    dss = a * (0.75 * r / s**2 * u**2 - 2.0 * xi * r / s * u + 2.0 * xi**2 * r) + css
    dxi = g1_xi(p, s, xi)
    return _out(val), _out(ds), _out(dss), _out(dxi)


def g1(p: ModelParams, s, xi, regime: Regime | None = None):
    return g1_derivatives(p, s, xi, regime)[0]


def apply_L_xi(p: ModelParams, s, xi, f, f_s, f_ss):
    """Apply the generator-plus-potential operator to a function given by its s-derivatives."""
    s = np.asarray(s, dtype=float)
    xi = np.asarray(xi, dtype=float)
    sig2 = p.sigma**2
    out = (
        0.5 * sig2 * s**2 * f_ss
        + (p.mu * s - p.gamma * xi * sig2 * s**2) * f_s
        + (0.5 * p.gamma**2 * sig2 * xi**2 * s**2 - p.gamma * p.mu * xi * s) * f
    )
    return _out(out)


def apply_L_xi_to_g1(p: ModelParams, s, xi, regime: Regime | None = None):
    val, ds, dss, _ = g1_derivatives(p, s, xi, regime)
    return apply_L_xi(p, s, xi, val, ds, dss)


# --- second-order xi-derivative -------------------------------------------


def g2_xi_quotient_coeffs(p: ModelParams, s, regime: Regime | None = None):
    """Coefficients ``q1..q4`` of ``gamma s G0 (L - rho) G1 / G1_xi = q1 + q2 u + q3 u^2 + q4 u^3``.

    ``(L - rho) G1`` is a quartic in the dollar deviation ``u`` whose constant
    term vanishes by the choice of ``C(s)``; dividing by ``G1_xi``, which is
    linear in ``u``, leaves this cubic. ``q3`` and ``q4`` do not depend on ``s``.
    """
    regime = regime or classify_regime(p)
    s = _price(s)
    mu, sig, gam, rho = p.mu, p.sigma, p.gamma, p.rho
    G0 = g0(p)
    c, cs, _ = c_derivatives(p, s, regime)
    sig2 = sig**2
    poly = 4.0 * mu**2 + 16.0 * mu * sig2 + 8.0 * rho * sig2 - 3.0 * sig2**2
    q1 = 0.5 * mu * G0 - math.sqrt(gam) * sig * s**1.5 * cs
    q2 = -gam * poly * G0 / (16.0 * sig2) + 0.5 * gam**1.5 * sig * np.sqrt(s) * c
    q3 = -0.75 * gam**2 * sig2 * G0
    q4 = 0.25 * gam**3 * sig2 * G0
    return _out(q1), _out(q2), q3, q4


def _g2_xi_quotient(p, s, xi, regime):
    q1, q2, q3, q4 = g2_xi_quotient_coeffs(p, s, regime)
    u = dollar_deviation(p, s, xi)
    return q1 + u * (q2 + u * (q3 + u * q4))


def _g2_tail(p, s, xi, regime):
    # The G1_xi G1 / (2 G0) part common to every form.
    val, _, _, dxi = g1_derivatives(p, s, xi, regime)
    return np.asarray(dxi) * np.asarray(val) / (2.0 * g0(p))


def _g2_xi_ratio(p, s, xi, regime, warn=True):
    s_b, xi_b = np.broadcast_arrays(_price(s), np.asarray(xi, dtype=float))
    near = near_line_mask(p, s_b, xi_b)
    val, ds, dss, dxi = (np.asarray(t) for t in g1_derivatives(p, s_b, xi_b, regime))
    numer = np.asarray(apply_L_xi(p, s_b, xi_b, val, ds, dss)) - p.rho * val
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = p.gamma * s_b * g0(p) * numer / dxi
    if np.any(near):
        if warn:
            warnings.warn(
                f"G2_xi ratio form: {int(near.sum())} point(s) inside the near-line band "
                "evaluated by the cancelled quotient",
                NearLineWarning,
                stacklevel=3,
            )
        ratio = np.where(near, _g2_xi_quotient(p, s_b, xi_b, regime), ratio)
    return ratio + dxi * val / (2.0 * g0(p))


def g2_xi_factored_printed(p: ModelParams, s, xi):
    """Factored ``G2_xi`` with the ``D1``/``D2`` coefficients in closed form.

    Kept for cross-checking only; it does not agree with the ratio form.
    """
    s = _price(s)
    xi = np.asarray(xi, dtype=float)
    mu, sig, gam, rho = p.mu, p.sigma, p.gamma, p.rho
    sig2 = sig**2
    a = mu**2 + 2.0 * rho * sig2
    b = 4.0 * mu**2 + 8.0 * rho * sig2 - 3.0 * sig2**2
    d1 = sig2 * (gam**2 * (4.0 * mu + 8.0 * rho - 3.0 * sig2) - 4.0 * gam**4 * xi**2 * s**2 * sig2) / (
        8.0 * gam * a
    ) - (32.0 * mu**2 * gam**2 * sig2 - 4.0 * gam**3 * xi * s * (2.0 * mu + 3.0 * sig2)) / (8.0 * gam * a * b)
    d2 = -mu * sig2**2 * (gam**2 * b + 4.0 * mu * gam**2 * sig2) / (gam * a * b)
    u = xi * s - p.merton_dollars
    return _out(u * (d1 + d2) + _g2_tail(p, s, xi, classify_regime(p)))


def g2_xi(p: ModelParams, s, xi, form: str = "ratio", regime: Regime | None = None):
    """Second-order ``xi``-derivative ``G2_xi``.

    Parameters
    ----------
    form : {"ratio", "factored"}
        ``"ratio"`` divides ``gamma s G0 (L - rho) G1`` by ``G1_xi`` and adds
        ``G1_xi G1 / (2 G0)``; inside the near-line band the removable
        singularity is cancelled analytically and a :class:`NearLineWarning`
        is issued. ``"factored"`` evaluates the closed-form factorization,
        checks it against the ratio form and, when they disagree beyond
        ``1e-6`` relative, warns with :class:`FactoredFormWarning` and returns
        the polynomial quotient instead. Non-critical regime only.
    """
    regime = regime or classify_regime(p)
    if form == "ratio":
        return _out(_g2_xi_ratio(p, s, xi, regime))
    if form != "factored":
        raise ValueError(f"unknown form {form!r}")
    if regime.is_critical:
        raise RegimeError("factored G2_xi is only available off the critical manifold")
    printed = np.asarray(g2_xi_factored_printed(p, s, xi))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearLineWarning)
        reference = _g2_xi_ratio(p, s, xi, regime, warn=False)
    scale = np.maximum(np.abs(reference), 1e-300)
    worst = float(np.max(np.abs(printed - reference) / scale))
    if worst <= FACTORED_RTOL:
        return _out(printed)
    warnings.warn(
        f"closed-form factored G2_xi disagrees with the ratio form (max relative error {worst:.3g}); "
        "using re-derived quotient coefficients",
        FactoredFormWarning,
        stacklevel=2,
    )
    return _out(_g2_xi_quotient(p, s, xi, regime) + _g2_tail(p, s, xi, regime))


# --- assembled approximation -----------------------------------------------


def g_approx(p: ModelParams, s, xi, regime: Regime | None = None):
    """Two-term reduced value ``G0 + sqrt(eps) G1``."""
    return _out(g0(p) + math.sqrt(p.eps) * np.asarray(g1(p, s, xi, regime)))


def value_approx(p: ModelParams, state: MarketState) -> float:
    """Two-term approximation of ``V(w, s, xi)``."""
    return -math.exp(-p.gamma * state.w) / p.gamma * g_approx(p, state.s, state.xi)


@dataclass(frozen=True)
class ExpansionTerms:
    g0: float
    g1: float
    g1_xi: float
    g2_xi: float
    c_of_s: float
    regime: Regime
    near_line: bool = False


def expansion_terms(p: ModelParams, s: float, xi: float) -> ExpansionTerms:
    regime = classify_regime(p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearLineWarning)
        g2 = g2_xi(p, s, xi, "ratio", regime)
    return ExpansionTerms(
        g0=g0(p),
        g1=g1(p, s, xi, regime),
        g1_xi=g1_xi(p, s, xi),
        g2_xi=g2,
        c_of_s=c_of_s(p, s, regime),
        regime=regime,
        near_line=bool(near_line_mask(p, s, xi)),
    )

import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from quadcost import expansion as ex
from quadcost.model import DomainError, ModelParams, Regime, RegimeKind, classify_regime


# --- independent symbolic derivation --------------------------------------------


def _symbolic_terms(mu, sigma, gamma, rho, critical):
    """Derive G1 and G2_xi from scratch for rational parameters.

    G1_xi is the negative root of the order-one equation; C(s) is fixed by
    requiring the order-sqrt(eps) equation to hold on the Merton line.
    """
    s, xi, k = sp.symbols("s xi k", positive=True)
    mu, sigma, gamma, rho = (sp.nsimplify(v) for v in (mu, sigma, gamma, rho))
    G0 = 2 * sigma**2 / (2 * rho * sigma**2 + mu**2)
    g1x = -sp.sqrt(gamma * s) * (mu / sigma - gamma * sigma * s * xi) * G0
    order1 = 1 - rho * G0 + gamma**2 * sigma**2 * xi**2 * s**2 * G0 / 2 - gamma * mu * xi * s * G0
    assert sp.simplify(g1x**2 - 2 * gamma * s * G0 * order1) == 0
    shape = s ** sp.Rational(-1, 2) * (sp.log(s) if critical else 1)
    G1 = sp.integrate(g1x, (xi, mu / (gamma * sigma**2 * s), xi)) + k * shape

    def L_minus_rho(f):
        return (
            sigma**2 * s**2 / 2 * sp.diff(f, s, 2)
            + (mu * s - gamma * xi * sigma**2 * s**2) * sp.diff(f, s)
            + (gamma**2 * sigma**2 * xi**2 * s**2 / 2 - gamma * mu * xi * s - rho) * f
        )

    on_line = sp.simplify(L_minus_rho(G1).subs(xi, mu / (gamma * sigma**2 * s)))
    k_val = sp.solve(on_line, k)[0]
    G1 = G1.subs(k, k_val)
    numer = sp.expand(gamma * s * G0 * L_minus_rho(G1))
    g2 = sp.cancel(numer / g1x) + g1x * G1 / (2 * G0)
    return s, xi, G1, g1x, g2


@pytest.fixture(scope="module")
def symbolic_default():
    return _symbolic_terms(0.05, 0.15, 0.01, 0.05, critical=False)


@pytest.fixture(scope="module")
def symbolic_critical():
    return _symbolic_terms(0.5, 1.0, 1.0, 0.25, critical=True)


POINTS = [(50.0, 0.3), (100.0, 0.0), (100.0, 1.0), (100.0, 2.0), (250.0, 3.0), (900.0, 0.05)]


def _check_against_symbolic(p, sym):
    s, xi, G1, g1x, g2 = sym
    pts = POINTS + [(sv, p.merton_dollars / sv) for sv in (40.0, 100.0, 700.0)]
    for sv, xv in pts:
        sub = {s: sp.Float(sv, 30), xi: sp.Float(xv, 30)}
        assert ex.g1(p, sv, xv) == pytest.approx(float(G1.evalf(30, subs=sub)), rel=1e-11)
        assert ex.g1_xi(p, sv, xv) == pytest.approx(float(g1x.evalf(30, subs=sub)), rel=1e-11, abs=1e-12)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ex.NearLineWarning)
            got = ex.g2_xi(p, sv, xv)
        assert got == pytest.approx(float(g2.evalf(30, subs=sub)), rel=1e-8, abs=1e-10)


def test_symbolic_oracle_noncritical(params, symbolic_default):
    _check_against_symbolic(params, symbolic_default)


def test_symbolic_oracle_critical(critical_params, symbolic_critical):
    _check_against_symbolic(critical_params, symbolic_critical)


def test_g2_nonzero_on_merton_line(params, symbolic_default):
    # The cancelled quotient has a nonzero constant term: G2_xi does not vanish on the line.
    s, xi, _, _, g2 = symbolic_default
    on_line = float(g2.subs(xi, params.merton_dollars / s).subs(s, 100).evalf(30))
    assert on_line == pytest.approx(0.2978096833073, rel=1e-10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ex.NearLineWarning)
        assert ex.g2_xi(params, 100.0, params.merton_dollars / 100.0) == pytest.approx(on_line, rel=1e-10)


# --- hand-evaluated values ------------------------------------------------------


def test_default_values(params):
    assert ex.g0(params) == pytest.approx(9.473684, rel=1e-6)
    assert ex.c_of_s(params, 100.0) == pytest.approx(0.812903, rel=1e-5)
    assert ex.g1(params, 100.0, 0.0) == pytest.approx(4.321675, rel=1e-5)
    assert ex.g1_xi(params, 100.0, 0.0) == pytest.approx(-3.157895, rel=1e-6)
    assert ex.g_approx(params, 100.0, 0.0) == pytest.approx(9.905852, rel=1e-6)


def test_c_hand_formula(params):
    mu, sig, gam, rho = 0.05, 0.15, 0.01, 0.05
    G0 = 2 * sig**2 / (2 * rho * sig**2 + mu**2)
    amp = mu**2 * G0 / (2 * math.sqrt(gam) * sig) / (rho + mu**2 / (2 * sig**2) - 3 * sig**2 / 8)
    for s in (10.0, 100.0, 1000.0):
        assert ex.c_of_s(params, s) == pytest.approx(amp / math.sqrt(s), rel=1e-13)


def test_characteristic_roots(params):
    hi, lo = ex.characteristic_roots(params)
    sig2 = params.sigma**2
    for lam in (lo, hi):
        assert 0.5 * sig2 * (lam * lam - lam) - params.rho - params.mu**2 / (2 * sig2) == pytest.approx(0.0, abs=1e-14)
    assert lo < 0 < hi


def test_critical_root_is_minus_half(critical_params):
    assert ex.characteristic_roots(critical_params)[1] == pytest.approx(-0.5, abs=1e-12)
    # forcing the non-critical branch on the critical manifold is refused
    with pytest.raises(ex.RegimeError):
        ex.particular_amplitude(critical_params, Regime(RegimeKind.NON_CRITICAL, 0.0))


def test_factored_critical_refused(critical_params):
    with pytest.raises(ex.RegimeError):
        ex.g2_xi(critical_params, 100.0, 0.1, form="factored")


def test_rejects_bad_price(params):
    for f in (ex.c_of_s, lambda p, s: ex.g1(p, s, 1.0), lambda p, s: ex.g2_xi(p, s, 1.0)):
        with pytest.raises(DomainError):
            f(params, -1.0)


def test_broadcasting(params):
    s = np.array([50.0, 100.0, 200.0])
    xi = np.array([[0.0], [1.0]])
    out = ex.g1(params, s, xi)
    assert out.shape == (2, 3)
    assert out[1, 2] == ex.g1(params, 200.0, 1.0)
    assert isinstance(ex.g1(params, 100.0, 1.0), float)


def test_near_line_warning(params):
    xi_line = params.merton_dollars / 100.0
    with pytest.warns(ex.NearLineWarning):
        ex.g2_xi(params, 100.0, xi_line)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ex.g2_xi(params, 100.0, 1.0)


def test_near_line_continuity(params):
    # The quotient used inside the band joins the raw ratio continuously.
    s = 100.0
    line = params.merton_dollars / s
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ex.NearLineWarning)
        inside = ex.g2_xi(params, s, line * (1 + 0.9e-6))
    outside = ex.g2_xi(params, s, line * (1 + 1e-4))
    assert inside == pytest.approx(outside, rel=1e-3)


def test_factored_printed_disagrees(params):
    # The closed-form D1/D2 coefficients do not match the ratio form; the factored form falls back with a warning.
    printed = ex.g2_xi_factored_printed(params, 100.0, 1.0)
    ratio = ex.g2_xi(params, 100.0, 1.0)
    assert abs(printed - ratio) > 1.0
    with pytest.warns(ex.FactoredFormWarning):
        fact = ex.g2_xi(params, 100.0, 1.0, form="factored")
    assert fact == pytest.approx(ratio, rel=1e-12)


def test_expansion_terms_record(params):
    t = ex.expansion_terms(params, 100.0, 0.0)
    assert t.g0 == ex.g0(params) and t.g1 == ex.g1(params, 100.0, 0.0)
    assert not t.near_line and not t.regime.is_critical
    assert ex.expansion_terms(params, 100.0, params.merton_dollars / 100.0).near_line


# --- properties -----------------------------------------------------------------

param_st = st.builds(
    ModelParams,
    mu=st.floats(0.01, 0.3),
    sigma=st.floats(0.05, 0.6),
    gamma=st.floats(1e-3, 1.0),
    rho=st.floats(0.01, 0.3),
    eps=st.just(0.01),
)


def _noncritical(p):
    return not classify_regime(p).is_critical and abs(
        p.rho + p.mu**2 / (2 * p.sigma**2) - 3 * p.sigma**2 / 8
    ) > 1e-6


@settings(max_examples=200, deadline=None)
@given(param_st, st.floats(5.0, 2000.0), st.floats(0.0, 3.0))
def test_order_one_property(p, s, frac):
    xi = frac * p.merton_dollars / s
    G0 = ex.g0(p)
    order1 = 1 - p.rho * G0 + (p.gamma * p.sigma * xi * s) ** 2 * G0 / 2 - p.gamma * p.mu * xi * s * G0
    g1x = ex.g1_xi(p, s, xi)
    assert g1x**2 / (2 * p.gamma * s * G0) == pytest.approx(order1, rel=1e-9, abs=1e-12 * (1 + abs(order1)))


@settings(max_examples=200, deadline=None)
@given(param_st, st.floats(5.0, 2000.0))
def test_merton_line_properties(p, s):
    if not _noncritical(p):
        return
    line = p.merton_dollars / s
    assert abs(ex.g1_xi(p, s, line)) <= 1e-12 * (1 + abs(ex.g1_xi(p, s, 0.0)))
    assert ex.g1(p, s, line) == pytest.approx(ex.c_of_s(p, s), rel=1e-12, abs=1e-14)
    # the second-order equation restricted to the line holds by choice of C
    val, ds, dss, _ = ex.g1_derivatives(p, s, line)
    resid = ex.apply_L_xi(p, s, line, val, ds, dss) - p.rho * val
    scale = p.rho * abs(val) + abs(ex.apply_L_xi(p, s, line, val, 0.0, 0.0)) + 1e-300
    assert abs(resid) <= 1e-9 * scale + 1e-9 * abs(p.sigma**2 * s**2 * dss)


@settings(max_examples=200, deadline=None)
@given(param_st, st.floats(5.0, 2000.0), st.floats(-0.5, 2.0))
def test_quotient_matches_ratio(p, s, dev):
    if not _noncritical(p) or abs(dev) < 1e-3:
        return
    xi = (1 + dev) * p.merton_dollars / s
    q1, q2, q3, q4 = ex.g2_xi_quotient_coeffs(p, s)
    u = xi * s - p.merton_dollars
    val, _, _, dxi = ex.g1_derivatives(p, s, xi)
    poly = q1 + q2 * u + q3 * u**2 + q4 * u**3 + dxi * val / (2 * ex.g0(p))
    ratio = ex.g2_xi(p, s, xi)
    scale = max(abs(q1), abs(q2 * u), abs(q3 * u * u), abs(q4 * u**3), abs(dxi * val / (2 * ex.g0(p))))
    assert abs(poly - ratio) <= 1e-7 * scale


@settings(max_examples=100, deadline=None)
@given(param_st, st.floats(5.0, 2000.0), st.floats(0.0, 3.0))
def test_g_approx_quadratic_in_xi(p, s, frac):
    # G0 + sqrt(eps) G1 is a convex quadratic in xi with vertex on the Merton line
    line = p.merton_dollars / s
    xi = frac * line
    assert ex.g_approx(p, s, xi) >= ex.g_approx(p, s, line) - 1e-12 * abs(ex.g_approx(p, s, line))


def test_finite_differences(params, critical_params):
    for p in (params, critical_params):
        for s, xi in POINTS:
            val, ds, dss, dxi = ex.g1_derivatives(p, s, xi)
            h = 1e-4 * s
            fs = lambda t: ex.g1(p, t, xi)
            assert ds == pytest.approx((fs(s + h) - fs(s - h)) / (2 * h), rel=1e-6, abs=1e-10)
            assert dss == pytest.approx((fs(s + h) - 2 * val + fs(s - h)) / h**2, rel=1e-4, abs=1e-9)
            hx = 1e-4
            assert dxi == pytest.approx((ex.g1(p, s, xi + hx) - ex.g1(p, s, xi - hx)) / (2 * hx), rel=1e-6, abs=1e-8)

import math

import pytest
from hypothesis import given, strategies as st

from quadcost.model import (
    DomainError,
    MarketState,
    ModelParams,
    RegimeKind,
    classify_regime,
    merton_line_xi,
    validate_params,
)

pos = st.floats(min_value=1e-3, max_value=5.0, allow_nan=False)


def test_defaults_are_valid(params):
    p = validate_params(0.05, 0.15, 0.01, 0.05, 0.01)
    assert p == params
    assert p.merton_dollars == pytest.approx(222.2222222, rel=1e-9)


@pytest.mark.parametrize(
    "field, raw",
    [
        ("mu", (-0.05, 0.15, 0.01, 0.05, 0.01)),
        ("sigma", (0.05, 0.0, 0.01, 0.05, 0.01)),
        ("gamma", (0.05, 0.15, -1.0, 0.05, 0.01)),
        ("rho", (0.05, 0.15, 0.01, 0.0, 0.01)),
        ("eps", (0.05, 0.15, 0.01, 0.05, 0.0)),
    ],
)
def test_nonpositive_field_named(field, raw):
    with pytest.raises(ValueError, match=f"{field} must be positive"):
        validate_params(*raw)


def test_nan_rejected():
    with pytest.raises(ValueError):
        ModelParams(mu=float("nan"), sigma=0.15, gamma=0.01, rho=0.05, eps=0.01)


@given(pos, pos, pos, pos, pos)
def test_merton_dollars_finite_positive(mu, sigma, gamma, rho, eps):
    p = ModelParams(mu, sigma, gamma, rho, eps)
    assert math.isfinite(p.merton_dollars) and p.merton_dollars > 0


def test_regime_default_noncritical(params):
    r = classify_regime(params)
    assert r.kind is RegimeKind.NON_CRITICAL and not r.is_critical
    assert r.discriminant == pytest.approx(4 * 0.05**2 - (3 * 0.15**4 - 8 * 0.15**2 * 0.05))


def test_regime_critical(critical_params):
    r = classify_regime(critical_params)
    assert r.is_critical and abs(r.discriminant) < 1e-12


@given(st.floats(0.2, 2.0), st.floats(0.001, 0.1))
def test_regime_critical_manifold(sigma, rho_frac):
    # rho small enough that 3 sigma^4 - 8 sigma^2 rho > 0, mu placed on the manifold
    rho = rho_frac * sigma**2
    mu = math.sqrt((3 * sigma**4 - 8 * sigma**2 * rho) / 4)
    assert classify_regime(ModelParams(mu, sigma, 1.0, rho, 0.01)).is_critical
    assert not classify_regime(ModelParams(mu * 1.01, sigma, 1.0, rho, 0.01)).is_critical


def test_merton_line(params):
    assert merton_line_xi(params, 100.0) == pytest.approx(2.222222222, rel=1e-9)
    with pytest.raises(DomainError):
        merton_line_xi(params, 0.0)


def test_market_state():
    assert MarketState(w=1.0, s=100.0, xi=0.5).admissible
    assert not MarketState(w=1.0, s=100.0, xi=-0.5).admissible
    with pytest.raises(DomainError):
        MarketState(w=1.0, s=-1.0, xi=0.5)

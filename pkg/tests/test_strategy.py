import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadcost import expansion as ex
from quadcost.model import DomainError, ModelParams
from quadcost.strategy import Strategy, StrategyKind, control_corrected, control_for, control_leading


def test_leading_default(params):
    assert control_leading(params, 100.0, 0.0) == pytest.approx(3.33333, rel=1e-5)
    assert control_leading(params, 100.0, params.merton_dollars / 100.0) == pytest.approx(0.0, abs=1e-12)


def test_leading_eps_scaling(params):
    base = control_leading(params, 100.0, 0.7)
    assert control_leading(params.replace(eps=params.eps / 4), 100.0, 0.7) == pytest.approx(2 * base, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 1000.0), st.floats(0.0, 10.0))
def test_leading_equals_g1_form(s, xi):
    p = ModelParams(0.05, 0.15, 0.01, 0.05, 0.01)
    via_g1 = -ex.g1_xi(p, s, xi) / (p.gamma * s * math.sqrt(p.eps) * ex.g0(p))
    assert control_leading(p, s, xi) == pytest.approx(via_g1, rel=1e-12, abs=1e-12)


def test_leading_rejects_bad_price(params):
    with pytest.raises(DomainError):
        control_leading(params, 0.0, 1.0)


def test_corrected_against_exact_ratio(params):
    # -G_xi/(gamma eps s G) with the truncated G expands to the corrected control plus O(sqrt(eps))
    s, xi = 100.0, 1.0
    gaps = []
    for e in (1e-4, 1e-6):
        p = params.replace(eps=e)
        r = math.sqrt(e)
        G = ex.g0(p) + r * ex.g1(p, s, xi)
        Gx = r * ex.g1_xi(p, s, xi) + e * ex.g2_xi(p, s, xi)
        exact = -Gx / (p.gamma * e * s * G)
        gaps.append(abs(exact - control_corrected(p, s, xi)))
    assert gaps[1] / gaps[0] == pytest.approx(0.1, rel=0.05)


def test_corrected_on_merton_line(params):
    # On the line only the G2_xi term survives, so the correction is -G2_xi/(gamma s G0), not zero.
    s = 100.0
    line = params.merton_dollars / s
    h = control_corrected(params, s, line)
    expected = -ex.expansion_terms(params, s, line).g2_xi / (params.gamma * s * ex.g0(params))
    assert h == pytest.approx(expected, rel=1e-9)
    assert h == pytest.approx(-0.0314354665713, rel=1e-9)


def test_corrected_is_finite_across_band(params):
    s = np.full(201, 100.0)
    xi = params.merton_dollars / 100.0 * (1 + np.linspace(-1e-5, 1e-5, 201))
    h = control_corrected(params, s, xi)
    assert np.all(np.isfinite(h))
    assert np.max(np.abs(np.diff(h))) < 1e-3


def test_control_for(params):
    hold = Strategy(StrategyKind.HOLD, params)
    assert control_for(hold, 100.0, 1.0, 0.01) == 0.0
    assert np.array_equal(control_for(hold, np.ones(3) * 100, 1.0, 0.01), np.zeros(3))
    merton = Strategy.from_name("merton", params)
    h = control_for(merton, 100.0, 1.0, 0.01)
    assert 1.0 + h * 0.01 == pytest.approx(params.merton_dollars / 100.0, rel=1e-14)
    assert control_for(Strategy.from_name("leading", params), 100.0, 0.0, 0.01) == control_leading(params, 100.0, 0.0)
    assert control_for(Strategy.from_name("corrected", params), 100.0, 0.0, 0.01) == control_corrected(
        params, 100.0, 0.0
    )


def test_unknown_strategy(params):
    with pytest.raises(ValueError, match="unknown strategy"):
        Strategy.from_name("momentum", params)

"""Model parameters, regime classification and Merton-line geometry.

Everything downstream takes a :class:`ModelParams`. The parameters are the
drift ``mu`` and volatility ``sigma`` of the risky asset, the absolute risk
aversion ``gamma`` of the exponential utility, the utility discount rate
``rho`` and the quadratic trading-cost scale ``eps``. The risk-free rate is
zero throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CRITICAL_RTOL",
    "ConfigError",
    "DomainError",
    "MarketState",
    "ModelParams",
    "Regime",
    "RegimeKind",
    "classify_regime",
    "merton_line_xi",
    "validate_params",
]

# Relative tolerance for landing on the critical manifold 4 mu^2 = 3 sigma^4 - 8 sigma^2 rho.
CRITICAL_RTOL = 1e-10


class ConfigError(ValueError):
    """Invalid or incomplete parameters/configuration."""


class DomainError(ValueError):
    """A valid configuration evaluated outside the domain of a formula."""


@dataclass(frozen=True)
class ModelParams:
    mu: float
    sigma: float
    gamma: float
    rho: float
    eps: float

    def __post_init__(self):
        for name in ("mu", "sigma", "gamma", "rho", "eps"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"{name} must be a real number, got {value!r}") from None
            if not math.isfinite(value) or value <= 0.0:
                raise ConfigError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def merton_dollars(self) -> float:
        """Frictionless optimal dollar holding ``mu / (gamma sigma^2)``."""
        return self.mu / (self.gamma * self.sigma**2)

    def replace(self, **changes) -> "ModelParams":
        fields = dict(mu=self.mu, sigma=self.sigma, gamma=self.gamma, rho=self.rho, eps=self.eps)
        fields.update(changes)
        return ModelParams(**fields)

    def as_dict(self) -> dict:
        return dict(mu=self.mu, sigma=self.sigma, gamma=self.gamma, rho=self.rho, eps=self.eps)


def validate_params(mu, sigma, gamma, rho, eps) -> ModelParams:
    """Build :class:`ModelParams`, raising :class:`ConfigError` on any non-positive field."""
    return ModelParams(mu=mu, sigma=sigma, gamma=gamma, rho=rho, eps=eps)


class RegimeKind(enum.Enum):
    NON_CRITICAL = "non-critical"
    CRITICAL = "critical"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    discriminant: float

    @property
    def is_critical(self) -> bool:
        return self.kind is RegimeKind.CRITICAL


def _regime_terms(mu, sigma, rho):
    return 4.0 * mu**2, 3.0 * sigma**4 - 8.0 * sigma**2 * rho


def classify_regime(p: ModelParams) -> Regime:
    """Classify ``p`` against the resonance ``4 mu^2 = 3 sigma^4 - 8 sigma^2 rho``.

    On that manifold the forcing ``s^(-1/2)`` of the ODE for the line value
    ``C(s)`` coincides with a homogeneous mode, and ``C`` picks up a
    ``log(s)`` factor.
    """
    lhs, rhs = _regime_terms(p.mu, p.sigma, p.rho)
    disc = lhs - rhs
    scale = max(1.0, lhs, abs(rhs))
    kind = RegimeKind.CRITICAL if abs(disc) <= CRITICAL_RTOL * scale else RegimeKind.NON_CRITICAL
    return Regime(kind=kind, discriminant=disc)


def _check_price(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0.0)):
        raise DomainError("price s must be positive")
    return s_arr


def merton_line_xi(p: ModelParams, s):
    """Share count on the Merton line at price ``s``: ``mu / (gamma sigma^2 s)``."""
    s_arr = _check_price(s)
    out = p.merton_dollars / s_arr
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MarketState:
    """A point (wealth, mid-price, inventory)."""

    w: float
    s: float
    xi: float

    def __post_init__(self):
        if not self.s > 0.0:
            raise DomainError(f"price s must be positive, got {self.s!r}")

    @property
    def admissible(self) -> bool:
        # Negative inventory is representable but outside the admissible set.
        return self.xi >= 0.0

"""Frictionless (zero-cost) Merton benchmark for exponential utility."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams

__all__ = [
    "MertonSolution",
    "merton_dollar_position",
    "merton_solution",
    "merton_value",
    "merton_value_coeff",
    "merton_value_coeff_raw",
]


@dataclass(frozen=True)
class MertonSolution:
    dollar_position: float
    value_coeff: float


def merton_dollar_position(p: ModelParams) -> float:
    return p.mu / (p.gamma * p.sigma**2)


def merton_value_coeff_raw(mu: float, sigma: float, rho: float) -> float:
    """``2 sigma^2 / (2 rho sigma^2 + mu^2)`` without parameter validation.

    Exists so that the ``mu = 0`` limit (pure discounting, ``1/rho``) can be
    checked; the main pipeline requires ``mu > 0``.
    """
    return 2.0 * sigma**2 / (2.0 * rho * sigma**2 + mu**2)


def merton_value_coeff(p: ModelParams) -> float:
    """The constant ``c`` in ``V(w) = -(c/gamma) exp(-gamma w)``; also the zeroth expansion term."""
    return merton_value_coeff_raw(p.mu, p.sigma, p.rho)


def merton_value(p: ModelParams, w):
    c = merton_value_coeff(p)
    out = -(c / p.gamma) * np.exp(-p.gamma * np.asarray(w, dtype=float))
    return out if np.ndim(out) else float(out)


def merton_solution(p: ModelParams) -> MertonSolution:
    return MertonSolution(dollar_position=merton_dollar_position(p), value_coeff=merton_value_coeff(p))

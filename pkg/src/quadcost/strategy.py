"""Trading-rate controls built from the expansion, plus the two benchmarks."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .expansion import NearLineWarning, g0, g1, g1_xi, g2_xi
from .model import DomainError, ModelParams, merton_line_xi

__all__ = [
    "Strategy",
    "StrategyKind",
    "control_corrected",
    "control_for",
    "control_leading",
]


class StrategyKind(enum.Enum):
    LEADING = "leading"
    CORRECTED = "corrected"
    MERTON_REBALANCE = "merton"
    HOLD = "hold"


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    params: ModelParams

    @classmethod
    def from_name(cls, name: str, params: ModelParams) -> "Strategy":
        try:
            kind = StrategyKind(name)
        except ValueError:
            choices = ", ".join(k.value for k in StrategyKind)
            raise ValueError(f"unknown strategy {name!r}; expected one of {choices}") from None
        return cls(kind, params)


def _out(x):
    return x if np.ndim(x) else float(x)


def control_leading(p: ModelParams, s, xi):
    """Mean-reverting rate ``(mu/sigma - gamma sigma s xi) / sqrt(eps gamma s)``.

    In dollars this pulls ``xi s`` toward ``mu/(gamma sigma^2)`` at rate
    ``sigma sqrt(gamma s / eps)``.
    """
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0.0)):
        raise DomainError("price s must be positive")
    xi = np.asarray(xi, dtype=float)
    return _out((p.mu / p.sigma - p.gamma * p.sigma * s * xi) / np.sqrt(p.eps * p.gamma * s))


def control_corrected(p: ModelParams, s, xi):
    """Leading rate plus the order-one terms of ``-G_xi / (gamma eps s G)``.

    ``-G1_xi/(gamma sqrt(eps) s G0) + G1_xi G1/(gamma s G0^2) - G2_xi/(gamma s G0)``,
    with ``G2_xi`` in ratio form.
    """
    G0 = g0(p)
    s = np.asarray(s, dtype=float)
    gx1 = np.asarray(g1_xi(p, s, xi))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearLineWarning)
        gx2 = np.asarray(g2_xi(p, s, xi, "ratio"))
    val1 = np.asarray(g1(p, s, xi))
    gs = p.gamma * s
    out = -gx1 / (gs * math.sqrt(p.eps) * G0) + gx1 * val1 / (gs * G0**2) - gx2 / (gs * G0)
    return _out(out)


def control_for(strategy: Strategy, s, xi, dt: float):
    """Trade rate of ``strategy`` at ``(s, xi)``.

    ``MERTON_REBALANCE`` returns the rate that lands on the Merton line after
    one step of length ``dt``.
    """
    p = strategy.params
    kind = strategy.kind
    if kind is StrategyKind.LEADING:
        return control_leading(p, s, xi)
    if kind is StrategyKind.CORRECTED:
        return control_corrected(p, s, xi)
    if kind is StrategyKind.HOLD:
        return _out(np.zeros(np.broadcast(np.asarray(s), np.asarray(xi)).shape))
    return _out((np.asarray(merton_line_xi(p, s)) - np.asarray(xi, dtype=float)) / dt)

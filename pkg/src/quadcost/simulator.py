"""Forward-Euler simulation of price, inventory and wealth, and Monte Carlo estimators.

Dynamics per step of length ``dt`` with trade rate ``h`` chosen at the start
of the step::

    dS = S (mu dt + sigma sqrt(dt) z)
    W' = W + H dS - S (eps/2) h^2 dt
    H' = H + h dt

Paths are keyed by ``(seed, path_index)``; see :mod:`quadcost.rng`.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .expansion import g0
from .model import ConfigError, DomainError, ModelParams, merton_line_xi
from .rng import NoiseSource, PhiloxNoise
from .strategy import Strategy, StrategyKind, control_for

__all__ = [
    "DegeneratePriceError",
    "McEstimate",
    "STABILITY_LIMIT",
    "SimConfig",
    "SimPath",
    "StabilityGuardError",
    "TRUNCATION_LEVEL",
    "check_stability",
    "default_horizon",
    "estimate_R",
    "estimate_g_hat",
    "euler_step",
    "merton_frictionless_wealth",
    "path_stats",
    "simulate_merton_benchmark",
    "simulate_path",
    "simulate_paths",
]

STABILITY_LIMIT = 0.5
# Discount level at which infinite-horizon integrals are truncated.
TRUNCATION_LEVEL = 1e-6

_RECORD_CHUNK = 128
_GHAT_CHUNK = 64
_NOISE_BLOCK = 1024


class StabilityGuardError(RuntimeError):
    """``dt`` too coarse for the leading strategy's reversion rate."""


class DegeneratePriceError(ArithmeticError):
    """An Euler step produced a non-positive price."""


@dataclass(frozen=True)
class SimConfig:
    s0: float = 100.0
    w0: float = 100.0
    h0: float | None = None  # None: start on the Merton line
    T: float = 10.0
    dt: float = 0.004
    seed: int = 0
    n_paths: int = 100
    exit_M: float | None = None
    allow_unstable: bool = False

    def __post_init__(self):
        if not self.s0 > 0:
            raise ConfigError("s0 must be positive")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.T >= self.dt:
            raise ConfigError("T must be at least dt")
        if int(self.n_paths) < 1:
            raise ConfigError("paths must be at least 1")
        if self.exit_M is not None and not self.exit_M > 1.0:
            raise ConfigError("exit_M must exceed 1")
        if int(self.seed) < 0 or int(self.seed) >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def start_inventory(self, p: ModelParams) -> float:
        return merton_line_xi(p, self.s0) if self.h0 is None else float(self.h0)

    def replace(self, **changes) -> "SimConfig":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return SimConfig(**fields)


def check_stability(p: ModelParams, cfg: SimConfig) -> dict:
    """Check ``dt * sigma sqrt(gamma s0 / eps) <= 0.5``.

    Raises :class:`StabilityGuardError` unless ``cfg.allow_unstable``; an
    overridden violation is returned as a warning record.
    """
    ratio = cfg.dt * p.sigma * math.sqrt(p.gamma * cfg.s0 / p.eps)
    ok = ratio <= STABILITY_LIMIT
    record = {"ratio": ratio, "limit": STABILITY_LIMIT, "ok": ok, "overridden": False}
    if not ok:
        msg = f"dt*reversion rate = {ratio:.4g} exceeds {STABILITY_LIMIT}"
        if not cfg.allow_unstable:
            raise StabilityGuardError(msg)
        record["overridden"] = True
        warnings.warn(msg + " (override in effect)", RuntimeWarning, stacklevel=2)
    return record


@dataclass
class SimPath:
    path_index: int
    seed: int
    times: np.ndarray
    S: np.ndarray
    H: np.ndarray
    W: np.ndarray
    h_applied: np.ndarray  # rate applied on [t_k, t_k+1); nan on the last row
    cost_cum: np.ndarray
    exited_at: float | None = None
    negative_inventory_flag: bool = False
    degenerate: bool = False


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    truncation_T: float
    truncation_bound: float
    extras: dict = field(default_factory=dict)


def euler_step(p: ModelParams, strategy: Strategy, s, xi, w, dt: float, z):
    """One forward-Euler step; returns ``(s', xi', w', h, cost_increment)``."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)) or not dt > 0:
        raise DomainError("euler_step needs s > 0 and dt > 0")
    xi = np.asarray(xi, dtype=float)
    h = np.asarray(control_for(strategy, s, xi, dt), dtype=float)
    ds = s * (p.mu * dt + p.sigma * math.sqrt(dt) * np.asarray(z, dtype=float))
    cost = s * (0.5 * p.eps) * h * h * dt
    s_new = s + ds
    if np.any(~(s_new > 0)):
        raise DegeneratePriceError("Euler step produced a non-positive price")
    w_new = np.asarray(w, dtype=float) + xi * ds - cost
    out = (s_new, xi + h * dt, w_new, h, cost)
    return tuple(v if np.ndim(v) else float(v) for v in out)


def _outside(s, xi, M, m):
    return (s <= 1.0 / M) | (s >= M) | (np.abs(m - xi * s) >= M)


def _chunks(indices, size):
    return [indices[i : i + size] for i in range(0, len(indices), size)]


def _simulate_block(p, strategy, cfg, indices, noise):
    n = len(indices)
    N = cfg.n_steps
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    m = p.merton_dollars
    M = cfg.exit_M
    draw = noise.streams(indices)

    s = np.full(n, float(cfg.s0))
    xi = np.full(n, cfg.start_inventory(p))
    w = np.full(n, float(cfg.w0))
    cost = np.zeros(n)
    S = np.empty((n, N + 1))
    H = np.empty((n, N + 1))
    W = np.empty((n, N + 1))
    C = np.empty((n, N + 1))
    hr = np.full((n, N + 1), np.nan)
    S[:, 0], H[:, 0], W[:, 0], C[:, 0] = s, xi, w, cost

    active = np.ones(n, dtype=bool)
    exited = np.zeros(n, dtype=bool)
    degenerate = np.zeros(n, dtype=bool)
    negative = xi < 0
    stop = np.full(n, N)
    if M is not None:
        out = _outside(s, xi, M, m)
        exited |= out
        stop[out] = 0
        active &= ~out

    z_block = None
    for k in range(N):
        j = k % _NOISE_BLOCK
        if j == 0:
            z_block = draw(min(_NOISE_BLOCK, N - k))
        if not active.any():
            break
        h = np.asarray(control_for(strategy, s, xi, dt), dtype=float)
        ds = s * (p.mu * dt + p.sigma * sqdt * z_block[:, j])
        dc = s * (0.5 * p.eps) * h * h * dt
        s_new = s + ds
        bad = active & ~(s_new > 0)
        go = active & ~bad
        w = np.where(go, w + xi * ds - dc, w)
        xi = np.where(go, xi + h * dt, xi)
        s = np.where(go, s_new, s)
        cost = np.where(go, cost + dc, cost)
        hr[:, k] = np.where(go, h, np.nan)
        S[:, k + 1], H[:, k + 1], W[:, k + 1], C[:, k + 1] = s, xi, w, cost
        if bad.any():
            degenerate |= bad
            stop[bad] = k
            active &= ~bad
        negative |= go & (xi < 0)
        if M is not None:
            out = go & _outside(s, xi, M, m)
            if out.any():
                exited |= out
                stop[out] = k + 1
                active &= ~out

    times = dt * np.arange(N + 1)
    paths = []
    for row, idx in enumerate(indices):
        e = int(stop[row])
        h_row = hr[row, : e + 1].copy()
        h_row[e] = np.nan
        paths.append(
            SimPath(
                path_index=int(idx),
                seed=int(cfg.seed),
                times=times[: e + 1].copy(),
                S=S[row, : e + 1].copy(),
                H=H[row, : e + 1].copy(),
                W=W[row, : e + 1].copy(),
                h_applied=h_row,
                cost_cum=C[row, : e + 1].copy(),
                exited_at=float(times[e]) if exited[row] else None,
                negative_inventory_flag=bool(negative[row]),
                degenerate=bool(degenerate[row]),
            )
        )
    return paths


def simulate_paths(
    p: ModelParams,
    strategy: Strategy,
    cfg: SimConfig,
    path_indices=None,
    threads: int = 1,
    noise: NoiseSource | None = None,
) -> list[SimPath]:
    """Simulate ``cfg.n_paths`` paths (or the given indices).

    Paths are split into fixed-size blocks independent of ``threads``, so the
    output is identical for any thread count.
    """
    check_stability(p, cfg)
    noise = noise or PhiloxNoise(cfg.seed)
    indices = list(range(cfg.n_paths)) if path_indices is None else [int(i) for i in path_indices]
    blocks = _chunks(indices, _RECORD_CHUNK)

    def run(block):
        return _simulate_block(p, strategy, cfg, block, noise)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]
    return [path for block in results for path in block]


def simulate_path(p: ModelParams, strategy: Strategy, cfg: SimConfig, path_index: int = 0, noise=None) -> SimPath:
    return simulate_paths(p, strategy, cfg, [path_index], noise=noise)[0]


def merton_frictionless_wealth(p: ModelParams, S: np.ndarray, w0: float) -> np.ndarray:
    """Wealth of the constant Merton dollar holding on a sampled price path, no costs."""
    S = np.asarray(S, dtype=float)
    gains = p.merton_dollars * np.diff(S) / S[:-1]
    return w0 + np.concatenate([[0.0], np.cumsum(gains)])


def simulate_merton_benchmark(
    p: ModelParams,
    cfg: SimConfig,
    path_indices=None,
    mode: str = "charged",
    threads: int = 1,
    noise: NoiseSource | None = None,
) -> list[SimPath]:
    """Merton rebalancing benchmark on the same normal streams as the other strategies.

    ``mode="charged"`` trades back to the Merton line every step and pays the
    quadratic cost like any strategy. ``mode="hypothetical"`` reports the
    frictionless Merton wealth minus the costs those trades would have
    incurred.
    """
    if mode not in ("charged", "hypothetical"):
        raise ValueError(f"unknown benchmark mode {mode!r}")
    strategy = Strategy(StrategyKind.MERTON_REBALANCE, p)
    paths = simulate_paths(p, strategy, cfg, path_indices, threads=threads, noise=noise)
    if mode == "hypothetical":
        for path in paths:
            path.W = merton_frictionless_wealth(p, path.S, cfg.w0) - path.cost_cum
    return paths


def _acf_efold_time(x: np.ndarray, dt: float) -> float:
    x = x - x.mean()
    n = len(x)
    if n < 3 or not np.any(x):
        return float("nan")
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(f * np.conj(f), nfft)[:n]
    acf /= acf[0]
    below = np.nonzero(acf < math.exp(-1.0))[0]
    if len(below) == 0:
        return float("nan")
    k = below[0]
    a0, a1 = acf[k - 1], acf[k]
    frac = (a0 - math.exp(-1.0)) / (a0 - a1)
    return float((k - 1 + frac) * dt)


def path_stats(path: SimPath, p: ModelParams, burn_in: float = 1.0) -> dict:
    """Tracking and wealth diagnostics for one path.

    ``mad`` is the mean absolute distance of the dollar holding from the
    Merton line after ``burn_in``; ``autocorr_time`` is the lag at which the
    autocorrelation of that distance first drops below ``1/e``.
    """
    if path.degenerate:
        raise ValueError("path_stats needs a non-degenerate path")
    dt = float(path.times[1] - path.times[0]) if len(path.times) > 1 else float("nan")
    sel = path.times > burn_in
    dev = path.H[sel] * path.S[sel] - p.merton_dollars
    dW = np.diff(path.W)
    return {
        "path_id": path.path_index,
        "mad": float(np.mean(np.abs(dev))) if dev.size else float("nan"),
        "autocorr_time": _acf_efold_time(dev, dt) if dev.size else float("nan"),
        "terminal_wealth": float(path.W[-1]),
        "total_cost": float(path.cost_cum[-1]),
        "wealth_vol": float(np.std(dW) / math.sqrt(dt)) if dW.size > 1 else float("nan"),
        "exited_at": path.exited_at,
        "negative_inventory": path.negative_inventory_flag,
    }


# --- discounted functionals ----------------------------------------------------


def default_horizon(p: ModelParams) -> float:
    """Horizon where the utility discount falls to ``TRUNCATION_LEVEL``."""
    return -math.log(TRUNCATION_LEVEL) / p.rho


def _r_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0x52])))


def _hold_integrals(p, kappas, n_paths, dt, T_max, seed):
    """Per-path trapezoid integrals of ``exp(-rho t + kappa (1 - S_t/S_0))`` for each kappa.

    Price ratios are sampled exactly (log-normal steps); the same ratios are
    shared across all kappas.
    """
    n_t = max(1, int(math.ceil(T_max / dt)))
    dt = T_max / n_t
    z = _r_generator(seed).standard_normal((n_paths, n_t))
    log_l = np.cumsum((p.mu - 0.5 * p.sigma**2) * dt + p.sigma * math.sqrt(dt) * z, axis=1)
    ratio = np.concatenate([np.ones((n_paths, 1)), np.exp(log_l)], axis=1)
    disc = -p.rho * dt * np.arange(n_t + 1)
    out = np.empty((len(kappas), n_paths))
    for i, kappa in enumerate(kappas):
        f = np.exp(disc + kappa * (1.0 - ratio))
        out[i] = dt * (f.sum(axis=1) - 0.5 * (f[:, 0] + f[:, -1]))
    return out


def estimate_R(
    p: ModelParams,
    s: float,
    xi: float,
    n_paths: int = 1000,
    dt: float = 0.05,
    T_max: float | None = None,
    seed: int = 0,
) -> McEstimate:
    """Value of holding ``xi`` shares forever from price ``s`` with no trading.

    ``R(s, xi) = exp(gamma s xi) E int_0^inf exp(-rho t - gamma xi S_t) dt``,
    truncated at ``T_max``.
    """
    if not s > 0:
        raise DomainError("price s must be positive")
    if xi < 0:
        raise DomainError("estimate_R needs xi >= 0")
    T_max = default_horizon(p) if T_max is None else float(T_max)
    kappa = p.gamma * s * xi
    vals = _hold_integrals(p, [kappa], n_paths, dt, T_max, seed)[0]
    return McEstimate(
        mean=math.fsum(vals) / n_paths,
        std_error=float(np.std(vals, ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else float("nan"),
        n_paths=n_paths,
        truncation_T=T_max,
        truncation_bound=math.exp(-p.rho * T_max + kappa) / p.rho,
        extras={"kappa": kappa},
    )


def _hold_value_lookup(p, kappas, n_paths, dt, T_max, seed):
    """``R`` as a function of ``kappa = gamma s xi``, tabulated and interpolated when many points are needed."""
    kappas = np.asarray(kappas, dtype=float)
    if kappas.size == 0:
        return kappas
    uniq = np.unique(kappas)
    if uniq.size <= 16:
        table = _hold_integrals(p, uniq, n_paths, dt, T_max, seed).mean(axis=1)
        return table[np.searchsorted(uniq, kappas)]
    grid = np.linspace(uniq[0], uniq[-1], 129)
    table = _hold_integrals(p, grid, n_paths, dt, T_max, seed).mean(axis=1)
    return np.exp(np.interp(kappas, grid, np.log(table)))


@nb.njit(cache=True)
def _g_hat_kernel(z, s0, h0, mu, sigma, gamma, rho, eps, dt, M, leading, cv_c):
    n, N = z.shape
    m = mu / (gamma * sigma**2)
    sqdt = math.sqrt(dt)
    integ = np.zeros(n)
    cv = np.zeros(n)
    status = np.zeros(n, dtype=np.int64)  # 0 horizon reached, 1 exited, 2 degenerate
    tau = np.zeros(n)
    s_end = np.zeros(n)
    xi_end = np.zeros(n)
    y_end = np.zeros(n)
    for i in range(n):
        s = s0
        xi = h0
        y = 0.0
        ym = 0.0
        acc = 0.0
        accm = 0.0
        f_prev = 1.0
        fm_prev = 1.0
        st = 0
        t = 0.0
        if M > 0.0 and (s <= 1.0 / M or s >= M or abs(m - xi * s) >= M):
            st = 1
        else:
            for k in range(N):
                if leading:
                    h = (mu / sigma - gamma * sigma * s * xi) / math.sqrt(eps * gamma * s)
                else:
                    h = 0.0
                ds = s * (mu * dt + sigma * sqdt * z[i, k])
                s_new = s + ds
                if not s_new > 0.0:
                    st = 2
                    break
                y += xi * ds - s * (0.5 * eps) * h * h * dt
                ym += m * ds / s
                xi += h * dt
                s = s_new
                t = (k + 1) * dt
                f = math.exp(-rho * t - gamma * y)
                fm = math.exp(-rho * t - gamma * ym)
                acc += 0.5 * dt * (f_prev + f)
                accm += 0.5 * dt * (fm_prev + fm)
                f_prev = f
                fm_prev = fm
                if M > 0.0 and (s <= 1.0 / M or s >= M or abs(m - xi * s) >= M):
                    st = 1
                    break
        integ[i] = acc
        cv[i] = accm + cv_c * fm_prev
        status[i] = st
        tau[i] = t
        s_end[i] = s
        xi_end[i] = xi
        y_end[i] = y
    return integ, cv, status, tau, s_end, xi_end, y_end


def estimate_g_hat(
    p: ModelParams,
    cfg: SimConfig,
    strategy: str = "leading",
    T_max: float | None = None,
    r_paths: int = 256,
    r_dt: float = 0.1,
    integrand_bound: float = 1.0,
    threads: int = 1,
    noise: NoiseSource | None = None,
) -> McEstimate:
    """Monte Carlo value of trading with the leading rate until leaving the exit domain.

    Each path contributes ``int_0^tau exp(-rho t - gamma Y_t) dt`` plus, if it
    leaves the domain ``1/M < S < M, |mu/(gamma sigma^2) - H S| < M`` at
    ``tau``, the hold value ``exp(-rho tau - gamma Y_tau) R(S_tau, H_tau)``.
    ``Y_t`` is the wealth gain net of costs. Integrals are truncated at
    ``T_max = min(cfg.T, -log(1e-6)/rho)`` unless given.

    ``mean``/``std_error`` are the plain sample statistics. ``extras`` also
    carries a paired estimate (``cv_mean``/``cv_std_error``) that subtracts
    the frictionless Merton functional driven by the same increments and
    adds back its exactly known discrete-time expectation.
    """
    if cfg.exit_M is None or not math.isfinite(cfg.exit_M):
        raise ConfigError("estimate_g_hat needs a finite exit_M")
    if strategy not in ("leading", "hold"):
        raise ValueError("estimate_g_hat supports the 'leading' and 'hold' strategies")
    guard = check_stability(p, cfg)
    T_max = min(cfg.T, default_horizon(p)) if T_max is None else float(T_max)
    n_steps = max(1, int(round(T_max / cfg.dt)))
    T_max = n_steps * cfg.dt
    dt = cfg.dt
    noise = noise or PhiloxNoise(cfg.seed)
    h0 = cfg.start_inventory(p)

    # Discrete-time continuation value of the frictionless Merton functional: with
    # q = E[exp(-rho dt - gamma dY)] = exp(-dt/G0), the sum of trapezoid areas plus
    # cv_c * f_k is a martingale.
    q = math.exp(-dt / g0(p))
    cv_c = dt * (1.0 + q) / (2.0 * (1.0 - q))

    indices = list(range(cfg.n_paths))

    def run(block):
        z = noise.streams(block)(n_steps)
        return _g_hat_kernel(
            z, float(cfg.s0), float(h0), p.mu, p.sigma, p.gamma, p.rho, p.eps, dt,
            float(cfg.exit_M), strategy == "leading", cv_c,
        )

    blocks = _chunks(indices, _GHAT_CHUNK)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    integ, cv, status, tau, s_end, xi_end, y_end = (np.concatenate(cols) for cols in zip(*parts))

    exited = status == 1
    values = integ.copy()
    if exited.any():
        kappa = p.gamma * s_end[exited] * np.maximum(xi_end[exited], 0.0)
        r_vals = _hold_value_lookup(p, kappa, r_paths, r_dt, default_horizon(p), cfg.seed)
        values[exited] += np.exp(-p.rho * tau[exited] - p.gamma * y_end[exited]) * r_vals

    ok = status != 2
    vals = values[ok]
    diff = vals - cv[ok]
    n = int(ok.sum())
    se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    cv_se = float(np.std(diff, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return McEstimate(
        mean=math.fsum(vals) / n,
        std_error=se,
        n_paths=n,
        truncation_T=T_max,
        truncation_bound=math.exp(-p.rho * T_max) / p.rho * integrand_bound,
        extras={
            "cv_mean": math.fsum(diff) / n + cv_c,
            "cv_std_error": cv_se,
            "cv_expectation": cv_c,
            "n_exited": int(exited.sum()),
            "n_degenerate": int((status == 2).sum()),
            "n_negative_start": int(h0 < 0),
            "exit_M": float(cfg.exit_M),
            "dt": dt,
            "stability": guard,
            "strategy": strategy,
        },
    )

"""
How closely the dollar holding follows the Merton line
=======================================================

Smaller costs mean faster mean reversion: the deviation of H S from the
Merton dollars shrinks and decorrelates faster as eps goes to zero, while
larger risk aversion lowers wealth volatility.
"""

import numpy as np

from quadcost import ModelParams, SimConfig, Strategy, StrategyKind, path_stats, simulate_paths

base = ModelParams(mu=0.05, sigma=0.15, gamma=0.01, rho=0.05, eps=0.01)
cfg = SimConfig(n_paths=100, seed=0)

# %%
print("   eps     median MAD   median autocorr time   reversion time 1/lambda")
for eps in (1e-4, 1e-3, 5e-3, 1e-2):
    p = base.replace(eps=eps)
    stats = [path_stats(x, p) for x in simulate_paths(p, Strategy(StrategyKind.LEADING, p), cfg)]
    lam = p.sigma * np.sqrt(p.gamma * cfg.s0 / eps)
    print(
        f"{eps:8.0e}   {np.median([s['mad'] for s in stats]):10.3f}   "
        f"{np.nanmedian([s['autocorr_time'] for s in stats]):20.4f}   {1 / lam:20.4f}"
    )

# %%
print("\n gamma   merton dollars   median wealth vol")
for gamma in (0.01, 0.02, 0.05, 0.1):
    p = base.replace(gamma=gamma)
    stats = [path_stats(x, p) for x in simulate_paths(p, Strategy(StrategyKind.LEADING, p), cfg)]
    print(f"{gamma:6.2f}   {p.merton_dollars:14.2f}   {np.median([s['wealth_vol'] for s in stats]):17.3f}")

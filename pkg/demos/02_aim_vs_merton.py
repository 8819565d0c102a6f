"""
Tracking the aim portfolio versus rebalancing to it
====================================================

Both strategies see the same Brownian increments. The aim strategy trades
toward the Merton line at a finite rate; the benchmark jumps back to it every
step and pays the quadratic cost for doing so.
"""

import sys

import numpy as np

from quadcost import ModelParams, SimConfig, Strategy, StrategyKind, simulate_merton_benchmark, simulate_paths

p = ModelParams(mu=0.05, sigma=0.15, gamma=0.01, rho=0.05, eps=0.01)
cfg = SimConfig(s0=100.0, w0=100.0, T=10.0, dt=0.004, n_paths=100, seed=0)

aim = simulate_paths(p, Strategy(StrategyKind.LEADING, p), cfg)
bench = simulate_merton_benchmark(p, cfg)

# %%
diff = np.array([a.W[-1] - b.W[-1] for a, b in zip(aim, bench)])
print(f"mean terminal wealth, aim        {np.mean([a.W[-1] for a in aim]):9.3f}")
print(f"mean terminal wealth, benchmark  {np.mean([b.W[-1] for b in bench]):9.3f}")
print(f"paired difference                {diff.mean():9.3f} +/- {diff.std(ddof=1) / np.sqrt(len(diff)):.3f}")
print(f"mean cost paid, aim              {np.mean([a.cost_cum[-1] for a in aim]):9.3f}")
print(f"mean cost paid, benchmark        {np.mean([b.cost_cum[-1] for b in bench]):9.3f}")

# %%
# The hypothetical reading of the benchmark: frictionless Merton wealth less the costs it would have paid.
hyp = simulate_merton_benchmark(p, cfg, mode="hypothetical")
print(f"mean terminal wealth, hypothetical benchmark {np.mean([b.W[-1] for b in hyp]):9.3f}")

# %%
if "--svg" in sys.argv:
    from quadcost.output import render_paths_svg

    render_paths_svg("aim_vs_merton.svg", aim[0].times, {"aim": aim[0].W, "Merton rebalance": bench[0].W})
    print("wrote aim_vs_merton.svg")

"""
The small-cost value expansion at a glance
==========================================

Frictionless Merton value, the sqrt(eps) correction and its shape in
inventory, evaluated at the default market.
"""

import numpy as np

from quadcost import ModelParams, c_of_s, g0, g1, g1_xi, g_approx, merton_line_xi

p = ModelParams(mu=0.05, sigma=0.15, gamma=0.01, rho=0.05, eps=0.01)

# %%
# Without costs the investor holds a fixed dollar amount in the asset.
print(f"Merton dollars      {p.merton_dollars:.4f}")
print(f"G0                  {g0(p):.6f}")

# %%
# The correction G1 is a quadratic in the dollar deviation plus a line value C(s).
s = 100.0
for xi in (0.0, 1.0, merton_line_xi(p, s), 4.0):
    print(f"xi={xi:7.4f}  G1={g1(p, s, xi):9.5f}  G1_xi={g1_xi(p, s, xi):9.5f}")
print(f"C(100)              {c_of_s(p, s):.6f}")

# %%
# Across prices the minimum over inventory follows the Merton curve xi = m/s.
s_grid = np.linspace(50, 150, 11)
xi_grid = np.linspace(0, 5, 501)
S, XI = np.meshgrid(s_grid, xi_grid, indexing="ij")
vals = g_approx(p, S, XI)
best = xi_grid[np.argmin(vals, axis=1)]
for sv, xb in zip(s_grid, best):
    print(f"s={sv:6.1f}  argmin xi={xb:.3f}  m/s={p.merton_dollars / sv:.3f}")

# %%
# C(s) decays like s^(-1/2): a larger price means a smaller cost drag per dollar.
print(np.round(c_of_s(p, np.array([10.0, 100.0, 1000.0])) * np.sqrt([10.0, 100.0, 1000.0]), 10))

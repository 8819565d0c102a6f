"""
How good is the truncated expansion?
====================================

Plug G0 + sqrt(eps) G1 back into the reduced HJB equation and watch the
residual shrink like sqrt(eps). Adding the second-order inventory slope
G2_xi to the gradient makes it shrink like eps.
"""

import warnings

import numpy as np

from quadcost import ModelParams, expansion as ex
from quadcost.verify import default_probe_points, pde_residual, residual_scaling

p = ModelParams(mu=0.05, sigma=0.15, gamma=0.01, rho=0.05, eps=0.01)

# %%
reports, summary = residual_scaling(p)
print("    s       xi    raw slope   corrected slope")
for r in reports:
    print(f"{r.point[0]:5.0f}  {r.point[1]:7.4f}   {r.fitted_exponents[0]:9.3f}   {r.fitted_exponents[1]:15.3f}")

# %%
# G2_xi divides by G1_xi, which is zero on the Merton line. The singularity is
# removable, but the limit is not zero.
s = 100.0
line = p.merton_dollars / s
with warnings.catch_warnings():
    warnings.simplefilter("ignore", ex.NearLineWarning)
    for frac in (1e-1, 1e-3, 1e-6, 0.0):
        print(f"relative offset {frac:7.0e}   G2_xi = {ex.g2_xi(p, s, line * (1 + frac)):.10f}")

# %%
# So on the line the corrected residual differs from the raw one by eps G2_xi^2 / (2 gamma s G).
for eps in (1e-2, 1e-3, 1e-4):
    raw = pde_residual(p, s, line, eps)
    cor = pde_residual(p, s, line, eps, corrected=True)
    print(f"eps={eps:.0e}  raw={raw: .3e}  corrected={cor: .3e}")

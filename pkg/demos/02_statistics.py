"""Weighted Dickey-Fuller statistics along one path, with the long-run variance fix."""

import numpy as np

from dfmonitor import ChartConfig, GenSpec, gen_arma11, newey_west, trajectory

cfg = ChartConfig(T=250, kappa=0.2, h=25.0)
y = gen_arma11(GenSpec(rho=1.0, beta=0.5, seed=1))

# MA(1) errors with beta=0.5: long-run sd / sd = |1-beta| / sqrt(1+beta^2) ~ 0.447
nu = newey_west(y.diffs, 250, cfg.lag_at(250))
print(f"sigma2={nu.sigma2:.3f} eta2={nu.eta2:.3f} vartheta_hat={nu.vartheta:.3f} (m={nu.m})")

d = trajectory(y, cfg, "D")
e = trajectory(y, cfg, "E")
print("\n  t       D       E")
for i in range(0, len(d.times), 40):
    print(f"{d.times[i]:3d}  {d.stats[i]:6.3f}  {e.stats[i]:6.3f}")

# the statistics do not depend on the units of the series
assert np.allclose(trajectory(y.scaled(1e4), cfg, "E").stats, e.stats)

"""A small Monte Carlo study: rejection rate, delays and the delay histogram."""

from pathlib import Path
import tempfile

from dfmonitor import (LimitSimConfig, build_curve, chart_config, run_study,
                       signal_histogram_export)

curve = build_curve(0.05, "D", sim=LimitSimConfig(n_grid=400, reps=4000, seed=0))
cfg = chart_config("S_hat")
print(" rho   rate   CARL    ARL   delays<=5")
for rho in (1.0, 0.95, 0.9):
    m = run_study(rho, 0.0, cfg, "S_hat", curve, reps=400, seed=1).metrics()
    print(f"{rho:4.2f}  {m.rejection_rate:.3f}  {m.carl:5.1f}  {m.arl:5.1f}  "
          f"{m.early_fraction(5):.3f}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "hist.csv"
    signal_histogram_export(m, path)
    print("\n" + "\n".join(path.read_text().splitlines()[:6]))

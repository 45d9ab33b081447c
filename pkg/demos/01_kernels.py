"""Kernel weights and the admissibility checks behind them."""

import numpy as np

from dfmonitor import get_kernel, validate_kernel

for kid in ("gaussian", "epanechnikov-smoothed", "flat-test"):
    report = validate_kernel(kid)
    print("\n".join(report.lines()))
    print("admissible:", report.passed, "\n")

# weights a monitoring statistic at t=120 puts on the last few summands (h=25)
k = get_kernel("gaussian")
lags = np.arange(0, 60, 10)
print("lag   weight")
for lag, w in zip(lags, k.value(lags / 25.0)):
    print(f"{lag:3d}   {w:.4f}")

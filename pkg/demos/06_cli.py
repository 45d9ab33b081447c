"""The command-line interface driven from Python (same as `dfmonitor ...`)."""

from pathlib import Path
import tempfile

from dfmonitor.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    main(["--seed", "2", "simulate", "--rho", "0.85", "--out", str(tmp / "y.csv")])
    main(["calibrate", "--reps", "2000", "--n-grid", "300", "--out", str(tmp / "c.json")])
    main(["monitor", "--input", str(tmp / "y.csv"), "--curve", str(tmp / "c.json"),
          "--chart", "S_hat", "--quiet"])
    main(["validate-kernel", "--kernel", "epanechnikov-smoothed"])

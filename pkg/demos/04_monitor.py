"""Run the charts on a unit-root path and on stationary AR(1) paths."""

from dfmonitor import GenSpec, LimitSimConfig, build_curve, chart_config, gen_arma11, run_chart

curve = build_curve(0.05, "D", sim=LimitSimConfig(n_grid=400, reps=4000, seed=0))

for rho in (1.0, 0.95, 0.9, 0.8):
    y = gen_arma11(GenSpec(rho=rho, seed=0))
    row = []
    for variant in ("S_fixed", "S_hat", "Z"):
        limit = -2.24 if variant == "S_fixed" else curve
        res = run_chart(y, chart_config(variant), variant, limit)
        row.append(f"{variant}={res.signal_time}")
    print(f"rho={rho:<5g}", "  ".join(row))

# the estimated limit follows vartheta_hat along the path
res = run_chart(gen_arma11(GenSpec(rho=0.8, seed=0)), chart_config("S_hat"), "S_hat", curve)
for t, s, c in list(zip(res.trajectory.times, res.trajectory.stats, res.limits_used))[-3:]:
    print(f"t={t}  D={s:.3f}  c={c:.3f}")
print(res.report())

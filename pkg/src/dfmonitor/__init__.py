"""Kernel-weighted Dickey-Fuller control charts for detecting stationarity."""

from .charts import (
    CHART_VARIANTS,
    ChartRunResult,
    ChartVariant,
    StudyMetrics,
    StudyResult,
    aggregate_study,
    chart_config,
    run_chart,
    run_study,
    signal_histogram_export,
)
from .dfcore import (
    ChartConfig,
    NuisanceEstimate,
    StatTrajectory,
    batch_statistics,
    default_lag_truncation,
    df_stat,
    df_stat_flat_oracle,
    df_t_stat,
    newey_west,
    trajectory,
    transformed_stat_E,
    transformed_stat_E_tilde,
)
from .exceptions import *  # noqa: F401,F403
from .innovations import (
    GenSpec,
    SeriesPath,
    generate,
    generate_batch,
    gen_arch1_innovations,
    gen_arma11,
    gen_local_to_unity,
    ingest_series,
)
from .kernels import KernelSpec, get_kernel, validate_kernel
from .limits import (
    ControlLimitCurve,
    LimitSimConfig,
    build_curve,
    calibrate_control_limit,
    simulate_limit_inf,
)

__version__ = "0.1.0"

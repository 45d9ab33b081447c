"""
Stopping rules built on the sequential DF statistics, and run metrics.

A chart scans ``t = k, ..., T`` and signals at the first ``t`` where its
statistic falls below the applicable control limit. Six variants exist:

=========== ============ =====================================
id          statistic    limit
=========== ============ =====================================
S_fixed     D            constant ``c``
S_hat       D            ``c(vartheta_hat_t)`` from a curve
Z           E            constant ``c(1)``
S_t_fixed   D_t_type     constant ``c``
S_hat_t     D_t_type     ``c(vartheta_hat_t)`` from a curve
Z_t         E_t_type     constant ``c(1)``
=========== ============ =====================================

For the ``Z`` charts the transformed statistic has the ``vartheta = 1``
limit law whatever the true ``vartheta``, so one constant serves all cases.
When a curve is passed to a constant-limit chart its value at 1 is used.

Study metrics follow the usual conventions: the delay of a run that signals
at ``S`` is ``S - k + 1``; the ARL counts a run without signal as
``T - k + 1``; the CARL averages delays over signaling runs only.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
import json
import math
from typing import Optional
import warnings

import numpy as np

from .dfcore import ChartConfig, StatTrajectory, batch_statistics, trajectory
from .exceptions import AggregationError, ConfigurationError
from .innovations import generate_batch
from .limits import ClampWarning, ControlLimitCurve

__all__ = [
    "ChartVariant",
    "CHART_VARIANTS",
    "get_variant",
    "ChartRunResult",
    "StudyResult",
    "StudyMetrics",
    "chart_config",
    "chart_limits",
    "apply_rule",
    "run_chart",
    "run_study",
    "aggregate_study",
    "signal_histogram_export",
    "NO_SIGNAL",
]

NO_SIGNAL = -1
_CURVE_TOL = 1e-9


@dataclass(frozen=True)
class ChartVariant:
    """A stopping rule: which statistic it watches and where its limit comes from.

    Attributes
    ----------
    id : str
    statistic : str
        One of ``D``, ``D_t_type``, ``E``, ``E_t_type``.
    limit_source : {"constant", "curve", "constant_c1"}
    limit_variant : str
        Limit law the control limit is calibrated from (``D`` or ``D_t_type``).
    default_kappa : float
        Monitoring start fraction used when none is given.
    """

    id: str
    statistic: str
    limit_source: str
    limit_variant: str
    default_kappa: float = 0.2

    @property
    def needs_curve(self):
        return self.limit_source == "curve"


CHART_VARIANTS = {
    v.id: v
    for v in (
        ChartVariant("S_fixed", "D", "constant", "D"),
        ChartVariant("S_hat", "D", "curve", "D"),
        ChartVariant("Z", "E", "constant_c1", "D"),
        ChartVariant("S_t_fixed", "D_t_type", "constant", "D_t_type"),
        ChartVariant("S_hat_t", "D_t_type", "curve", "D_t_type", default_kappa=0.3),
        ChartVariant("Z_t", "E_t_type", "constant_c1", "D_t_type"),
    )
}


def get_variant(variant):
    if isinstance(variant, ChartVariant):
        return variant
    try:
        return CHART_VARIANTS[variant]
    except KeyError:
        raise ConfigurationError(
            f"unknown chart variant {variant!r}; choose one of {', '.join(CHART_VARIANTS)}"
        ) from None


def chart_config(variant, **overrides):
    """``ChartConfig`` with the variant's default monitoring start."""
    overrides.setdefault("kappa", get_variant(variant).default_kappa)
    return ChartConfig(**overrides)


def _check_curve(curve, cfg, v):
    if curve.variant != v.limit_variant:
        raise ConfigurationError(
            f"chart {v.id} needs a {v.limit_variant!r} curve, got {curve.variant!r}"
        )
    sim = curve.sim
    if (abs(sim.kappa - cfg.kappa) > _CURVE_TOL or abs(sim.zeta - cfg.zeta) > _CURVE_TOL
            or sim.kernel != cfg.kernel.id):
        raise ConfigurationError(
            f"curve calibrated for kappa={sim.kappa}, zeta={sim.zeta}, "
            f"kernel={sim.kernel}; chart uses kappa={cfg.kappa}, zeta={cfg.zeta}, "
            f"kernel={cfg.kernel.id}"
        )


def _resolve_limit(cfg, v, limit):
    """Return a constant or a validated curve."""
    if limit is None:
        raise ConfigurationError(f"chart {v.id} needs a control limit")
    if isinstance(limit, ControlLimitCurve):
        _check_curve(limit, cfg, v)
        if v.needs_curve:
            return limit
        return _negative(float(limit(1.0)))
    if v.needs_curve:
        raise ConfigurationError(
            f"chart {v.id} needs a control-limit curve; run calibrate first"
        )
    return _negative(float(limit))


def _negative(c):
    if not c < 0:
        raise ConfigurationError(f"control limit must be negative, got {c}")
    return c


def chart_limits(vartheta2, cfg, variant, limit):
    """Per-time control limits for estimated ``vartheta^2`` of any shape."""
    v = get_variant(variant)
    resolved = _resolve_limit(cfg, v, limit)
    vartheta2 = np.asarray(vartheta2, dtype=float)
    if isinstance(resolved, ControlLimitCurve):
        return np.asarray(resolved(np.sqrt(vartheta2)), dtype=float)
    return np.full(vartheta2.shape, resolved)


@dataclass
class ChartRunResult:
    """Outcome of one chart run.

    ``trajectory`` and ``limits_used`` stop at the signal time.
    """

    variant: str
    k: int
    T: int
    signal_time: Optional[int]
    trajectory: StatTrajectory = field(repr=False)
    limits_used: np.ndarray = field(repr=False)

    @property
    def signaled(self):
        return self.signal_time is not None

    @property
    def delay(self):
        return None if self.signal_time is None else self.signal_time - self.k + 1

    def report(self):
        return {
            "variant": self.variant,
            "k": self.k,
            "T": self.T,
            "signal": self.signaled,
            "signal_time": self.signal_time,
            "delay": self.delay,
        }


def _first_crossing(stats, limits):
    """Index of the first ``stats < limits`` along the last axis, -1 if none."""
    below = stats < limits
    idx = np.argmax(below, axis=-1)
    return np.where(below.any(axis=-1), idx, -1)


def apply_rule(traj, limits, variant="S_fixed", k=None):
    """Stop a precomputed trajectory at its first crossing of ``limits``."""
    limits = np.broadcast_to(np.asarray(limits, dtype=float), traj.stats.shape)
    i = int(_first_crossing(traj.stats, limits))
    k = int(traj.times[0]) if k is None else k
    v = get_variant(variant).id
    if i < 0:
        return ChartRunResult(v, k, traj.T, None, traj, np.array(limits))
    return ChartRunResult(v, k, traj.T, int(traj.times[i]), traj.truncated(i + 1),
                          np.array(limits[: i + 1]))


def run_chart(series, cfg, variant, limit, partial=False):
    """Run one chart on one series.

    Parameters
    ----------
    series : SeriesPath or array_like
        Values ``Y_0, ..., Y_T``.
    cfg : ChartConfig
    variant : ChartVariant or str
    limit : float or ControlLimitCurve
        A negative constant, or a curve. Estimated-limit charts evaluate the
        curve at ``vartheta_hat_t`` for every ``t``; the other charts use a
        constant (a curve contributes its value at 1).
    partial : bool
        Accept a series that ends before ``cfg.T`` and monitor the available
        times only.

    Returns
    -------
    ChartRunResult

    Raises
    ------
    ConfigurationError
        If the limit is missing, non-negative, or of the wrong kind.
    InsufficientDataError
        If the series is too short.
    """
    v = get_variant(variant)
    if cfg.stride != 1:
        raise ConfigurationError("charts scan every t; stride must be 1")
    traj = trajectory(series, cfg, v.statistic, partial=partial)
    resolved = _resolve_limit(cfg, v, limit)
    limits = chart_limits(traj.vartheta2, cfg, v, resolved)
    return apply_rule(traj, limits, v, cfg.k)


@dataclass
class StudyResult:
    """Signal times of a batch of replications (``NO_SIGNAL`` when none)."""

    variant: str
    rho: float
    beta: float
    k: int
    T: int
    seed: int
    signal_times: np.ndarray
    clamped: int = 0

    def records(self):
        for r, s in enumerate(self.signal_times.tolist()):
            hit = s != NO_SIGNAL
            yield {
                "replication": r,
                "signal_time": s if hit else None,
                "delay": s - self.k + 1 if hit else None,
                "variant": self.variant,
                "rho": self.rho,
                "beta": self.beta,
            }

    def to_ndjson(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec) + "\n")

    def metrics(self):
        return aggregate_study(self.signal_times, self.k, self.T)


def _study_chunk(args):
    rho, beta, cfg, v, limit, seed, start, stop = args
    paths = generate_batch(rho, beta, cfg.T, seed, range(start, stop))
    b = batch_statistics(paths, cfg)
    clamped = 0
    if isinstance(limit, ControlLimitCurve):
        vt = np.sqrt(b.vartheta2)
        clamped = int(np.count_nonzero((vt < limit.varthetas[0])
                                       | (vt > limit.varthetas[-1])))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        limits = chart_limits(b.vartheta2, cfg, v, limit)
    idx = _first_crossing(b.stat(v.statistic), limits)
    times = np.where(idx >= 0, b.times[np.maximum(idx, 0)], NO_SIGNAL)
    return times, clamped


def run_study(rho, beta, cfg, variant, limit, reps, seed, workers=1, chunk=250):
    """Run a chart on ``reps`` ARMA(1,1) replications.

    Replication ``r`` uses the substream ``(seed, r)``; results are
    independent of ``workers`` and ``chunk``.

    Returns
    -------
    StudyResult
    """
    v = get_variant(variant)
    resolved = _resolve_limit(cfg, v, limit)
    tasks = [(rho, beta, cfg, v, resolved, seed, s, min(s + chunk, reps))
             for s in range(0, reps, chunk)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_study_chunk, tasks))
    else:
        parts = [_study_chunk(t) for t in tasks]
    times = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, int)
    return StudyResult(v.id, float(rho), float(beta), cfg.k, cfg.T, int(seed),
                       times.astype(int), sum(p[1] for p in parts))


@dataclass(frozen=True)
class StudyMetrics:
    """Aggregated chart performance.

    ``histogram[d - 1]`` counts runs with delay ``d`` for
    ``d = 1, ..., T - k + 1``. Standard errors are plain Monte Carlo ones.
    """

    k: int
    T: int
    n_runs: int
    n_signals: int
    rejection_rate: float
    arl: float
    carl: float
    histogram: np.ndarray
    rate_se: float
    arl_se: float
    carl_se: float

    def early_fraction(self, max_delay):
        """Fraction of all runs that signal with delay ``<= max_delay``."""
        return float(self.histogram[:max_delay].sum()) / self.n_runs


def _signal_time(x):
    if isinstance(x, ChartRunResult):
        return NO_SIGNAL if x.signal_time is None else x.signal_time
    return NO_SIGNAL if x is None else int(x)


def _se(x):
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan


def aggregate_study(results, k, T):
    """Rejection rate, ARL, CARL and delay histogram.

    Parameters
    ----------
    results : sequence
        ``ChartRunResult`` objects or signal times (``None`` or ``NO_SIGNAL``
        for runs without signal).
    k, T : int
        Monitoring start and horizon shared by all runs.

    Raises
    ------
    AggregationError
        If ``results`` is empty or a signal time lies outside ``[k, T]``.
    """
    times = np.array([_signal_time(x) for x in results], dtype=int)
    if times.size == 0:
        raise AggregationError("no runs to aggregate")
    hit = times != NO_SIGNAL
    if np.any((times[hit] < k) | (times[hit] > T)):
        raise AggregationError(f"signal times must lie in [{k}, {T}]")
    horizon = T - k + 1
    delays = times[hit] - k + 1
    run_lengths = np.where(hit, times - k + 1, horizon)
    p = hit.mean()
    return StudyMetrics(
        k=k,
        T=T,
        n_runs=int(times.size),
        n_signals=int(hit.sum()),
        rejection_rate=float(p),
        arl=float(run_lengths.mean()),
        carl=float(delays.mean()) if delays.size else math.nan,
        histogram=np.bincount(delays - 1, minlength=horizon)[:horizon],
        rate_se=math.sqrt(p * (1 - p) / times.size),
        arl_se=_se(run_lengths),
        carl_se=_se(delays),
    )


def signal_histogram_export(metrics, path):
    """Write the nonzero delay bins as CSV ``delay,count,fraction``.

    ``fraction`` is relative to all runs, signaled or not.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delay", "count", "fraction"])
        for d in np.flatnonzero(metrics.histogram):
            count = int(metrics.histogram[d])
            writer.writerow([int(d) + 1, count, repr(count / metrics.n_runs)])

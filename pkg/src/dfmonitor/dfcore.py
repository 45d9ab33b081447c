"""
Sequential kernel-weighted Dickey-Fuller statistics.

For a path ``Y_0 = 0, Y_1, ..., Y_T`` and current time ``t`` the weighted
DF statistic is::

    D(t) = [t^-1 sum_{j<=t} Y_{j-1} dY_j K((t - j) / h)] / [t^-2 sum_{j<=t} Y_{j-1}^2]

with the convention ``0 / 0 = 0``. Related quantities:

* ``D_t_type``: ``D(t) / (t * xi_t)`` where ``xi_t^2 = s_t^2 / sum Y_{j-1}^2``
  and ``s_t^2`` is the residual variance of the no-intercept regression of
  ``Y_j`` on ``Y_{j-1}``.
* ``E``: ``D`` plus a long-run variance correction that removes the
  dependence of the null limit on ``vartheta = eta / sigma``.
* ``E_t_type``: the analogous correction of the t-type statistic.

The nuisance quantities ``sigma^2``, ``eta^2`` come from a Bartlett-weighted
Newey-West estimator on the first differences.

Two code paths exist. The scalar functions (``df_stat``, ``newey_west``, ...)
recompute everything at one ``t`` with compensated summation.
:func:`batch_statistics` evaluates all variants for many paths and all
monitoring times at once, vectorised over paths and times; :func:`trajectory` is its
single-path front end.
"""

from dataclasses import dataclass, field
import csv
import math
from typing import Optional

import numpy as np

from .exceptions import (
    InsufficientDataError,
    InvalidKernelError,
    ParameterError,
    RangeError,
    TruncationError,
)
from .kernels import KernelSpec, get_kernel

__all__ = [
    "ChartConfig",
    "NuisanceEstimate",
    "StatTrajectory",
    "BatchStatistics",
    "VARIANTS",
    "df_stat",
    "df_stat_flat_oracle",
    "df_t_stat",
    "newey_west",
    "default_lag_truncation",
    "transformed_stat_E",
    "transformed_stat_E_tilde",
    "trajectory",
    "batch_statistics",
]

VARIANTS = ("D", "D_t_type", "E", "E_t_type")
ETA_FLOOR = 1e-8


@dataclass(frozen=True)
class ChartConfig:
    """Monitoring design.

    Parameters
    ----------
    T : int
        Time horizon.
    kappa : float
        Monitoring starts at ``k = floor(T * kappa)``.
    h : float
        Kernel bandwidth; ``zeta = T / h`` must be at least 1.
    kernel : KernelSpec or str
    alpha : float
        Nominal type I error of the chart.
    lag : int, optional
        Fixed Newey-West truncation. ``None`` uses
        :func:`default_lag_truncation` at every ``t``.
    nw_squared_gamma : bool
        Use squared autocovariances in the Newey-West sum (for comparison
        only; the default is the standard unsquared form).
    stride : int
        Evaluate trajectories every ``stride`` time points.
    oracle : bool
        Allow testing-only kernels such as ``flat-test``.
    """

    T: int = 250
    kappa: float = 0.2
    h: float = 25.0
    kernel: KernelSpec = "gaussian"
    alpha: float = 0.05
    lag: Optional[int] = None
    nw_squared_gamma: bool = False
    stride: int = 1
    oracle: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        if int(self.T) != self.T or self.T < 2:
            raise ParameterError(f"T must be an integer >= 2, got {self.T}")
        object.__setattr__(self, "T", int(self.T))
        if not 0 < self.kappa < 1:
            raise ParameterError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.k < 2:
            raise ParameterError(f"monitoring start k = floor(T*kappa) = {self.k} < 2")
        if not self.h > 0:
            raise ParameterError(f"bandwidth must be positive, got {self.h}")
        if self.zeta < 1:
            raise ParameterError(f"zeta = T/h must be >= 1, got {self.zeta}")
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.lag is not None and self.lag < 1:
            raise ParameterError(f"lag truncation must be >= 1, got {self.lag}")
        if self.stride < 1:
            raise ParameterError(f"stride must be >= 1, got {self.stride}")
        if not self.kernel.production and not self.oracle:
            raise InvalidKernelError(
                f"kernel {self.kernel.id!r} is for testing only; set oracle=True"
            )

    @property
    def k(self):
        return int(math.floor(self.T * self.kappa + 1e-12))

    @property
    def zeta(self):
        return self.T / self.h

    @property
    def times(self):
        return np.arange(self.k, self.T + 1, self.stride)

    def lag_at(self, t):
        return self.lag if self.lag is not None else default_lag_truncation(t)


@dataclass(frozen=True)
class NuisanceEstimate:
    """Newey-West quantities at time ``t``."""

    t: int
    sigma2: float
    eta2: float
    vartheta2: float
    m: int

    @property
    def vartheta(self):
        return math.sqrt(self.vartheta2)


def _values(series):
    return np.asarray(getattr(series, "values", series), dtype=float)


def _ratio(num, den):
    return num / den if den != 0 else 0.0


def _check_t(cfg, t, n_values):
    if t < cfg.k or t > cfg.T:
        raise RangeError(f"t={t} outside the monitoring window [{cfg.k}, {cfg.T}]")
    if n_values < t + 1:
        raise InsufficientDataError(f"series has {n_values} values, need {t + 1}")


def _kernel_weights(cfg, t):
    lags = t - np.arange(1, t + 1)
    return cfg.kernel.value(lags / cfg.h)


def _df_parts(y, cfg, t):
    """Numerator, denominator and kernel mass of ``D`` at ``t``."""
    w = _kernel_weights(cfg, t)
    lagged = y[:t]
    num = math.fsum(lagged * np.diff(y[: t + 1]) * w) / t
    den = math.fsum(lagged * lagged) / t**2
    return num, den, math.fsum(w)


def df_stat(series, cfg, t):
    """Weighted Dickey-Fuller statistic ``D_T(t / T)``.

    Raises
    ------
    RangeError
        If ``t`` is outside ``[k, T]``.
    """
    y = _values(series)
    _check_t(cfg, t, len(y))
    num, den, _ = _df_parts(y, cfg, t)
    return _ratio(num, den)


def df_stat_flat_oracle(series, t):
    """Classical ``t * (rho_hat_t - 1)`` from the least squares estimate."""
    y = _values(series)
    if t < 2:
        raise RangeError(f"t must be at least 2, got {t}")
    if len(y) < t + 1:
        raise InsufficientDataError(f"series has {len(y)} values, need {t + 1}")
    lagged, current = y[:t], y[1 : t + 1]
    sxx = math.fsum(lagged * lagged)
    if sxx == 0:
        return 0.0
    rho_hat = math.fsum(lagged * current) / sxx
    return t * (rho_hat - 1.0)


def default_lag_truncation(t):
    """Newey-West lag ``max(1, floor(4 (t / 100)^(1/4)))``."""
    if t < 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    return max(1, int(math.floor(4.0 * (t / 100.0) ** 0.25)))


def newey_west(diffs, t, m, squared_gamma=False):
    """Bartlett-weighted long-run variance of the first ``t`` differences.

    ``sigma2 = t^-1 sum dY_s^2``, ``gamma(i) = t^-1 sum_{s=i+1}^t dY_s dY_{s-i}``
    and ``eta2 = sigma2 + 2 sum_{i=1}^m (m - i)/m * gamma(i)``, floored at
    ``1e-8 * sigma2``.

    Raises
    ------
    InsufficientDataError
        If ``t < 1`` or fewer than ``t`` differences are supplied.
    TruncationError
        Unless ``1 <= m < t``.
    """
    d = np.asarray(getattr(diffs, "diffs", diffs), dtype=float)
    if t < 1:
        raise InsufficientDataError("Newey-West needs at least one difference")
    if len(d) < t:
        raise InsufficientDataError(f"{len(d)} differences supplied, need {t}")
    if not 1 <= m < t:
        raise TruncationError(f"lag truncation m={m} must satisfy 1 <= m < t={t}")
    d = d[:t]
    sigma2 = math.fsum(d * d) / t
    acc = []
    for i in range(1, m):
        gamma = math.fsum(d[i:] * d[:-i]) / t
        if squared_gamma:
            gamma = gamma * gamma
        acc.append((m - i) / m * gamma)
    eta2 = sigma2 + 2.0 * math.fsum(acc)
    eta2 = max(eta2, ETA_FLOOR * sigma2)
    return NuisanceEstimate(t=t, sigma2=sigma2, eta2=eta2,
                            vartheta2=_ratio(eta2, sigma2), m=m)


def _nuisance(series, cfg, t):
    y = _values(series)
    return newey_west(np.diff(y), t, cfg.lag_at(t), cfg.nw_squared_gamma)


def transformed_stat_E(series, cfg, t, nu=None):
    """Corrected statistic ``E_T(t / T)``; equals ``D`` when ``eta2 == sigma2``."""
    y = _values(series)
    _check_t(cfg, t, len(y))
    if nu is None:
        nu = _nuisance(y, cfg, t)
    num, den, mass = _df_parts(y, cfg, t)
    correction = (nu.sigma2 - nu.eta2) / (2.0 * t) * mass
    return _ratio(num, den) + _ratio(correction, den)


def _t_type_parts(y, cfg, t):
    """``D``, ``t * xi_t`` and the residual standard deviation at ``t``."""
    num, den, mass = _df_parts(y, cfg, t)
    lagged, current = y[:t], y[1 : t + 1]
    sxx = math.fsum(lagged * lagged)
    if sxx == 0:
        return 0.0, 0.0, 0.0, den, mass
    rho_hat = math.fsum(lagged * current) / sxx
    resid = current - rho_hat * lagged
    s2 = math.fsum(resid * resid) / (t - 1)
    scale = t * math.sqrt(s2 / sxx)
    return num / den, scale, math.sqrt(s2), den, mass


def df_t_stat(series, cfg, t):
    """Weighted t-type statistic ``D(t) / (t * xi_t)``; 0 for a degenerate path."""
    y = _values(series)
    _check_t(cfg, t, len(y))
    if t < 3:
        raise RangeError(f"the t-type statistic needs t >= 3, got {t}")
    d, scale, _, _, _ = _t_type_parts(y, cfg, t)
    return _ratio(d, scale)


def transformed_stat_E_tilde(series, cfg, t, nu=None, resid_sd=None):
    """Corrected t-type statistic.

    ``(S / eta) * Dt - ((eta^2 - sigma^2) / (2 t)) * sum K / (eta * sqrt(den))``
    where ``S`` is the residual standard deviation. ``resid_sd`` overrides
    ``S`` (used to test the collapse ``S = eta, eta2 = sigma2``).
    """
    y = _values(series)
    _check_t(cfg, t, len(y))
    if t < 3:
        raise RangeError(f"the t-type statistic needs t >= 3, got {t}")
    if nu is None:
        nu = _nuisance(y, cfg, t)
    d, scale, sd, den, mass = _t_type_parts(y, cfg, t)
    if resid_sd is not None:
        sd = resid_sd
    eta = math.sqrt(nu.eta2)
    if den == 0 or eta == 0:
        return 0.0
    lead = sd / eta * _ratio(d, scale)
    correction = (nu.eta2 - nu.sigma2) / (2.0 * t) * mass / (eta * math.sqrt(den))
    return lead - correction


@dataclass
class BatchStatistics:
    """All statistics for ``R`` paths at the monitoring times.

    Arrays have shape ``(R, len(times))`` except ``times`` and ``m``.
    """

    times: np.ndarray
    T: int
    D: np.ndarray
    D_t_type: np.ndarray
    E: np.ndarray
    E_t_type: np.ndarray
    sigma2: np.ndarray
    eta2: np.ndarray
    m: np.ndarray

    @property
    def vartheta2(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.sigma2 > 0, self.eta2 / self.sigma2, 0.0)

    def stat(self, variant):
        if variant not in VARIANTS:
            raise ParameterError(f"unknown statistic variant {variant!r}")
        return getattr(self, variant)


def _weighted_numerator(a, cfg, times):
    """``sum_{j<=t} a_j K((t - j)/h)`` for every ``t`` in ``times``.

    Accumulates lag by lag, so each entry is summed in the same order
    whatever the batch shape or the set of times; a truncated series gives
    bit-identical values.
    """
    num = np.zeros((a.shape[0], times.size))
    lags = np.arange(int(times.max()))
    weights = cfg.kernel.value(lags / cfg.h)
    contiguous = times.size > 1 and np.all(np.diff(times) == 1)
    for lag, w in zip(lags, weights):
        if w == 0.0:
            continue
        pos = times - 1 - lag
        if contiguous:
            first = max(0, lag + 1 - int(times[0]))
            num[:, first:] += w * a[:, pos[first] : pos[-1] + 1]
        else:
            ok = pos >= 0
            num[:, ok] += w * a[:, pos[ok]]
    return num


def _kernel_mass(cfg, times):
    return np.array([math.fsum(_kernel_weights(cfg, int(t))) for t in times])


def _safe_div(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den != 0, num / np.where(den != 0, den, 1.0), 0.0)


def batch_statistics(paths, cfg, times=None):
    """Evaluate every statistic for a batch of paths.

    Parameters
    ----------
    paths : array_like, shape (R, n) or (n,)
        Paths starting with ``Y_0``; ``n`` must exceed the last requested
        time. Later values are ignored.
    cfg : ChartConfig
    times : array_like of int, optional
        Defaults to ``cfg.times``.

    Returns
    -------
    BatchStatistics
    """
    y = np.atleast_2d(np.asarray(paths, dtype=float))
    T = cfg.T
    times = cfg.times if times is None else np.atleast_1d(np.asarray(times, dtype=int))
    if times.size == 0:
        raise RangeError("no monitoring times requested")
    if times.min() < cfg.k or times.max() > T:
        raise RangeError(f"times must lie in [{cfg.k}, {T}]")
    last = int(times.max())
    if y.shape[1] < last + 1:
        raise InsufficientDataError(f"paths have {y.shape[1]} values, need {last + 1}")
    y = y[:, : last + 1]
    idx = times - 1

    lagged = y[:, :-1]
    dy = np.diff(y, axis=1)
    a = lagged * dy
    tt = times.astype(float)

    num = _weighted_numerator(a, cfg, times) / tt
    sxx = np.cumsum(lagged * lagged, axis=1)[:, idx]
    den = sxx / tt**2
    mass = _kernel_mass(cfg, times)
    D = _safe_div(num, den)

    sxy = np.cumsum(a, axis=1)[:, idx]
    syy = np.cumsum(dy * dy, axis=1)[:, idx]
    # residual sum of squares of Y_j on Y_{j-1}, written in differences
    ss = np.maximum(syy - _safe_div(sxy * sxy, sxx), 0.0)
    s2 = ss / (tt - 1.0)
    scale = tt * np.sqrt(_safe_div(s2, sxx))
    Dt = _safe_div(D, scale)

    m = np.array([cfg.lag_at(int(t)) for t in times], dtype=int)
    if np.any(m >= times):
        raise TruncationError("lag truncation must be smaller than t at every time")
    sigma2 = syy / tt
    lr = np.zeros_like(sigma2)
    for i in range(1, int(m.max(initial=1))):
        prod = np.cumsum(dy[:, i:] * dy[:, :-i], axis=1)
        valid = times - i - 1 >= 0
        gamma = np.zeros_like(sigma2)
        gamma[:, valid] = prod[:, (times - i - 1)[valid]] / tt[valid]
        if cfg.nw_squared_gamma:
            gamma = gamma * gamma
        weight = np.where(m > i, (m - i) / m, 0.0)
        lr += weight * gamma
    eta2 = np.maximum(sigma2 + 2.0 * lr, ETA_FLOOR * sigma2)

    E = D + _safe_div((sigma2 - eta2) / (2.0 * tt) * mass, den)
    eta = np.sqrt(eta2)
    sd = np.sqrt(s2)
    lead = _safe_div(sd, eta) * Dt
    corr = _safe_div((eta2 - sigma2) / (2.0 * tt) * mass, eta * np.sqrt(den))
    Et = np.where((den > 0) & (eta > 0), lead - corr, 0.0)

    return BatchStatistics(times=times, T=T, D=D, D_t_type=Dt, E=E, E_t_type=Et,
                           sigma2=sigma2, eta2=eta2, m=m)


@dataclass
class StatTrajectory:
    """A statistic evaluated along ``t = k, ..., T`` for one path."""

    variant: str
    times: np.ndarray
    T: int
    stats: np.ndarray
    sigma2: np.ndarray = field(repr=False)
    eta2: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)

    @property
    def s(self):
        return self.times / self.T

    @property
    def vartheta2(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.sigma2 > 0, self.eta2 / self.sigma2, 0.0)

    @property
    def nuisance(self):
        return [
            NuisanceEstimate(int(t), float(s2), float(e2), float(v2), int(m))
            for t, s2, e2, v2, m in zip(self.times, self.sigma2, self.eta2,
                                        self.vartheta2, self.m)
        ]

    def truncated(self, n):
        """First ``n`` entries (used when a chart stops early)."""
        return StatTrajectory(self.variant, self.times[:n], self.T, self.stats[:n],
                              self.sigma2[:n], self.eta2[:n], self.m[:n])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "s", "stat", "sigma2", "eta2", "vartheta"])
            for t, s, v, s2, e2, v2 in zip(self.times, self.s, self.stats,
                                           self.sigma2, self.eta2, self.vartheta2):
                writer.writerow([int(t), repr(float(s)), repr(float(v)),
                                 repr(float(s2)), repr(float(e2)),
                                 repr(math.sqrt(v2))])


def trajectory(series, cfg, variant="D", partial=False):
    """Statistic ``variant`` at every monitoring time of ``cfg``.

    With ``partial=True`` a series that ends before the horizon is evaluated
    at ``t = k, ..., len(series) - 1``; at least ``k + 1`` values are needed.
    """
    if variant not in VARIANTS:
        raise ParameterError(f"unknown statistic variant {variant!r}")
    y = _values(series)
    need = cfg.k + 1 if partial else cfg.T + 1
    if len(y) < need:
        raise InsufficientDataError(f"series has {len(y)} values, need {need}")
    times = cfg.times
    times = times[times <= len(y) - 1]
    b = batch_statistics(y, cfg, times)
    return StatTrajectory(variant, b.times, cfg.T, b.stat(variant)[0],
                          b.sigma2[0], b.eta2[0], b.m)

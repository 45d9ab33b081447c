"""
Monte Carlo simulation of the limit laws and control-limit calibration.

On the grid ``r_i = i / n`` a driver path ``Z`` (Brownian motion for
``a = 0``, an Ornstein-Uhlenbeck process ``Z_a(s) = int_0^s e^{a(s-r)} dB(r)``
otherwise) is drawn by its exact Gaussian transition. For every grid point
``s >= kappa`` the limit functional of the weighted DF statistic is

    D(s) = (s/2) {K(0) Z(s)^2 + zeta int Z^2 K'(zeta(s-r)) dr
                  - 2a int Z^2 K(zeta(s-r)) dr - vartheta^-2 int K(zeta(s-r)) dr}
           / int Z^2 dr

and that of the t-type statistic is

    Dt(s) = (1/2) {vartheta A(s) - vartheta^-1 int K(zeta(s-r)) dr} / sqrt(int Z^2 dr)

with ``A`` the first three terms in braces. Both split as
``p(vartheta) * lead(s) - q(vartheta) * corr(s)`` where only ``corr``
involves the kernel mass, so one set of driver paths serves a whole grid of
``vartheta`` values (common random numbers). Integrals use the trapezoidal
rule on the driver grid; the infimum over ``[kappa, 1]`` is the grid minimum.

The control limit ``c(vartheta)`` is the empirical ``alpha``-quantile of the
simulated infima.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
import json
import math
import warnings

import numpy as np
from scipy import integrate

from ._rng import substream
from .dfcore import ChartConfig, batch_statistics
from .exceptions import CalibrationError, ParameterError, SimulationQualityError
from .innovations import ar1_path, generate_batch, ma1_vartheta
from .kernels import get_kernel

__all__ = [
    "LimitSimConfig",
    "ControlLimitCurve",
    "CalibratedLimit",
    "ClampWarning",
    "driver_paths",
    "limit_components",
    "limit_functional",
    "simulate_limit_inf",
    "simulate_limit_infs",
    "empirical_quantile",
    "bootstrap_stderr",
    "calibrate_control_limit",
    "build_curve",
    "default_vartheta_grid",
    "finite_sample_infs",
    "STUDY_BETAS",
]

LIMIT_VARIANTS = ("D", "D_t_type")
STUDY_BETAS = (-0.8, -0.5, 0.0, 0.5, 0.8)
MAX_REJECTION_RATE = 1e-3
_CHUNK = 1000
_BOOT_KEY = 2**32 - 1


class ClampWarning(UserWarning):
    """A control-limit curve was evaluated outside its knot range."""


@dataclass(frozen=True)
class LimitSimConfig:
    """Settings for simulating the limit functional.

    ``kernel`` is stored by id so the config serialises cleanly. For
    ``a != 0``, ``a_term`` keeps the ``-2a int Z^2 K`` summand of the
    textbook local-to-unity limit. That summand belongs to the limit of
    ``sum Y_{t-1} eps_t K``; the statistic itself uses ``dY_t`` in place of
    ``eps_t`` and converges to the functional without it, which
    ``a_term=False`` selects.
    """

    n_grid: int = 1000
    reps: int = 20000
    kappa: float = 0.2
    zeta: float = 10.0
    kernel: str = "gaussian"
    vartheta: float = 1.0
    a: float = 0.0
    a_term: bool = True
    variant: str = "D"
    seed: int = 0
    n_boot: int = 200

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel).id)
        if self.n_grid < 100:
            raise ParameterError(f"n_grid must be >= 100, got {self.n_grid}")
        if self.reps < 1000:
            raise ParameterError(f"reps must be >= 1000, got {self.reps}")
        if not 0 < self.kappa < 1:
            raise ParameterError(f"kappa must lie in (0, 1), got {self.kappa}")
        if not self.vartheta > 0:
            raise ParameterError(f"vartheta must be positive, got {self.vartheta}")
        if self.zeta < 1:
            raise ParameterError(f"zeta must be >= 1, got {self.zeta}")
        if self.variant not in LIMIT_VARIANTS:
            raise ParameterError(f"variant must be one of {LIMIT_VARIANTS}")

    @property
    def first_index(self):
        """Index of the first grid point with ``s >= kappa``."""
        return int(math.ceil(self.kappa * self.n_grid - 1e-9))

    @property
    def s_grid(self):
        return np.arange(self.first_index, self.n_grid + 1) / self.n_grid


def driver_paths(normals, a=0.0):
    """Driver paths on ``r_i = i/n`` from standard normals of shape ``(R, n)``.

    Uses ``Z(r_{i+1}) = e^{a/n} Z(r_i) + N(0, (e^{2a/n} - 1) / (2a))``; at
    ``a = 0`` this is exactly the Brownian recursion with step variance
    ``1/n``.
    """
    xi = np.atleast_2d(np.asarray(normals, dtype=float))
    n = xi.shape[1]
    if a == 0:
        phi, sd = 1.0, math.sqrt(1.0 / n)
    else:
        phi = math.exp(a / n)
        sd = math.sqrt(math.expm1(2.0 * a / n) / (2.0 * a))
    return ar1_path(phi, sd * xi)


@lru_cache(maxsize=32)
def _kernel_tables(kernel_id, zeta, n, first):
    """Convolution matrices and the deterministic kernel mass on the grid."""
    k = get_kernel(kernel_id)
    rows = np.arange(first, n + 1)
    lags = rows[:, None] - np.arange(n + 1)[None, :]
    u = np.maximum(lags, 0) / n
    mask = lags >= 0
    kp = np.where(mask, k.derivative(zeta * u), 0.0)
    kv = np.where(mask, k.value(zeta * u), 0.0)
    # trapezoid: halve the two endpoint weights of each row
    kp[:, 0] *= 0.5
    kv[:, 0] *= 0.5
    kp[np.arange(len(rows)), rows] *= 0.5
    kv[np.arange(len(rows)), rows] *= 0.5
    mass = np.array([
        integrate.quad(lambda x: k.value(zeta * x), 0.0, j / n, limit=200)[0]
        for j in rows
    ])
    return kp / n, kv / n, mass, k.at_zero


def limit_components(paths, cfg):
    """Split the limit functional into ``lead`` and ``corr`` parts.

    Returns
    -------
    lead, corr : ndarray, shape (R, J)
        Values at ``cfg.s_grid`` such that the functional equals
        ``lead - vartheta^-2 corr`` (variant ``D``) or
        ``vartheta lead - vartheta^-1 corr`` (variant ``D_t_type``).
    """
    z = np.atleast_2d(paths)
    n = z.shape[1] - 1
    first = int(math.ceil(cfg.kappa * n - 1e-9))
    kp, kv, mass, k0 = _kernel_tables(cfg.kernel, float(cfg.zeta), n, first)
    z2 = z * z
    rows = np.arange(first, n + 1)
    csum = np.cumsum(z2, axis=1)
    i2 = (csum[:, rows] - 0.5 * z2[:, [0]] - 0.5 * z2[:, rows]) / n
    braces = k0 * z2[:, rows] + cfg.zeta * (z2 @ kp.T)
    if cfg.a != 0 and cfg.a_term:
        braces -= 2.0 * cfg.a * (z2 @ kv.T)
    s = rows / n
    with np.errstate(divide="ignore", invalid="ignore"):
        if cfg.variant == "D":
            lead = 0.5 * s * braces / i2
            corr = 0.5 * s * mass / i2
        else:
            root = np.sqrt(i2)
            lead = 0.5 * braces / root
            corr = 0.5 * mass / root
    return lead, corr


def _weights(variant, vartheta):
    vartheta = np.asarray(vartheta, dtype=float)
    if variant == "D":
        return np.ones_like(vartheta), vartheta**-2.0
    return vartheta, 1.0 / vartheta


def limit_functional(paths, cfg, vartheta=None):
    """Limit functional on ``cfg.s_grid`` for one ``vartheta``."""
    lead, corr = limit_components(paths, cfg)
    p, q = _weights(cfg.variant, cfg.vartheta if vartheta is None else vartheta)
    return p * lead - q * corr


def _infima(lead, corr, variant, varthetas):
    p, q = _weights(variant, varthetas)
    out = np.empty((lead.shape[0], len(varthetas)))
    for j in range(len(varthetas)):
        out[:, j] = np.min(p[j] * lead - q[j] * corr, axis=1)
    return out


def simulate_limit_inf(cfg, rng, varthetas=None):
    """One replication of ``inf_{s in [kappa, 1]}`` of the limit functional.

    Non-finite draws are rejected and redrawn from the same generator.

    Returns
    -------
    float, or ndarray if ``varthetas`` is given (common driver path).
    """
    vt = [cfg.vartheta] if varthetas is None else list(varthetas)
    for _ in range(1000):
        z = driver_paths(rng.standard_normal((1, cfg.n_grid)), cfg.a)
        lead, corr = limit_components(z, cfg)
        inf = _infima(lead, corr, cfg.variant, vt)[0]
        if np.all(np.isfinite(inf)):
            return float(inf[0]) if varthetas is None else inf
    raise SimulationQualityError("limit functional is never finite")


def _simulate_chunk(args):
    cfg, start, stop, varthetas = args
    rngs = [substream(cfg.seed, r) for r in range(start, stop)]
    xi = np.stack([g.standard_normal(cfg.n_grid) for g in rngs])
    out = np.empty((stop - start, len(varthetas)))
    todo = np.arange(stop - start)
    rejected = 0
    while todo.size:
        z = driver_paths(xi[todo], cfg.a)
        lead, corr = limit_components(z, cfg)
        inf = _infima(lead, corr, cfg.variant, varthetas)
        ok = np.all(np.isfinite(inf), axis=1)
        out[todo[ok]] = inf[ok]
        todo = todo[~ok]
        rejected += todo.size
        if rejected > MAX_REJECTION_RATE * cfg.reps + 1:
            break
        for i in todo:
            xi[i] = rngs[i].standard_normal(cfg.n_grid)
    return out, rejected


def simulate_limit_infs(cfg, varthetas=None, workers=1):
    """Infima for replications ``0..reps-1``, shape ``(reps, len(varthetas))``.

    Replication ``r`` uses the substream ``(seed, r)`` and matches
    ``simulate_limit_inf(cfg, substream(seed, r))``; results do not depend
    on ``workers``.

    Returns
    -------
    infs : ndarray
    rejected : int
        Number of redrawn replications.

    Raises
    ------
    SimulationQualityError
        If more than 0.1% of the replications had to be redrawn.
    """
    vt = tuple([cfg.vartheta] if varthetas is None else varthetas)
    tasks = [(cfg, s, min(s + _CHUNK, cfg.reps), vt) for s in range(0, cfg.reps, _CHUNK)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_chunk, tasks))
    else:
        parts = [_simulate_chunk(t) for t in tasks]
    rejected = sum(p[1] for p in parts)
    if rejected > MAX_REJECTION_RATE * cfg.reps:
        raise SimulationQualityError(
            f"{rejected} of {cfg.reps} replications rejected (limit 0.1%)"
        )
    return np.concatenate([p[0] for p in parts]), rejected


def empirical_quantile(sample, alpha):
    """``alpha``-quantile with linear interpolation between order statistics."""
    return float(np.quantile(np.sort(np.asarray(sample, dtype=float)), alpha))


def bootstrap_stderr(sample, alpha, n_boot=200, seed=0):
    """Bootstrap standard error of the empirical ``alpha``-quantile."""
    x = np.asarray(sample, dtype=float)
    rng = substream(seed, _BOOT_KEY)
    qs = np.empty(n_boot)
    for b in range(n_boot):
        qs[b] = np.quantile(x[rng.integers(0, x.size, x.size)], alpha)
    return float(np.std(qs, ddof=1))


@dataclass(frozen=True)
class CalibratedLimit:
    """Control limit with its Monte Carlo standard error."""

    c: float
    stderr: float
    reps: int
    rejected: int = 0

    def __float__(self):
        return self.c


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def calibrate_control_limit(alpha, vartheta, variant, sim, workers=1):
    """Control limit ``c`` with ``P(inf D_vartheta < c) = alpha``.

    Raises
    ------
    CalibrationError
        If the quantile is not negative.
    """
    _check_alpha(alpha)
    sim = replace(sim, vartheta=vartheta, variant=variant)
    infs, rejected = simulate_limit_infs(sim, workers=workers)
    c = empirical_quantile(infs[:, 0], alpha)
    if not c < 0:
        raise CalibrationError(f"calibrated limit {c:.4g} is not negative")
    se = bootstrap_stderr(infs[:, 0], alpha, sim.n_boot, sim.seed)
    return CalibratedLimit(c, se, sim.reps, rejected)


def default_vartheta_grid():
    """13 geometric points on [0.1, 2] plus the values implied by the ARMA study."""
    grid = np.concatenate([np.geomspace(0.1, 2.0, 13),
                           [ma1_vartheta(b) for b in STUDY_BETAS]])
    return np.unique(np.round(grid, 12))


class ControlLimitCurve:
    """Piecewise linear map ``vartheta -> c(vartheta)``.

    Evaluation outside the knot range clamps to the end knots and issues a
    :class:`ClampWarning`; ``clamp_count`` records how many values were
    clamped.
    """

    FORMAT_VERSION = 1

    def __init__(self, alpha, variant, varthetas, limits, stderrs, sim):
        self.alpha = float(alpha)
        self.variant = variant
        self.varthetas = np.asarray(varthetas, dtype=float)
        self.limits = np.asarray(limits, dtype=float)
        self.stderrs = np.asarray(stderrs, dtype=float)
        self.sim = sim
        self.clamp_count = 0
        if np.any(np.diff(self.varthetas) <= 0):
            raise ParameterError("curve knots must be strictly increasing")
        if np.any(self.limits >= 0):
            raise CalibrationError("every control limit must be negative")

    def __call__(self, vartheta):
        v = np.asarray(vartheta, dtype=float)
        out = np.interp(v, self.varthetas, self.limits)
        outside = (v < self.varthetas[0]) | (v > self.varthetas[-1])
        n_out = int(np.count_nonzero(outside))
        if n_out:
            self.clamp_count += n_out
            warnings.warn(
                f"{n_out} vartheta value(s) outside [{self.varthetas[0]:.4g}, "
                f"{self.varthetas[-1]:.4g}] clamped to the end knots",
                ClampWarning, stacklevel=2,
            )
        return float(out) if out.ndim == 0 else out

    @property
    def knots(self):
        return list(zip(self.varthetas.tolist(), self.limits.tolist(),
                        self.stderrs.tolist()))

    def to_dict(self):
        sim = self.sim
        return {
            "format_version": self.FORMAT_VERSION,
            "alpha": self.alpha,
            "variant": self.variant,
            "kernel": sim.kernel,
            "kappa": sim.kappa,
            "zeta": sim.zeta,
            "n_grid": sim.n_grid,
            "reps": sim.reps,
            "seed": sim.seed,
            "a": sim.a,
            "a_term": sim.a_term,
            "n_boot": sim.n_boot,
            "knots": [list(k) for k in self.knots],
        }

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format_version") != cls.FORMAT_VERSION:
            raise ParameterError(
                f"unsupported curve format version {doc.get('format_version')!r}"
            )
        sim = LimitSimConfig(
            n_grid=doc["n_grid"], reps=doc["reps"], kappa=doc["kappa"],
            zeta=doc["zeta"], kernel=doc["kernel"], a=doc.get("a", 0.0),
            a_term=doc.get("a_term", True),
            variant=doc["variant"], seed=doc["seed"], n_boot=doc.get("n_boot", 200),
        )
        knots = np.asarray(doc["knots"], dtype=float)
        return cls(doc["alpha"], doc["variant"], knots[:, 0], knots[:, 1],
                   knots[:, 2], sim)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def build_curve(alpha, variant, vartheta_grid=None, sim=None, workers=1):
    """Calibrate ``c`` on a grid of ``vartheta`` with common random numbers.

    Raises
    ------
    ParameterError
        If the grid has fewer than 5 points or does not cover [0.15, 1.5].
    CalibrationError
        If any knot's limit is not negative.
    """
    _check_alpha(alpha)
    sim = LimitSimConfig(variant=variant) if sim is None else replace(sim, variant=variant)
    grid = default_vartheta_grid() if vartheta_grid is None else np.asarray(vartheta_grid)
    grid = np.unique(np.asarray(grid, dtype=float))
    if grid.size < 5 or grid[0] > 0.15 or grid[-1] < 1.5:
        raise ParameterError(
            "vartheta grid needs at least 5 points spanning [0.15, 1.5]"
        )
    infs, _ = simulate_limit_infs(sim, grid, workers=workers)
    limits, ses = [], []
    for j, v in enumerate(grid):
        c = empirical_quantile(infs[:, j], alpha)
        if not c < 0:
            raise CalibrationError(f"limit at vartheta={v:.4g} is {c:.4g}, not negative")
        limits.append(c)
        ses.append(bootstrap_stderr(infs[:, j], alpha, sim.n_boot, sim.seed))
    return ControlLimitCurve(alpha, variant, grid, limits, ses, sim)


def finite_sample_infs(cfg, reps, seed, variant="D", rho=1.0, beta=0.0, chunk=500):
    """``min_{k <= t <= T}`` of a finite-sample statistic over ARMA(1,1) paths.

    Used to compare the simulated limit law with the statistic it
    approximates.
    """
    if not isinstance(cfg, ChartConfig):
        raise ParameterError("cfg must be a ChartConfig")
    out = np.empty(reps)
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        paths = generate_batch(rho, beta, cfg.T, seed, range(start, stop))
        out[start:stop] = batch_statistics(paths, cfg).stat(variant).min(axis=1)
    return out


def sim_config_dict(sim):
    return asdict(sim)

"""
Data sources for monitoring experiments.

All generated paths start at ``Y_0 = 0`` and follow the AR(1) recursion
``Y_t = rho * Y_{t-1} + eps_t``. The innovations are

* ARMA(1,1): ``eps_t = e_t - beta * e_{t-1}`` with i.i.d. N(0, 1) ``e_t``;
  the pre-sample error ``e_0`` is drawn from the same stream, so the
  innovation sequence is stationary from ``t = 1``.
* local-to-unity: the same MA(1) innovations with ``rho_T = 1 + a / T``.
* ARCH(1): ``eps_t = sd_t * xi_t`` with ``sd_t^2 = a0 + b1 * eps_{t-1}^2``.

Every generator is a pure function of its spec and seed.
"""

from dataclasses import dataclass, field
import json
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import signal

from ._rng import substream
from .exceptions import (
    InsufficientDataError,
    ParameterError,
    ParseError,
    StationarityError,
)

__all__ = [
    "SeriesPath",
    "GenSpec",
    "generate",
    "generate_batch",
    "gen_arma11",
    "gen_local_to_unity",
    "gen_arch1_innovations",
    "ar1_path",
    "ingest_series",
    "ma1_vartheta",
    "ARCH_BURN_IN",
]

ARCH_BURN_IN = 500
MODELS = ("arma11", "local_to_unity", "arch1_innovations")


@dataclass(frozen=True)
class SeriesPath:
    """A univariate path ``Y_0, ..., Y_T`` together with its differences."""

    values: np.ndarray
    origin: str = "generated"
    seed: Optional[int] = None
    diffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ParameterError("series values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ParameterError("series contains non-finite values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "diffs", np.diff(values))

    @property
    def T(self):
        return len(self.values) - 1

    def __len__(self):
        return len(self.values)

    def scaled(self, c):
        return SeriesPath(c * self.values, origin=self.origin, seed=self.seed)


@dataclass(frozen=True)
class GenSpec:
    """Parameters of a synthetic path.

    ``rho`` is used by ``arma11`` and ``arch1_innovations``, ``a`` by
    ``local_to_unity``; ``beta`` is the MA(1) coefficient of the first two.
    """

    model: str = "arma11"
    rho: float = 1.0
    beta: float = 0.0
    a: float = 0.0
    T: int = 250
    seed: int = 0
    arch_a0: float = 1.0
    arch_b1: float = 0.3

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"unknown model {self.model!r}; choose one of {MODELS}")
        if int(self.T) != self.T or self.T < 2:
            raise ParameterError(f"T must be an integer >= 2, got {self.T}")

    @property
    def rho_T(self):
        """Autoregressive parameter actually used for the path."""
        if self.model == "local_to_unity":
            return 1.0 + self.a / self.T
        return self.rho


def ar1_path(rho, eps):
    """``Y_0 = 0, Y_t = rho * Y_{t-1} + eps_t`` along the last axis.

    Returns an array one longer than ``eps`` in the last dimension.
    """
    eps = np.asarray(eps, dtype=float)
    y = signal.lfilter([1.0], [1.0, -rho], eps, axis=-1)
    pad = [(0, 0)] * (eps.ndim - 1) + [(1, 0)]
    return np.pad(y, pad)


def _ma1_innovations(rng, T, beta):
    e = rng.standard_normal(T + 1)
    return e[1:] - beta * e[:-1]


def gen_arma11(spec):
    """ARMA(1,1) path ``Y_t = rho Y_{t-1} + e_t - beta e_{t-1}``.

    Raises
    ------
    ParameterError
        If ``|rho| > 1`` or the spec is for another model.
    """
    if spec.model != "arma11":
        raise ParameterError(f"gen_arma11 needs model='arma11', got {spec.model!r}")
    if abs(spec.rho) > 1:
        raise ParameterError(f"|rho| must not exceed 1, got {spec.rho}")
    eps = _ma1_innovations(substream(spec.seed), spec.T, spec.beta)
    return SeriesPath(ar1_path(spec.rho, eps), origin="generated", seed=spec.seed)


def gen_local_to_unity(spec):
    """Path of the local-to-unity array with ``rho_T = 1 + a / T``.

    With ``a = 0`` the result is bit-identical to :func:`gen_arma11` with
    ``rho = 1`` for the same seed and ``beta``.
    """
    if spec.model != "local_to_unity":
        raise ParameterError(
            f"gen_local_to_unity needs model='local_to_unity', got {spec.model!r}"
        )
    rho = spec.rho_T
    if rho <= -1:
        raise ParameterError(f"1 + a/T must exceed -1, got {rho}")
    eps = _ma1_innovations(substream(spec.seed), spec.T, spec.beta)
    return SeriesPath(ar1_path(rho, eps), origin="generated", seed=spec.seed)


def gen_arch1_innovations(a0, b1, T, seed, burn_in=ARCH_BURN_IN):
    """ARCH(1) innovations ``eps_t = sqrt(a0 + b1 eps_{t-1}^2) * xi_t``.

    The first ``burn_in`` values are discarded. With ``a0 = 1, b1 = 0`` the
    output is the underlying standard normal sequence.

    Raises
    ------
    StationarityError
        If ``b1 >= 1`` (with standard normal ``xi``, ``E(xi^2)^{1/2} = 1``).
    ParameterError
        If ``a0 <= 0`` or ``b1 < 0``.
    """
    if a0 <= 0:
        raise ParameterError(f"a0 must be positive, got {a0}")
    if b1 < 0:
        raise ParameterError(f"b1 must be nonnegative, got {b1}")
    if b1 >= 1:
        raise StationarityError(f"ARCH(1) needs b1 < 1 for stationarity, got {b1}")
    xi = substream(seed).standard_normal(int(T) + burn_in)
    eps = np.empty_like(xi)
    prev = 0.0
    for i, x in enumerate(xi):
        prev = np.sqrt(a0 + b1 * prev * prev) * x
        eps[i] = prev
    return eps[burn_in:]


def generate(spec):
    """Dispatch on ``spec.model``."""
    if spec.model == "arma11":
        return gen_arma11(spec)
    if spec.model == "local_to_unity":
        return gen_local_to_unity(spec)
    if abs(spec.rho) > 1:
        raise ParameterError(f"|rho| must not exceed 1, got {spec.rho}")
    eps = gen_arch1_innovations(spec.arch_a0, spec.arch_b1, spec.T, spec.seed)
    return SeriesPath(ar1_path(spec.rho, eps), origin="generated", seed=spec.seed)


def generate_batch(rho, beta, T, seed, replications):
    """ARMA(1,1) paths for the given replication indices, shape ``(R, T+1)``.

    Replication ``r`` draws from the substream ``(seed, r)``, so a study is
    independent of batching and worker layout.
    """
    if abs(rho) > 1:
        raise ParameterError(f"|rho| must not exceed 1, got {rho}")
    replications = np.atleast_1d(replications)
    eps = np.empty((len(replications), T))
    for i, r in enumerate(replications):
        eps[i] = _ma1_innovations(substream(seed, r), T, beta)
    return ar1_path(rho, eps)


def ma1_vartheta(beta):
    """Long-run to short-run standard deviation ratio of ``e_t - beta e_{t-1}``."""
    return abs(1.0 - beta) / np.sqrt(1.0 + beta * beta)


def ingest_series(path, format="csv-single-column"):
    """Read an observed series.

    Parameters
    ----------
    path : str or Path
    format : {"csv-single-column", "ndjson"}
        One real per line, or one JSON object ``{"y": value}`` per line.
        Blank lines are skipped.

    Raises
    ------
    ParseError
        On a non-numeric row; ``.line`` holds the 1-based line number.
    InsufficientDataError
        If fewer than three values are present.
    """
    if format not in ("csv-single-column", "ndjson"):
        raise ParameterError(f"unknown input format {format!r}")
    values = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                if format == "ndjson":
                    v = float(json.loads(line)["y"])
                else:
                    v = float(line)
            except (ValueError, KeyError, TypeError):
                raise ParseError(f"{path}: line {lineno}: cannot parse {line!r}",
                                 line=lineno) from None
            if not np.isfinite(v):
                raise ParseError(f"{path}: line {lineno}: non-finite value", line=lineno)
            values.append(v)
    if len(values) < 3:
        raise InsufficientDataError(f"{path}: need at least 3 values, got {len(values)}")
    return SeriesPath(np.array(values), origin="ingested")

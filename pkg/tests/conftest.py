import numpy as np
import pytest

from dfmonitor.dfcore import ChartConfig
from dfmonitor.limits import LimitSimConfig, build_curve


@pytest.fixture(scope="session")
def d_curve():
    """Production-size curve for the D limit law at kappa = 0.2."""
    return build_curve(0.05, "D", sim=LimitSimConfig(reps=20000, seed=0))


@pytest.fixture(scope="session")
def quick_curve():
    """Small curve for plumbing tests."""
    return build_curve(0.05, "D", sim=LimitSimConfig(n_grid=200, reps=1000, seed=5))


@pytest.fixture
def flat_cfg():
    return ChartConfig(T=250, kappa=0.2, h=25.0, kernel="flat-test", oracle=True)


@pytest.fixture
def rw():
    rng = np.random.default_rng(20240611)
    return np.concatenate([[0.0], np.cumsum(rng.standard_normal(250))])

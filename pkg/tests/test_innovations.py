import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dfmonitor._rng import substream
from dfmonitor.exceptions import (
    InsufficientDataError,
    ParameterError,
    ParseError,
    StationarityError,
)
from dfmonitor.innovations import (
    ARCH_BURN_IN,
    GenSpec,
    SeriesPath,
    ar1_path,
    gen_arch1_innovations,
    gen_arma11,
    gen_local_to_unity,
    generate,
    generate_batch,
    ingest_series,
    ma1_vartheta,
)


def test_arma_path_shape_and_origin():
    p = gen_arma11(GenSpec(rho=0.9, beta=0.5, T=250, seed=3))
    assert p.values.shape == (251,)
    assert p.values[0] == 0.0
    assert p.T == 250
    assert np.array_equal(p.diffs, np.diff(p.values))


def test_generation_is_deterministic():
    a = gen_arma11(GenSpec(rho=0.95, beta=-0.5, seed=11))
    b = gen_arma11(GenSpec(rho=0.95, beta=-0.5, seed=11))
    c = gen_arma11(GenSpec(rho=0.95, beta=-0.5, seed=12))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_random_walk_differences_are_the_innovations():
    e = substream(4).standard_normal(251)
    p = gen_arma11(GenSpec(rho=1.0, beta=0.0, T=250, seed=4))
    # cumulative summation then differencing is exact up to a few ulps
    np.testing.assert_allclose(p.diffs, e[1:], rtol=0, atol=8 * np.spacing(np.abs(p.values).max()))


def test_ma_recursion_matches_direct_loop():
    rho, beta, T = 0.9, 0.5, 60
    e = substream(9).standard_normal(T + 1)
    y = [0.0]
    for t in range(1, T + 1):
        y.append(rho * y[-1] + e[t] - beta * e[t - 1])
    p = gen_arma11(GenSpec(rho=rho, beta=beta, T=T, seed=9))
    np.testing.assert_allclose(p.values, y, rtol=1e-12, atol=1e-12)


def test_explosive_rho_rejected():
    with pytest.raises(ParameterError):
        gen_arma11(GenSpec(rho=1.01))
    with pytest.raises(ParameterError):
        generate_batch(1.2, 0.0, 10, 0, [0])


def test_local_to_unity_at_zero_is_random_walk_bitwise():
    for beta in (0.0, 0.5):
        a = gen_local_to_unity(GenSpec(model="local_to_unity", a=0.0, beta=beta, seed=5))
        b = gen_arma11(GenSpec(rho=1.0, beta=beta, seed=5))
        assert np.array_equal(a.values, b.values)


def test_local_to_unity_parameter():
    spec = GenSpec(model="local_to_unity", a=-10.0, T=250)
    assert spec.rho_T == pytest.approx(0.96)
    p = generate(spec)
    q = gen_arma11(GenSpec(rho=0.96, T=250, seed=0))
    np.testing.assert_allclose(p.values, q.values, rtol=1e-13)
    with pytest.raises(ParameterError):
        generate(GenSpec(model="local_to_unity", a=-600.0, T=250))


def test_wrong_model_for_generator():
    with pytest.raises(ParameterError):
        gen_arma11(GenSpec(model="local_to_unity"))
    with pytest.raises(ParameterError):
        GenSpec(model="garch")


def test_batch_replications_do_not_depend_on_batching():
    full = generate_batch(0.95, 0.5, 100, 7, range(10))
    part = generate_batch(0.95, 0.5, 100, 7, [3, 4])
    assert np.array_equal(full[3:5], part)


def test_stationary_ar1_autocorrelation():
    y = ar1_path(0.5, substream(1).standard_normal(200000))[1:]
    r1 = np.corrcoef(y[1:], y[:-1])[0, 1]
    assert abs(r1 - 0.5) < 0.01


def test_arch_degenerates_to_normals():
    eps = gen_arch1_innovations(1.0, 0.0, 300, seed=2)
    xi = substream(2).standard_normal(300 + ARCH_BURN_IN)[ARCH_BURN_IN:]
    assert np.array_equal(eps, xi)


def test_arch_stationary_variance():
    eps = gen_arch1_innovations(1.0, 0.3, 200000, seed=8)
    assert eps.var() == pytest.approx(1.0 / 0.7, rel=0.04)
    # ARCH errors are uncorrelated but their squares are not
    assert abs(np.corrcoef(eps[1:], eps[:-1])[0, 1]) < 0.01
    assert np.corrcoef(eps[1:] ** 2, eps[:-1] ** 2)[0, 1] > 0.15


def test_arch_parameter_checks():
    with pytest.raises(StationarityError):
        gen_arch1_innovations(1.0, 1.0, 10, 0)
    with pytest.raises(ParameterError):
        gen_arch1_innovations(0.0, 0.3, 10, 0)
    with pytest.raises(ParameterError):
        gen_arch1_innovations(1.0, -0.1, 10, 0)
    p = generate(GenSpec(model="arch1_innovations", rho=0.9, T=50, seed=1))
    assert p.values.shape == (51,)


@pytest.mark.parametrize("beta,expected", [(-0.8, 1.405563), (-0.5, 1.341641),
                                           (0.0, 1.0), (0.5, 0.447214), (0.8, 0.156174)])
def test_ma1_vartheta_values(beta, expected):
    assert ma1_vartheta(beta) == pytest.approx(expected, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.9, 0.9))
def test_ma1_vartheta_matches_autocovariances(beta):
    # long-run variance gamma0 + 2 gamma1 over short-run variance gamma0
    g0, g1 = 1 + beta**2, -beta
    assert ma1_vartheta(beta) ** 2 == pytest.approx((g0 + 2 * g1) / g0, rel=1e-12)


def test_series_path_validation_and_scaling():
    p = SeriesPath(np.array([0.0, 1.0, 3.0]))
    assert np.array_equal(p.scaled(2.0).values, [0.0, 2.0, 6.0])
    assert len(p) == 3
    with pytest.raises(ParameterError):
        SeriesPath(np.array([0.0, np.nan, 1.0]))
    with pytest.raises(ParameterError):
        SeriesPath(np.zeros((2, 2)))


def test_ingest_csv_and_ndjson(tmp_path):
    f = tmp_path / "y.csv"
    f.write_text("0\n1.5\n\n-2\n3e-1\n")
    p = ingest_series(f)
    assert np.array_equal(p.values, [0.0, 1.5, -2.0, 0.3])
    assert p.origin == "ingested"
    g = tmp_path / "y.ndjson"
    g.write_text("\n".join(json.dumps({"y": v}) for v in (0, 1, 2)) + "\n")
    assert np.array_equal(ingest_series(g, "ndjson").values, [0.0, 1.0, 2.0])


def test_ingest_errors(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("0\n1\nabc\n2\n")
    with pytest.raises(ParseError) as info:
        ingest_series(f)
    assert info.value.line == 3
    g = tmp_path / "short.csv"
    g.write_text("0\n1\n")
    with pytest.raises(InsufficientDataError):
        ingest_series(g)
    h = tmp_path / "bad.ndjson"
    h.write_text('{"y": 1}\n{"x": 2}\n{"y": 3}\n')
    with pytest.raises(ParseError) as info:
        ingest_series(h, "ndjson")
    assert info.value.line == 2
    with pytest.raises(ParameterError):
        ingest_series(f, "xlsx")

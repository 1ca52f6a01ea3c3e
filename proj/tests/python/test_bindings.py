import math

import numpy as np
import pytest

import hypam


def test_optimize_and_f():
    s = hypam.optimize(2, 1.0)
    assert s["eps_star"] == 0.2
    assert hypam.f_eval(0.2, s["K_star"], 2, 1.0) == pytest.approx(s["L_star"], rel=1e-12)


def test_word_reduction():
    assert hypam.reduce_word("abcabbacbccb") == "acb"
    with pytest.raises(hypam.Error, match="empty-input"):
        hypam.reduce_word("")


def test_points_and_distance():
    o = hypam.HPoint.origin(2)
    x = hypam.HPoint.polar(1.5, np.array([1.0, 0.0]))
    assert hypam.distance(o, x) == pytest.approx(1.5)
    c = x.coords()
    assert c[0] ** 2 - c[1] ** 2 - c[2] ** 2 == pytest.approx(1.0)
    mid = hypam.geodesic_point(o, x, 0.5)
    assert mid.radius == pytest.approx(0.75)


def test_kernels():
    t, rho = 1.0, 2.0
    hand = (4 * math.pi * t) ** -1.5 * rho / math.sinh(rho) * math.exp(-t - rho * rho / (4 * t))
    assert hypam.exact_h3(t, rho) == pytest.approx(hand, rel=1e-12)
    assert hypam.first_passage_cdf(1.0, 2.0) == pytest.approx(math.erfc(1.0 / 2.0), rel=1e-10)
    assert hypam.comparison_fn(1.0, 0.0, 3) > 0


def test_bm_path_and_field():
    times, X = hypam.simulate_bm(3, 0.5, 0.01, seed=4)
    assert times[-1] == pytest.approx(0.5)
    assert X.shape == (len(times), 4)
    minkowski = X[:, 0] ** 2 - (X[:, 1:] ** 2).sum(axis=1)
    assert np.allclose(minkowski, 1.0)

    spec = hypam.CovarianceSpec.make(1.0, 1.0, "poly3", 2)
    assert spec(0.0) == pytest.approx(1.0, rel=1e-6)
    assert spec(1.2) == 0.0
    sites = [hypam.HPoint.origin(2), hypam.HPoint.polar(0.5, np.array([0.0, 1.0]))]
    v1 = hypam.sample_field(spec, sites, 9)
    v2 = hypam.sample_field(spec, sites, 9)
    assert v1.shape == (2,) and np.array_equal(v1, v2)


def test_feynman_kac_constant():
    e = hypam.fk_constant(0.5, 2, 1.0, 0.01, 20, 1)
    assert e["mean"] == pytest.approx(math.exp(0.5), rel=1e-12)
    assert e["se"] == 0.0


def test_cluster_constants_and_tail():
    L, eta = hypam.cluster_constants(1.0, 2, 1.0, 1.0)
    assert L == pytest.approx(2.02)
    assert eta == pytest.approx(0.0275, rel=1e-3)
    log_F, exponent, log_bound = hypam.long_route_tail(0.3, 2, 10.0, 2, 0.25, 1.0)
    assert log_bound == pytest.approx(log_F - exponent * 10.0 ** (5 / 3))

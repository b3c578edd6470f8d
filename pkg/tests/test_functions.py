import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvoco.exceptions import CapabilityError, ConfigError, InputError
from gvoco.functions import (EPS_LINK, AffineLink, ConstantLink, ExponentialLoss, LinearLoss,
                             PowerLink, QuadraticLoss, QuarticLoss, Stream, StreamConfig,
                             ZeroLoss, best_in_hindsight, dump_stream, function_from_params,
                             gradient_variation, is_valid_link, load_stream, make_stream,
                             query_link, sum_functions)
from gvoco.geometry import Ball, Box


def fd_gradient(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f.value(x + e) - f.value(x - e)) / (2 * h)
    return g


def fd_hessian_norm(f, x, h=1e-5):
    H = np.zeros((x.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        H[:, i] = (f.gradient(x + e) - f.gradient(x - e)) / (2 * h)
    return float(np.linalg.norm(0.5 * (H + H.T), 2))


def sample_functions(rng, d=3):
    A = rng.standard_normal((d, d))
    return [
        LinearLoss(rng.standard_normal(d)),
        QuadraticLoss(A @ A.T, rng.standard_normal(d)),
        ExponentialLoss(rng.standard_normal(d)),
        QuarticLoss(0.7, rng.standard_normal(d), rng.standard_normal(d)),
    ]


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    for f in sample_functions(rng):
        for _ in range(5):
            x = rng.uniform(-1, 1, 3)
            np.testing.assert_allclose(f.gradient(x), fd_gradient(f, x), rtol=1e-6, atol=1e-6)


def test_links_bound_the_hessian():
    rng = np.random.default_rng(2)
    for f in sample_functions(rng):
        assert is_valid_link(f.link)
        for _ in range(20):
            x = rng.uniform(-1.5, 1.5, 3)
            hess = fd_hessian_norm(f, x)
            assert hess <= f.link(float(np.linalg.norm(f.gradient(x)))) * (1 + 1e-5) + 1e-6


def test_link_examples():
    assert ExponentialLoss([2.0, 0.0, 0.0]).link(3.0) == pytest.approx(EPS_LINK + 6.0)
    assert query_link(ExponentialLoss([1.0, 0.0]), 0.0) == pytest.approx(EPS_LINK)
    assert query_link(ExponentialLoss([0.9, 1.2]), 4.0) == pytest.approx(EPS_LINK + 6.0)
    quad = QuadraticLoss(np.diag([2.0, 0.5]), [0.0, 0.0])
    assert query_link(quad, 0.0) == query_link(quad, 1e6) == pytest.approx(2.0)
    with pytest.raises(InputError):
        query_link(quad, -1.0)


@pytest.mark.parametrize("link", [ConstantLink(0.0), ConstantLink(3.0), AffineLink(EPS_LINK, 2.0),
                                  PowerLink(EPS_LINK, 3.0, 0.5, 2.0 / 3.0)])
def test_links_positive_nondecreasing(link):
    assert is_valid_link(link)


def test_strong_convexity_modulus():
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    A = (q * [0.25, 0.5, 1.0]) @ q.T
    f = QuadraticLoss(A, rng.standard_normal(3))
    assert f.strong_convexity == pytest.approx(0.25)
    assert f.curvature == ("strongly_convex", pytest.approx(0.25))
    for _ in range(20):
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        lhs = f.value(y) - f.value(x) - f.gradient(x) @ (y - x)
        assert lhs >= 0.125 * (y - x) @ (y - x) - 1e-12
    assert LinearLoss([1.0]).curvature == "convex"
    with pytest.raises(InputError):
        QuadraticLoss(-np.eye(2), [0.0, 0.0])


def test_params_round_trip():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(3)
    for f in sample_functions(rng) + [ZeroLoss(3)]:
        g = function_from_params(f.params())
        assert g.value(x) == f.value(x)


def test_sum_functions_collapses_families():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(2)
    groups = [
        [LinearLoss(rng.standard_normal(2)) for _ in range(3)],
        [QuadraticLoss(np.eye(2), rng.standard_normal(2)), LinearLoss([1.0, 2.0])],
        [ExponentialLoss(rng.standard_normal(2)) for _ in range(3)],
        [QuarticLoss(0.5, [0.1, 0.2], rng.standard_normal(2)) for _ in range(2)],
        [ExponentialLoss([1.0, 0.0]), LinearLoss([0.0, 1.0])],
    ]
    for fs in groups:
        F = sum_functions(fs + [ZeroLoss(2)])
        assert F.value(x) == pytest.approx(sum(f.value(x) for f in fs), rel=1e-12)
        np.testing.assert_allclose(F.gradient(x), sum(f.gradient(x) for f in fs), rtol=1e-12)


def test_stationary_stream_has_zero_variation():
    dom = Ball(1.0, 3)
    stream = make_stream(StreamConfig(horizon=5, dim=3, curvature=0.2), dom)
    assert len(stream) == 5
    assert all(f.params() == stream[0].params() for f in stream)
    assert gradient_variation(stream, dom).total == 0.0
    assert gradient_variation(stream, Box([-3] * 3, [3] * 3), "sampled").total == 0.0


def test_shared_a_drift_variation():
    # ||delta||^2 = 0.01 per round over 100 differences
    cfg = StreamConfig(horizon=101, dim=4, curvature=0.1, schedule="linear_drift", drift=0.1)
    dom = Ball(2.0, 4)
    stream = make_stream(cfg, dom)
    vt = gradient_variation(stream, dom, "exact")
    assert vt.total == pytest.approx(1.0, rel=1e-12)
    assert vt.per_round[0] == 0.0
    assert gradient_variation(stream, dom, "sampled").total == pytest.approx(1.0, rel=1e-10)


def test_flip_variation_matches_formula():
    T, s = 50, 0.3
    stream = make_stream(StreamConfig(horizon=T, dim=2, family="linear",
                                      schedule="adversarial_flip", drift=s))
    assert gradient_variation(stream, Ball(1.0, 2)).total == pytest.approx(4 * (T - 1) * s * s)


def test_exact_variation_needs_eligible_stream():
    stream = make_stream(StreamConfig(horizon=4, dim=2, family="exponential",
                                      schedule="linear_drift", drift=0.1))
    with pytest.raises(CapabilityError):
        gradient_variation(stream, Ball(1.0, 2), "exact")
    assert gradient_variation(stream, Ball(1.0, 2), "sampled").total > 0


def test_streams_are_seeded():
    cfg = StreamConfig(horizon=20, dim=3, curvature=0.1, schedule="piecewise", segments=4,
                       drift=1.0, seed=7)
    a, b = make_stream(cfg), make_stream(cfg)
    assert [f.params() for f in a] == [f.params() for f in b]
    c = make_stream(StreamConfig(**{**cfg.to_dict(), "seed": 8}))
    assert a[0].params() != c[0].params()


def test_stream_config_validation():
    with pytest.raises(ConfigError):
        StreamConfig(family="cubic")
    with pytest.raises(ConfigError):
        StreamConfig(curvature=2.0, smoothness=1.0)
    with pytest.raises(ConfigError):
        StreamConfig.from_dict({"famliy": "linear"})


def test_lower_bounds_are_certified():
    rng = np.random.default_rng(6)
    dom = Ball(1.5, 3)
    for family in ("quadratic", "linear", "quartic"):
        stream = make_stream(StreamConfig(family=family, horizon=10, dim=3,
                                          schedule="linear_drift", drift=0.2), dom)
        pts = dom.sample_interior(rng, 500)
        for f in stream:
            assert min(f.value(p) for p in pts) >= f.lower_bound
        assert stream.lower_bound == min(f.lower_bound for f in stream)


def test_dump_and_load(tmp_path):
    dom = Ball(1.0, 2)
    stream = make_stream(StreamConfig(horizon=6, dim=2, family="quartic",
                                      schedule="adversarial_flip", drift=0.4), dom)
    path = tmp_path / "s.jsonl"
    dump_stream(stream, path)
    again = load_stream(path)
    assert again.config == stream.config and again.vt_exact
    assert [f.params() for f in again] == [f.params() for f in stream]


def test_stream_previous_starts_with_zero():
    stream = Stream([LinearLoss([1.0, 1.0])] * 3)
    assert isinstance(stream.previous(1), ZeroLoss)
    assert stream.previous(3) is stream[1]


def test_best_in_hindsight_examples():
    f = QuadraticLoss(np.array([[2.0]]), [-4.0])  # (x - 2)^2 - 4
    x, val = best_in_hindsight([f], Box([-1], [1]))
    assert x[0] == pytest.approx(1.0, abs=1e-9)
    assert val + 4.0 == pytest.approx(1.0, abs=1e-9)
    b = np.array([0.6, -0.8, 0.0])
    x, val = best_in_hindsight([LinearLoss(b)], Ball(2.0, 3))
    np.testing.assert_allclose(x, -2.0 * b, atol=1e-8)


def test_best_in_hindsight_matches_linear_solve():
    rng = np.random.default_rng(8)
    fs = []
    for _ in range(10):
        M = rng.standard_normal((4, 4))
        fs.append(QuadraticLoss(M @ M.T + 0.1 * np.eye(4), 0.1 * rng.standard_normal(4)))
    A = sum(f.A for f in fs)
    b = sum(f.b for f in fs)
    exact = np.linalg.solve(A, -b)
    assert np.linalg.norm(exact) < 10
    x, _ = best_in_hindsight(fs, Ball(10.0, 4))
    np.testing.assert_allclose(x, exact, atol=1e-8)


def test_best_in_hindsight_singular_quadratic():
    A = np.diag([1.0, 0.0])
    x, val = best_in_hindsight([QuadraticLoss(A, [0.5, -1.0])], Box([-1, -1], [1, 1]))
    np.testing.assert_allclose(x, [-0.5, 1.0], atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_best_in_hindsight_beats_random_points(seed):
    rng = np.random.default_rng(seed)
    dom = Ball(1.0, 3)
    fs = sample_functions(rng)
    x, val = best_in_hindsight(fs, dom)
    pts = dom.sample_interior(rng, 200)
    assert all(sum(f.value(p) for f in fs) >= val - 1e-8 for p in pts)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gvoco.exceptions import ConfigError, InputError
from gvoco.geometry import Ball, Box, diameter, domain_from_config, product, project

finite = st.floats(-50, 50, allow_nan=False)
DOMAINS = [Ball(1.0, 2), Ball(2.5, 3, center=[0.5, -0.5, 1.0]), Box([-1, -1], [1, 1]),
           Box([-0.5, -2.0, 0.0], [1.0, 0.3, 4.0])]


def test_projection_examples():
    ball = Ball(1.0, 2)
    np.testing.assert_allclose(project(ball, [0.3, 0.4]), [0.3, 0.4])
    np.testing.assert_allclose(project(ball, [3.0, 4.0]), [0.6, 0.8], atol=1e-15)
    np.testing.assert_allclose(project(Box([-1, -1], [1, 1]), [2.0, 0.5]), [1.0, 0.5])


def test_diameter_examples():
    assert diameter(Ball(1.0, 4)) == 2.0
    assert diameter(Box([-1, -1], [1, 1])) == pytest.approx(2 * math.sqrt(2), abs=1e-15)
    assert diameter(Box([0, 0], [3, 4])) == pytest.approx(5.0, abs=1e-15)


def test_constructors_reject_bad_domains():
    with pytest.raises(InputError):
        Ball(1.0, 2, center=[2.0, 0.0])  # excludes the origin
    with pytest.raises(InputError):
        Ball(0.0, 2)
    with pytest.raises(InputError):
        Box([0.5, -1], [1, 1])
    with pytest.raises(InputError):
        Box([-1, 1], [1, 1])


def test_dimension_mismatch():
    with pytest.raises(InputError):
        project(Ball(1.0, 2), [1.0, 2.0, 3.0])
    with pytest.raises(InputError):
        Box([-1, -1], [1, 1]).project([0.0])


def test_domain_config_round_trip():
    for dom in DOMAINS:
        again = domain_from_config(dom.to_config())
        assert again.diameter == dom.diameter
    with pytest.raises(ConfigError):
        domain_from_config({"kind": "simplex"})
    with pytest.raises(ConfigError):
        domain_from_config({"kind": "ball", "dim": 2})


def test_product_of_boxes():
    z = product(Box([-1], [1]), Box([-2, -2], [0, 3]))
    assert z.dim == 3
    np.testing.assert_array_equal(z.upper, [1, 0, 3])
    with pytest.raises(InputError):
        product(Ball(1.0, 1), Box([-1], [1]))


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: d.kind + str(d.dim))
@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_projection_properties(dom, data):
    a = data.draw(arrays(float, dom.dim, elements=finite))
    b = data.draw(arrays(float, dom.dim, elements=finite))
    pa, pb = dom.project(a), dom.project(b)
    assert dom.contains(pa)
    np.testing.assert_allclose(dom.project(pa), pa, atol=1e-12)
    assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-10
    assert np.linalg.norm(pa - pb) <= dom.diameter + 1e-10


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: d.kind + str(d.dim))
def test_projection_is_nearest_point(dom):
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = 4 * rng.standard_normal(dom.dim)
        p = dom.project(y)
        others = dom.sample_interior(rng, 500)
        assert np.all(np.linalg.norm(others - y, axis=1) >= np.linalg.norm(p - y) - 1e-12)


def test_domains_are_immutable():
    ball = Ball(1.0, 2)
    with pytest.raises(Exception):
        ball.radius = 2.0
    with pytest.raises(ValueError):
        ball.center[0] = 1.0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import direct_weights
from gvoco.exceptions import InputError, InvariantViolation
from gvoco.learners import OptimisticAdaMLProd, make_pea_losses, pea_regret, run_pea


def test_uniform_at_start():
    meta = OptimisticAdaMLProd(5).reset()
    np.testing.assert_allclose(meta.tilt_and_decide(np.zeros(5)), np.full(5, 0.2))


def test_tilt_examples():
    meta = OptimisticAdaMLProd(2).reset()
    eta = meta.state_.eta[0]
    np.testing.assert_allclose(meta.tilt_and_decide([math.log(2) / eta, 0.0]), [2 / 3, 1 / 3])
    meta.state_.eta = np.array([0.2, 0.1])
    np.testing.assert_allclose(meta.tilt_and_decide([0.0, 0.0]), [2 / 3, 1 / 3])


def test_observe_examples():
    meta = OptimisticAdaMLProd(2, B0=1.0).reset()
    meta.tilt_and_decide([0.0, 0.0])
    meta.observe([0.5, -0.5])
    row = meta.trace_[0]
    assert row["B"] == 1.0
    np.testing.assert_allclose(row["r_bar"], [0.5, -0.5])

    meta = OptimisticAdaMLProd(2, B0=1.0).reset()
    m = np.array([0.3, -0.1])
    meta.tilt_and_decide(m)
    meta.observe(m + [2.0, 0.0])
    row = meta.trace_[0]
    assert row["B"] == pytest.approx(2.0)
    np.testing.assert_allclose(row["r_bar"], [m[0] + 1.0, m[1]])

    meta = OptimisticAdaMLProd(3, B0=1.0).reset()
    meta.tilt_and_decide(np.ones(3))
    meta.observe(np.ones(3))
    np.testing.assert_allclose(meta.state_.eta, 1 / math.sqrt(5))


def test_single_expert_fixpoint():
    meta = OptimisticAdaMLProd(1).reset()
    alpha, p = meta.solve_optimism_fixpoint([2.5], lambda q: 2.5, lower=-1.0, horizon=100)
    assert p[0] == 1.0
    assert abs(alpha - 2.5) <= meta._fixpoint["tol"] == pytest.approx(3.5 / 100)


def test_fixpoint_rejects_bad_lower_bound():
    meta = OptimisticAdaMLProd(2).reset()
    with pytest.raises(InvariantViolation):
        meta.solve_optimism_fixpoint([0.0, 1.0], lambda q: q @ [0.0, 1.0], lower=2.0)


def test_input_validation():
    meta = OptimisticAdaMLProd(2).reset()
    with pytest.raises(InputError):
        meta.tilt_and_decide([0.0])
    with pytest.raises(RuntimeError):
        OptimisticAdaMLProd(2).reset().observe([0.0, 0.0])
    with pytest.raises(InputError):
        OptimisticAdaMLProd(0).reset()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 6), st.integers(1, 50))
def test_log_space_matches_direct(seed, n, T):
    rng = np.random.default_rng(seed)
    ms = rng.uniform(-1, 1, (T, n))
    rs = ms + rng.uniform(-3, 3, (T, n))
    meta = OptimisticAdaMLProd(n).reset()
    for m, r in zip(ms, rs):
        meta.tilt_and_decide(m)
        meta.observe(r)
    ps = meta.trace_.stack("p")
    np.testing.assert_allclose(ps, direct_weights(ms, rs), rtol=1e-9, atol=0)


def test_pea_invariants_and_prod_condition():
    losses = make_pea_losses(2000, 8, seed=1, jump=100.0)
    meta = run_pea(losses)
    assert meta.trace_.violations() == []
    assert np.max(meta.trace_.column("prod")) <= 1e-9
    assert np.all(np.diff(meta.trace_.column("B")) >= 0)
    reg = pea_regret(meta, losses)
    assert reg.shape == (8,)


def test_pea_losses_shape_and_range():
    losses = make_pea_losses(100, 4, seed=2, jump=10.0)
    assert losses.shape == (100, 4)
    assert losses[:50].max() <= 1.0 and losses[50:].max() <= 10.0 and losses.min() >= 0.0


def test_pea_all_equal_experts_zero_regret():
    losses = np.tile(np.linspace(0, 1, 30)[:, None], (1, 3))
    meta = run_pea(losses)
    np.testing.assert_allclose(pea_regret(meta, losses), 0.0, atol=1e-12)

import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize, minimize_scalar

from gvoco import harness
from gvoco.analysis import (audit, final_regret, integral_bound_gap, mid_value_gap, regret,
                            self_confident_gap, trajectory_constants, verify_bound)
from gvoco.exceptions import CapabilityError, InputError
from gvoco.functions import (ExponentialLoss, QuadraticLoss, QuarticLoss, Stream, StreamConfig,
                             make_stream)
from gvoco.geometry import Ball, Box
from gvoco.learners import OptimisticOMD, run_pea
from gvoco.trace import RoundTrace


def _trace(xs):
    tr = RoundTrace()
    for t, x in enumerate(xs, start=1):
        tr.append({"t": t, "x": np.atleast_1d(np.asarray(x, dtype=float))})
    return tr


def test_regret_examples():
    sq = QuadraticLoss([[2.0]], [0.0])  # x^2
    assert regret(_trace([0.5]), Stream([sq]), Box([-1], [1]))[-1] == pytest.approx(0.25)
    f = QuadraticLoss([[2.0]], [-1.0])  # minimized at 0.5
    assert regret(_trace([0.5] * 4), Stream([f] * 4), Box([-1], [1]))[-1] == pytest.approx(0, abs=1e-12)


def test_regret_length_mismatch():
    with pytest.raises(InputError):
        regret(_trace([0.0]), Stream([QuadraticLoss([[1.0]], [0.0])] * 2), Box([-1], [1]))


@pytest.fixture(scope="module")
def drift_run():
    dom = Ball(1.0, 5)
    stream = make_stream(StreamConfig(horizon=1000, dim=5, curvature=0.1, seed=2,
                                      schedule="linear_drift", drift=0.001), dom)
    return dom, stream, OptimisticOMD(dom, "convex_clipped").fit(stream)


def test_thm5_holds(drift_run):
    dom, stream, learner = drift_run
    rep = verify_bound(learner.trace_, "thm5", stream, dom)
    assert rep.holds and rep.margin > 0


def test_stationary_thm1_ratio_finite():
    dom = Ball(1.0, 3)
    stream = make_stream(StreamConfig(horizon=200, dim=3, curvature=0.2), dom)
    learner = OptimisticOMD(dom).fit(stream)
    rep = verify_bound(learner.trace_, "thm1", stream, dom)
    lhat, _ = trajectory_constants(learner.trace_, stream)
    assert rep.rhs == pytest.approx(lhat * dom.diameter ** 2)
    assert math.isfinite(rep.ratio) and rep.holds


def test_thm1_needs_exact_variation():
    dom = Ball(1.0, 2)
    stream = make_stream(StreamConfig(horizon=20, dim=2, family="exponential"), dom)
    learner = OptimisticOMD(dom).fit(stream)
    with pytest.raises(CapabilityError):
        verify_bound(learner.trace_, "thm1", stream, dom)
    rep = verify_bound(learner.trace_, "thm2", stream, dom, lam=0.1)
    assert math.isfinite(rep.rhs)


def test_thm6_equal_experts():
    losses = np.tile(np.random.default_rng(0).random((40, 1)), (1, 4))
    rep = verify_bound(run_pea(losses).trace_, "thm6", losses=losses)
    assert rep.lhs == pytest.approx(0.0, abs=1e-12) and rep.holds


def test_final_regret_matches_cumulative(drift_run):
    dom, stream, learner = drift_run
    assert final_regret(learner.trace_, stream, dom) == pytest.approx(
        regret(learner.trace_, stream, dom)[-1], rel=1e-10, abs=1e-10)


def test_comparator_dominates_random_points(drift_run):
    dom, stream, learner = drift_run
    reg = regret(learner.trace_, stream, dom)[-1]
    rng = np.random.default_rng(1)
    for u in dom.sample_interior(rng, 10):
        assert reg >= regret(learner.trace_, stream, dom, comparator=u)[-1] - 1e-9


def _independent_loss(rec, x):
    # re-derived from the dump's raw numbers, without the package's loss classes
    if rec["family"] == "quadratic":
        return 0.5 * x @ np.array(rec["A"]) @ x + np.array(rec["b"]) @ x
    r = x - np.array(rec["m"])
    return rec["c"] * (r @ r) ** 2 + np.array(rec["b"]) @ x


def _independent_regret(csv_path, dump_path, radius):
    """Regret from the trace CSV decisions and the JSON-lines stream dump alone."""
    with open(dump_path) as fh:
        records = [json.loads(line) for line in fh][1:]
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    d = sum(1 for k in rows[0] if k.startswith("x_"))
    xs = [np.array([float(r[f"x_{i + 1}"]) for i in range(d)]) for r in rows]
    learner = math.fsum(_independent_loss(rec, x) for rec, x in zip(records, xs))

    def total(x):
        return math.fsum(_independent_loss(rec, x) for rec in records)

    # convex objective on a disc: an interior stationary point, else a circle search
    inner = minimize(total, np.zeros(d), method="BFGS", options={"gtol": 1e-12})
    if inner.x @ inner.x <= radius ** 2:
        return learner - inner.fun

    def on_circle(theta):
        return total(radius * np.array([math.cos(theta), math.sin(theta)]))

    grid = np.linspace(0, 2 * np.pi, 721)
    k = int(np.argmin([on_circle(t) for t in grid]))
    best = minimize_scalar(on_circle, bounds=(grid[k] - 0.01, grid[k] + 0.01),
                           method="bounded", options={"xatol": 1e-13})
    return learner - best.fun


@pytest.mark.parametrize("family", ["quadratic", "quartic"])
def test_double_entry_regret(tmp_path, family):
    cfg = {"scenario": "oco", "domain": {"kind": "ball", "radius": 1.0, "dim": 2},
           "stream": {"family": family, "schedule": "adversarial_flip", "dim": 2,
                      "drift": 0.3, "period": 4}, "horizon": 300, "seeds": [1]}
    summary = harness.run(cfg, tmp_path)[0]
    reg = _independent_regret(tmp_path / "oco_seed1.csv", tmp_path / "oco_seed1_stream.jsonl",
                              1.0)
    assert reg == pytest.approx(summary["final_regret"], rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=200), st.floats(0, 10))
def test_self_confident_tuning(a, delta):
    assert self_confident_gap(a, delta) >= -1e-9 * (1 + sum(a))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=1, max_size=200), st.floats(1e-3, 10),
       st.sampled_from(["inv", "inv_sqrt"]))
def test_integral_bound(a, a0, kind):
    assert integral_bound_gap(a0, a, 5.0, kind) >= -1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0, 1))
def test_mid_value(seed, mix):
    rng = np.random.default_rng(seed)
    f = QuarticLoss(0.5, rng.standard_normal(3), rng.standard_normal(3))
    g = ExponentialLoss(rng.standard_normal(3))
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    for h in (f, g):
        assert mid_value_gap(h, x, y, mix) >= -1e-9 * (1 + abs(h.gradient(x) @ (x - y)))


def test_audit_counts():
    tr = RoundTrace()
    tr.append({"t": 1, "flags": {"a": True, "b": False}})
    tr.append({"t": 2, "flags": {"a": False, "b": False}})
    rep = audit(tr)
    assert rep["violations"] == 3
    assert rep["by_invariant"] == {"b": 2, "a": 1}
    assert rep["first"] == {"round": 1, "invariant": "b"}

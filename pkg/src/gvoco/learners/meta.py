"""Lipschitz-adaptive optimistic Adapt-ML-Prod over N experts.

Weights live in the natural-log domain. Rescaling the log-weights by
``eta_{t+1} / eta_t`` is the log form of raising the weights to that power,
so no exponentials are taken except inside the max-shifted softmax.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import InputError, InvariantViolation
from ..trace import RoundTrace

HALF_TOL = 1e-12
PROD_TOL = 1e-9


@dataclass
class MetaState:
    n: int
    B: float
    log_w: np.ndarray = None
    eta: np.ndarray = None
    deviation: np.ndarray = None  # sum_s (rbar_s - m_s)^2 per expert
    m: np.ndarray = None
    p: np.ndarray = None
    t: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.log_w is None:
            self.log_w = np.zeros(self.n)
        if self.deviation is None:
            self.deviation = np.zeros(self.n)
        if self.eta is None:
            self.eta = np.full(self.n, 1.0 / math.sqrt(1.0 + 4.0 * self.B ** 2))


def _softmax(logits):
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


class OptimisticAdaMLProd(BaseEstimator):
    """Optimistic prod-style expert aggregation with a running scale ``B``.

    Each round call :meth:`tilt_and_decide` (or
    :meth:`solve_optimism_fixpoint`) and then :meth:`observe`.

    Parameters
    ----------
    n_experts : int
    B0 : float, default=1.0
        Initial scale guess; it is raised online whenever ``|r - m|`` exceeds it.
    check_prod : bool, default=True
        Flag rounds where ``sum_i p_i rbar_i`` exceeds ``1e-9``. Only
        meaningful when the optimism is built to satisfy that condition.
    strict : bool, default=False
        Raise :class:`InvariantViolation` on the first failed check.
    """

    def __init__(self, n_experts, B0=1.0, check_prod=True, strict=False):
        self.n_experts = n_experts
        self.B0 = B0
        self.check_prod = check_prod
        self.strict = strict

    def reset(self):
        if int(self.n_experts) != self.n_experts or self.n_experts < 1:
            raise InputError("n_experts must be a positive integer")
        if not self.B0 > 0:
            raise InputError("B0 must be positive")
        self.state_ = MetaState(n=int(self.n_experts), B=float(self.B0))
        self.trace_ = RoundTrace({"n_experts": self.n_experts, "B0": self.B0})
        self._fixpoint = None
        return self

    def _ensure(self):
        if not hasattr(self, "state_"):
            self.reset()

    def _probabilities(self, m):
        s = self.state_
        return _softmax(np.log(s.eta) + s.log_w + s.eta * m)

    def tilt_and_decide(self, m):
        """Tilt the weights by the optimism ``m`` and return ``p_t``."""
        self._ensure()
        m = np.asarray(m, dtype=float)
        if m.shape != (self.state_.n,) or not np.all(np.isfinite(m)):
            raise InputError("optimism must be a finite vector of length n_experts")
        p = self._probabilities(m)
        if not (p.sum() > 0 and np.all(np.isfinite(p))):
            raise InvariantViolation("tilted weights vanished", round=self.state_.t + 1,
                                     name="tilt")
        self.state_.m, self.state_.p = m, p
        return p

    def solve_optimism_fixpoint(self, values, mixer, lower, tol=None, horizon=None):
        """Solve ``g(alpha) = alpha`` with ``m_i = alpha - values_i``.

        ``g(alpha) = mixer(p(alpha))`` where ``p(alpha)`` is the decision
        induced by that optimism. Bisection runs on ``[lower, max(values)]``
        and returns the lower end of the final bracket, the side on which
        ``g(alpha) >= alpha``. The default tolerance is ``max(range, 1) / T``.

        Returns ``(alpha, p)``; the optimism and ``p`` are stored for
        :meth:`observe`, and diagnostics go to the next trace row.
        """
        self._ensure()
        h = np.asarray(values, dtype=float)
        if h.shape != (self.state_.n,) or not np.all(np.isfinite(h)):
            raise InputError("expert values must be a finite vector of length n_experts")
        if not math.isfinite(lower):
            raise InputError("the lower bound must be finite")
        s = self.state_
        hi = float(h.max())
        lo = float(lower)
        if lo > hi + 1e-12 * max(1.0, abs(hi)):
            raise InvariantViolation(f"lower bound {lo} exceeds max expert value {hi}",
                                     round=s.t + 1, name="bracket")
        lo = min(lo, hi)  # a tight bound can overshoot by rounding
        rng = hi - lo
        if tol is None:
            T = horizon if horizon is not None else max(s.t + 1, 1)
            tol = max(rng, 1.0) / T
        base = np.log(s.eta) + s.log_w - s.eta * h
        eta = s.eta

        def g(alpha):
            return mixer(_softmax(base + eta * alpha))

        iters = 0
        if rng > 0:
            # endpoint signs: the lower bound cannot exceed any mixed value,
            # and convexity keeps the mixed value below max(values)
            slack = 1e-12 * max(1.0, abs(lo), abs(hi))
            g_lo, g_hi = g(lo), g(hi)
            if g_lo - lo < -slack or g_hi - hi > slack:
                raise InvariantViolation(
                    f"fixpoint bracket signs wrong: g(lo)-lo={g_lo - lo:.3e}, "
                    f"g(hi)-hi={g_hi - hi:.3e}", round=s.t + 1, name="bracket")
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if g(mid) >= mid:
                    lo = mid
                else:
                    hi = mid
                iters += 1
        alpha = lo
        p = self.tilt_and_decide(alpha - h)
        self._fixpoint = {"alpha_star": alpha, "bisect_iters": iters,
                          "residual": abs(mixer(p) - alpha), "range": rng, "tol": tol}
        return alpha, p

    def observe(self, r):
        """Absorb the instantaneous regret vector ``r_t``."""
        s = self.state_ if hasattr(self, "state_") else None
        if s is None or s.m is None:
            raise RuntimeError("observe called before tilt_and_decide")
        r = np.asarray(r, dtype=float)
        if r.shape != (s.n,) or not np.all(np.isfinite(r)):
            raise InputError("regret vector must be finite with length n_experts")
        m, p, eta = s.m, s.p, s.eta
        B_prev = s.B
        diff = r - m
        s.B = max(B_prev, float(np.max(np.abs(diff))))
        ratio = B_prev / s.B
        r_bar = m + ratio * diff
        dev = ratio * diff
        s.deviation = s.deviation + dev * dev
        eta_next = 1.0 / np.sqrt(1.0 + s.deviation + 4.0 * s.B ** 2)
        s.log_w = (eta_next / eta) * (s.log_w + eta * r_bar - eta * eta * dev * dev)
        s.eta = eta_next
        s.t += 1

        eta_ratio = eta_next / eta
        prod = float(p @ r_bar)
        flags = {
            "half_bound": bool(np.all(eta * np.abs(dev) <= 0.5 + HALF_TOL)),
            "scale_safety": bool(np.all(np.abs(dev) <= B_prev * (1 + HALF_TOL))) and s.B >= B_prev,
            "eta_ratio": bool(np.all((eta_ratio > 0) & (eta_ratio <= 1.0))),
        }
        if self.check_prod:
            flags["prod"] = prod <= PROD_TOL
        row = {"t": s.t, "p": p, "m": m, "r": r, "r_bar": r_bar, "eta_vec": eta,
               "eta_next": eta_next, "B": s.B, "B_prev": B_prev, "log_w": s.log_w.copy(),
               "prod": prod, "flags": flags}
        if self._fixpoint is not None:
            row.update(self._fixpoint)
        self._fixpoint = None
        s.m = s.p = None
        self.trace_.append(row)
        if self.strict and not all(flags.values()):
            failed = [k for k, ok in flags.items() if not ok]
            raise InvariantViolation(f"round {s.t}: {failed}", round=s.t, name=failed[0])
        return self


def make_pea_losses(horizon, n_experts, seed=0, jump_at=None, jump=100.0):
    """Adversarial expert losses in ``[0, 1]`` scaled by ``jump`` from ``jump_at`` on.

    The best expert changes from segment to segment, and losses flip between
    two regimes, so no expert is uniformly good.
    """
    rng = np.random.default_rng(seed)
    T, N = int(horizon), int(n_experts)
    jump_at = T // 2 if jump_at is None else int(jump_at)
    means = rng.uniform(0.3, 0.7, size=(4, N))
    for k in range(4):
        means[k, rng.integers(N)] = 0.1
    seg_len = math.ceil(T / 4)
    seg = np.arange(T) // seg_len
    flip = (np.arange(T) // 7) % 2 == 1
    mu = np.where(flip[:, None], 1.0 - means[seg], means[seg])
    losses = np.clip(mu + 0.15 * rng.standard_normal((T, N)), 0.0, 1.0)
    losses[jump_at:] *= jump
    return losses


def run_pea(losses, B0=1.0, strict=False):
    """Run the meta learner on an expert-loss matrix of shape ``(T, N)``.

    Optimism is ``m_i = <p, l_{t-1}> - l_{t-1,i}`` resolved jointly with
    ``p`` by the fixpoint solver (the mixer is linear), and the feedback is
    ``r_i = <p, l_t> - l_{t,i}``.
    """
    losses = np.asarray(losses, dtype=float)
    T, N = losses.shape
    meta = OptimisticAdaMLProd(N, B0=B0, strict=strict).reset()
    prev = np.zeros(N)
    for t in range(T):
        h = prev
        meta.solve_optimism_fixpoint(h, lambda p, h=h: float(p @ h), float(h.min()), horizon=T)
        p = meta.state_.p
        cur = losses[t]
        meta.observe(float(p @ cur) - cur)
        meta.trace_.rows[-1]["loss"] = float(p @ cur)
        prev = cur
    return meta


def pea_regret(meta, losses):
    """Regret of the meta learner against every expert."""
    losses = np.asarray(losses, dtype=float)
    learner = meta.trace_.column("loss").sum()
    return learner - losses.sum(axis=0)

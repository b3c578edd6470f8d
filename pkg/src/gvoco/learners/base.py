"""Optimistic online mirror descent under generalized smoothness.

The learner keeps two sequences: the submitted decision ``x_t`` and the
intermediate decision ``x_hat_t``. Each round

    x_t         = proj(x_hat_t - eta_t * M_t),   M_t = grad f_{t-1}(x_hat_t)
    x_hat_{t+1} = proj(x_hat_t - eta_t * g_t)

where ``g_t`` is ``grad f_t(x_t)`` (or its clipped version). The step size
is capped by ``1 / (4 * Lhat)`` with ``Lhat = ell_{t-1}(2 ||M_t||)``, the
smoothness of ``f_{t-1}`` estimated locally at ``x_hat_t``, which keeps
``x_t`` inside the region where that estimate is valid.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import InputError, InvariantViolation
from ..functions.losses import ZeroLoss
from ..trace import RoundTrace
from ..utils.validation import check_positive, check_vector, norm

MODES = ("convex", "strongly_convex", "convex_clipped")
TOL = 1e-10


def local_estimate(f_prev, x_hat, grad=None):
    """``ell_{t-1}(2 ||grad f_{t-1}(x_hat)||)``, or ``None`` for the zero function.

    ``None`` means "no cap": the zero function has no curvature, so it must
    not restrict the step size. ``grad`` may pass a precomputed gradient.
    """
    if isinstance(f_prev, ZeroLoss):
        return None
    if grad is None:
        grad = f_prev.gradient(x_hat)
    return f_prev.link(2.0 * norm(grad))


@dataclass
class OmdLearnerState:
    mode: str
    x_hat: np.ndarray
    x: np.ndarray = None
    eta: float = math.nan
    variation: float = 0.0
    max_lhat: float = 0.0
    B: float = 1.0
    t: int = 0

    @property
    def cap(self):
        """Running min of ``1 / (4 Lhat)``; infinite until a cap is seen."""
        return math.inf if self.max_lhat <= 0 else 1.0 / (4.0 * self.max_lhat)


class OptimisticOMD(BaseEstimator):
    """Single-curvature optimistic OMD with locally tuned step sizes.

    Parameters
    ----------
    domain : Ball or Box
        Feasible set.
    mode : {"convex", "strongly_convex", "convex_clipped"}
        ``convex`` uses ``eta_t = min(sqrt(D^2 / (1 + S)), cap)``;
        ``strongly_convex`` uses ``eta_t = 2 / (lam * t + 16 * max Lhat)``;
        ``convex_clipped`` clips the gradient against a running scale ``B``
        and uses ``eta_t = min(sqrt(D^2 / (B^2 + S)), cap)``.
    lam : float, optional
        Strong-convexity modulus, required for ``strongly_convex``.
    B0 : float, default=1.0
        Initial scale for ``convex_clipped``.
    x0 : array-like, optional
        Initial intermediate decision (default: the origin).
    strict : bool, default=False
        Raise :class:`InvariantViolation` on the first failed runtime check
        instead of only flagging it in the trace.
    """

    def __init__(self, domain, mode="convex", lam=None, B0=1.0, x0=None, strict=False):
        self.domain = domain
        self.mode = mode
        self.lam = lam
        self.B0 = B0
        self.x0 = x0
        self.strict = strict

    def reset(self):
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "strongly_convex":
            check_positive(self.lam, "lam")
        check_positive(self.B0, "B0")
        x0 = np.zeros(self.domain.dim) if self.x0 is None else check_vector(
            self.x0, self.domain.dim, "x0")
        if not self.domain.contains(x0):
            raise InputError("x0 must lie in the domain")
        self.diameter_ = self.domain.diameter
        self.state_ = OmdLearnerState(mode=self.mode, x_hat=x0.copy(), B=float(self.B0))
        self.trace_ = RoundTrace({"mode": self.mode, "D": self.diameter_, "lam": self.lam})
        self._pending = None
        self._prev_eta = math.inf
        self._ghat = 0.0
        return self

    def _step_size(self, t):
        s = self.state_
        D = self.diameter_
        if self.mode == "strongly_convex":
            return 2.0 / (self.lam * t + 16.0 * s.max_lhat)
        denom = (1.0 if self.mode == "convex" else s.B ** 2) + s.variation
        return min(math.sqrt(D * D / denom), s.cap)

    def predict(self, f_prev):
        """Play round ``t``: return ``x_t`` given the previous loss ``f_{t-1}``."""
        if not hasattr(self, "state_"):
            self.reset()
        if self._pending is not None:
            raise RuntimeError("predict called twice without update")
        s = self.state_
        t = s.t + 1
        M = f_prev.gradient(s.x_hat)
        m_norm = norm(M)
        lhat = None if isinstance(f_prev, ZeroLoss) else f_prev.link(2.0 * m_norm)
        if lhat is not None:
            s.max_lhat = max(s.max_lhat, lhat)
        eta = self._step_size(t)
        x = self.domain._project(s.x_hat - eta * M)
        s.eta, s.x, s.t = eta, x, t
        self._pending = {"f_prev": f_prev, "M": M, "m_norm": m_norm, "lhat": lhat}
        return x

    def update(self, f_t):
        """Observe ``f_t`` and move the intermediate decision."""
        if self._pending is None:
            raise RuntimeError("update called before predict")
        s = self.state_
        pend, self._pending = self._pending, None
        M, lhat = pend["M"], pend["lhat"]
        x, x_hat, eta = s.x, s.x_hat, s.eta
        g = f_t.gradient(x)
        B_prev = s.B
        if self.mode == "convex_clipped":
            diff = g - M
            s.B = max(s.B, norm(diff))
            g_used = M + (B_prev / s.B) * diff
            inc = g_used - M
        else:
            g_used = g
            inc = g - pend["f_prev"].gradient(x)
        s.variation += float(inc @ inc)
        x_hat_next = self.domain._project(x_hat - eta * g_used)
        s.x_hat = x_hat_next

        m_norm = pend["m_norm"]
        g_norm = norm(g)
        self._ghat = max(self._ghat, g_norm, m_norm)
        move = norm(x - x_hat)
        flags = {
            "containment": self.domain.contains(x, 1e-12) and self.domain.contains(x_hat_next, 1e-12),
            "stability": move <= eta * m_norm + TOL * (1.0 + eta * m_norm),
        }
        if lhat is not None:
            radius = m_norm / (4.0 * lhat)
            flags["local_smoothness"] = move <= radius + TOL * (1.0 + radius)
        if self.mode != "strongly_convex":
            flags["eta_monotone"] = eta <= self._prev_eta
        if self.mode == "convex_clipped":
            flags["B_monotone"] = s.B >= B_prev
        self._prev_eta = eta
        row = {
            "t": s.t, "x": x, "x_hat": x_hat, "x_hat_next": x_hat_next, "M": M,
            "g": g, "g_used": g_used, "eta": eta,
            "Lhat": math.nan if lhat is None else lhat,
            "loss": f_t.value(x), "grad_norm": g_norm, "optimism_norm": m_norm,
            "Ghat_running": self._ghat, "S": s.variation,
            "B": s.B if self.mode == "convex_clipped" else None,
            "flags": flags,
        }
        self.trace_.append(row)
        if self.strict and not all(flags.values()):
            failed = [k for k, ok in flags.items() if not ok]
            raise InvariantViolation(f"round {s.t}: {failed}", round=s.t, name=failed[0])
        return self

    def fit(self, stream, y=None):
        """Run the full protocol on ``stream`` (``f_0 = 0`` is implied)."""
        self.reset()
        for t in range(1, len(stream) + 1):
            self.predict(stream.previous(t))
            self.update(stream[t - 1])
        return self

    @property
    def decisions_(self):
        return self.trace_.stack("x")

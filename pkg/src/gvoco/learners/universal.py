"""Two-layer universal ensemble: one convex and several strongly convex experts.

The convex expert (index 0) is fed function-value regrets; the strongly
convex experts get linearized regrets. The optimism
``m_i = f_{t-1}(x_t) - f_{t-1}(x_{t,i})`` depends on ``x_t``, which depends on
the weights it induces, so it is solved as a scalar fixpoint each round.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import ConfigError, InvariantViolation
from ..functions.losses import ZeroLoss
from ..trace import RoundTrace
from .base import OptimisticOMD
from .meta import OptimisticAdaMLProd


@dataclass(frozen=True)
class UniversalConfig:
    horizon: int
    B0: float = 1.0
    lower_bound: float = 0.0

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 2:
            raise ConfigError("the universal learner needs horizon >= 2")
        if not self.B0 > 0:
            raise ConfigError("B0 must be positive")
        if not math.isfinite(self.lower_bound):
            raise ConfigError("lower_bound must be finite")

    @property
    def n_experts(self):
        return math.ceil(math.log2(self.horizon)) + 1

    @property
    def pool(self):
        """Strong-convexity guesses ``2^(i-1) / T`` for ``i = 1 .. N-1``."""
        return [2.0 ** (i - 1) / self.horizon for i in range(1, self.n_experts)]


def assemble(config, domain):
    return UniversalLearner(domain, horizon=config.horizon, B0=config.B0,
                            lower_bound=config.lower_bound).reset()


class UniversalLearner(BaseEstimator):
    """Curvature-agnostic learner over ``domain``.

    Parameters
    ----------
    domain : Ball or Box
    horizon : int
        Number of rounds ``T``; sets the pool size and fixpoint tolerance.
    B0 : float, default=1.0
        Initial scale of the meta learner.
    lower_bound : float, default=0.0
        Global lower bound on the losses over the domain.
    strict : bool, default=False
    """

    def __init__(self, domain, horizon, B0=1.0, lower_bound=0.0, strict=False):
        self.domain = domain
        self.horizon = horizon
        self.B0 = B0
        self.lower_bound = lower_bound
        self.strict = strict

    def reset(self):
        self.config_ = UniversalConfig(self.horizon, self.B0, self.lower_bound)
        self.experts_ = [OptimisticOMD(self.domain, "convex", strict=self.strict).reset()]
        for lam in self.config_.pool:
            self.experts_.append(
                OptimisticOMD(self.domain, "strongly_convex", lam=lam, strict=self.strict).reset())
        self.meta_ = OptimisticAdaMLProd(len(self.experts_), B0=self.B0,
                                         strict=self.strict).reset()
        self.trace_ = RoundTrace({"n_experts": len(self.experts_), "pool": self.config_.pool})
        self._pending = None
        return self

    @property
    def n_experts_(self):
        return len(self.experts_)

    def predict(self, f_prev):
        if not hasattr(self, "experts_"):
            self.reset()
        xs = np.array([e.predict(f_prev) for e in self.experts_])
        h = np.array([f_prev.value(x) for x in xs])
        # both bounds are valid for f_{t-1}, so the larger one is used; the
        # global bound covers f_1 .. f_T only, not the zero function
        if isinstance(f_prev, ZeroLoss):
            lower = 0.0
        else:
            lower = max(self.lower_bound, f_prev.lower_bound)
        alpha, p = self.meta_.solve_optimism_fixpoint(
            h, lambda q: f_prev.value(q @ xs), lower, horizon=self.horizon)
        x = p @ xs
        self._pending = {"xs": xs, "h": h, "p": p, "x": x, "f_prev": f_prev, "alpha": alpha}
        return x

    def update(self, f_t):
        pend, self._pending = self._pending, None
        xs, p, x = pend["xs"], pend["p"], pend["x"]
        loss = f_t.value(x)
        grad = f_t.gradient(x)
        expert_values = np.array([f_t.value(xi) for xi in xs])
        r = grad @ (x - xs).T
        r[0] = loss - expert_values[0]
        self.meta_.observe(r)
        for e in self.experts_:
            e.update(f_t)
        meta_row = self.meta_.trace_.rows[-1]
        flags = dict(meta_row["flags"])
        flags["containment"] = self.domain.contains(x)
        for k, e in enumerate(self.experts_):
            for name, ok in e.trace_.rows[-1]["flags"].items():
                if not ok:
                    flags[f"expert{k + 1}_{name}"] = False
        t = meta_row["t"]
        row = {"t": t, "x": x, "loss": loss, "grad_norm": float(np.linalg.norm(grad)),
               "xs": xs, "expert_values": expert_values, "h": pend["h"], "p": p,
               "m": meta_row["m"], "r": r, "r_bar": meta_row["r_bar"],
               "eta_meta": meta_row["eta_vec"], "B": meta_row["B"], "prod": meta_row["prod"],
               "alpha_star": meta_row["alpha_star"], "bisect_iters": meta_row["bisect_iters"],
               "fixpoint_residual": meta_row["residual"], "fixpoint_range": meta_row["range"],
               "fixpoint_tol": meta_row["tol"], "eta": self.experts_[0].trace_.rows[-1]["eta"],
               "Lhat": self.experts_[0].trace_.rows[-1]["Lhat"], "flags": flags}
        for i, pi in enumerate(p):
            row[f"p_{i + 1}"] = float(pi)
        self.trace_.append(row)
        if self.strict and not all(flags.values()):
            failed = [k for k, ok in flags.items() if not ok]
            raise InvariantViolation(f"round {t}: {failed}", round=t, name=failed[0])
        return self

    def round(self, f_prev, f_t):
        """One full round; returns ``(x_t, trace row)``."""
        x = self.predict(f_prev)
        self.update(f_t)
        return x, self.trace_.rows[-1]

    def fit(self, stream, y=None):
        self.reset()
        for t in range(1, len(stream) + 1):
            self.round(stream.previous(t), stream[t - 1])
        return self

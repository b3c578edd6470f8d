"""Convex-concave saddle-point problems solved with optimistic OMD.

The learner plays ``z = (x, y)`` against the fixed monotone operator
``F(z) = (grad_x f, -grad_y f)``. Using ``F(z_hat_t)`` as optimism makes each
round an extragradient step, and the averaged iterate converges at a 1/T rate
in duality gap.
"""

import numpy as np

from ..exceptions import InputError
from ..functions.links import EPS_LINK, ConstantLink, PowerLink
from ..functions.losses import OnlineFunction
from ..functions.streams import best_in_hindsight
from ..geometry import Box, product
from ..learners.base import OptimisticOMD


class SaddleProblem:
    """Base class: payoff ``f(x, y)``, operator ``F``, product domain ``Z``."""

    exact_gap = False

    def __init__(self, x_domain, y_domain):
        if not (isinstance(x_domain, Box) and isinstance(y_domain, Box)):
            raise InputError("saddle problems are defined on boxes")
        self.x_domain = x_domain
        self.y_domain = y_domain
        self.domain = product(x_domain, y_domain)
        self.nx = x_domain.dim

    def split(self, z):
        z = np.asarray(z, dtype=float)
        return z[:self.nx], z[self.nx:]

    def payoff(self, x, y):
        raise NotImplementedError

    def grad_x(self, x, y):
        raise NotImplementedError

    def grad_y(self, x, y):
        raise NotImplementedError

    def operator(self, z):
        x, y = self.split(z)
        return np.concatenate([self.grad_x(x, y), -self.grad_y(x, y)])

    def as_function(self):
        return OperatorFunction(self)

    def duality_gap(self, z_bar):
        """``max_y f(x_bar, y) - min_x f(x, y_bar)`` via two inner solves."""
        x_bar, y_bar = self.split(z_bar)
        _, neg_max = best_in_hindsight([_Slice(self, x_bar, "y")], self.y_domain, verify=False)
        _, min_x = best_in_hindsight([_Slice(self, y_bar, "x")], self.x_domain, verify=False)
        return max(-neg_max - min_x, 0.0)


class _Slice(OnlineFunction):
    """``x -> f(x, y_fixed)`` or ``y -> -f(x_fixed, y)``, both convex."""

    family = "saddle_slice"

    def __init__(self, problem, fixed, free):
        self.problem, self.fixed, self.free = problem, fixed, free

    def value(self, v):
        if self.free == "x":
            return self.problem.payoff(v, self.fixed)
        return -self.problem.payoff(self.fixed, v)

    def gradient(self, v):
        if self.free == "x":
            return self.problem.grad_x(v, self.fixed)
        return -self.problem.grad_y(self.fixed, v)


class OperatorFunction(OnlineFunction):
    """Adapter so the OMD learner can consume a game.

    ``gradient`` returns the operator ``F(z)`` and ``value`` the payoff; the
    two are not related by differentiation.
    """

    family = "game"

    def __init__(self, problem):
        self.problem = problem
        self.link = problem.link
        self.dim = problem.domain.dim

    def value(self, z):
        return self.problem.payoff(*self.problem.split(z))

    def gradient(self, z):
        return self.problem.operator(z)


class BilinearGame(SaddleProblem):
    """``f(x, y) = (x - x0)' M (y - y0)`` on a box; saddle point at ``(x0, y0)``.

    The operator Jacobian is ``[[0, M], [-M', 0]]``, whose norm is ``||M||``,
    so the link is constant. The gap has a closed form on boxes.
    """

    exact_gap = True

    def __init__(self, M, x_domain, y_domain, x0=None, y0=None):
        super().__init__(x_domain, y_domain)
        self.M = np.atleast_2d(np.asarray(M, dtype=float))
        if self.M.shape != (x_domain.dim, y_domain.dim):
            raise InputError("M must have shape (dim x, dim y)")
        self.x0 = np.zeros(x_domain.dim) if x0 is None else np.asarray(x0, dtype=float)
        self.y0 = np.zeros(y_domain.dim) if y0 is None else np.asarray(y0, dtype=float)
        if not (x_domain.contains(self.x0) and y_domain.contains(self.y0)):
            raise InputError("the saddle point must lie in the domain")
        self.link = ConstantLink(float(np.linalg.norm(self.M, 2)))

    def payoff(self, x, y):
        return float((x - self.x0) @ self.M @ (y - self.y0))

    def grad_x(self, x, y):
        return self.M @ (y - self.y0)

    def grad_y(self, x, y):
        return self.M.T @ (x - self.x0)

    def duality_gap(self, z_bar):
        x_bar, y_bar = self.split(z_bar)
        c = self.M.T @ (x_bar - self.x0)
        lo, hi = self.y_domain.lower, self.y_domain.upper
        max_y = float(np.sum(np.maximum(c * lo, c * hi)) - c @ self.y0)
        d = self.M @ (y_bar - self.y0)
        lo, hi = self.x_domain.lower, self.x_domain.upper
        min_x = float(np.sum(np.minimum(d * lo, d * hi)) - d @ self.x0)
        return max(max_y - min_x, 0.0)


class QuarticGame(SaddleProblem):
    """``f(x, y) = u'Mv + (c/4)||u||^4 - (c/4)||v||^4`` with ``u = x - x0``, ``v = y - y0``.

    The saddle point is ``(x0, y0)``. The operator Jacobian has norm at most
    ``||M|| + 3c max(||u||, ||v||)^2``. Since ``||F(z)|| >= c||u||^3 - ||M|| R``
    (and the same in ``v``), with ``R`` the largest distance from the saddle
    to a point of the domain, ``3c||u||^2 <= 3 c^(1/3) (||F|| + ||M|| R)^(2/3)``,
    which gives the link.
    """

    def __init__(self, M, c, x_domain, y_domain, x0=None, y0=None):
        super().__init__(x_domain, y_domain)
        self.M = np.atleast_2d(np.asarray(M, dtype=float))
        if self.M.shape != (x_domain.dim, y_domain.dim):
            raise InputError("M must have shape (dim x, dim y)")
        if not c > 0:
            raise InputError("c must be positive")
        self.c = float(c)
        self.x0 = np.zeros(x_domain.dim) if x0 is None else np.asarray(x0, dtype=float)
        self.y0 = np.zeros(y_domain.dim) if y0 is None else np.asarray(y0, dtype=float)
        if not (x_domain.contains(self.x0) and y_domain.contains(self.y0)):
            raise InputError("the saddle point must lie in the domain")
        m_norm = float(np.linalg.norm(self.M, 2))
        R = max(_max_distance(x_domain, self.x0), _max_distance(y_domain, self.y0))
        self.link = PowerLink(m_norm + EPS_LINK, 3.0 * self.c ** (1.0 / 3.0), m_norm * R,
                              2.0 / 3.0)

    def payoff(self, x, y):
        u, v = x - self.x0, y - self.y0
        return float(u @ self.M @ v + 0.25 * self.c * ((u @ u) ** 2 - (v @ v) ** 2))

    def grad_x(self, x, y):
        u, v = x - self.x0, y - self.y0
        return self.M @ v + self.c * (u @ u) * u

    def grad_y(self, x, y):
        u, v = x - self.x0, y - self.y0
        return self.M.T @ u - self.c * (v @ v) * v


def _max_distance(box, point):
    far = np.maximum(np.abs(box.lower - point), np.abs(box.upper - point))
    return float(np.linalg.norm(far))


def solve_saddle(problem, horizon, strict=False):
    """Run optimistic OMD for ``horizon`` rounds; returns the fitted learner.

    The operator is fixed, so it serves as its own optimism from the first
    round and the step size stays at ``min(D, 1 / (4 Lhat_max))``.
    """
    F = problem.as_function()
    learner = OptimisticOMD(problem.domain, "convex", strict=strict).reset()
    for _ in range(int(horizon)):
        learner.predict(F)
        learner.update(F)
    return learner


def saddle_round(learner, problem):
    """Advance ``learner`` by one round on ``problem``; returns ``z_t``."""
    F = problem.as_function()
    z = learner.predict(F)
    learner.update(F)
    return z


def average_iterate(zs):
    zs = np.asarray(zs, dtype=float)
    if zs.ndim != 2 or zs.shape[0] == 0:
        raise InputError("average_iterate needs a nonempty (T, d) array")
    return zs.mean(axis=0)


def game_from_config(cfg):
    """Build a game from ``{"kind": "bilinear"|"quartic", "dim": d, "seed": s, ...}``."""
    kind = cfg.get("kind", "bilinear")
    d = int(cfg.get("dim", 1))
    rng = np.random.default_rng(cfg.get("seed", 0))
    half = float(cfg.get("half_width", 1.0))
    box = Box(-half * np.ones(d), half * np.ones(d))
    M = np.asarray(cfg["M"], dtype=float) if "M" in cfg else rng.standard_normal((d, d))
    x0 = np.asarray(cfg.get("x0", rng.uniform(-0.5, 0.5, d) * half))
    y0 = np.asarray(cfg.get("y0", rng.uniform(-0.5, 0.5, d) * half))
    if kind == "bilinear":
        return BilinearGame(M, box, box, x0, y0)
    if kind == "quartic":
        return QuarticGame(M, float(cfg.get("c", 1.0)), box, box, x0, y0)
    raise InputError(f"unknown game kind {kind!r}")


__all__ = ["SaddleProblem", "BilinearGame", "QuarticGame", "OperatorFunction",
           "solve_saddle", "saddle_round", "average_iterate", "game_from_config"]

"""Stochastically extended adversarial (SEA) environments.

Round ``t`` draws ``f_t`` from a distribution whose mean function is
``F_t(x) = x'Ax/2 + <b_t, x>``. The sample adds Gaussian noise to the linear
term, ``f_t(x) = F_t(x) + <xi_t, x>`` with ``xi_t ~ N(0, sigma^2 I)``, so
``grad f_t - grad F_t = xi_t`` everywhere and ``sigma_{1:T}^2 = T d sigma^2``.
The mean may flip between ``b + s u`` and ``b - s u`` every round, which sets
the adversarial shift ``Sigma_{1:T}^2 = 4 (T - 1) s^2``.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from ..exceptions import InputError
from ..functions.losses import LinearLoss, QuadraticLoss
from ..functions.streams import Stream, best_in_hindsight
from ..utils.validation import check_nonnegative

GRID_POINTS = 256


class SeaEnvironment:
    """Per-round loss distributions with a closed-form mean function.

    Parameters
    ----------
    dim, horizon : int
    sigma : float
        Standard deviation of each coordinate of the gradient noise.
    shift : float
        Amplitude of the flipping mean offset (0 keeps the mean fixed).
    curvature : float
        ``A = curvature * I``; 0 gives linear losses.
    seed : int
    """

    def __init__(self, dim, horizon, sigma=1.0, shift=0.0, curvature=0.0, seed=0):
        if int(dim) != dim or dim < 1 or int(horizon) != horizon or horizon < 1:
            raise InputError("dim and horizon must be positive integers")
        self.dim, self.horizon = int(dim), int(horizon)
        self.sigma = check_nonnegative(sigma, "sigma")
        self.shift = check_nonnegative(shift, "shift")
        self.curvature = check_nonnegative(curvature, "curvature")
        self.seed = int(seed)
        rng = np.random.default_rng([self.seed, 0])
        self.b = rng.standard_normal(self.dim) / math.sqrt(self.dim)
        u = rng.standard_normal(self.dim)
        self.direction = u / np.linalg.norm(u)
        self.A = self.curvature * np.eye(self.dim)

    def mean_offset(self, t):
        """``b_t`` for the 1-based round ``t``."""
        sign = 1.0 if t % 2 else -1.0
        return self.b + sign * self.shift * self.direction

    def _function(self, b, lower):
        if self.curvature > 0:
            return QuadraticLoss(self.A, b, lower_bound=lower,
                                 spectrum=(self.curvature, self.curvature))
        return LinearLoss(b, lower_bound=lower)

    def expected(self, t, domain=None):
        """The mean function ``F_t``."""
        b = self.mean_offset(t)
        lower = -float(np.linalg.norm(b)) * domain.max_norm if domain is not None else -math.inf
        return self._function(b, lower)

    def noise(self, rep):
        """Noise matrix ``(T, d)`` for repetition ``rep``."""
        rng = np.random.default_rng([self.seed, 1, int(rep)])
        return self.sigma * rng.standard_normal((self.horizon, self.dim))

    def sample(self, rep, domain=None):
        """Realized stream ``f_1, ..., f_T`` for repetition ``rep``."""
        xi = self.noise(rep)
        functions = []
        for t in range(1, self.horizon + 1):
            b = self.mean_offset(t) + xi[t - 1]
            lower = -float(np.linalg.norm(b)) * domain.max_norm if domain is not None \
                else -math.inf
            functions.append(self._function(b, lower))
        return Stream(functions, None, vt_exact=True)

    @property
    def analytic_sigma2(self):
        return self.horizon * self.dim * self.sigma ** 2

    @property
    def analytic_shift2(self):
        return 4.0 * (self.horizon - 1) * self.shift ** 2

    def mean_gradients(self, t, points):
        return points @ self.A.T + self.mean_offset(t)


def evaluation_grid(domain, n=GRID_POINTS):
    """``n`` Sobol points mapped into the domain's bounding box and projected."""
    lo, hi = domain.bounding_box()
    sobol = qmc.Sobol(domain.dim, scramble=False)
    pts = qmc.scale(sobol.random(n), lo, hi) if domain.dim > 0 else np.zeros((n, 0))
    return domain.project_many(pts)


class SeaResult(NamedTuple):
    mean_regret: float
    stderr: float
    regrets: np.ndarray
    sigma2: float
    sigma_tilde2: float
    shift2: float


def variance_estimates(env, noises, grid):
    """Monte Carlo ``(sigma^2, sigma_tilde^2, Sigma^2)`` on ``grid``.

    ``noises`` has shape ``(R, T, d)``. The sample gradient minus the mean
    gradient is evaluated at every grid point, so the sup over the domain is
    replaced by a max over the grid.
    """
    R, T, _ = noises.shape
    sigma2 = 0.0
    per_rep = np.zeros(R)
    shift2 = 0.0
    prev = None
    for t in range(1, T + 1):
        mean_g = env.mean_gradients(t, grid)                      # (K, d)
        sample_g = grid @ env.A.T + (env.mean_offset(t) + noises[:, t - 1])[:, None, :]
        sq = np.sum((sample_g - mean_g[None]) ** 2, axis=2)       # (R, K)
        sigma2 += float(np.max(sq.mean(axis=0)))
        per_rep += sq.max(axis=1)
        if prev is not None:
            shift2 += float(np.max(np.sum((mean_g - prev) ** 2, axis=1)))
        prev = mean_g
    return sigma2, float(per_rep.mean()), shift2


def sea_run(env, learner_factory, repetitions, domain):
    """Average realized regret of fresh learners over ``repetitions`` samples.

    ``learner_factory(stream)`` must return an estimator with ``fit(stream)``
    whose ``trace_`` records per-round ``loss``. Each sampled loss carries a
    certified lower bound on ``domain``, so ``stream.lower_bound`` is valid.
    """
    if repetitions < 1:
        raise InputError("repetitions must be at least 1")
    regrets = np.zeros(repetitions)
    noises = np.zeros((repetitions, env.horizon, env.dim))
    for rep in range(repetitions):
        noises[rep] = env.noise(rep)
        stream = env.sample(rep, domain)
        learner = learner_factory(stream).fit(stream)
        _, best = best_in_hindsight(list(stream), domain, verify=False)
        regrets[rep] = math.fsum(learner.trace_.column("loss")) - best
    sigma2, sigma_tilde2, shift2 = variance_estimates(env, noises, evaluation_grid(domain))
    stderr = float(regrets.std(ddof=1) / math.sqrt(repetitions)) if repetitions > 1 else math.nan
    return SeaResult(float(regrets.mean()), stderr, regrets, sigma2, sigma_tilde2, shift2)

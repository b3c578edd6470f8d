"""Synthetic loss streams with controllable gradient variation.

A stream is generated from one root seed. Every round draws from its own
generator keyed by ``(seed, counter)``, so any round can be replayed without
regenerating the ones before it.
"""

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..exceptions import CapabilityError, ConfigError, InputError, NumericalDiagnostic
from .losses import (ExponentialLoss, LinearLoss, QuadraticLoss, QuarticLoss, ZeroLoss,
                     function_from_params, sum_functions)

FAMILIES = ("quadratic", "linear", "exponential", "quartic")
SCHEDULES = ("stationary", "linear_drift", "piecewise", "adversarial_flip")


@dataclass(frozen=True)
class StreamConfig:
    """Recipe for a loss stream.

    ``drift`` is the per-round shift for ``linear_drift``, the flip amplitude
    for ``adversarial_flip`` and the per-segment offset scale for
    ``piecewise``. The schedule offset moves ``b`` for quadratic, linear and
    quartic losses and ``a`` for exponential losses.
    """

    family: str = "quadratic"
    schedule: str = "stationary"
    horizon: int = 100
    dim: int = 2
    curvature: float = 0.0
    smoothness: float = 1.0
    drift: float = 0.0
    period: int = 1
    segments: int = 1
    offset_scale: float = 1.0
    quartic_coef: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigError("horizon must be a positive integer")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError("dim must be a positive integer")
        for name in ("curvature", "smoothness", "drift", "offset_scale"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be nonnegative")
        if self.curvature > self.smoothness:
            raise ConfigError("curvature cannot exceed smoothness")
        if self.period < 1 or self.segments < 1:
            raise ConfigError("period and segments must be at least 1")
        if self.family == "quartic" and not self.quartic_coef > 0:
            raise ConfigError("quartic_coef must be positive")
        if self.family == "exponential" and self.schedule == "linear_drift" and \
                self.drift * self.horizon > 50:
            raise ConfigError("exponential drift this large overflows")

    @classmethod
    def from_dict(cls, cfg):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(cfg) - names
        if unknown:
            raise ConfigError(f"unknown stream keys {sorted(unknown)}")
        return cls(**cfg)

    def to_dict(self):
        return dataclasses.asdict(self)


class Stream:
    """An immutable sequence ``f_1, ..., f_T`` with ``f_0 = 0`` in front."""

    def __init__(self, functions, config=None, vt_exact=False):
        if not functions:
            raise InputError("a stream needs at least one function")
        self.functions = tuple(functions)
        self.config = config
        self.vt_exact = vt_exact
        self.dim = _dim_of(self.functions[0])
        self.zero = ZeroLoss(self.dim)

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, i):
        return self.functions[i]

    def previous(self, t):
        """``f_{t-1}`` for the 1-based round ``t``."""
        return self.zero if t == 1 else self.functions[t - 2]

    @property
    def lower_bound(self):
        return min(f.lower_bound for f in self.functions)


def _dim_of(f):
    for attr in ("b", "a", "m"):
        if hasattr(f, attr):
            return getattr(f, attr).shape[0]
    return f.dim


def _rng(seed, *counter):
    return np.random.default_rng([int(seed), *(int(c) for c in counter)])


def _offset(cfg, t, direction):
    if cfg.schedule == "stationary":
        return np.zeros(cfg.dim)
    if cfg.schedule == "linear_drift":
        return (t - 1) * cfg.drift * direction
    if cfg.schedule == "adversarial_flip":
        sign = -1.0 if ((t - 1) // cfg.period) % 2 else 1.0
        return sign * cfg.drift * direction
    # piecewise: each segment draws its own offset from a segment-keyed generator
    seg_len = math.ceil(cfg.horizon / cfg.segments)
    segment = (t - 1) // seg_len
    if segment == 0:
        return np.zeros(cfg.dim)
    return cfg.drift * _rng(cfg.seed, 1, segment).standard_normal(cfg.dim) / math.sqrt(cfg.dim)


def make_stream(config, domain=None):
    """Generate the stream described by ``config``.

    When ``domain`` is given each loss carries a certified lower bound on it:
    ``-||b|| * max_norm`` for losses whose nonlinear part is nonnegative.
    """
    if isinstance(config, dict):
        config = StreamConfig.from_dict(config)
    cfg = config
    if domain is not None and domain.dim != cfg.dim:
        raise ConfigError("stream and domain dimensions differ")
    base = _rng(cfg.seed, 0, 0)
    d = cfg.dim
    direction = base.standard_normal(d)
    direction /= np.linalg.norm(direction)
    b0 = cfg.offset_scale * base.standard_normal(d) / math.sqrt(d)
    radius = domain.max_norm if domain is not None else math.inf

    def lb(b):
        return -math.sqrt(float(b @ b)) * radius if domain is not None else -math.inf

    functions = []
    if cfg.family in ("quadratic", "linear"):
        if cfg.family == "quadratic" and cfg.smoothness > 0:
            q, _ = np.linalg.qr(base.standard_normal((d, d)))
            eig = np.sort(base.uniform(cfg.curvature, cfg.smoothness, d))
            eig[0], eig[-1] = cfg.curvature, cfg.smoothness
            A = (q * eig) @ q.T
            A = 0.5 * (A + A.T)
            spectrum = (float(eig[0]), float(eig[-1]))
        else:
            A, spectrum = np.zeros((d, d)), (0.0, 0.0)
        for t in range(1, cfg.horizon + 1):
            b = b0 + _offset(cfg, t, direction)
            if cfg.family == "linear":
                functions.append(LinearLoss(b, lower_bound=lb(b)))
            else:
                functions.append(QuadraticLoss(A, b, lower_bound=lb(b), spectrum=spectrum))
        return Stream(functions, cfg, vt_exact=True)
    if cfg.family == "quartic":
        m = 0.5 * base.standard_normal(d) / math.sqrt(d)
        for t in range(1, cfg.horizon + 1):
            b = b0 + _offset(cfg, t, direction)
            functions.append(QuarticLoss(cfg.quartic_coef, m, b, lower_bound=lb(b)))
        return Stream(functions, cfg, vt_exact=True)
    # exponential
    for t in range(1, cfg.horizon + 1):
        functions.append(ExponentialLoss(b0 + _offset(cfg, t, direction)))
    return Stream(functions, cfg, vt_exact=False)


class VariationResult(NamedTuple):
    total: float
    per_round: np.ndarray
    exact: bool


def gradient_variation(stream, domain, mode="exact", samples=256, seed=0):
    """Gradient variation ``V_T = sum_{t>=2} sup_x ||grad f_t(x) - grad f_{t-1}(x)||^2``.

    ``mode="exact"`` is only available when consecutive gradient differences
    are constant in ``x``; ``mode="sampled"`` maximizes over ``samples``
    interior plus ``samples`` boundary points and is a lower estimate.
    ``per_round[0]`` (round 1) is always 0.
    """
    T = len(stream)
    per_round = np.zeros(T)
    if mode == "exact":
        if not getattr(stream, "vt_exact", False):
            raise CapabilityError("exact gradient variation needs x-independent differences")
        origin = np.zeros(domain.dim)
        prev = stream[0].gradient(origin)
        for t in range(1, T):
            cur = stream[t].gradient(origin)
            diff = cur - prev
            per_round[t] = float(diff @ diff)
            prev = cur
        return VariationResult(float(per_round.sum()), per_round, True)
    if mode != "sampled":
        raise InputError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    pts = np.vstack([domain.sample_interior(rng, samples), domain.sample_boundary(rng, samples)])
    prev = np.array([stream[0].gradient(p) for p in pts])
    for t in range(1, T):
        cur = np.array([stream[t].gradient(p) for p in pts])
        per_round[t] = float(np.max(np.sum((cur - prev) ** 2, axis=1)))
        prev = cur
    return VariationResult(float(per_round.sum()), per_round, False)


def best_in_hindsight(functions, domain, tol=1e-9, max_iter=200000, verify=True):
    """Minimize ``F = sum_t f_t`` over ``domain``.

    Accelerated projected gradient descent (backtracking step, momentum
    restarted whenever it points uphill) runs on the averaged objective
    ``F / T`` until ``||x - proj(x - grad)|| <= tol``. For ``dim <= 2`` the
    answer is cross-checked by a refining grid search (final cell width at
    most ``1e-5 * D``); the two averaged values must agree within ``1e-6``.

    Returns ``(minimizer, F(minimizer))``.
    """
    functions = list(functions)
    n = len(functions)
    F = sum_functions(functions)
    x = domain.project(np.zeros(domain.dim))
    y, k = x, 1.0
    step = 1.0
    residual = math.inf
    for _ in range(max_iter):
        gx = F.gradient(x) / n
        residual = float(np.linalg.norm(x - domain.project(x - gx)))
        if residual <= tol:
            break
        fy = F.value(y) / n
        gy = F.gradient(y) / n
        while True:
            x_new = domain.project(y - step * gy)
            delta = x_new - y
            if F.value(x_new) / n <= fy + gy @ delta + (delta @ delta) / (2 * step) \
                    + 1e-15 * max(1.0, abs(fy)):
                break
            step *= 0.5
            if step < 1e-30:
                raise NumericalDiagnostic("line search collapsed", x, residual)
        k_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * k * k))
        if (y - x_new) @ (x_new - x) > 0:
            y, k = x_new, 1.0
        else:
            y, k = x_new + ((k - 1.0) / k_new) * (x_new - x), k_new
        x = x_new
        step *= 1.1
    else:
        raise NumericalDiagnostic(
            f"projected gradient did not converge (residual {residual:.3e})", x, residual)
    if verify and domain.dim <= 2:
        grid_x, grid_val = grid_minimize(lambda p: F.value(p) / n, domain)
        fx = F.value(x) / n
        if abs(grid_val - fx) > 1e-6:
            raise NumericalDiagnostic(
                f"grid check disagrees: pgd {fx:.10g} vs grid {grid_val:.10g}", x, residual)
    return x, F.value(x)


def grid_minimize(value, domain, points_per_axis=41):
    """Minimize a convex ``value`` on a low-dimensional domain by grid zooming.

    Each pass evaluates a ``points_per_axis`` grid (projected into the
    domain) and re-centers a finer grid on the best point, stopping once the
    cell width is at most ``1e-5 * D``. Returns ``(point, value)``.
    """
    lo, hi = domain.bounding_box()
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    best_x, best_val = None, math.inf
    target = 1e-5 * domain.diameter
    while True:
        axes = [np.linspace(c - h, c + h, points_per_axis) for c, h in zip(center, half)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.dim)
        cand = domain.project_many(mesh)
        vals = np.array([value(p) for p in cand])
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_x, best_val = cand[k], float(vals[k])
        cell = float(np.max(2 * half / (points_per_axis - 1)))
        if cell <= target:
            return best_x, best_val
        center = best_x
        half = np.full(domain.dim, 2.0 * cell)


def dump_stream(stream, path):
    """Write a stream as JSON lines: a header, then one function per line."""
    with open(path, "w") as fh:
        header = {"header": {"config": stream.config.to_dict() if stream.config else None,
                             "horizon": len(stream), "vt_exact": stream.vt_exact}}
        fh.write(json.dumps(header) + "\n")
        for f in stream:
            fh.write(json.dumps(f.params()) + "\n")


def load_stream(path):
    functions, config, vt_exact = [], None, False
    with open(path) as fh:
        for line in fh:
            record = json.loads(line)
            if "header" in record:
                cfg = record["header"]["config"]
                config = StreamConfig.from_dict(cfg) if cfg else None
                vt_exact = record["header"]["vt_exact"]
            else:
                functions.append(function_from_params(record))
    return Stream(functions, config, vt_exact=vt_exact)

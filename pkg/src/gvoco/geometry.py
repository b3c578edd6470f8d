"""Feasible domains with closed-form Euclidean projection.

Only Euclidean balls and axis-aligned boxes are supported. Both contain the
origin by construction, and both are immutable once built.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, InputError
from .utils.validation import check_positive, check_vector

CONTAINMENT_TOL = 1e-12


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball ``{x : ||x - center|| <= radius}``."""

    radius: float
    dim: int
    center: np.ndarray = field(default=None)

    def __post_init__(self):
        check_positive(self.radius, "radius")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dim must be a positive integer, got {self.dim!r}")
        center = np.zeros(self.dim) if self.center is None else check_vector(
            self.center, self.dim, "center")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        if np.linalg.norm(center) > self.radius + CONTAINMENT_TOL:
            raise InputError("ball must contain the origin")

    kind = "ball"

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def max_norm(self):
        """Largest Euclidean norm of a point in the ball."""
        return float(np.linalg.norm(self.center)) + self.radius

    def project(self, point):
        return self._project(check_vector(point, self.dim, "point"))

    def _project(self, y):
        # unchecked fast path for learners, which only pass valid float arrays
        offset = y - self.center
        dist = math.sqrt(float(offset @ offset))
        if dist <= self.radius:
            return y.copy()
        return self.center + offset * (self.radius / dist)

    def project_many(self, points):
        offset = np.asarray(points, dtype=float) - self.center
        dist = np.linalg.norm(offset, axis=1, keepdims=True)
        scale = np.minimum(1.0, self.radius / np.maximum(dist, 1e-300))
        return self.center + offset * scale

    def contains(self, point, tol=CONTAINMENT_TOL):
        y = np.asarray(point, dtype=float)
        diff = y - self.center
        return bool(math.sqrt(float(diff @ diff)) <= self.radius + tol)

    def sample_interior(self, rng, n):
        d = self.dim
        direction = rng.standard_normal((n, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radii = self.radius * rng.random(n) ** (1.0 / d)
        return self.center + direction * radii[:, None]

    def sample_boundary(self, rng, n):
        direction = rng.standard_normal((n, self.dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        return self.center + self.radius * direction

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def to_config(self):
        cfg = {"kind": "ball", "radius": self.radius, "dim": self.dim}
        if np.any(self.center != 0):
            cfg["center"] = self.center.tolist()
        return cfg


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``{x : lower <= x <= upper}``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = check_vector(self.lower, name="lower")
        upper = check_vector(self.upper, lower.shape[0], "upper")
        if np.any(lower >= upper):
            raise InputError("box requires lower < upper componentwise")
        if np.any(lower > CONTAINMENT_TOL) or np.any(upper < -CONTAINMENT_TOL):
            raise InputError("box must contain the origin")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    kind = "box"

    @property
    def dim(self):
        return self.lower.shape[0]

    @property
    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    @property
    def max_norm(self):
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def project(self, point):
        return self._project(check_vector(point, self.dim, "point"))

    def _project(self, y):
        return np.minimum(np.maximum(y, self.lower), self.upper)

    def project_many(self, points):
        return np.clip(np.asarray(points, dtype=float), self.lower, self.upper)

    def contains(self, point, tol=CONTAINMENT_TOL):
        y = np.asarray(point, dtype=float)
        return bool(np.all(y >= self.lower - tol) and np.all(y <= self.upper + tol))

    def sample_interior(self, rng, n):
        return self.lower + (self.upper - self.lower) * rng.random((n, self.dim))

    def sample_boundary(self, rng, n):
        pts = self.sample_interior(rng, n)
        coord = rng.integers(self.dim, size=n)
        side = rng.integers(2, size=n)
        rows = np.arange(n)
        pts[rows, coord] = np.where(side == 0, self.lower[coord], self.upper[coord])
        return pts

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def to_config(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


def project(domain, point):
    """Euclidean projection of ``point`` onto ``domain``."""
    return domain.project(point)


def diameter(domain):
    return domain.diameter


def product(first, second):
    """Cartesian product of two boxes, used for saddle-point domains."""
    if not (isinstance(first, Box) and isinstance(second, Box)):
        raise InputError("products are only supported between boxes")
    return Box(np.concatenate([first.lower, second.lower]),
               np.concatenate([first.upper, second.upper]))


def domain_from_config(cfg):
    """Build a domain from ``{"kind": "ball", ...}`` or ``{"kind": "box", ...}``."""
    try:
        kind = cfg["kind"]
        if kind == "ball":
            return Ball(radius=cfg["radius"], dim=cfg["dim"], center=cfg.get("center"))
        if kind == "box":
            return Box(cfg["lower"], cfg["upper"])
    except KeyError as exc:
        raise ConfigError(f"domain block is missing {exc}") from exc
    except InputError as exc:
        raise ConfigError(f"invalid domain: {exc}") from exc
    raise ConfigError(f"unknown domain kind {cfg.get('kind')!r}")

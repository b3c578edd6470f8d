"""Online loss families with value, gradient and link oracles.

Each loss carries a ``link`` certifying generalized smoothness,
``||hess f(x)|| <= link(||grad f(x)||)``, a strong-convexity modulus
(0 for merely convex losses) and, when known, a lower bound on the domain
the stream was generated for.
"""

import math

import numpy as np

from ..exceptions import InputError
from .links import EPS_LINK, AffineLink, ConstantLink, PowerLink, link_from_params


class OnlineFunction:
    family = None
    strong_convexity = 0.0
    lower_bound = -math.inf

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    @property
    def curvature(self):
        if self.strong_convexity > 0:
            return ("strongly_convex", self.strong_convexity)
        return "convex"

    def params(self):
        """JSON-serializable parameters, one line of a stream dump."""
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)


class ZeroLoss(OnlineFunction):
    """The constant-zero function placed before the first round."""

    family = "zero"
    lower_bound = 0.0

    def __init__(self, dim):
        self.dim = dim
        self.link = ConstantLink(EPS_LINK)
        self._zero = np.zeros(dim)

    def value(self, x):
        return 0.0

    def gradient(self, x):
        return self._zero

    def params(self):
        return {"family": "zero", "dim": self.dim}


class LinearLoss(OnlineFunction):
    """``f(x) = <b, x>``."""

    family = "linear"

    def __init__(self, b, lower_bound=-math.inf):
        self.b = np.asarray(b, dtype=float)
        self.link = ConstantLink(EPS_LINK)
        self.lower_bound = lower_bound

    def value(self, x):
        return float(self.b @ x)

    def gradient(self, x):
        return self.b

    def params(self):
        return {"family": "linear", "b": self.b.tolist(), "lower_bound": self.lower_bound}


class QuadraticLoss(OnlineFunction):
    """``f(x) = x'Ax/2 + <b, x>`` with ``A`` symmetric positive semidefinite."""

    family = "quadratic"

    def __init__(self, A, b, lower_bound=-math.inf, spectrum=None):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.A.shape != (self.b.shape[0], self.b.shape[0]):
            raise InputError("A must be square and match b")
        # spectrum=(min_eig, max_eig) lets streams sharing A skip the eigensolve
        if spectrum is None:
            eig = np.linalg.eigvalsh(self.A)
            spectrum = (eig[0], eig[-1])
        lo, hi = spectrum
        if lo < -1e-10 * max(1.0, abs(hi)):
            raise InputError("A must be positive semidefinite")
        self.spectrum = (float(lo), float(hi))
        self.spectral_norm = float(max(hi, 0.0))
        self.strong_convexity = float(max(lo, 0.0))
        self.link = ConstantLink(self.spectral_norm)
        self.lower_bound = lower_bound

    def value(self, x):
        return float(x @ (0.5 * (self.A @ x) + self.b))

    def gradient(self, x):
        return self.A @ x + self.b

    def params(self):
        return {"family": "quadratic", "A": self.A.tolist(), "b": self.b.tolist(),
                "lower_bound": self.lower_bound}


class ExponentialLoss(OnlineFunction):
    """``f(x) = exp(<a, x>)``.

    Since ``hess f = a a' exp(<a,x>)`` and ``grad f = a exp(<a,x>)``, the
    Hessian norm equals ``||a|| * ||grad f||`` and the affine link is tight.
    """

    family = "exponential"
    lower_bound = 0.0

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float)
        self.link = AffineLink(EPS_LINK, float(np.linalg.norm(self.a)))

    def value(self, x):
        return math.exp(float(self.a @ x))

    def gradient(self, x):
        return self.a * math.exp(float(self.a @ x))

    def params(self):
        return {"family": "exponential", "a": self.a.tolist()}


class QuarticLoss(OnlineFunction):
    """``f(x) = c ||x - m||^4 + <b, x>``.

    With ``r = x - m``: ``grad f = 4c||r||^2 r + b`` and
    ``||hess f|| = 12 c ||r||^2``. Since ``||grad f - b|| = 4c||r||^3``,
    ``||hess f|| = 3 (4c)^(1/3) ||grad f - b||^(2/3)
    <= 3 (4c)^(1/3) (||grad f|| + ||b||)^(2/3)``.
    """

    family = "quartic"

    def __init__(self, c, m, b, lower_bound=-math.inf):
        if c <= 0:
            raise InputError("quartic coefficient must be positive")
        self.c = float(c)
        self.m = np.asarray(m, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.link = PowerLink(EPS_LINK, 3.0 * (4.0 * self.c) ** (1.0 / 3.0),
                              float(np.linalg.norm(self.b)), 2.0 / 3.0)
        self.lower_bound = lower_bound

    def value(self, x):
        r = x - self.m
        return float(self.c * (r @ r) ** 2 + self.b @ x)

    def gradient(self, x):
        r = x - self.m
        return 4.0 * self.c * (r @ r) * r + self.b

    def params(self):
        return {"family": "quartic", "c": self.c, "m": self.m.tolist(),
                "b": self.b.tolist(), "lower_bound": self.lower_bound}


class ExponentialSum(OnlineFunction):
    """``F(x) = sum_t exp(<a_t, x>)`` evaluated in one vectorized pass."""

    family = "exponential_sum"
    lower_bound = 0.0

    def __init__(self, a_rows):
        self.a_rows = np.asarray(a_rows, dtype=float)
        self.link = AffineLink(EPS_LINK, float(np.linalg.norm(self.a_rows, axis=1).max()))

    def value(self, x):
        return float(np.exp(self.a_rows @ x).sum())

    def gradient(self, x):
        return np.exp(self.a_rows @ x) @ self.a_rows

    def params(self):
        return {"family": "exponential_sum", "a_rows": self.a_rows.tolist()}


class GenericSum(OnlineFunction):
    family = "sum"

    def __init__(self, functions):
        self.functions = list(functions)

    def value(self, x):
        return math.fsum(f.value(x) for f in self.functions)

    def gradient(self, x):
        return np.sum([f.gradient(x) for f in self.functions], axis=0)


def sum_functions(functions):
    """Return one function equal to the sum of ``functions``.

    Families with shared structure collapse to a single closed-form member;
    anything else falls back to a term-by-term sum.
    """
    functions = [f for f in functions if not isinstance(f, ZeroLoss)]
    if not functions:
        raise InputError("cannot sum an empty list of functions")
    families = {f.family for f in functions}
    if families <= {"linear", "quadratic"}:
        d = functions[0].b.shape[0]
        A = np.zeros((d, d))
        b = np.zeros(d)
        for f in functions:
            if f.family == "quadratic":
                A += f.A
            b += f.b
        if families == {"linear"}:
            return LinearLoss(b)
        return QuadraticLoss(A, b)
    if families == {"quartic"}:
        m0 = functions[0].m
        if all(np.array_equal(f.m, m0) for f in functions):
            return QuarticLoss(sum(f.c for f in functions), m0,
                               np.sum([f.b for f in functions], axis=0))
    if families == {"exponential"}:
        return ExponentialSum([f.a for f in functions])
    return GenericSum(functions)


def function_from_params(params):
    """Inverse of ``OnlineFunction.params``."""
    family = params["family"]
    lb = params.get("lower_bound", -math.inf)
    if family == "zero":
        return ZeroLoss(params["dim"])
    if family == "linear":
        return LinearLoss(params["b"], lower_bound=lb)
    if family == "quadratic":
        return QuadraticLoss(params["A"], params["b"], lower_bound=lb)
    if family == "exponential":
        return ExponentialLoss(params["a"])
    if family == "quartic":
        return QuarticLoss(params["c"], params["m"], params["b"], lower_bound=lb)
    raise InputError(f"unknown family {family!r}")


def query_link(f, u):
    """``ell_t(u)`` for a nonnegative gradient norm ``u``."""
    if not u >= 0:
        raise InputError(f"link argument must be nonnegative, got {u!r}")
    return f.link(u)


__all__ = [
    "OnlineFunction", "ZeroLoss", "LinearLoss", "QuadraticLoss", "ExponentialLoss",
    "QuarticLoss", "ExponentialSum", "GenericSum", "sum_functions",
    "function_from_params", "query_link", "link_from_params",
]

"""Link functions bounding the Hessian norm by a function of the gradient norm."""

import numpy as np

EPS_LINK = 1e-6


class LinkFunction:
    """A positive, nondecreasing map ``u -> ell(u)`` on ``[0, inf)``."""

    def __call__(self, u):
        raise NotImplementedError

    def params(self):
        raise NotImplementedError


class ConstantLink(LinkFunction):
    """``ell(u) = value``: global smoothness."""

    def __init__(self, value):
        self.value = float(max(value, EPS_LINK))

    def __call__(self, u):
        return self.value

    def params(self):
        return {"kind": "constant", "value": self.value}


class AffineLink(LinkFunction):
    """``ell(u) = l0 + l1 * u``, the (L0, L1)-smooth case."""

    def __init__(self, l0, l1):
        self.l0 = float(l0)
        self.l1 = float(l1)

    def __call__(self, u):
        return self.l0 + self.l1 * u

    def params(self):
        return {"kind": "affine", "l0": self.l0, "l1": self.l1}


class PowerLink(LinkFunction):
    """``ell(u) = offset + coef * (u + shift) ** exponent`` with exponent >= 0."""

    def __init__(self, offset, coef, shift, exponent):
        self.offset = float(offset)
        self.coef = float(coef)
        self.shift = float(shift)
        self.exponent = float(exponent)

    def __call__(self, u):
        return self.offset + self.coef * (u + self.shift) ** self.exponent

    def params(self):
        return {"kind": "power", "offset": self.offset, "coef": self.coef,
                "shift": self.shift, "exponent": self.exponent}


def link_from_params(params):
    kind = params["kind"]
    if kind == "constant":
        return ConstantLink(params["value"])
    if kind == "affine":
        return AffineLink(params["l0"], params["l1"])
    if kind == "power":
        return PowerLink(params["offset"], params["coef"], params["shift"], params["exponent"])
    raise ValueError(f"unknown link kind {kind!r}")


def is_valid_link(link, grid=None):
    """Check positivity and monotonicity of ``link`` on a log-spaced grid."""
    if grid is None:
        grid = np.concatenate([[0.0], np.logspace(-8, 6, 400)])
    values = np.array([link(u) for u in grid])
    return bool(np.all(values > 0) and np.all(np.diff(values) >= 0))

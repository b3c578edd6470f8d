"""Regret accounting, bound checks and trace audits.

Everything here reads finished traces and recomputes what it needs from the
stream, so it serves as an independent second path next to the learners'
own bookkeeping.
"""

import math
from typing import NamedTuple

import numpy as np

from .exceptions import CapabilityError, InputError
from .functions.streams import best_in_hindsight, gradient_variation
from .learners.base import local_estimate
from .trace import BASE_COLUMNS, RoundTrace

__all__ = [
    "RoundTrace", "BASE_COLUMNS", "BoundReport", "regret", "final_regret", "annotate",
    "trajectory_constants", "verify_bound", "audit", "omd_step_slack",
    "decomposition_identity",
    "self_confident_gap", "integral_bound_gap", "mid_value_gap",
]


def _decisions(trace):
    return trace.stack("x")


def regret(trace, stream, domain, comparator=None):
    """Cumulative regret ``Reg_t`` for every prefix ``t``.

    Losses are recomputed from the stream at the recorded decisions, and the
    comparator is the full-horizon best fixed point (or ``comparator``).
    """
    if len(trace) != len(stream):
        raise InputError("trace and stream lengths differ")
    xs = _decisions(trace)
    if comparator is None:
        comparator, _ = best_in_hindsight(list(stream), domain)
    per_round = np.array([f.value(x) - f.value(comparator) for f, x in zip(stream, xs)])
    return np.cumsum(per_round)


def final_regret(trace, stream, domain):
    """``Reg_T`` from the recorded losses and the best fixed point's total loss."""
    if len(trace) != len(stream):
        raise InputError("trace and stream lengths differ")
    _, best = best_in_hindsight(list(stream), domain)
    return math.fsum(trace.column("loss")) - best


def annotate(trace, stream, domain, cum_regret=None):
    """Fill ``cum_regret`` and ``Vt_partial`` columns for CSV output."""
    if cum_regret is None:
        cum_regret = regret(trace, stream, domain)
    vt = None
    if getattr(stream, "vt_exact", False):
        vt = np.cumsum(gradient_variation(stream, domain, "exact").per_round)
    for i, row in enumerate(trace.rows):
        row["cum_regret"] = float(cum_regret[i])
        row["Vt_partial"] = float(vt[i]) if vt is not None else None
    return trace


def trajectory_constants(trace, stream):
    """``(Lhat_max, Ghat_max)`` from an OMD trace.

    ``Lhat_max`` covers ``Lhat_1 .. Lhat_T``; the recorded column holds
    ``Lhat_0 .. Lhat_{T-1}`` (``Lhat_0`` is the no-cap sentinel), so the last
    estimate is evaluated here at ``x_hat_{T+1}``.
    """
    lhat = trace.column("Lhat")
    lhat = lhat[~np.isnan(lhat)]
    last = local_estimate(stream[len(stream) - 1], trace[-1]["x_hat_next"])
    lhat_max = max(float(lhat.max()), last) if lhat.size else last
    g = max(max(row["grad_norm"], row["optimism_norm"]) for row in trace.rows)
    return float(lhat_max), float(g)


class BoundReport(NamedTuple):
    kind: str
    holds: bool
    lhs: float
    rhs: float
    margin: float
    ratio: float

    def to_dict(self):
        return self._asdict()


def _report(kind, lhs, rhs, strict):
    ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
    if strict:
        holds = lhs <= rhs * (1.0 + 1e-6)
    else:
        holds = lhs <= 0 or math.isfinite(ratio)
    return BoundReport(kind, bool(holds), float(lhs), float(rhs), float(rhs - lhs), float(ratio))


def verify_bound(trace, kind, stream=None, domain=None, **data):
    """Compare measured regret with a regret bound's right-hand side.

    ``thm5`` is the only strict check (its constants are explicit). ``thm1``,
    ``thm2`` and ``thm6`` report the ratio of regret to the bound's growth
    expression; ``cor2`` reports ``T * gap`` and needs ``problem=``.
    ``thm6`` needs ``losses=`` (the expert loss matrix) and reads a meta trace.
    """
    if kind in ("thm1", "thm2", "thm5"):
        if stream is None or domain is None:
            raise InputError(f"{kind} needs the stream and domain")
        if kind in ("thm1", "thm5") and not getattr(stream, "vt_exact", False):
            raise CapabilityError(f"{kind} needs a stream with exact gradient variation")
        reg = final_regret(trace, stream, domain)
        D = domain.diameter
        lhat, ghat = trajectory_constants(trace, stream)
        if kind == "thm2":
            lam = data.get("lam", trace.meta.get("lam"))
            if not lam:
                raise InputError("thm2 needs lam")
            vt = gradient_variation(stream, domain, "exact" if stream.vt_exact else "sampled").total
            rhs = ghat ** 2 / lam * math.log(1.0 + vt) + lhat * D ** 2 + lam * D ** 2
            return _report(kind, reg, rhs, strict=False)
        vt = gradient_variation(stream, domain, "exact").total
        if kind == "thm5":
            rhs = 2.5 * D * math.sqrt(2.0 * vt) + 4.0 * lhat * D ** 2 + 5.0 * ghat * D
            return _report(kind, reg, rhs, strict=True)
        rhs = D * math.sqrt(vt) + lhat * D ** 2
        return _report(kind, reg, rhs, strict=False)
    if kind == "thm6":
        losses = np.asarray(data["losses"], dtype=float)
        T, N = losses.shape
        learner = math.fsum(trace.column("loss"))
        regs = learner - losses.sum(axis=0)
        i = int(np.argmax(regs))
        r, m = trace.stack("r")[:, i], trace.stack("m")[:, i]
        B_T = trace[-1]["B"]
        rhs = math.sqrt(float(np.sum((r - m) ** 2))) * (math.log(N) + math.log(B_T + math.log(T))) \
            + B_T
        return _report(kind, float(regs[i]), rhs, strict=False)
    if kind == "cor2":
        problem = data["problem"]
        zs = _decisions(trace)
        gap = problem.duality_gap(zs.mean(axis=0))
        T = len(zs)
        return BoundReport(kind, gap >= 0, T * gap, math.nan, math.nan, T * gap)
    raise InputError(f"unknown bound {kind!r}")


def audit(trace):
    """Summary of runtime invariant flags: counts per name and first failure."""
    counts, first = {}, None
    for t, name in trace.violations():
        counts[name] = counts.get(name, 0) + 1
        if first is None:
            first = (t, name)
    return {"violations": sum(counts.values()), "by_invariant": counts,
            "first": None if first is None else {"round": first[0], "invariant": first[1]}}


def omd_step_slack(trace, u):
    """Per-round slack of the optimistic OMD one-step inequality at ``u``.

    Uses the gradient that actually moved ``x_hat`` (clipped in clipped mode).
    Nonnegative values mean the inequality holds.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty(len(trace))
    for k, row in enumerate(trace.rows):
        x, xh, xn, g, M, eta = (row["x"], row["x_hat"], row["x_hat_next"], row["g_used"],
                                row["M"], row["eta"])
        lhs = g @ (x - u)
        rhs = (g - M) @ (x - xn) + ((u - xh) @ (u - xh) - (u - xn) @ (u - xn)) / (2 * eta) \
            - ((xn - x) @ (xn - x) + (x - xh) @ (x - xh)) / (2 * eta)
        out[k] = rhs - lhs
    return out


def decomposition_identity(learner, stream, domain):
    """Split universal regret into meta regret plus base regret per expert.

    Returns ``(total, meta, base, residual)`` where ``meta[i] + base[i]``
    should equal ``total`` for every expert ``i``; ``residual`` is the
    largest absolute mismatch.
    """
    trace = learner.trace_
    _, best = best_in_hindsight(list(stream), domain)
    xs_all = trace.stack("xs")
    xs = trace.stack("x")
    learner_losses = [f.value(x) for f, x in zip(stream, xs)]
    total = math.fsum(learner_losses) - best
    n = xs_all.shape[1]
    meta, base = np.empty(n), np.empty(n)
    for i in range(n):
        expert = [f.value(xi) for f, xi in zip(stream, xs_all[:, i])]
        meta[i] = math.fsum(learner_losses) - math.fsum(expert)
        base[i] = math.fsum(expert) - best
    residual = float(np.max(np.abs(meta + base - total)))
    return total, meta, base, residual


def self_confident_gap(a, delta):
    """``2(sqrt(delta + sum a) - sqrt(delta)) - sum_t a_t / sqrt(delta + sum_{s<=t} a_s)``.

    Terms with a zero denominator are zero (their numerator is zero too).
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or delta < 0:
        raise InputError("the sequence and delta must be nonnegative")
    denom = np.sqrt(delta + np.cumsum(a))
    terms = np.divide(a, denom, out=np.zeros_like(a), where=denom > 0)
    return 2.0 * (math.sqrt(delta + a.sum()) - math.sqrt(delta)) - float(terms.sum())


def integral_bound_gap(a0, a, B, kind):
    """Slack of the sum-versus-integral bound for ``f(x) = 1/x`` or ``1/sqrt(x)``.

    ``B f(a0) + int_{a0}^{a0 + sum a} f - sum_t a_t f(a0 + sum_{s<t} a_s)``.
    """
    a = np.asarray(a, dtype=float)
    if not a0 > 0 or np.any(a < 0) or np.any(a > B):
        raise InputError("need a0 > 0 and 0 <= a_t <= B")
    prefix = a0 + np.concatenate([[0.0], np.cumsum(a)[:-1]])
    total = a0 + a.sum()
    if kind == "inv":
        f, integral = 1.0 / prefix, math.log(total / a0)
        fa0 = 1.0 / a0
    elif kind == "inv_sqrt":
        f, integral = 1.0 / np.sqrt(prefix), 2.0 * (math.sqrt(total) - math.sqrt(a0))
        fa0 = 1.0 / math.sqrt(a0)
    else:
        raise InputError(f"unknown kind {kind!r}")
    return B * fa0 + integral - float(a @ f)


def mid_value_gap(f, x, y, mix):
    """``max(|<grad f(x), x-y>|, |<grad f(y), x-y>|) - |<grad f(z), x-y>|`` at ``z = mix x + (1-mix) y``."""
    d = x - y
    z = mix * x + (1.0 - mix) * y
    return max(abs(f.gradient(x) @ d), abs(f.gradient(y) @ d)) - abs(f.gradient(z) @ d)

"""Batch experiment runner: JSON configs in, per-seed CSV traces and JSON summaries out.

Seeds run sequentially in one process, so identical configs give
byte-identical files.
"""

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from . import analysis
from .applications.games import average_iterate, game_from_config, solve_saddle
from .applications.sea import SeaEnvironment, sea_run
from .exceptions import ConfigError, InputError
from .functions.streams import StreamConfig, dump_stream, gradient_variation, make_stream
from .geometry import domain_from_config
from .learners.base import OptimisticOMD
from .learners.meta import make_pea_losses, run_pea
from .learners.universal import UniversalConfig, UniversalLearner

SCENARIOS = ("oco", "universal", "pea", "game", "sea")
TOP_KEYS = {"scenario", "domain", "stream", "learner", "horizon", "seeds", "output", "game",
            "sea", "pea", "bounds", "plateau_threshold"}
LEARNER_KEYS = {"mode", "B0", "lam", "lower_bound"}
AXES = ("VT-level", "sigma-level", "horizon")
OUT_ENV = "GVOCO_OUT"


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(cfg)


def validate_config(cfg):
    """Check the top-level shape; module constructors validate the blocks."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if cfg.get("scenario") not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}")
    T = cfg.get("horizon")
    if not isinstance(T, int) or T < 1:
        raise ConfigError("horizon must be a positive integer")
    seeds = cfg.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a nonempty list of integers")
    learner = cfg.get("learner", {})
    if set(learner) - LEARNER_KEYS:
        raise ConfigError(f"unknown learner keys {sorted(set(learner) - LEARNER_KEYS)}")
    if cfg["scenario"] in ("oco", "universal", "sea") and "domain" not in cfg:
        raise ConfigError(f"scenario {cfg['scenario']} needs a domain block")
    if cfg["scenario"] in ("oco", "universal") and "stream" not in cfg:
        raise ConfigError(f"scenario {cfg['scenario']} needs a stream block")
    return cfg


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _stream_for(cfg, seed, domain):
    block = dict(cfg["stream"])
    block["seed"] = seed
    block["horizon"] = cfg["horizon"]
    block.setdefault("dim", domain.dim)
    try:
        return make_stream(StreamConfig.from_dict(block), domain)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _running_max(values):
    return np.maximum.accumulate(np.asarray(values, dtype=float))


def _decision_columns(trace):
    """Copy each decision into ``x_1 .. x_d`` columns; returns their names."""
    d = len(trace[0]["x"])
    for row in trace.rows:
        for i, xi in enumerate(row["x"]):
            row[f"x_{i + 1}"] = float(xi)
    return [f"x_{i + 1}" for i in range(d)]


def _flag_counts(trace):
    for row in trace.rows:
        row["violations"] = sum(1 for ok in row.get("flags", {}).values() if not ok)


def _run_oco(cfg, seed, out, stem):
    domain = domain_from_config(cfg["domain"])
    stream = _stream_for(cfg, seed, domain)
    lc = cfg.get("learner", {})
    learner = OptimisticOMD(domain, lc.get("mode", "convex"), lam=lc.get("lam"),
                            B0=lc.get("B0", 1.0))
    try:
        learner.reset()
    except InputError as exc:
        raise ConfigError(f"invalid learner block: {exc}") from exc
    learner.fit(stream)
    trace = learner.trace_
    analysis.annotate(trace, stream, domain)
    _flag_counts(trace)
    dump_stream(stream, out / f"{stem}_stream.jsonl")
    lhat, ghat = analysis.trajectory_constants(trace, stream)
    vt = gradient_variation(stream, domain, "exact" if stream.vt_exact else "sampled")
    summary = {"final_regret": trace[-1]["cum_regret"], "V_T": vt.total,
               "V_T_exact": vt.exact, "Lhat_max": lhat, "Ghat_max": ghat}
    T = len(stream)
    if T >= 2:
        summary["half_horizon_regret"] = trace[T // 2 - 1]["cum_regret"]
    if "plateau_threshold" in cfg:
        growth = summary["final_regret"] - summary.get("half_horizon_regret", 0.0)
        summary["plateau_ok"] = growth <= cfg["plateau_threshold"]
    reports = {}
    for kind in cfg.get("bounds", []):
        extra = {"lam": lc["lam"]} if kind == "thm2" else {}
        reports[kind] = analysis.verify_bound(trace, kind, stream, domain, **extra).to_dict()
    if reports:
        summary["bounds"] = reports
    return trace, _decision_columns(trace), summary


def _run_universal(cfg, seed, out, stem):
    domain = domain_from_config(cfg["domain"])
    stream = _stream_for(cfg, seed, domain)
    lc = cfg.get("learner", {})
    lower = lc.get("lower_bound", stream.lower_bound)
    if not math.isfinite(lower):
        raise ConfigError("the universal learner needs a finite lower_bound")
    ucfg = UniversalConfig(cfg["horizon"], lc.get("B0", 1.0), lower)
    learner = UniversalLearner(domain, ucfg.horizon, ucfg.B0, ucfg.lower_bound).fit(stream)
    trace = learner.trace_
    analysis.annotate(trace, stream, domain)
    ghat = _running_max(trace.column("grad_norm"))
    for row, g in zip(trace.rows, ghat):
        row["Ghat_running"] = float(g)
    _flag_counts(trace)
    dump_stream(stream, out / f"{stem}_stream.jsonl")
    n = ucfg.n_experts
    extra = [f"p_{i + 1}" for i in range(n)] + ["alpha_star", "bisect_iters",
                                                 "fixpoint_residual"] + _decision_columns(trace)
    vt = gradient_variation(stream, domain, "exact" if stream.vt_exact else "sampled")
    total, meta_reg, base_reg, residual = analysis.decomposition_identity(learner, stream, domain)
    summary = {"final_regret": trace[-1]["cum_regret"], "V_T": vt.total, "V_T_exact": vt.exact,
               "Lhat_max": float(np.nanmax(trace.column("Lhat"))) if len(trace) > 1 else None,
               "Ghat_max": float(ghat[-1]), "B_T": learner.meta_.state_.B, "n_experts": n,
               "max_bisect_iters": int(trace.column("bisect_iters").max()),
               "decomposition_residual": residual}
    return trace, extra, summary


def _run_pea(cfg, seed, out, stem):
    block = cfg.get("pea", {})
    unknown = set(block) - {"n_experts", "jump", "jump_at"}
    if unknown:
        raise ConfigError(f"unknown pea keys {sorted(unknown)}")
    n = int(block.get("n_experts", 16))
    losses = make_pea_losses(cfg["horizon"], n, seed, block.get("jump_at"),
                             block.get("jump", 100.0))
    meta = run_pea(losses, B0=cfg.get("learner", {}).get("B0", 1.0))
    trace = meta.trace_
    best = int(np.argmin(losses.sum(axis=0)))
    cum = np.cumsum(trace.column("loss") - losses[:, best])
    for row, c in zip(trace.rows, cum):
        row["cum_regret"] = float(c)
        row["eta"] = float(np.min(row["eta_vec"]))
        for i, pi in enumerate(row["p"]):
            row[f"p_{i + 1}"] = float(pi)
    _flag_counts(trace)
    report = analysis.verify_bound(trace, "thm6", losses=losses)
    summary = {"final_regret": report.lhs, "best_expert": best + 1, "B_T": meta.state_.B,
               "thm6": report.to_dict(), "V_T": None, "Lhat_max": None, "Ghat_max": None}
    extra = [f"p_{i + 1}" for i in range(n)] + ["alpha_star", "bisect_iters", "prod"]
    return trace, extra, summary


def _run_game(cfg, seed, out, stem):
    block = dict(cfg.get("game", {}))
    block.setdefault("seed", seed)
    try:
        problem = game_from_config(block)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid game block: {exc}") from exc
    learner = solve_saddle(problem, cfg["horizon"])
    trace = learner.trace_
    zs = learner.decisions_
    if problem.exact_gap:
        running = np.cumsum(zs, axis=0) / np.arange(1, len(zs) + 1)[:, None]
        for row, z in zip(trace.rows, running):
            row["gap"] = problem.duality_gap(z)
    gap = problem.duality_gap(average_iterate(zs))
    trace[-1]["gap"] = gap
    _flag_counts(trace)
    lhat = trace.column("Lhat")
    summary = {"gap": gap, "T_times_gap": len(zs) * gap, "final_regret": None, "V_T": 0.0,
               "Lhat_max": float(np.nanmax(lhat)), "Ghat_max": trace[-1]["Ghat_running"]}
    return trace, ["gap"], summary


def _run_sea(cfg, seed, out, stem):
    block = dict(cfg.get("sea", {}))
    unknown = set(block) - {"noise_variance", "shift", "curvature", "repetitions"}
    if unknown:
        raise ConfigError(f"unknown sea keys {sorted(unknown)}")
    domain = domain_from_config(cfg["domain"])
    T = cfg["horizon"]
    env = SeaEnvironment(domain.dim, T, sigma=math.sqrt(block.get("noise_variance", 1.0)),
                         shift=block.get("shift", 0.0), curvature=block.get("curvature", 0.0),
                         seed=seed)
    reps = int(block.get("repetitions", 20))
    lower = cfg.get("learner", {}).get("lower_bound")
    holder = {}

    def factory(stream):
        lb = stream.lower_bound if lower is None else lower
        learner = UniversalLearner(domain, T, lower_bound=lb)
        holder.setdefault("first", learner)
        return learner

    result = sea_run(env, factory, reps, domain)
    first = holder["first"]
    trace = first.trace_
    stream = env.sample(0, domain)
    analysis.annotate(trace, stream, domain)
    _flag_counts(trace)
    for row in trace.rows:
        row["Ghat_running"] = None
    summary = {"mean_regret": result.mean_regret, "stderr": result.stderr,
               "final_regret": result.mean_regret, "sigma2_estimate": result.sigma2,
               "sigma_tilde2_estimate": result.sigma_tilde2, "shift2_estimate": result.shift2,
               "sigma2_analytic": env.analytic_sigma2, "shift2_analytic": env.analytic_shift2,
               "repetitions": reps, "V_T": None, "Lhat_max": None, "Ghat_max": None}
    return trace, [], summary


RUNNERS = {"oco": _run_oco, "universal": _run_universal, "pea": _run_pea, "game": _run_game,
           "sea": _run_sea}


def output_dir(cfg, out=None):
    root = out or cfg.get("output") or os.environ.get(OUT_ENV) or "gvoco_out"
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def run(cfg, out=None, seeds=None):
    """Run every seed of ``cfg``; returns the list of per-seed summaries.

    Each seed writes ``<scenario>_seed<k>.csv`` and ``<scenario>_seed<k>.json``;
    the oco and universal scenarios also dump their stream as JSON lines.
    """
    cfg = validate_config(cfg)
    out = output_dir(cfg, out)
    seeds = cfg.get("seeds", [0]) if seeds is None else list(seeds)
    summaries = []
    for seed in seeds:
        stem = f"{cfg['scenario']}_seed{seed}"
        trace, extra, summary = RUNNERS[cfg["scenario"]](cfg, seed, out, stem)
        columns = trace.to_csv(out / f"{stem}.csv", list(extra) + ["violations"])
        report = analysis.audit(trace)
        summary = {k: _clean(v) for k, v in summary.items()}
        summary.update({"config": cfg, "seed": seed, "scenario": cfg["scenario"],
                        "violation_count": report["violations"],
                        "first_violation": report["first"], "columns": columns})
        _write_json(out / f"{stem}.json", summary)
        summaries.append(summary)
    return summaries


def apply_axis(cfg, axis, value):
    """Copy of ``cfg`` with one sweep axis set to ``value``."""
    cfg = json.loads(json.dumps(cfg))
    if axis == "horizon":
        cfg["horizon"] = int(value)
    elif axis == "VT-level":
        stream = cfg.get("stream")
        if stream is None:
            raise ConfigError("VT-level sweeps need a stream block")
        T = cfg["horizon"]
        schedule = stream.get("schedule", "stationary")
        if schedule == "adversarial_flip" and stream.get("period", 1) == 1:
            stream["drift"] = math.sqrt(value / (4.0 * (T - 1)))
        elif schedule == "linear_drift":
            stream["drift"] = math.sqrt(value / (T - 1))
        else:
            raise ConfigError("VT-level sweeps need linear_drift or period-1 adversarial_flip")
    elif axis == "sigma-level":
        if cfg["scenario"] != "sea":
            raise ConfigError("sigma-level sweeps apply to the sea scenario")
        cfg.setdefault("sea", {})["noise_variance"] = float(value)
    else:
        raise ConfigError(f"axis must be one of {AXES}")
    return cfg


def sweep(cfg, axis, values, out=None, seeds=None):
    """Run ``cfg`` at every axis value; write per-run files and an aggregate CSV.

    The aggregated metric is ``final_regret``, or the averaged-iterate
    ``gap`` for the game scenario. Returns ``(value, mean, stderr, n)`` rows.
    """
    if not values:
        raise ConfigError("sweep needs at least one value")
    cfg = validate_config(cfg)
    out = output_dir(cfg, out)
    metric = "gap" if cfg["scenario"] == "game" else "final_regret"
    detail = []
    for value in values:
        sub = apply_axis(cfg, axis, value)
        for s in run(sub, out / f"{axis}_{value}", seeds):
            vt = s.get("V_T")
            detail.append((value, s["seed"], s.get(metric), vt,
                           math.sqrt(vt) if vt is not None else None))
    with open(out / "sweep_runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["value", "seed", metric, "V_T", "sqrt_V_T"])
        for row in detail:
            writer.writerow(["" if v is None else repr(v) for v in row])
    rows = []
    with open(out / "sweep_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["value", "metric", "mean", "stderr", "n"])
        for value in values:
            vals = np.array([d[2] for d in detail if d[0] == value], dtype=float)
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan
            rows.append((value, mean, se, len(vals)))
            writer.writerow([repr(value), metric, repr(mean), "" if math.isnan(se) else repr(se),
                             len(vals)])
    return rows


def verify(cfg, kind, out=None, seeds=None):
    """Run ``cfg`` and check one bound per seed; returns the reports."""
    cfg = dict(validate_config(cfg))
    if cfg["scenario"] != "oco" and kind not in ("thm6", "cor2"):
        raise ConfigError(f"{kind} applies to the oco scenario")
    cfg["bounds"] = [kind] if cfg["scenario"] == "oco" else []
    reports = []
    for s in run(cfg, out, seeds):
        if cfg["scenario"] == "oco":
            reports.append(s["bounds"][kind])
        elif cfg["scenario"] == "pea":
            reports.append(s["thm6"])
        elif cfg["scenario"] == "game":
            reports.append({"kind": "cor2", "holds": True, "lhs": s["T_times_gap"],
                            "ratio": s["T_times_gap"]})
        else:
            raise ConfigError(f"{kind} is not available for scenario {cfg['scenario']}")
    return reports


def audit_csv(path):
    """Invariant audit of a written trace CSV via its ``violations`` column."""
    with open(path) as fh:
        reader = csv.DictReader(fh)
        if "violations" not in (reader.fieldnames or []):
            raise ConfigError(f"{path} has no violations column")
        total, first = 0, None
        for row in reader:
            count = int(row["violations"] or 0)
            if count and first is None:
                first = int(row["t"])
            total += count
    return {"violations": total, "first": None if first is None else {"round": first}}


__all__ = ["SCENARIOS", "AXES", "load_config", "validate_config", "run", "sweep", "verify",
           "apply_axis", "audit_csv"]

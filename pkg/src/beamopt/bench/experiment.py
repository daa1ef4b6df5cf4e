"""Monte-Carlo experiment runner.

Trial ``t`` at sweep point ``s`` draws its data from
``default_rng([seed, s, t, family])`` where ``family`` is 0 for adaptive and
1 for hybrid methods. Methods themselves are deterministic, so adding or
removing a method never changes what the other methods see.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..adaptive import mismatch_radius, output_sinr
from ..hybrid import optimal_digital, spectral_efficiency
from ..model import (ArrayGeometry, Scenario, generate_snapshots, geometric_channel, sample_covariance,
                     steering_vector, true_covariance)
from .config import ConfigError, ExperimentConfig
from .methods import REGISTRY, family_of

FAMILIES = ("adaptive", "hybrid")
METRICS = {"adaptive": "sinr_db", "hybrid": "se_bits"}
SWEEPS = {
    "adaptive": ("snr_db", "inr_db", "snapshots", "mismatch_deg"),
    "hybrid": ("snr_db", "n_rf", "n_paths"),
}


def thread_count() -> int:
    """Worker threads; ``BEAMOPT_THREADS`` overrides the default ``min(4, cpus)``."""
    env = os.environ.get("BEAMOPT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def trial_rng(seed, sweep_idx, trial_idx, family):
    return np.random.default_rng([seed, sweep_idx, trial_idx, FAMILIES.index(family)])


@dataclass
class ResultTable:
    """Aggregated results; ``raw[(sweep_idx, method, metric)]`` keeps the per-trial values."""

    sweep_variable: str
    sweep_values: tuple
    methods: list
    metrics: list
    rows: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def lookup(self, sweep_value, method, metric):
        for r in self.rows:
            if r["sweep_value"] == sweep_value and r["method"] == method and r["metric"] == metric:
                return r
        raise KeyError((sweep_value, method, metric))

    def columns(self):
        cols = [self.sweep_variable, "method", "trials"]
        for m in self.metrics:
            cols += [m, f"{m}_std_error"]
        return cols

    def wide_rows(self):
        """One row per (sweep value, method) with every metric and its standard error."""
        out = []
        for s in self.sweep_values:
            for name in self.methods:
                row = {self.sweep_variable: s, "method": name}
                for m in self.metrics:
                    try:
                        r = self.lookup(s, name, m)
                    except KeyError:
                        continue
                    row["trials"] = r["trials"]
                    row[m] = r["mean"]
                    row[f"{m}_std_error"] = r["std_error"]
                out.append(row)
        return out

    def raw_records(self):
        out = []
        for (si, method, metric), vals in sorted(self.raw.items()):
            out.append({"sweep_value": self.sweep_values[si], "method": method, "metric": metric,
                        "values": [float(v) for v in vals]})
        return out

    def to_dict(self):
        return {"sweep_variable": self.sweep_variable, "columns": self.columns(), "rows": self.wide_rows(),
                "raw": self.raw_records()}


def aggregate(values):
    v = np.asarray(values, dtype=float)
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
    return mean, se


def _adaptive_context(cfg: ExperimentConfig, variable, value, rng):
    g = cfg.geometry
    sc = dict(cfg.raw["scenario"])
    settings = dict(cfg.raw["adaptive"])
    noise = sc.get("noise_power", 1.0)
    if variable == "snr_db":
        sc["soi_power"] = noise * 10 ** (value / 10)
    elif variable == "inr_db":
        dirs = [th for th, _ in Scenario.from_dict(sc).interferers]
        sc["interferers"] = [{"direction_deg": th, "power": noise * 10 ** (value / 10)} for th in dirs]
    elif variable == "snapshots":
        sc["snapshots"] = int(value)
    elif variable == "mismatch_deg":
        settings["mismatch_deg"] = value
    presumed = float(sc.get("soi_direction_deg", 0.0))
    mismatch = float(settings["mismatch_deg"])
    sc["soi_direction_deg"] = presumed + mismatch
    true_sc = Scenario.from_dict(sc)
    Y = generate_snapshots(g, true_sc, rng)
    eps = settings["epsilon"]
    if eps is None:
        eps = mismatch_radius(g, presumed, mismatch if mismatch != 0 else 1.0)
    return {"geometry": g, "scenario": true_sc, "Y": Y, "R_hat": sample_covariance(Y),
            "R_true": true_covariance(g, true_sc), "a": steering_vector(g, presumed),
            "presumed_deg": presumed, "epsilon": eps, "settings": settings}


def _hybrid_context(cfg: ExperimentConfig, variable, value, rng):
    h = dict(cfg.raw["hybrid"])
    kappa = h["rx_power"]
    if variable == "snr_db":
        kappa = h["rx_power"] * 10 ** (value / 10)
    elif variable in ("n_rf", "n_paths"):
        h[variable] = int(value)
    g = ArrayGeometry(h["n_tx"])
    H = geometric_channel(g, h["n_rx"], h["n_paths"], rng)
    return {"H": H, "F_C": optimal_digital(H, h["n_streams"]), "n_rf": h["n_rf"], "kappa": kappa,
            "noise": h["noise_power"], "n_streams": h["n_streams"], "phase_bits": h["phase_bits"],
            "max_iter": h["max_iter"]}


def _run_trial(cfg, families, si, ti):
    value = cfg.sweep_values[si]
    ctxs = {}
    for fam in families:
        rng = trial_rng(cfg.seed, si, ti, fam)
        build = _adaptive_context if fam == "adaptive" else _hybrid_context
        ctxs[fam] = build(cfg, cfg.sweep_variable if cfg.sweep_variable in SWEEPS[fam] else None, value, rng)
    out = {}
    for name, params in cfg.methods:
        fam, fn = REGISTRY[name]
        ctx = ctxs[fam]
        t0 = time.perf_counter()
        res = fn(ctx, params)
        dt = time.perf_counter() - t0
        if fam == "adaptive":
            out[(name, "sinr_db")] = output_sinr(res, ctx["geometry"], ctx["scenario"])
        else:
            F, cost = res
            out[(name, "se_bits")] = spectral_efficiency(ctx["H"], F, ctx["kappa"], ctx["noise"], ctx["n_streams"])
            out[(name, "cost")] = float(cost)
        if cfg.report_runtime:
            out[(name, "runtime_s")] = dt
    return si, ti, out


def run_experiment(config) -> ResultTable:
    """Run every method on every (sweep value, trial) pair and aggregate.

    ``config`` is an :class:`ExperimentConfig` or a plain dict. Trials run on
    a thread pool; results are keyed by trial index before reduction so the
    table does not depend on scheduling.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    if not cfg.methods:
        raise ConfigError("no methods given")
    families = [f for f in FAMILIES if any(family_of(n) == f for n, _ in cfg.methods)]
    known = set().union(*(SWEEPS[f] for f in families))
    if cfg.sweep_variable not in known:
        raise ConfigError(f"sweep variable {cfg.sweep_variable!r} not supported; use one of {sorted(known)}")
    tasks = [(si, ti) for si in range(len(cfg.sweep_values)) for ti in range(cfg.trials)]
    workers = thread_count()
    if workers == 1:
        results = [_run_trial(cfg, families, si, ti) for si, ti in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _run_trial(cfg, families, *t), tasks))
    per = {}
    for si, ti, out in results:
        for (name, metric), val in out.items():
            per.setdefault((si, name, metric), {})[ti] = val
    metrics = []
    for fam in families:
        metrics.append(METRICS[fam])
        if fam == "hybrid":
            metrics.append("cost")
    if cfg.report_runtime:
        metrics.append("runtime_s")
    table = ResultTable(cfg.sweep_variable, cfg.sweep_values, [n for n, _ in cfg.methods], metrics)
    for (si, name, metric), by_trial in sorted(per.items()):
        vals = np.array([by_trial[t] for t in sorted(by_trial)])
        table.raw[(si, name, metric)] = vals
        mean, se = aggregate(vals)
        table.rows.append({"sweep_value": cfg.sweep_values[si], "method": name, "metric": metric,
                           "mean": mean, "std_error": se, "trials": int(vals.size)})
    return table

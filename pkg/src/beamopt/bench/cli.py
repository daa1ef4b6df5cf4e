"""Command line entry point: ``beamopt <subcommand> [--config C] [--seed S] [--out P] ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .. import adaptive
from ..hybrid import (beam_squint_correct, beam_squint_deviation, jrc_hybrid, mo_hybrid,
                      optimal_digital, spectral_efficiency, spectral_efficiency_wideband)
from ..irs import IrsScenario, irs_alternating, irs_effective_channel
from ..model import ArrayGeometry, geometric_channel, steering_matrix, steering_vector, subcarrier_frequencies, \
    true_covariance
from ..multicast import MulticastUser, margins, multicast_sdr
from ..solvers import NonFiniteError
from .config import ConfigError, ExperimentConfig
from .dataset import export_dataset
from .experiment import aggregate, run_experiment
from .io import POWER_FLOOR_DB, csv_text, dumps_json, pattern_power, svg_text, weights_to_json

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULT_SWEEPS = {
    "sinr-curve": ({"variable": "snr_db", "values": [-10, -5, 0, 5, 10]},
                   ["smi-capon", "lsmi", "robust-capon", "worst-case"]),
    "hybrid-se": ({"variable": "snr_db", "values": [-10, -5, 0, 5, 10]},
                  ["fully-digital", "mo", "omp"]),
}


def _emit(args, fmt, columns, rows, payload):
    text = dumps_json(payload) if fmt == "json" else csv_text(columns, rows)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args, user_defaults=None):
    user = {}
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
    if user_defaults:
        user = {**user_defaults, **user}
    cfg = ExperimentConfig.from_dict(user, seed=args.seed, trials=args.trials)
    fmt = args.format or cfg.output_format
    if args.out is None and cfg.output_path:
        args.out = cfg.output_path
    return cfg, fmt


def cmd_sweep(args):
    sweep, methods = DEFAULT_SWEEPS[args.command]
    cfg, fmt = _load(args, {"sweep": sweep, "methods": methods})
    table = run_experiment(cfg)
    _emit(args, fmt, table.columns(), table.wide_rows(), table.to_dict())


def cmd_beampattern(args):
    cfg, fmt = _load(args)
    g, sc, bp = cfg.geometry, cfg.scenario, cfg.section("beampattern")
    a = steering_vector(g, sc.soi_direction_deg)
    if bp["method"] == "capon":
        w = adaptive.capon(true_covariance(g, sc), a)
    elif bp["method"] == "lcmv":
        nulls = bp["null_directions_deg"] or [th for th, _ in sc.interferers]
        C = steering_matrix(g, [sc.soi_direction_deg, *nulls])
        u = np.zeros(C.shape[1], dtype=complex)
        u[0] = 1.0
        w = adaptive.lcmv(true_covariance(g, sc), C, u)
    else:
        w = adaptive.BeamformerWeights(a / np.vdot(a, a).real, "delay-and-sum")
    step = bp["grid_step_deg"]
    grid = np.round(np.arange(-90.0 + step, 90.0 - step / 2, step), 10)
    with np.errstate(divide="ignore"):
        db = np.maximum(10 * np.log10(pattern_power(w, g, grid)), POWER_FLOOR_DB)
    rows = [{"theta_deg": float(t), "power_db": float(v)} for t, v in zip(grid, db)]
    _emit(args, fmt, ["theta_deg", "power_db"], rows,
          {"theta_deg": grid, "power_db": db, "weights": weights_to_json(w)})
    if args.svg:
        with open(args.svg, "w", newline="\n") as fh:
            fh.write(svg_text(grid, db))


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def cmd_multicast(args):
    cfg, fmt = _load(args)
    mc = cfg.section("multicast")
    rows, details = [], []
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        if mc.get("users"):
            users = [MulticastUser.from_dict(u) for u in mc["users"]]
        else:
            users = [MulticastUser(_complex_normal(rng, mc["n_tx"])) for _ in range(mc["n_users"])]
        sol = multicast_sdr(users, n_samples=mc["n_samples"], rng=rng, refine=mc["refine"])
        row = {"trial": t, "sdr_value": sol.sdr_value, "rounded_value": sol.rounded_value,
               "refined_value": sol.refined_value if sol.refined_value is not None else "",
               "power": sol.power, "rank_ratio": sol.rank_ratio, "min_margin": float(np.min(margins(sol.w, users)))}
        rows.append(row)
        details.append({**row, "w": sol.w})
    cols = ["trial", "sdr_value", "rounded_value", "refined_value", "power", "rank_ratio", "min_margin"]
    _emit(args, fmt, cols, rows, {"trials": details})


def cmd_irs(args):
    cfg, fmt = _load(args)
    ic = cfg.section("irs")
    rows, details = [], []
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        if all(k in ic for k in ("h_irs", "h_d", "H_bs")):
            sc = IrsScenario.from_dict({**ic})
        else:
            sc = IrsScenario.random(ic["n_tx"], ic["n_irs"], rng, ic["p_max"], ic["direct_gain"])
        rand_phases = rng.uniform(0, 2 * np.pi, sc.n_irs)
        sol = irs_alternating(sc, rng=rng, n_starts=ic["n_starts"], literal_norm=ic["literal_norm"])
        budget = sc.p_max**2 if ic["literal_norm"] else sc.p_max
        c_rand = irs_effective_channel(sc, rand_phases)
        row = {"trial": t, "objective": sol.objective,
               "random_phase_objective": budget * float(np.vdot(c_rand, c_rand).real),
               "no_irs_objective": budget * float(np.vdot(sc.h_d, sc.h_d).real),
               "iterations": len(sol.trace) - 1, "status": sol.status}
        rows.append(row)
        details.append({**row, "phases": sol.phases, "f": sol.f, "trace": sol.trace})
    cols = ["trial", "objective", "random_phase_objective", "no_irs_objective", "iterations", "status"]
    _emit(args, fmt, cols, rows, {"trials": details})


def cmd_jrc(args):
    cfg, fmt = _load(args)
    h, jc = cfg.section("hybrid"), cfg.section("jrc")
    targets = jc["radar_targets_deg"]
    if len(targets) > h["n_streams"]:
        raise ConfigError(f"jrc needs at most n_streams={h['n_streams']} radar targets, got {len(targets)}")
    g = ArrayGeometry(h["n_tx"])
    per = {z: {"se_bits": [], "radar_gain_db": [], "objective": []} for z in jc["tradeoffs"]}
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        H = geometric_channel(g, h["n_rx"], h["n_paths"], rng)
        F_C = optimal_digital(H, h["n_streams"])
        for z in jc["tradeoffs"]:
            hb, _ = jrc_hybrid(F_C, targets, z, h["n_rf"], max_iter=jc["max_iter"], geometry=g)
            per[z]["se_bits"].append(spectral_efficiency(H, hb.precoder(), h["rx_power"], h["noise_power"]))
            gain = pattern_power(hb, g, targets)
            per[z]["radar_gain_db"].append(float(10 * np.log10(np.mean(gain))))
            per[z]["objective"].append(hb.costs[-1])
    rows = []
    for z in jc["tradeoffs"]:
        row = {"zeta": z, "trials": cfg.trials}
        for k, vals in per[z].items():
            row[k], row[f"{k}_std_error"] = aggregate(vals)
        rows.append(row)
    cols = ["zeta", "trials", "se_bits", "se_bits_std_error", "radar_gain_db", "radar_gain_db_std_error",
            "objective", "objective_std_error"]
    _emit(args, fmt, cols, rows, {"rows": rows})


def cmd_squint(args):
    cfg, fmt = _load(args)
    sq = cfg.section("squint")
    geo = cfg.raw["geometry"]
    g = ArrayGeometry(sq["n_tx"], geo["spacing_wavelengths"], geo["carrier_freq_hz"])
    fc, B, M = g.carrier_freq_hz, sq["bandwidth_hz"], sq["n_subcarriers"]
    low, high = beam_squint_deviation(fc, B, sq["theta_deg"])
    freqs = subcarrier_frequencies(fc, B, M)
    kappa = 10 ** (sq["snr_db"] / 10)
    plain, corrected = [], []
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        ch = geometric_channel(g, sq["n_rx"], sq["n_paths"], rng, n_subcarriers=M, bandwidth_hz=B, max_delay_s=0.0)
        center = geometric_channel(g, sq["n_rx"], sq["n_paths"], np.random.default_rng([cfg.seed, t]))
        hb = mo_hybrid(optimal_digital(center, sq["n_streams"]), sq["n_rf"])
        same = [hb.digital[0]] * M
        fixed = beam_squint_correct(hb.analog, same, freqs, fc, g, normalize=True)
        plain.append(spectral_efficiency_wideband(ch.per_subcarrier, [hb.analog @ B_ for B_ in same], kappa))
        corrected.append(spectral_efficiency_wideband(ch.per_subcarrier, [hb.analog @ B_ for B_ in fixed], kappa))
    m0, s0 = aggregate(plain)
    m1, s1 = aggregate(corrected)
    rows = [{"quantity": "deviation_low_edge_deg", "value": low},
            {"quantity": "deviation_high_edge_deg", "value": high},
            {"quantity": "se_uncorrected_bits", "value": m0},
            {"quantity": "se_uncorrected_std_error", "value": s0},
            {"quantity": "se_corrected_bits", "value": m1},
            {"quantity": "se_corrected_std_error", "value": s1},
            {"quantity": "trials", "value": cfg.trials}]
    _emit(args, fmt, ["quantity", "value"], rows, {r["quantity"]: r["value"] for r in rows})


def cmd_dataset(args):
    cfg, _ = _load(args)
    if not args.out:
        raise ConfigError("dataset needs --out")
    count = args.count if args.count is not None else cfg.section("dataset")["count"]
    export_dataset(cfg, count, args.out)


COMMANDS = {
    "beampattern": (cmd_beampattern, "adaptive beampattern as CSV (theta_deg, power_db) or JSON"),
    "sinr-curve": (cmd_sweep, "Monte-Carlo output SINR of adaptive beamformers"),
    "hybrid-se": (cmd_sweep, "Monte-Carlo spectral efficiency of hybrid precoders"),
    "multicast": (cmd_multicast, "multicast SDR, randomisation and refinement"),
    "irs": (cmd_irs, "IRS joint active/passive beamforming"),
    "jrc": (cmd_jrc, "joint radar-communications trade-off over zeta"),
    "squint": (cmd_squint, "beam squint deviation and correction gain"),
    "dataset": (cmd_dataset, "export channel/phase pairs as JSON lines"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="beamopt", description="Beamforming optimisation toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="JSON config file (see schemas/experiment.schema.json)")
        s.add_argument("--seed", type=int, help="master seed, overrides the config")
        s.add_argument("--out", help="output path (stdout if omitted)")
        s.add_argument("--format", choices=["csv", "json"], help="output format")
        s.add_argument("--trials", type=int, help="Monte-Carlo trials, overrides the config")
        if name == "beampattern":
            s.add_argument("--svg", help="also render an SVG plot here")
        if name == "dataset":
            s.add_argument("--count", type=int, help="number of samples")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        if args.trials is not None and args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        fn(args)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, adaptive.SolverError, NonFiniteError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Export (channel, analog phase) pairs for learning-based precoders.

JSON lines: a header record followed by one record per sample. Each record
stores its own integer seed so the label can be regenerated exactly with
:func:`regenerate`.
"""
from __future__ import annotations

import json

import numpy as np

from ..hybrid import mo_hybrid, optimal_digital
from ..model import ArrayGeometry, geometric_channel
from .config import SCHEMA_VERSION, ExperimentConfig


def record_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def regenerate(hybrid: dict, seed: int):
    """Channel and ``mo_hybrid`` design for one stored seed."""
    rng = np.random.default_rng(seed)
    H = geometric_channel(ArrayGeometry(hybrid["n_tx"]), hybrid["n_rx"], hybrid["n_paths"], rng)
    F_C = optimal_digital(H, hybrid["n_streams"])
    return H, mo_hybrid(F_C, hybrid["n_rf"], max_iter=hybrid["max_iter"])


def export_dataset(config, count: int, path) -> int:
    """Write ``count`` samples to ``path``; returns the number of records written.

    ``x`` is ``[Re vec(H), Im vec(H)]`` (row-major) and ``y`` the N x N_RF
    matrix of analog phases in radians.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    h = cfg.raw["hybrid"]
    header = {"type": "header", "schema_version": SCHEMA_VERSION, "count": int(count), "seed": cfg.seed,
              "hybrid": {k: h[k] for k in ("n_tx", "n_rx", "n_rf", "n_streams", "n_paths", "max_iter")},
              "x": "real and imaginary parts of the row-major channel, concatenated",
              "y": "analog precoder phases in radians, n_tx x n_rf"}
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for i in range(count):
            seed = record_seed(cfg.seed, i)
            H, hb = regenerate(h, seed)
            rec = {"type": "sample", "index": i, "seed": seed,
                   "x": np.concatenate([H.data.real.ravel(), H.data.imag.ravel()]).tolist(),
                   "y": np.angle(hb.analog).tolist()}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return count


def read_dataset(path):
    """Return ``(header, records)``."""
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "header":
        raise ValueError(f"{path} has no header record")
    return lines[0], lines[1:]

"""Deterministic serialisation: CSV/JSON writers, weight and design JSON, beampattern plots.

Complex arrays are stored as interleaved ``[re0, im0, re1, im1, ...]`` along
the last axis. Floats are written with ``repr`` so round trips are exact.
"""
from __future__ import annotations

import csv
import io
import json

import numpy as np

from ..adaptive import BeamformerWeights
from ..hybrid import HybridBeamformer
from ..model import ArrayGeometry, steering_matrix

POWER_FLOOR_DB = -300.0


def interleave(z) -> list:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out.tolist()


def deinterleave(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return interleave(obj)
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_json(obj))


def format_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(columns, rows) -> str:
    """Header plus one line per dict row; missing keys become empty cells."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_cell(r.get(c, "")) for c in columns])
    return buf.getvalue()


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(columns, rows))


def weights_to_json(w: BeamformerWeights) -> dict:
    return {"method": w.method, "params": _plain(w.params), "w": interleave(w.w)}


def weights_from_json(d) -> BeamformerWeights:
    return BeamformerWeights(deinterleave(d["w"]), d.get("method", ""), dict(d.get("params", {})))


def design_to_json(hb: HybridBeamformer) -> dict:
    """Analog phases in radians (N x N_RF) and digital matrices interleaved per row."""
    return {"method": hb.method, "n_tx": int(hb.analog.shape[0]), "n_rf": int(hb.analog.shape[1]),
            "analog_phases": np.angle(hb.analog).tolist(),
            "digital": [interleave(B) for B in hb.digital]}


def design_from_json(d) -> HybridBeamformer:
    ph = np.asarray(d["analog_phases"], dtype=float)
    analog = np.exp(1j * ph) / np.sqrt(ph.shape[0])
    return HybridBeamformer(analog, [deinterleave(B) for B in d["digital"]], d.get("method", ""))


def pattern_power(weights_or_design, geometry: ArrayGeometry, grid) -> np.ndarray:
    """Radiated power towards every grid angle: ``||F^H a(theta)||^2``."""
    if isinstance(weights_or_design, BeamformerWeights):
        F = weights_or_design.w[:, None]
    elif isinstance(weights_or_design, HybridBeamformer):
        F = weights_or_design.precoder()
    else:
        F = np.asarray(weights_or_design)
        F = F[:, None] if F.ndim == 1 else F
    A = steering_matrix(geometry, np.asarray(grid, dtype=float))
    return np.sum(np.abs(A.conj().T @ F) ** 2, axis=1)


def emit_beampattern(weights_or_design, geometry: ArrayGeometry, grid, out, svg=None) -> np.ndarray:
    """Write ``theta_deg,power_db`` rows to ``out`` and optionally an SVG of them.

    Powers are floored at -300 dB so exact nulls stay finite.
    """
    p = pattern_power(weights_or_design, geometry, grid)
    with np.errstate(divide="ignore"):
        db = np.maximum(10 * np.log10(p), POWER_FLOOR_DB)
    rows = [{"theta_deg": float(t), "power_db": float(v)} for t, v in zip(grid, db)]
    write_csv(out, ["theta_deg", "power_db"], rows)
    if svg is not None:
        render_svg(out, svg)
    return db


def render_svg(csv_path, svg_path) -> None:
    """Render a ``theta_deg,power_db`` CSV to an SVG line plot."""
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    th = [float(r["theta_deg"]) for r in rows]
    db = [float(r["power_db"]) for r in rows]
    with open(svg_path, "w", newline="\n") as fh:
        fh.write(svg_text(th, db))


def svg_text(theta_deg, power_db, width=640, height=360, floor_db=-60.0) -> str:
    """Line plot of a beampattern, clipped at ``floor_db`` below the peak."""
    th = np.asarray(theta_deg, dtype=float)
    db = np.asarray(power_db, dtype=float)
    top = float(np.max(db)) if db.size else 0.0
    lo = top + floor_db
    pad = 40
    xs = pad + (th + 90.0) / 180.0 * (width - 2 * pad)
    ys = pad + (top - np.clip(db, lo, top)) / (top - lo) * (height - 2 * pad)
    pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#888"/>',
    ]
    for tick in (-90, -60, -30, 0, 30, 60, 90):
        x = pad + (tick + 90) / 180 * (width - 2 * pad)
        lines.append(f'<text x="{x:.3f}" y="{height - pad / 3:.3f}" font-size="11" '
                     f'text-anchor="middle">{tick}</text>')
    lines.append(f'<text x="{pad / 4:.3f}" y="{pad - 8:.3f}" font-size="11">{top:.1f} dB</text>')
    lines.append(f'<text x="{pad / 4:.3f}" y="{height - pad + 12:.3f}" font-size="11">{lo:.1f} dB</text>')
    lines.append(f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{pts}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"

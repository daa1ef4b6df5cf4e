"""Registry of methods usable in Monte-Carlo experiments.

Every method belongs to a family that fixes how a trial is drawn and which
metric is reported: ``adaptive`` methods return receive weights scored by
output SINR, ``hybrid`` methods return an effective precoder scored by
spectral efficiency.
"""
from __future__ import annotations

import numpy as np

from .. import adaptive
from ..hybrid import default_dictionary, mo_hybrid, omp_hybrid, quantized_hybrid
from ..model import ArrayGeometry, sector_matrices

REGISTRY = {}


def register(name, family):
    def deco(fn):
        REGISTRY[name] = (family, fn)
        return fn
    return deco


def family_of(name):
    if name not in REGISTRY:
        raise KeyError(f"unknown method {name!r}; registered: {', '.join(sorted(REGISTRY))}")
    return REGISTRY[name][0]


# --- adaptive receive beamformers; ctx holds R_hat, R_true, Y, a, geometry, settings


@register("capon-true-r", "adaptive")
def _capon_true(ctx, params):
    return adaptive.capon(ctx["R_true"], ctx["a"]).w


@register("smi-capon", "adaptive")
def _smi(ctx, params):
    return adaptive.capon(ctx["R_hat"], ctx["a"]).w


@register("lsmi", "adaptive")
def _lsmi(ctx, params):
    gamma = params.get("gamma", ctx["settings"]["loading"])
    return adaptive.lsmi(ctx["R_hat"], ctx["a"], gamma).w


@register("robust-capon", "adaptive")
def _rcb(ctx, params):
    return adaptive.robust_capon(ctx["R_hat"], ctx["a"], params.get("epsilon", ctx["epsilon"]))[1].w


@register("worst-case", "adaptive")
def _wc(ctx, params):
    return adaptive.worst_case(ctx["R_hat"], ctx["a"], params.get("epsilon", ctx["epsilon"])).w


@register("min-dispersion", "adaptive")
def _md(ctx, params):
    return adaptive.min_dispersion(ctx["Y"], ctx["a"], params.get("p", ctx["settings"]["p_norm"])).w


@register("dcrcb", "adaptive")
def _dcrcb(ctx, params):
    eps = params.get("epsilon_a", ctx["epsilon"] ** 2 * ctx["geometry"].n_elements)
    return adaptive.doubly_constrained(ctx["R_hat"], ctx["a"], eps)[1].w


@register("sector-sdr", "adaptive")
def _sector(ctx, params):
    half = params.get("half_width_deg", ctx["settings"]["sector_half_width_deg"])
    th = ctx["presumed_deg"]
    sec = sector_matrices(ctx["geometry"], max(th - half, -89.0), min(th + half, 89.0))
    return adaptive.steering_estimate_sdr(ctx["R_hat"], sec)[1].w


# --- hybrid precoders; ctx holds H, F_C, geometry, n_rf, n_streams; return (F, cost)


def _mo_cached(ctx):
    if "mo" not in ctx:
        ctx["mo"] = mo_hybrid(ctx["F_C"], ctx["n_rf"], max_iter=ctx["max_iter"])
    return ctx["mo"]


@register("fully-digital", "hybrid")
def _fd(ctx, params):
    return ctx["F_C"], 0.0


@register("mo", "hybrid")
def _mo(ctx, params):
    hb = _mo_cached(ctx)
    return hb.precoder(), hb.costs[-1]


@register("omp", "hybrid")
def _omp(ctx, params):
    g = ArrayGeometry(ctx["F_C"].shape[0])
    D = default_dictionary(g, params.get("dictionary_size"))
    hb = omp_hybrid(ctx["F_C"], D, ctx["n_rf"])
    return hb.precoder(), hb.costs[-1]


@register("mo-quantized", "hybrid")
def _moq(ctx, params):
    bits = int(params.get("bits", ctx["phase_bits"] or 4))
    hb = quantized_hybrid(_mo_cached(ctx), ctx["F_C"], bits)
    P = np.linalg.pinv(hb.analog)
    cost = float(np.linalg.norm(hb.analog @ (P @ ctx["F_C"]) - ctx["F_C"]) ** 2)
    return hb.precoder(), cost

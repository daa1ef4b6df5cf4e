"""Low-resolution ADC model and linear digital combiners."""
from __future__ import annotations

import numpy as np


def uniform_quantizer(x, bits: int, full_scale: float) -> np.ndarray:
    """Mid-rise quantiser with ``2^bits`` levels on ``[-full_scale, full_scale]``.

    Real and imaginary parts are quantised separately; outputs are the level
    centres ``(k + 1/2) * delta`` with ``delta = 2 full_scale / 2^bits``.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if not full_scale > 0:
        raise ValueError("full_scale must be positive")
    levels = 2**bits
    delta = 2.0 * full_scale / levels

    def q(v):
        k = np.clip(np.floor(v / delta), -levels // 2, levels // 2 - 1)
        return (k + 0.5) * delta

    x = np.asarray(x)
    if np.iscomplexobj(x):
        return q(x.real) + 1j * q(x.imag)
    return q(x)


def adc_quantize(r, W_RF, bits: int, full_scale: float | None = None) -> np.ndarray:
    """Combine with ``W_RF`` then quantise each output component.

    The clipping range defaults to three times the RMS of the combined
    complex samples, ``3 sqrt(mean |W^H r|^2)``.
    """
    z = np.asarray(W_RF).conj().T @ np.asarray(r)
    if full_scale is None:
        rms = np.sqrt(np.mean(np.abs(z) ** 2))
        full_scale = 3.0 * rms if rms > 0 else 1.0
    return uniform_quantizer(z, bits, full_scale)


def zf_mrc_combine(H_eff, mode: str = "zf") -> np.ndarray:
    """Digital combiner for an effective channel ``H_eff`` (N_r x K)."""
    H = np.asarray(H_eff, dtype=complex)
    if mode == "mrc":
        return H.conj().T
    if mode != "zf":
        raise ValueError(f"unknown mode {mode!r}")
    if np.linalg.matrix_rank(H) < H.shape[1]:
        raise np.linalg.LinAlgError("zero forcing needs full column rank")
    return np.linalg.pinv(H)

"""Beam squint in wideband arrays and its digital correction."""
from __future__ import annotations

import numpy as np

from ..model import ArrayGeometry, steering_matrix


def beam_squint_deviation(f_c: float, bandwidth: float, theta_deg: float):
    """Pointing error at the band edges ``f_c -/+ B/2`` of a beam designed at ``f_c``.

    A phase-shifter beam steered to ``theta`` at ``f_c`` points, at frequency
    ``f``, to ``arcsin((f_c / f) sin(theta))``. Returns signed deviations
    ``(low_edge, high_edge)`` in degrees.
    """
    if not 0 <= bandwidth < 2 * f_c:
        raise ValueError("need 0 <= bandwidth < 2 f_c")
    s = np.sin(np.deg2rad(theta_deg))
    out = []
    for f in (f_c - bandwidth / 2, f_c + bandwidth / 2):
        if f == f_c:
            out.append(0.0)  # skip the arcsin(sin) round trip
            continue
        out.append(float(np.rad2deg(np.arcsin(np.clip(f_c / f * s, -1.0, 1.0))) - theta_deg))
    return tuple(out)


def pointing_directions(F_RF, geometry: ArrayGeometry, grid_step: float = 0.1) -> np.ndarray:
    """Beampattern peak (degrees) of every analog column."""
    grid = np.arange(-90 + grid_step, 90, grid_step)
    gain = np.abs(steering_matrix(geometry, grid).conj().T @ np.asarray(F_RF)) ** 2
    return grid[np.argmax(gain, axis=0)]


def squinted_analog(F_RF, freq_ratio: float, geometry: ArrayGeometry, directions_deg=None) -> np.ndarray:
    """Surrogate analog matrix for frequency ``f = freq_ratio * f_c``.

    Each column keeps its phases and gains the extra ramp that a true-time-delay
    beam towards its pointing direction would have at ``f``. Identity at
    ``freq_ratio = 1``.
    """
    F_RF = np.asarray(F_RF, dtype=complex)
    if directions_deg is None:
        directions_deg = pointing_directions(F_RF, geometry)
    n = np.arange(geometry.n_elements)[:, None]
    u = np.sin(np.deg2rad(np.asarray(directions_deg)))[None, :]
    return F_RF * np.exp(-2j * np.pi * n * geometry.spacing_wavelengths * (freq_ratio - 1.0) * u)


def beam_squint_correct(F_RF, F_BB_list, subcarrier_freqs, f_c: float, geometry: ArrayGeometry,
                        normalize: bool = False) -> list:
    """Per-subcarrier digital precoders ``F_RF^+ Fbar_RF[m] F_BB[m]``.

    The projection onto the span of ``F_RF`` loses power; ``normalize=True``
    rescales the result to the aggregate budget ``sum_m ||F_RF F_BB[m]||_F^2``
    of the input so the comparison with the uncorrected design is fair.
    """
    F_RF = np.asarray(F_RF, dtype=complex)
    dirs = pointing_directions(F_RF, geometry)
    P = np.linalg.pinv(F_RF)
    out = []
    for F_BB, f in zip(F_BB_list, subcarrier_freqs):
        out.append(P @ squinted_analog(F_RF, f / f_c, geometry, dirs) @ F_BB)
    if normalize:
        before = sum(np.linalg.norm(F_RF @ B) ** 2 for B in F_BB_list)
        after = sum(np.linalg.norm(F_RF @ B) ** 2 for B in out)
        if after > 0:
            out = [np.sqrt(before / after) * B for B in out]
    return out

"""Array geometry, steering vectors and synthetic data.

Everything here works on a uniform linear array (ULA). Angles are given in
degrees at the API boundary and converted to radians internally.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299792458.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array.

    Parameters
    ----------
    n_elements : int
        Number of antennas N.
    spacing_wavelengths : float
        Element spacing d expressed in carrier wavelengths (d / lambda).
    carrier_freq_hz : float
        Carrier frequency f_c.
    """

    n_elements: int
    spacing_wavelengths: float = 0.5
    carrier_freq_hz: float = 28e9

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError(f"n_elements must be a positive integer, got {self.n_elements}")
        if not self.spacing_wavelengths > 0:
            raise ValueError("spacing_wavelengths must be positive")
        if not self.carrier_freq_hz > 0:
            raise ValueError("carrier_freq_hz must be positive")
        object.__setattr__(self, "n_elements", int(self.n_elements))

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz

    @property
    def spacing_m(self) -> float:
        return self.spacing_wavelengths * self.wavelength_m

    @property
    def aperture_m(self) -> float:
        return (self.n_elements - 1) * self.spacing_m

    @classmethod
    def from_dict(cls, d: dict) -> "ArrayGeometry":
        return cls(**{k: d[k] for k in ("n_elements", "spacing_wavelengths", "carrier_freq_hz") if k in d})

    def to_dict(self) -> dict:
        return {
            "n_elements": self.n_elements,
            "spacing_wavelengths": self.spacing_wavelengths,
            "carrier_freq_hz": self.carrier_freq_hz,
        }


@dataclass(frozen=True)
class Scenario:
    """Narrowband receive scenario: one signal of interest plus interferers.

    ``interferers`` is a sequence of ``(direction_deg, power)`` pairs.
    """

    soi_direction_deg: float = 0.0
    soi_power: float = 1.0
    interferers: tuple = ()
    noise_power: float = 1.0
    snapshots: int = 100
    seed: int = 0

    def __post_init__(self):
        interferers = tuple((float(th), float(p)) for th, p in self.interferers)
        object.__setattr__(self, "interferers", interferers)
        if self.soi_power < 0 or any(p < 0 for _, p in interferers):
            raise ValueError("source powers must be nonnegative")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if int(self.snapshots) != self.snapshots or self.snapshots < 1:
            raise ValueError("snapshots must be a positive integer")
        for th in (self.soi_direction_deg, *(th for th, _ in interferers)):
            if not -90.0 < th < 90.0:
                raise ValueError(f"direction {th} deg outside (-90, 90)")

    @property
    def directions_deg(self) -> np.ndarray:
        return np.array([self.soi_direction_deg] + [th for th, _ in self.interferers])

    @property
    def powers(self) -> np.ndarray:
        return np.array([self.soi_power] + [p for _, p in self.interferers])

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        interf = []
        for item in d.pop("interferers", []):
            if isinstance(item, dict):
                interf.append((item["direction_deg"], item["power"]))
            else:
                interf.append(tuple(item))
        keys = ("soi_direction_deg", "soi_power", "noise_power", "snapshots", "seed")
        return cls(interferers=tuple(interf), **{k: d[k] for k in keys if k in d})

    def to_dict(self) -> dict:
        return {
            "soi_direction_deg": self.soi_direction_deg,
            "soi_power": self.soi_power,
            "interferers": [{"direction_deg": th, "power": p} for th, p in self.interferers],
            "noise_power": self.noise_power,
            "snapshots": self.snapshots,
            "seed": self.seed,
        }


def load_config(path) -> dict:
    """Read the shared JSON config and build geometry/scenario objects if present."""
    with open(Path(path)) as fh:
        raw = json.load(fh)
    out = dict(raw)
    if "geometry" in raw:
        out["geometry"] = ArrayGeometry.from_dict(raw["geometry"])
    if "scenario" in raw:
        out["scenario"] = Scenario.from_dict(raw["scenario"])
    return out


def _steer(n_elements, spacing_wavelengths, theta_rad, freq_ratio=1.0):
    # no range check; callers validate
    n = np.arange(n_elements)
    theta_rad = np.asarray(theta_rad, dtype=float)
    phase = -2j * np.pi * spacing_wavelengths * freq_ratio * np.multiply.outer(np.sin(theta_rad), n)
    return np.exp(phase) / np.sqrt(n_elements)


def steering_vector(geometry: ArrayGeometry, theta_deg, freq_ratio: float = 1.0) -> np.ndarray:
    """Far-field ULA response, unit l2-norm.

    Entry n is ``exp(-j 2 pi n (d/lambda) sin(theta)) / sqrt(N)``. ``theta_deg``
    may be an array, in which case the result has shape ``theta.shape + (N,)``.
    ``freq_ratio`` scales the spatial frequency (f / f_c) for wideband use.
    """
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(np.abs(theta) >= 90.0):
        raise ValueError("steering angle must satisfy |theta| < 90 deg")
    return _steer(geometry.n_elements, geometry.spacing_wavelengths, np.deg2rad(theta), freq_ratio)


def steering_matrix(geometry: ArrayGeometry, thetas_deg, freq_ratio: float = 1.0) -> np.ndarray:
    """Steering vectors as the columns of an N x K matrix."""
    return steering_vector(geometry, np.atleast_1d(thetas_deg), freq_ratio).T


def near_field_steering(geometry: ArrayGeometry, theta_deg: float, range_m: float) -> np.ndarray:
    """Spherical-wavefront ULA response at direction ``theta_deg`` and distance ``range_m``.

    Entry n is ``exp(-j 2 pi r_n / lambda) / sqrt(N)`` with ``r_n`` the exact
    distance from element n to the point. The angle is oriented like
    :func:`steering_vector` (``r_n ~ r + n d sin(theta)``), so the two agree
    up to a common phase far from the array.
    """
    if not range_m > 0:
        raise ValueError("range_m must be positive")
    if abs(theta_deg) >= 90.0:
        raise ValueError("steering angle must satisfy |theta| < 90 deg")
    lam = geometry.wavelength_m
    d = geometry.spacing_m
    n = np.arange(geometry.n_elements)
    th = np.deg2rad(theta_deg)
    dist = np.sqrt(range_m**2 + (n * d) ** 2 + 2.0 * n * d * range_m * np.sin(th))
    return np.exp(-2j * np.pi * dist / lam) / np.sqrt(geometry.n_elements)


def common_phase_error(u, v) -> float:
    """Largest per-entry phase difference between ``u`` and ``v`` after removing
    the best common phase (the one minimising that maximum), in radians."""
    d = np.angle(np.asarray(u) * np.conj(v))
    d = np.unwrap(d - d[0])
    return float((d.max() - d.min()) / 2.0)


def fraunhofer_distance(geometry: ArrayGeometry) -> float:
    """Far-field boundary 2 A^2 f_c / c0 in meters."""
    return 2.0 * geometry.aperture_m**2 * geometry.carrier_freq_hz / SPEED_OF_LIGHT


def complex_normal(rng, shape, power=1.0) -> np.ndarray:
    """Circular complex Gaussian samples with E|x|^2 = power."""
    scale = np.sqrt(np.asarray(power, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_snapshots(geometry: ArrayGeometry, scenario: Scenario, rng=None,
                       soi_steering: np.ndarray | None = None) -> np.ndarray:
    """Draw an N x T snapshot matrix ``Y = A S + E``.

    ``rng`` defaults to a generator seeded with ``scenario.seed``.
    ``soi_steering`` overrides the SoI array response (e.g. a perturbed vector).
    """
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    T = scenario.snapshots
    A = steering_matrix(geometry, scenario.directions_deg)
    if soi_steering is not None:
        A[:, 0] = soi_steering
    powers = scenario.powers
    S = complex_normal(rng, (len(powers), T)) * np.sqrt(powers)[:, None]
    E = complex_normal(rng, (geometry.n_elements, T), scenario.noise_power)
    return A @ S + E


def sample_covariance(Y: np.ndarray) -> np.ndarray:
    """``(1/T) Y Y^H``, symmetrised to remove round-off asymmetry."""
    Y = np.atleast_2d(np.asarray(Y))
    if Y.shape[1] < 1:
        raise ValueError("need at least one snapshot")
    R = Y @ Y.conj().T / Y.shape[1]
    return 0.5 * (R + R.conj().T)


def true_covariance(geometry: ArrayGeometry, scenario: Scenario, include_soi: bool = True) -> np.ndarray:
    """Exact array covariance; ``include_soi=False`` gives R_{i+n}."""
    A = steering_matrix(geometry, scenario.directions_deg)
    p = scenario.powers.copy()
    if not include_soi:
        p[0] = 0.0
    R = (A * p) @ A.conj().T + scenario.noise_power * np.eye(geometry.n_elements)
    return 0.5 * (R + R.conj().T)


def interference_plus_noise_covariance(geometry: ArrayGeometry, scenario: Scenario) -> np.ndarray:
    return true_covariance(geometry, scenario, include_soi=False)


@dataclass(frozen=True)
class ChannelMatrix:
    """Geometric MIMO channel, receive x transmit.

    ``per_subcarrier`` holds one matrix per subcarrier for wideband draws and
    ``subcarrier_freqs`` the matching frequencies.
    """

    data: np.ndarray
    path_params: tuple = ()
    per_subcarrier: tuple | None = None
    subcarrier_freqs: np.ndarray | None = None

    @property
    def n_rx(self) -> int:
        return self.data.shape[0]

    @property
    def n_tx(self) -> int:
        return self.data.shape[1]


def subcarrier_frequencies(carrier_freq_hz: float, bandwidth_hz: float, n_subcarriers: int) -> np.ndarray:
    """Subcarrier centre frequencies spread symmetrically around f_c."""
    m = np.arange(n_subcarriers)
    return carrier_freq_hz + bandwidth_hz * (m - (n_subcarriers - 1) / 2.0) / n_subcarriers


def geometric_channel(geometry_tx: ArrayGeometry, n_rx: int, n_paths: int, rng,
                      n_subcarriers: int | None = None, bandwidth_hz: float = 0.0,
                      max_delay_s: float | None = None, angle_range_deg: float = 60.0,
                      rx_spacing_wavelengths: float = 0.5) -> ChannelMatrix:
    """Multipath channel ``H = sqrt(N N_R / L) sum_p g_p a_rx(aoa_p) a_tx(aod_p)^H``.

    With unit-norm steering vectors and ``g_p ~ CN(0, 1)`` this gives
    ``E ||H||_F^2 = N N_R``. When ``n_subcarriers`` is given, each path is also
    evaluated at every subcarrier frequency (steering spatial frequency scaled
    by ``f_m / f_c``, so beam squint is present) with a baseband delay phase
    ``exp(-j 2 pi (f_m - f_c) tau_p)``. Delays are drawn uniformly in
    ``[0, max_delay_s)``; the default is a quarter of the symbol duration
    ``M / B``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    N = geometry_tx.n_elements
    gains = complex_normal(rng, n_paths)
    aod = rng.uniform(-angle_range_deg, angle_range_deg, n_paths)
    aoa = rng.uniform(-angle_range_deg, angle_range_deg, n_paths)
    scale = np.sqrt(N * n_rx / n_paths)
    rx_geom = ArrayGeometry(n_rx, rx_spacing_wavelengths, geometry_tx.carrier_freq_hz)

    def build(ratio, extra_phase):
        At = steering_matrix(geometry_tx, aod, ratio)
        Ar = steering_matrix(rx_geom, aoa, ratio)
        return scale * (Ar * (gains * extra_phase)) @ At.conj().T

    H = build(1.0, np.ones(n_paths))
    params = tuple((complex(g), float(t), float(r)) for g, t, r in zip(gains, aod, aoa))
    if n_subcarriers is None:
        return ChannelMatrix(H, params)

    fc = geometry_tx.carrier_freq_hz
    freqs = subcarrier_frequencies(fc, bandwidth_hz, n_subcarriers)
    if max_delay_s is None:
        max_delay_s = 0.25 * n_subcarriers / bandwidth_hz if bandwidth_hz > 0 else 0.0
    delays = rng.uniform(0.0, max_delay_s, n_paths) if max_delay_s > 0 else np.zeros(n_paths)
    Hm = tuple(build(f / fc, np.exp(-2j * np.pi * (f - fc) * delays)) for f in freqs)
    return ChannelMatrix(H, params, Hm, freqs)


@dataclass(frozen=True)
class SectorMatrix:
    """Quadrature of ``a a^H`` over an angular sector and its complement."""

    theta_min_deg: float
    theta_max_deg: float
    matrix_in: np.ndarray = field(repr=False)
    matrix_out: np.ndarray = field(repr=False)
    delta0: float = 0.0


def sector_matrices(geometry: ArrayGeometry, theta_min: float, theta_max: float,
                    grid_step: float = 0.5) -> SectorMatrix:
    """Build C (over the sector) and C~ (over the rest of the visible region).

    Midpoint rule on a single uniform grid covering (-90, 90) deg, so that
    ``C + C~`` is exactly the quadrature over the whole visible region. The
    integration measure is radians. ``delta0`` is the maximum of
    ``a^H C~ a`` over a grid of the sector (endpoints included).
    """
    if not theta_min < theta_max:
        raise ValueError("empty sector: need theta_min < theta_max")
    if theta_min < -90.0 or theta_max > 90.0:
        raise ValueError("sector must lie inside [-90, 90] deg")
    n_cells = int(round(180.0 / grid_step))
    step = 180.0 / n_cells
    mids = -90.0 + step * (np.arange(n_cells) + 0.5)
    A = _steer(geometry.n_elements, geometry.spacing_wavelengths, np.deg2rad(mids)).T
    w = np.deg2rad(step)
    inside = (mids >= theta_min) & (mids <= theta_max)
    C = w * (A[:, inside] @ A[:, inside].conj().T)
    Ct = w * (A[:, ~inside] @ A[:, ~inside].conj().T)
    C = 0.5 * (C + C.conj().T)
    Ct = 0.5 * (Ct + Ct.conj().T)
    n_sec = max(int(np.ceil((theta_max - theta_min) / grid_step)), 1) + 1
    sec_grid = np.linspace(theta_min, theta_max, n_sec)
    As = _steer(geometry.n_elements, geometry.spacing_wavelengths, np.deg2rad(sec_grid))
    delta0 = float(np.max(np.einsum("kn,nm,km->k", As.conj(), Ct, As).real))
    return SectorMatrix(float(theta_min), float(theta_max), C, Ct, delta0)

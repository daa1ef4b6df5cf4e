"""Hybrid analog/digital precoder design.

The analog precoder ``F_RF`` (N x N_RF) has entries of modulus ``1/sqrt(N)``;
the digital part is a list of ``N_RF x N_S`` matrices, one per subcarrier.
Designs approximate a fully digital target ``F_C`` in Frobenius norm and are
power-normalised once at the end.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import ArrayGeometry, steering_matrix
from ..solvers import manifold_minimize


@dataclass(frozen=True)
class HybridConfig:
    n_tx: int
    n_rx: int
    n_rf: int
    n_streams: int
    n_subcarriers: int = 1
    rx_power: float = 1.0
    noise_power: float = 1.0
    phase_bits: int | None = None

    def __post_init__(self):
        if not 1 <= self.n_streams <= self.n_rf <= self.n_tx:
            raise ValueError("need 1 <= n_streams <= n_rf <= n_tx")
        if self.n_subcarriers < 1 or self.n_rx < 1:
            raise ValueError("n_subcarriers and n_rx must be >= 1")
        if self.phase_bits is not None and self.phase_bits < 1:
            raise ValueError("phase_bits must be >= 1")
        if not (self.rx_power > 0 and self.noise_power > 0):
            raise ValueError("rx_power and noise_power must be positive")

    @classmethod
    def from_dict(cls, d):
        keys = ("n_tx", "n_rx", "n_rf", "n_streams", "n_subcarriers", "rx_power", "noise_power", "phase_bits")
        return cls(**{k: d[k] for k in keys if k in d})


@dataclass
class HybridBeamformer:
    analog: np.ndarray
    digital: list
    method: str = ""
    costs: list = field(default_factory=list)

    @property
    def n_subcarriers(self) -> int:
        return len(self.digital)

    def precoder(self, m: int = 0) -> np.ndarray:
        return self.analog @ self.digital[m]

    def precoders(self) -> list:
        return [self.analog @ B for B in self.digital]

    def cost(self, targets) -> float:
        return float(sum(np.linalg.norm(self.analog @ B - C) ** 2 for B, C in zip(self.digital, _as_list(targets))))


def _as_list(targets):
    if isinstance(targets, np.ndarray) and targets.ndim == 2:
        return [targets]
    return list(targets)


def optimal_digital(H, n_streams: int) -> np.ndarray:
    """Top ``n_streams`` right singular vectors of ``H`` (N_R x N)."""
    H = getattr(H, "data", H)
    U, s, Vh = np.linalg.svd(H)
    rank = int(np.sum(s > s[0] * max(H.shape) * np.finfo(float).eps)) if s.size and s[0] > 0 else 0
    if n_streams > rank:
        raise np.linalg.LinAlgError(f"channel rank {rank} < n_streams {n_streams}")
    F = Vh[:n_streams].conj().T
    return F


def spectral_efficiency(H, F, kappa: float = 1.0, sigma_n2: float = 1.0, n_streams: int | None = None) -> float:
    """``log2 det(I + kappa / (N_S sigma_n2) H F F^H H^H)`` in bits/s/Hz."""
    H = getattr(H, "data", H)
    F = np.atleast_2d(F)
    if F.shape[0] != H.shape[1] and F.ndim == 2 and F.shape[1] == H.shape[1]:
        F = F.T
    ns = F.shape[1] if n_streams is None else n_streams
    G = H @ F
    K = np.eye(G.shape[1]) + (kappa / (ns * sigma_n2)) * (G.conj().T @ G)
    sign, logdet = np.linalg.slogdet(K)
    return float(logdet / np.log(2.0))


def spectral_efficiency_wideband(H_list, F_list, kappa=1.0, sigma_n2=1.0, n_streams=None) -> float:
    """Average of per-subcarrier spectral efficiencies."""
    return float(np.mean([spectral_efficiency(H, F, kappa, sigma_n2, n_streams) for H, F in zip(H_list, F_list)]))


def normalize_power(analog, digital, n_streams):
    """Scale digital parts so ``sum_m ||F_RF F_BB[m]||_F^2 = M N_S``."""
    total = sum(np.linalg.norm(analog @ B) ** 2 for B in digital)
    if total == 0:
        return [B.copy() for B in digital]
    scale = np.sqrt(len(digital) * n_streams / total)
    return [scale * B for B in digital]


def default_dictionary(geometry: ArrayGeometry, size: int | None = None) -> np.ndarray:
    """Steering vectors on a grid uniform in sin(theta); ``2N`` atoms by default."""
    size = 2 * geometry.n_elements if size is None else size
    u = -1.0 + (2.0 * np.arange(size) + 1.0) / size
    return steering_matrix(geometry, np.rad2deg(np.arcsin(u)))


def omp_hybrid(F_C, dictionary, n_rf: int) -> HybridBeamformer:
    """Spatially sparse precoding by orthogonal matching pursuit.

    ``dictionary`` holds candidate analog columns (N x K, entries of modulus
    ``1/sqrt(N)``).
    """
    F_C = np.asarray(F_C, dtype=complex)
    D = np.asarray(dictionary, dtype=complex)
    if D.ndim != 2 or D.shape[1] == 0:
        raise ValueError("dictionary has no atoms")
    if D.shape[1] < n_rf:
        raise ValueError("dictionary smaller than n_rf")
    chosen = []
    F_res = F_C.copy()
    F_BB = None
    for _ in range(n_rf):
        energy = np.sum(np.abs(D.conj().T @ F_res) ** 2, axis=1)
        energy[chosen] = -np.inf
        chosen.append(int(np.argmax(energy)))
        F_RF = D[:, chosen]
        F_BB = np.linalg.pinv(F_RF) @ F_C
        R = F_C - F_RF @ F_BB
        nr = np.linalg.norm(R)
        F_res = R / nr if nr > 0 else R
    F_RF = D[:, chosen]
    digital = normalize_power(F_RF, [F_BB], F_C.shape[1])
    hb = HybridBeamformer(F_RF, digital, "omp")
    hb.costs = [float(np.linalg.norm(F_RF @ F_BB - F_C) ** 2)]
    hb.selected = chosen
    return hb


def phase_extraction_init(F_C, n_rf: int) -> np.ndarray:
    """Initial analog matrix from the phases of the target's columns.

    Column ``j`` takes the phases of target column ``j mod N_S``; repeated
    columns are shifted by a DFT phase ramp so that the result has full
    column rank.
    """
    F_C = np.asarray(F_C, dtype=complex)
    N, ns = F_C.shape
    n = np.arange(N)
    cols = []
    for j in range(n_rf):
        base = np.exp(1j * np.angle(F_C[:, j % ns]))
        shift = j // ns
        cols.append(base * np.exp(2j * np.pi * n * shift / N))
    return np.array(cols).T / np.sqrt(N)


def wideband_hybrid(F_C_list, n_rf: int, max_iter: int = 100, F_RF0=None, tol: float = 1e-6,
                    inner_iter: int = 20, normalize: bool = True) -> HybridBeamformer:
    """Common analog precoder with per-subcarrier digital parts.

    Alternates least squares ``F_BB[m] = F_RF^+ F_C[m]`` with manifold
    descent on ``sum_m ||F_RF F_BB[m] - F_C[m]||_F^2`` over unit-modulus
    ``F_RF``; stops when the relative decrease of the summed cost falls
    below ``tol``. ``costs`` records the cost after each outer iteration.
    """
    targets = [np.asarray(F, dtype=complex) for F in _as_list(F_C_list)]
    if not targets:
        raise ValueError("need at least one target")
    N, ns = targets[0].shape
    mod = 1.0 / np.sqrt(N)
    if F_RF0 is None:
        F_RF = phase_extraction_init(sum(targets) / len(targets), n_rf)
    else:
        F_RF = mod * np.exp(1j * np.angle(np.asarray(F_RF0, dtype=complex)))

    def least_squares(F_RF):
        P = np.linalg.pinv(F_RF)
        return [P @ C for C in targets]

    def total(F_RF, digital):
        return float(sum(np.linalg.norm(F_RF @ B - C) ** 2 for B, C in zip(digital, targets)))

    digital = least_squares(F_RF)
    cost = total(F_RF, digital)
    costs = [cost]
    for _ in range(max_iter):
        Bs = digital

        def f(X):
            res = [X @ B - C for B, C in zip(Bs, targets)]
            val = sum(np.vdot(r, r).real for r in res)
            grad = 2.0 * sum(r @ B.conj().T for r, B in zip(res, Bs))
            return val, grad

        F_RF = manifold_minimize(f, F_RF, max_iter=inner_iter, tol=1e-10, modulus=mod).x
        digital = least_squares(F_RF)
        new = total(F_RF, digital)
        if new > cost:
            # pinv of a near-singular F_RF can lose accuracy; never accept an increase
            new = cost
        costs.append(new)
        done = cost - new <= tol * max(cost, 1e-300)
        cost = new
        if done:
            break
    if normalize:
        digital = normalize_power(F_RF, digital, ns)
    return HybridBeamformer(F_RF, digital, "mo", costs)


def mo_hybrid(F_C, n_rf: int, max_iter: int = 100, F_RF0=None, tol: float = 1e-6,
              inner_iter: int = 20, normalize: bool = True) -> HybridBeamformer:
    """Manifold-optimisation hybrid design for a single (narrowband) target."""
    return wideband_hybrid([F_C], n_rf, max_iter=max_iter, F_RF0=F_RF0, tol=tol,
                           inner_iter=inner_iter, normalize=normalize)


def quantize_phases(F_RF, bits: int) -> np.ndarray:
    """Snap every entry to the nearest of ``2^bits`` phases, keeping its modulus."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    F_RF = np.asarray(F_RF, dtype=complex)
    levels = 2**bits
    step = 2 * np.pi / levels
    k = np.mod(np.round(np.angle(F_RF) / step), levels)
    mod = 1.0 / np.sqrt(F_RF.shape[0])
    return mod * np.exp(1j * step * k)


def quantized_hybrid(design: HybridBeamformer, F_C_list, bits: int) -> HybridBeamformer:
    """Quantise a design's analog phases and refit the digital parts."""
    targets = _as_list(F_C_list)
    F_RF = quantize_phases(design.analog, bits)
    P = np.linalg.pinv(F_RF)
    digital = normalize_power(F_RF, [P @ C for C in targets], targets[0].shape[1])
    return HybridBeamformer(F_RF, digital, f"{design.method}-q{bits}")

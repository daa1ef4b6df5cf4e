"""Joint radar-communications hybrid precoding.

The target ``F_CR = zeta F_C + (1 - zeta) F_R P`` blends the communications
precoder with a radar beamformer ``F_R`` (steering vectors towards the radar
targets) coupled through a K x N_S matrix ``P`` with orthonormal rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import ArrayGeometry, steering_matrix
from ..solvers import orthogonal_procrustes
from .design import HybridBeamformer, mo_hybrid, normalize_power


@dataclass(frozen=True)
class JRCConfig:
    radar_targets_deg: tuple
    tradeoff: float
    coupling: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.tradeoff <= 1.0:
            raise ValueError("tradeoff must lie in [0, 1]")
        object.__setattr__(self, "radar_targets_deg", tuple(float(t) for t in self.radar_targets_deg))
        if self.coupling is not None:
            P = np.asarray(self.coupling, dtype=complex)
            if P.shape[0] != len(self.radar_targets_deg):
                raise ValueError("coupling must have one row per target")
            if not np.allclose(P @ P.conj().T, np.eye(P.shape[0]), atol=1e-10):
                raise ValueError("coupling rows must be orthonormal")
            object.__setattr__(self, "coupling", P)

    def radar_beamformer(self, geometry: ArrayGeometry) -> np.ndarray:
        return steering_matrix(geometry, self.radar_targets_deg)


def jrc_objective(hb: HybridBeamformer, F_C, F_R, P, zeta) -> float:
    return float(np.linalg.norm(hb.precoder() - (zeta * F_C + (1 - zeta) * F_R @ P)))


def jrc_hybrid(F_C, radar_targets, zeta: float, n_rf: int, max_iter: int = 30,
               geometry: ArrayGeometry | None = None, tol: float = 1e-6, mo_iter: int = 100):
    """Alternating design of ``(F_RF, F_BB)`` and the coupling ``P``.

    P-step: orthogonal Procrustes fit of ``(1 - zeta) F_R P`` to
    ``F_RF F_BB - zeta F_C``. Beamformer step: :func:`mo_hybrid` against the
    current ``F_CR``, warm-started from the previous analog matrix. Both
    steps minimise ``||F_RF F_BB - F_CR||_F`` so its trace is
    non-increasing; power is normalised only on return.

    Returns ``(HybridBeamformer, P)``; ``hb.costs`` holds the objective trace
    and ``hb.couplings`` every ``P`` visited.
    """
    if not 0.0 <= zeta <= 1.0:
        raise ValueError("zeta must lie in [0, 1]")
    F_C = np.asarray(F_C, dtype=complex)
    N, ns = F_C.shape
    geometry = ArrayGeometry(N) if geometry is None else geometry
    F_R = steering_matrix(geometry, radar_targets)
    K = F_R.shape[1]
    if K > ns:
        raise ValueError(f"need K <= N_S for the coupling, got K={K}, N_S={ns}")

    P = orthogonal_procrustes(F_R, F_C)
    target = zeta * F_C + (1 - zeta) * F_R @ P
    hb = mo_hybrid(target, n_rf, max_iter=mo_iter, normalize=False)
    trace = [float(np.linalg.norm(hb.precoder() - target))]
    couplings = [P]
    if zeta < 1.0:
        for _ in range(max_iter):
            P = orthogonal_procrustes((1 - zeta) * F_R, hb.precoder() - zeta * F_C)
            target = zeta * F_C + (1 - zeta) * F_R @ P
            hb = mo_hybrid(target, n_rf, max_iter=mo_iter, F_RF0=hb.analog, normalize=False)
            couplings.append(P)
            new = float(np.linalg.norm(hb.precoder() - target))
            trace.append(new)
            if trace[-2] - new <= tol * max(trace[-2], 1e-300):
                break
    hb.digital = normalize_power(hb.analog, hb.digital, ns)
    hb.method = "jrc"
    hb.costs = trace
    hb.couplings = couplings
    return hb, P

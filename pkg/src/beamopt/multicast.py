"""Single-group multicast transmit beamforming.

Minimum transmit power subject to per-user SNR targets,

    min ||w||^2   s.t.   |w^H h~_u| >= 1,   u = 1..U,

with ``h~_u = h_u / sqrt(snr_min_u * noise_u)``. The problem is NP-hard in
general; we solve its semidefinite relaxation, round with Gaussian
randomisation and polish by successive convex (phase-fixed) refinement.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .solvers import ConicProblem, conic_solve, principal_eigenvector, solve_hermitian_sdp


@dataclass(frozen=True)
class MulticastUser:
    channel: np.ndarray
    snr_min: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        h = np.asarray(self.channel, dtype=complex).ravel()
        if not np.any(h):
            raise ValueError("user channel must be nonzero")
        if not (self.snr_min > 0 and self.noise_power > 0):
            raise ValueError("snr_min and noise_power must be positive")
        object.__setattr__(self, "channel", h)

    @property
    def normalized_channel(self) -> np.ndarray:
        return self.channel / np.sqrt(self.snr_min * self.noise_power)

    @classmethod
    def from_dict(cls, d):
        ch = d["channel"]
        if isinstance(ch, dict):
            h = np.asarray(ch["re"]) + 1j * np.asarray(ch["im"])
        else:
            ch = np.asarray(ch, dtype=float)
            h = ch[0::2] + 1j * ch[1::2]
        return cls(h, d.get("snr_min", 1.0), d.get("noise_power", 1.0))


@dataclass
class MulticastSolution:
    w: np.ndarray
    lifted: np.ndarray = field(repr=False)
    sdr_value: float
    rounded_value: float
    rank_ratio: float
    refined_value: float | None = None
    history: list = field(default_factory=list)

    @property
    def power(self) -> float:
        return float(np.vdot(self.w, self.w).real)


def _channels(users):
    if len(users) < 1:
        raise ValueError("need at least one user")
    return np.array([u.normalized_channel for u in users]).T  # N x U


def margins(w, users) -> np.ndarray:
    """Per-user ``|w^H h~_u|``."""
    return np.abs(np.asarray(w).conj() @ _channels(users))


def _scale_to_feasible(w, Ht):
    m = np.min(np.abs(w.conj() @ Ht))
    if m <= 0:
        return None
    return w / m


def randomization_round(M, users, n_samples: int = 200, rng=None) -> np.ndarray:
    """Rank-one candidate from the lifted solution ``M``.

    Candidates are the principal eigenvector and ``n_samples`` draws
    ``w ~ CN(0, M)``; each is scaled so the tightest user constraint holds with
    equality and the lowest-power one is returned.
    """
    Ht = _channels(users)
    if rng is None:
        rng = np.random.default_rng(0)
    M = 0.5 * (M + M.conj().T)
    lam, V = np.linalg.eigh(M)
    lam = np.maximum(lam, 0.0)
    _, v, _ = principal_eigenvector(M)
    best = _scale_to_feasible(v, Ht)
    best_p = np.inf if best is None else np.vdot(best, best).real
    if n_samples > 0:
        root = V * np.sqrt(lam)
        N = M.shape[0]
        # one row per draw so a larger n_samples extends the same candidate sequence
        X = rng.standard_normal((n_samples, 2, N))
        W = root @ ((X[:, 0] + 1j * X[:, 1]).T / np.sqrt(2))
        m = np.min(np.abs(W.conj().T @ Ht), axis=1)
        ok = m > 0
        if np.any(ok):
            p = np.sum(np.abs(W[:, ok]) ** 2, axis=0) / m[ok] ** 2
            k = np.argmin(p)
            if p[k] < best_p:
                best = W[:, ok][:, k] / m[ok][k]
                best_p = p[k]
    return best


def _phase_fixed_step(w, Ht, tol):
    # min ||w|| s.t. Re(e^{-j phi_u} h_u^H w) >= 1 with phi_u = arg(h_u^H w)
    N, U = Ht.shape
    phases = np.exp(-1j * np.angle(Ht.conj().T @ w))
    G = phases[:, None] * Ht.conj().T  # rows g_u with g_u w
    n = 1 + 2 * N
    c = np.zeros(n)
    c[0] = 1.0
    lin = np.hstack([np.zeros((U, 1)), G.real, -G.imag])  # Re(g w) = Gr wr - Gi wi
    soc = np.zeros((1 + 2 * N, n))
    soc[0, 0] = -1.0
    soc[1:, 1:] = -np.eye(2 * N)
    A = np.vstack([-lin, soc])
    b = np.concatenate([-np.ones(U), np.zeros(1 + 2 * N)])
    sol = conic_solve(ConicProblem(c, A, b, [("nonneg", U), ("soc", 1 + 2 * N)]), tol=tol)
    return sol.x[1:N + 1] + 1j * sol.x[N + 1:]


def alternating_refine(w0, users, max_iter: int = 50, tol: float = 1e-8, solver_tol: float = 1e-9):
    """Successive phase-fixed convex refinement.

    Freezing the received phases at the current iterate turns every
    constraint into a half-space, so each step is a small SOC program whose
    feasible set contains the current point. The new point is rescaled to
    meet the tightest constraint with equality and only accepted if its
    power is lower. Returns ``(w, powers)``.
    """
    Ht = _channels(users)
    w = _scale_to_feasible(np.asarray(w0, dtype=complex), Ht)
    if w is None:
        raise ValueError("w0 must not be orthogonal to any user channel")
    p = np.vdot(w, w).real
    powers = [float(p)]
    for _ in range(max_iter):
        cand = _scale_to_feasible(_phase_fixed_step(w, Ht, solver_tol), Ht)
        if cand is None:
            break
        pc = np.vdot(cand, cand).real
        if pc >= p:
            break
        decrease = p - pc
        w, p = cand, pc
        powers.append(float(p))
        if decrease < tol * max(p, 1.0):
            break
    return w, powers


def multicast_sdr(users, n_samples: int = 200, rng=None, refine: bool = False,
                  tol: float = 1e-7) -> MulticastSolution:
    """Solve the multicast SDR and extract a feasible beamformer.

    ``refine=True`` additionally runs :func:`alternating_refine` on the
    rounded vector.
    """
    Ht = _channels(users)
    N = Ht.shape[0]
    cons = [(np.outer(h, h.conj()), ">=", 1.0) for h in Ht.T]
    M, sol = solve_hermitian_sdp(np.eye(N), cons, tol=tol)
    _, _, ratio = principal_eigenvector(M)
    w = randomization_round(M, users, n_samples=n_samples, rng=rng)
    rounded = float(np.vdot(w, w).real)
    out = MulticastSolution(w=w, lifted=M, sdr_value=float(np.trace(M).real), rounded_value=rounded,
                            rank_ratio=ratio)
    if refine:
        w2, powers = alternating_refine(w, users)
        out.history = powers
        # the refiner rescales its input, which can cost an ulp; keep the rounded point then
        if powers[-1] < rounded:
            out.w = w2
        out.refined_value = min(powers[-1], rounded)
    return out

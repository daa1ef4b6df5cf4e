"""Narrowband receive beamformers.

All designers take a covariance matrix ``R`` (N x N Hermitian) and return a
:class:`BeamformerWeights`. Steering vectors follow :func:`beamopt.model.steering_vector`
(unit norm) unless a function says otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .model import ArrayGeometry, Scenario, SectorMatrix, interference_plus_noise_covariance, steering_vector
from .solvers import ConicProblem, conic_solve, newton_scalar_root, principal_eigenvector, solve_hermitian_sdp


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


@dataclass
class BeamformerWeights:
    w: np.ndarray
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex).ravel()
        if not np.all(np.isfinite(self.w)):
            raise FloatingPointError(f"{self.method}: non-finite weights")

    def __len__(self):
        return len(self.w)


@dataclass(frozen=True)
class RobustParams:
    """Uncertainty/regularisation settings shared by the robust designers."""

    epsilon: float = 0.0
    gamma: float = 0.0
    p_norm: float = 2.0

    def __post_init__(self):
        if self.epsilon < 0 or self.gamma < 0:
            raise ValueError("epsilon and gamma must be nonnegative")
        if not 1.0 <= self.p_norm <= 4.0:
            raise ValueError("p_norm must lie in [1, 4]")


def _hermitian(R):
    R = np.asarray(R, dtype=complex)
    return 0.5 * (R + R.conj().T)


def _check_invertible(R, what="R"):
    lam = np.linalg.eigvalsh(R)
    if lam[-1] <= 0 or lam[0] <= 1e-12 * lam[-1]:
        raise SingularCovarianceError(
            f"{what} is singular or ill-conditioned (min eig {lam[0]:.3e}, max eig {lam[-1]:.3e}); "
            "use diagonal loading (lsmi) instead")
    return lam


def _solve_psd(R, rhs):
    R = _hermitian(R)
    _check_invertible(R)
    return sla.cho_solve(sla.cho_factor(R, lower=True), rhs)


def _phase_normalize(v):
    k = np.argmax(np.abs(v))
    return v * np.exp(-1j * np.angle(v[k]))


def capon(R, a) -> BeamformerWeights:
    """MVDR weights ``R^{-1} a / (a^H R^{-1} a)``."""
    a = np.asarray(a, dtype=complex)
    Ria = _solve_psd(R, a)
    w = Ria / (a.conj() @ Ria)
    return BeamformerWeights(w, "capon")


def lcmv(R, C, u) -> BeamformerWeights:
    """Linearly constrained minimum variance: ``C^H w = u``."""
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    if C.shape[0] == 1 and C.shape[1] > 1 and np.ndim(u) == 0:
        C = C.T
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    if np.linalg.matrix_rank(C) < C.shape[1] or C.shape[1] > C.shape[0]:
        raise np.linalg.LinAlgError("constraint matrix C must have full column rank")
    RiC = _solve_psd(R, C)
    w = RiC @ np.linalg.solve(C.conj().T @ RiC, u)
    return BeamformerWeights(w, "lcmv", {"n_constraints": C.shape[1]})


def lsmi(R, a, gamma: float) -> BeamformerWeights:
    """Loaded SMI: Capon on ``R + gamma I``, rescaled to ``w^H a = 1``."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    R = _hermitian(R)
    res = capon(R + gamma * np.eye(R.shape[0]), a)
    return BeamformerWeights(res.w, "lsmi", {"gamma": float(gamma)})


def _robust_multiplier(gam, z2, a_norm, eps):
    # find mu >= 0 with sum |z_i|^2 / (1 + mu g_i)^2 = eps^2
    def f(mu):
        return np.sum(z2 / (1.0 + mu * gam) ** 2) - eps**2

    def fp(mu):
        return -2.0 * np.sum(z2 * gam / (1.0 + mu * gam) ** 3)

    lo = max((a_norm / eps - 1.0) / gam[-1], 0.0)
    hi = (a_norm / eps - 1.0) / gam[0]
    if f(lo) <= 0:
        return lo
    if f(hi) >= 0:
        return hi
    return newton_scalar_root(f, (lo, hi), tol=1e-15 * max(eps**2, 1e-300), fprime=fp)


def robust_capon(R, a_presumed, epsilon: float):
    """Spherical-uncertainty robust Capon beamformer.

    Estimates the steering vector by minimising ``a^H R^{-1} a`` subject to
    ``||a - a_presumed|| <= epsilon``; at the optimum
    ``a = a_presumed - (I + mu R)^{-1} a_presumed`` where ``mu`` solves
    ``||(I + mu R)^{-1} a_presumed|| = epsilon``. Returns the estimate and
    Capon weights built from it.
    """
    a0 = np.asarray(a_presumed, dtype=complex)
    a_norm = np.linalg.norm(a0)
    if epsilon < 0 or epsilon >= a_norm:
        raise ValueError("epsilon must satisfy 0 <= epsilon < ||a_presumed|| (sphere may not contain the origin)")
    R = _hermitian(R)
    if epsilon == 0:
        w = capon(R, a0).w
        return a0.copy(), BeamformerWeights(w, "robust_capon", {"epsilon": 0.0, "multiplier": np.inf})
    gam, U = np.linalg.eigh(R)
    if gam[0] <= 1e-12 * gam[-1]:
        raise SingularCovarianceError("R is singular; robust_capon needs an invertible covariance")
    z = U.conj().T @ a0
    mu = _robust_multiplier(gam, np.abs(z) ** 2, a_norm, epsilon)
    a_hat = a0 - U @ (z / (1.0 + mu * gam))
    w = capon(R, a_hat).w
    return a_hat, BeamformerWeights(w, "robust_capon", {"epsilon": float(epsilon), "multiplier": float(mu)})


def worst_case(R, a_presumed, epsilon: float, tol: float = 1e-6, max_iter: int = 50_000) -> BeamformerWeights:
    """Worst-case performance optimisation under ``||Delta|| <= epsilon``.

    Solves ``min w^H R w`` s.t. ``Re(w^H a) >= 1 + epsilon ||w||``,
    ``Im(w^H a) = 0`` as a second-order cone program over ``(t, Re w, Im w)``.
    """
    a = np.asarray(a_presumed, dtype=complex)
    N = len(a)
    if epsilon < 0 or epsilon >= np.linalg.norm(a):
        raise ValueError("epsilon must satisfy 0 <= epsilon < ||a_presumed||")
    R = _hermitian(R)
    _check_invertible(R)
    L = np.linalg.cholesky(R)
    Q = L.conj().T
    Qr = np.block([[Q.real, -Q.imag], [Q.imag, Q.real]])
    n = 1 + 2 * N
    c = np.zeros(n)
    c[0] = 1.0
    re_row = np.concatenate([[0.0], a.real, a.imag])
    im_row = np.concatenate([[0.0], a.imag, -a.real])
    # slack = b - A x
    rows = [-im_row[None, :]]
    rhs = [np.zeros(1)]
    cones = [("zero", 1)]
    soc1 = np.zeros((1 + 2 * N, n))
    soc1[0, 0] = -1.0
    soc1[1:, 1:] = -Qr
    rows.append(soc1)
    rhs.append(np.zeros(1 + 2 * N))
    cones.append(("soc", 1 + 2 * N))
    if epsilon > 0:
        soc2 = np.zeros((1 + 2 * N, n))
        soc2[0] = -re_row
        soc2[1:, 1:] = -epsilon * np.eye(2 * N)
        rows.append(soc2)
        rhs.append(np.concatenate([[-1.0], np.zeros(2 * N)]))
        cones.append(("soc", 1 + 2 * N))
    else:
        rows.append(-re_row[None, :])
        rhs.append(np.array([-1.0]))
        cones.append(("nonneg", 1))
    prob = ConicProblem(c, np.vstack(rows), np.concatenate(rhs), cones)
    sol = conic_solve(prob, tol=tol, max_iter=max_iter)
    if sol.status == "infeasible":
        raise SolverError("worst_case: conic solver reported infeasibility", sol)
    w = sol.x[1:N + 1] + 1j * sol.x[N + 1:]
    return BeamformerWeights(w, "worst_case", {"epsilon": float(epsilon), "status": sol.status,
                                               "iterations": sol.iterations})


def min_dispersion(Y, a, p: float, max_iter: int = 500, rtol: float = 1e-8) -> BeamformerWeights:
    """Minimum l_p dispersion ``min ||Y^H w||_p^p`` s.t. ``a^H w = 1``.

    Iteratively reweighted MVDR: weights ``max(|w^H y_i|, floor)^(p-2)``
    define a weighted covariance that feeds a Capon step.
    """
    if not 1.0 <= p <= 4.0:
        raise ValueError("p must lie in [1, 4]")
    Y = np.asarray(Y, dtype=complex)
    N, T = Y.shape
    a = np.asarray(a, dtype=complex)
    floor = 1e-8 * np.linalg.norm(Y) / np.sqrt(N * T)
    w = capon(Y @ Y.conj().T / T, a).w
    it = 1
    for it in range(1, max_iter + 1):
        e = np.maximum(np.abs(w.conj() @ Y), floor)
        d = e ** (p - 2.0)
        Rw = (Y * d) @ Y.conj().T / T
        w_new = capon(Rw, a).w
        change = np.linalg.norm(w_new - w) / np.linalg.norm(w)
        w = w_new
        if change < rtol:
            break
    return BeamformerWeights(w, "min_dispersion", {"p": float(p), "iterations": it})


def dispersion_objective(Y, w, p):
    return float(np.sum(np.abs(np.asarray(w).conj() @ Y) ** p))


def _general_rank(R, Rs, method, params):
    R = _hermitian(R)
    Rs = _hermitian(Rs)
    _check_invertible(R)
    lam, V = sla.eigh(Rs, R)
    if lam[-1] <= 1e-14 * max(np.abs(lam).max(), 1e-300) or lam[-1] <= 0:
        raise ValueError("signal covariance has no positive direction after loading")
    v = _phase_normalize(V[:, -1])
    return v, lam[-1]


def general_rank(R, Rs) -> BeamformerWeights:
    """Principal eigenvector of ``R^{-1} Rs`` scaled to ``w^H Rs w = 1``."""
    Rs = _hermitian(Rs)
    if not np.any(Rs):
        raise ValueError("Rs must be nonzero")
    v, _ = _general_rank(R, Rs, "general_rank", {})
    w = v / np.sqrt((v.conj() @ Rs @ v).real)
    return BeamformerWeights(w, "general_rank")


def general_rank_loaded(R, Rs, gamma_y: float, gamma_s: float) -> BeamformerWeights:
    """General-rank beamformer on ``(R + gamma_y I)`` and ``(Rs - gamma_s I)``.

    A closed-form robust surrogate: loading ``R`` guards against covariance
    errors and deflating ``Rs`` guards against an overestimated signal
    subspace.
    """
    if gamma_y < 0 or gamma_s < 0:
        raise ValueError("loading factors must be nonnegative")
    R = _hermitian(R)
    Rs = _hermitian(Rs)
    N = R.shape[0]
    Rs_d = Rs - gamma_s * np.eye(N)
    if np.linalg.eigvalsh(Rs_d)[-1] <= 0:
        raise ValueError("gamma_s deflates Rs completely")
    v, _ = _general_rank(R + gamma_y * np.eye(N), Rs_d, "general_rank_loaded", {})
    scale = (v.conj() @ Rs @ v).real
    if scale <= 0:
        raise ValueError("loaded solution is orthogonal to the signal subspace")
    w = v / np.sqrt(scale)
    return BeamformerWeights(w, "general_rank_loaded", {"gamma_y": float(gamma_y), "gamma_s": float(gamma_s)})


def doubly_constrained(R, a_presumed, epsilon_a: float):
    """Doubly constrained robust Capon beamformer.

    Estimates ``a`` minimising ``a^H R^{-1} a`` s.t. ``||a - a0||^2 <= epsilon_a``
    and ``||a||^2 = N``, where ``a0`` is ``a_presumed`` rescaled to norm
    ``sqrt(N)``. On the shell the ball constraint reads
    ``Re(a0^H a) >= N - epsilon_a / 2``; the solution is
    ``sqrt(N) v / ||v||`` with ``v = (R^{-1} + lam I)^{-1} a0`` and ``lam``
    found by a scalar search unless the principal eigenvector of ``R`` is
    already feasible.
    """
    a = np.asarray(a_presumed, dtype=complex)
    N = len(a)
    if not 0 <= epsilon_a < 2 * N:
        raise ValueError("epsilon_a must satisfy 0 <= epsilon_a < 2N")
    R = _hermitian(R)
    a0 = np.sqrt(N) * a / np.linalg.norm(a)
    if epsilon_a == 0:
        return a0, BeamformerWeights(capon(R, a0).w, "doubly_constrained", {"epsilon_a": 0.0})
    gam, U = np.linalg.eigh(R)
    if gam[0] <= 1e-12 * gam[-1]:
        raise SingularCovarianceError("R is singular; doubly_constrained needs an invertible covariance")
    z = U.conj().T @ a0
    target = N - epsilon_a / 2.0
    u_max = U[:, -1] * np.exp(1j * np.angle(z[-1]))
    if np.sqrt(N) * abs(z[-1]) >= target:
        a_hat = np.sqrt(N) * u_max
        lam = -1.0 / gam[-1]
    else:
        def a_of(lam):
            v = U @ (z * gam / (1.0 + lam * gam))
            return np.sqrt(N) * v / np.linalg.norm(v)

        def h(lam):
            return (a0.conj() @ a_of(lam)).real - target

        lo = -1.0 / gam[-1] * (1.0 - 1e-12)
        hi = 1.0 / gam[0]
        while h(hi) < 0:
            hi *= 4.0
        lam = newton_scalar_root(h, (lo, hi), tol=1e-13 * N)
        a_hat = a_of(lam)
    w = capon(R, a_hat).w
    return a_hat, BeamformerWeights(w, "doubly_constrained", {"epsilon_a": float(epsilon_a), "multiplier": float(lam)})


def steering_estimate_sdr(R, sector: SectorMatrix, tol: float = 1e-7, max_iter: int = 50_000):
    """Sector-constrained steering vector estimate via semidefinite relaxation.

    Solves ``min tr(R^{-1} A)`` s.t. ``tr(A) = N``, ``tr(C~ A) <= N delta0``,
    ``A >= 0`` and returns the principal eigenvector scaled to norm sqrt(N).
    ``delta0`` from :func:`beamopt.model.sector_matrices` is defined on
    unit-norm steering vectors, hence the factor N on the lifted bound.
    The rank ratio ``lambda_2 / lambda_1`` is reported in ``params``.
    """
    R = _hermitian(R)
    N = R.shape[0]
    Ri = _solve_psd(R, np.eye(N))
    Ri = 0.5 * (Ri + Ri.conj().T)
    scale = np.trace(Ri).real / N
    M, sol = solve_hermitian_sdp(Ri / scale, [(np.eye(N), "==", float(N)),
                                              (sector.matrix_out, "<=", N * sector.delta0)],
                                 tol=tol, max_iter=max_iter)
    if sol.status == "infeasible":
        raise SolverError("steering_estimate_sdr: relaxation infeasible", sol)
    _, v, ratio = principal_eigenvector(M)
    a_hat = np.sqrt(N) * v / np.linalg.norm(v)
    w = capon(R, a_hat).w
    return a_hat, BeamformerWeights(w, "steering_estimate_sdr", {
        "rank_ratio": ratio, "status": sol.status, "theta_min_deg": sector.theta_min_deg,
        "theta_max_deg": sector.theta_max_deg})


def beampattern(w, geometry: ArrayGeometry, theta_grid) -> np.ndarray:
    """``|w^H a(theta)|^2`` on ``theta_grid`` (degrees)."""
    w = w.w if isinstance(w, BeamformerWeights) else np.asarray(w)
    A = steering_vector(geometry, np.asarray(theta_grid, dtype=float))
    return np.abs(A @ w.conj()) ** 2


def output_sinr(w, geometry: ArrayGeometry, scenario: Scenario, linear: bool = False) -> float:
    """Output SINR in dB using the true interference-plus-noise covariance."""
    w = w.w if isinstance(w, BeamformerWeights) else np.asarray(w)
    a = steering_vector(geometry, scenario.soi_direction_deg)
    Rin = interference_plus_noise_covariance(geometry, scenario)
    sinr = scenario.soi_power * abs(w.conj() @ a) ** 2 / (w.conj() @ Rin @ w).real
    return float(sinr) if linear else float(10 * np.log10(sinr))


def optimal_sinr(geometry: ArrayGeometry, scenario: Scenario, linear: bool = False) -> float:
    """Upper bound ``sigma_s^2 a^H R_{i+n}^{-1} a``."""
    a = steering_vector(geometry, scenario.soi_direction_deg)
    Rin = interference_plus_noise_covariance(geometry, scenario)
    val = scenario.soi_power * (a.conj() @ np.linalg.solve(Rin, a)).real
    return float(val) if linear else float(10 * np.log10(val))


def mismatch_radius(geometry: ArrayGeometry, theta_deg: float, delta_deg: float) -> float:
    """``||a(theta) - a(theta + delta)||``, a convenient uncertainty radius."""
    return float(np.linalg.norm(steering_vector(geometry, theta_deg) - steering_vector(geometry, theta_deg + delta_deg)))

"""First-order conic solver (ADMM operator splitting).

Solves

    minimize    c^T x
    subject to  A x + s = b,   s in K

where K is a product of zero, nonnegative, second-order and PSD cones. PSD
blocks act on the scaled lower-triangular vectorisation (``svec``) of a real
symmetric matrix, so their slack length is ``side * (side + 1) / 2``.

The iteration is the splitting used by COSMO/OSQP: an equality-constrained
least-squares step with a cached Cholesky factor, an over-relaxed projection
onto K and a dual update. The data are Ruiz-equilibrated first.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

CONE_KINDS = ("zero", "nonneg", "soc", "psd")


def svec_length(side: int) -> int:
    return side * (side + 1) // 2


def _tril_indices(side):
    # column-major lower triangle == row-major upper triangle of the transpose
    cols, rows = np.triu_indices(side)
    return rows, cols


def svec(S: np.ndarray) -> np.ndarray:
    """Lower triangle of symmetric ``S`` (column-major) with off-diagonals times sqrt(2)."""
    side = S.shape[0]
    r, c = _tril_indices(side)
    v = S[r, c].astype(float)
    v[r != c] *= math.sqrt(2.0)
    return v


def smat(v: np.ndarray, side: int | None = None) -> np.ndarray:
    """Inverse of :func:`svec`."""
    if side is None:
        side = int(round((math.sqrt(8 * len(v) + 1) - 1) / 2))
    r, c = _tril_indices(side)
    vals = np.array(v, dtype=float)
    vals[r != c] /= math.sqrt(2.0)
    S = np.zeros((side, side))
    S[r, c] = vals
    S[c, r] = vals
    return S


def psd_project(S: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (clip negative eigenvalues).

    Non-symmetric input is symmetrised as ``(S + S^T) / 2`` first.
    """
    S = 0.5 * (S + S.T)
    lam, V = np.linalg.eigh(S)
    if lam[0] >= 0:
        return S
    lam = np.maximum(lam, 0.0)
    X = (V * lam) @ V.T
    return 0.5 * (X + X.T)


def soc_project(v: np.ndarray) -> np.ndarray:
    t, z = v[0], v[1:]
    nz = np.linalg.norm(z)
    if nz <= t:
        return v.copy()
    if nz <= -t:
        return np.zeros_like(v)
    a = 0.5 * (t + nz)
    out = np.empty_like(v)
    out[0] = a
    out[1:] = (a / nz) * z
    return out


@dataclass
class ConicProblem:
    """``min c^T x`` s.t. ``A x + s = b``, ``s`` in the product cone ``cones``.

    ``cones`` is an ordered list of ``(kind, dim)`` pairs with kind one of
    ``zero``, ``nonneg``, ``soc`` (dim = total length, first entry is the
    bound) or ``psd`` (dim = side length of the symmetric matrix).
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: list

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.cones = [(str(k), int(d)) for k, d in self.cones]
        for kind, dim in self.cones:
            if kind not in CONE_KINDS:
                raise ValueError(f"unknown cone kind {kind!r}")
            if dim < 1:
                raise ValueError("cone dimensions must be positive")
        if self.A.shape != (len(self.b), len(self.c)):
            raise ValueError(f"A has shape {self.A.shape}, expected {(len(self.b), len(self.c))}")
        if sum(self.block_lengths()) != len(self.b):
            raise ValueError("cone block lengths do not sum to len(b)")

    def block_lengths(self):
        return [svec_length(d) if k == "psd" else d for k, d in self.cones]

    def blocks(self):
        start = 0
        for (kind, dim), n in zip(self.cones, self.block_lengths()):
            yield kind, dim, slice(start, start + n)
            start += n


@dataclass
class ConicSolution:
    x: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int = 0
    y: np.ndarray | None = None
    s: np.ndarray | None = None
    objective: float = float("nan")
    info: dict = field(default_factory=dict)


def _project(v, blocks):
    out = np.empty_like(v)
    for kind, dim, sl in blocks:
        seg = v[sl]
        if kind == "zero":
            out[sl] = 0.0
        elif kind == "nonneg":
            out[sl] = np.maximum(seg, 0.0)
        elif kind == "soc":
            out[sl] = soc_project(seg)
        else:
            out[sl] = svec(psd_project(smat(seg, dim)))
    return out


def _dual_cone_distance(y, blocks):
    # every cone used here is self-dual (zero's dual is free)
    d = 0.0
    for kind, dim, sl in blocks:
        if kind == "zero":
            continue
        seg = y[sl]
        d = max(d, float(np.linalg.norm(seg - _project(seg, [(kind, dim, slice(0, len(seg)))]))))
    return d


def _equilibrate(A, blocks, iters=15):
    m, n = A.shape
    D = np.ones(n)
    E = np.ones(m)
    M = A.copy()
    for _ in range(iters):
        col = np.sqrt(np.max(np.abs(M), axis=0))
        row = np.sqrt(np.max(np.abs(M), axis=1))
        col[col < 1e-8] = 1.0
        row[row < 1e-8] = 1.0
        for kind, _, sl in blocks:
            if kind in ("soc", "psd"):
                row[sl] = np.mean(row[sl])
        D /= col
        E /= row
        M = (A * D) * E[:, None]
    return M, D, E


def conic_solve(problem: ConicProblem, tol: float = 1e-6, max_iter: int = 50_000,
                rho: float = 1.0, alpha: float = 1.6, sigma: float = 1e-6,
                check_every: int = 10, adapt_every: int = 50, debug_csv=None) -> ConicSolution:
    """Solve ``problem`` to relative tolerance ``tol``.

    Termination uses relative residuals

        primal  ||A x + s - b|| / (1 + ||b||)
        dual    ||A^T y + c|| / (1 + ||c||)
        gap     |c^T x + b^T y| / (1 + |c^T x| + |b^T y|)

    The penalty ``rho`` is rebalanced every ``adapt_every`` iterations by a
    factor of 2. ``debug_csv`` names a file that receives one residual row per
    check.
    """
    blocks = list(problem.blocks())
    A0, b0, c0 = problem.A, problem.b, problem.c
    m, n = A0.shape

    A, D, E = _equilibrate(A0, blocks)
    b = E * b0
    c = D * c0
    cscale = 1.0 / max(np.max(np.abs(c)) if n else 1.0, 1e-4)
    cscale = min(cscale, 1e4)
    c = c * cscale

    AtA = A.T @ A
    eye = np.eye(n)

    def factor(r):
        return sla.cho_factor(sigma * eye + r * AtA)

    fac = factor(rho)
    x = np.zeros(n)
    s = _project(b.copy(), blocks)
    y = np.zeros(m)

    nb = 1.0 + np.linalg.norm(b0)
    nc = 1.0 + np.linalg.norm(c0)

    writer = None
    fh = None
    if debug_csv is not None:
        fh = open(debug_csv, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["iteration", "primal_residual", "dual_residual", "gap", "rho"])

    def unscale(x, s, y):
        return D * x, s / E, -(E * y) / cscale

    def residuals(xu, su, yu):
        rp = np.linalg.norm(A0 @ xu + su - b0) / nb
        rd = np.linalg.norm(A0.T @ yu + c0) / nc
        pobj = c0 @ xu
        dobj = -(b0 @ yu)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return rp, rd, gap

    best = None
    status = "max_iterations"
    y_prev = y.copy()
    k = 0
    try:
        for k in range(1, max_iter + 1):
            rhs = sigma * x - c + A.T @ (rho * (b - s) + y)
            xt = sla.cho_solve(fac, rhs)
            st = b - A @ xt
            x = alpha * xt + (1 - alpha) * x
            s_rel = alpha * st + (1 - alpha) * s
            s_new = _project(s_rel + y / rho, blocks)
            y = y + rho * (s_rel - s_new)
            s = s_new

            if k % check_every == 0 or k == max_iter:
                xu, su, yu = unscale(x, s, y)
                rp, rd, gap = residuals(xu, su, yu)
                if writer is not None:
                    writer.writerow([k, rp, rd, gap, rho])
                score = max(rp, rd, gap)
                if best is None or score < best[0]:
                    best = (score, xu.copy(), su.copy(), yu.copy(), (rp, rd, gap))
                if rp < tol and rd < tol and gap < tol:
                    best = (score, xu, su, yu, (rp, rd, gap))
                    status = "optimal"
                    break
                if k % adapt_every == 0:
                    if _primal_infeasible(A0, b0, -(E * (y - y_prev)) / cscale, blocks):
                        status = "infeasible"
                        break
                    y_prev = y.copy()
                    # balance normalised residuals in the scaled space
                    rp_s = np.linalg.norm(A @ x + s - b) / max(np.linalg.norm(A @ x), np.linalg.norm(s), np.linalg.norm(b), 1e-12)
                    rd_s = np.linalg.norm(A.T @ y + c) / max(np.linalg.norm(A.T @ y), np.linalg.norm(c), 1e-12)
                    if rp_s > 5.0 * rd_s and rho < 1e6:
                        rho *= 2.0
                        fac = factor(rho)
                    elif rd_s > 5.0 * rp_s and rho > 1e-6:
                        rho /= 2.0
                        fac = factor(rho)
    finally:
        if fh is not None:
            fh.close()

    if best is None:
        xu, su, yu = unscale(x, s, y)
        best = (np.inf, xu, su, yu, residuals(xu, su, yu))
    _, xu, su, yu, (rp, rd, gap) = best
    return ConicSolution(
        x=xu, status=status, primal_residual=float(rp), dual_residual=float(rd), gap=float(gap),
        iterations=k, y=yu, s=su, objective=float(c0 @ xu), info={"rho": rho},
    )


def _primal_infeasible(A, b, dy, blocks, eps=1e-5):
    ndy = np.linalg.norm(dy)
    if ndy < 1e-12:
        return False
    dy = dy / ndy
    return (np.linalg.norm(A.T @ dy) < eps and b @ dy < -eps
            and _dual_cone_distance(dy, blocks) < eps)

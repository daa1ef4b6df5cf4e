"""Complex Hermitian SDPs expressed through the real conic core."""
from __future__ import annotations

import numpy as np

from .conic import ConicProblem, conic_solve, svec


def real_embedding(M: np.ndarray) -> np.ndarray:
    """``[[Re M, -Im M], [Im M, Re M]]``; PSD iff the Hermitian ``M`` is PSD."""
    return np.block([[M.real, -M.imag], [M.imag, M.real]])


def hermitian_basis(n: int) -> np.ndarray:
    """Real-coefficient basis (n^2 matrices) for n x n Hermitian matrices.

    Order: diagonal entries, then for each upper pair (i, j) the real part
    followed by the imaginary part.
    """
    basis = []
    for i in range(n):
        B = np.zeros((n, n), complex)
        B[i, i] = 1.0
        basis.append(B)
    for i in range(n):
        for j in range(i + 1, n):
            B = np.zeros((n, n), complex)
            B[i, j] = B[j, i] = 1.0
            basis.append(B)
            B = np.zeros((n, n), complex)
            B[i, j] = 1j
            B[j, i] = -1j
            basis.append(B)
    return np.array(basis)


def trace_coefficients(G: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Coefficients ``g`` with ``tr(G M) = g . x`` for ``M = sum x_k B_k`` (G Hermitian)."""
    return np.einsum("ij,kji->k", G, basis).real


def solve_hermitian_sdp(objective: np.ndarray, constraints, tol: float = 1e-6,
                        max_iter: int = 50_000):
    """Minimise ``tr(G0 M)`` over Hermitian ``M >= 0`` subject to trace constraints.

    ``constraints`` holds ``(G, sense, rhs)`` with sense in ``{"==", "<=", ">="}``.
    Returns ``(M, solution)``.
    """
    n = objective.shape[0]
    basis = hermitian_basis(n)
    c = trace_coefficients(objective, basis)
    eq_rows, eq_b, in_rows, in_b = [], [], [], []
    for G, sense, rhs in constraints:
        g = trace_coefficients(G, basis)
        if sense == "==":
            eq_rows.append(g)
            eq_b.append(rhs)
        elif sense == "<=":
            in_rows.append(g)
            in_b.append(rhs)
        elif sense == ">=":
            in_rows.append(-g)
            in_b.append(-rhs)
        else:
            raise ValueError(f"unknown constraint sense {sense!r}")
    psd_map = np.array([svec(real_embedding(B)) for B in basis]).T
    rows, rhs, cones = [], [], []
    if eq_rows:
        rows.append(np.array(eq_rows))
        rhs.append(np.array(eq_b, float))
        cones.append(("zero", len(eq_rows)))
    if in_rows:
        rows.append(np.array(in_rows))
        rhs.append(np.array(in_b, float))
        cones.append(("nonneg", len(in_rows)))
    rows.append(-psd_map)
    rhs.append(np.zeros(psd_map.shape[0]))
    cones.append(("psd", 2 * n))
    prob = ConicProblem(c, np.vstack(rows), np.concatenate(rhs), cones)
    sol = conic_solve(prob, tol=tol, max_iter=max_iter)
    M = np.einsum("k,kij->ij", sol.x, basis)
    return 0.5 * (M + M.conj().T), sol


def principal_eigenvector(M: np.ndarray):
    """Leading eigenpair of Hermitian ``M`` with the phase convention that the
    largest-magnitude entry is real positive. Returns ``(value, vector, ratio)``
    where ratio is ``lambda_2 / lambda_1``."""
    lam, V = np.linalg.eigh(M)
    v = V[:, -1]
    k = np.argmax(np.abs(v))
    v = v * np.exp(-1j * np.angle(v[k]))
    ratio = lam[-2] / lam[-1] if len(lam) > 1 and lam[-1] > 0 else 0.0
    return lam[-1], v, max(float(ratio), 0.0)

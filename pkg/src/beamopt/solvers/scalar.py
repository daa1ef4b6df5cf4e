"""Orthogonal Procrustes and a safeguarded scalar root finder."""
from __future__ import annotations

import numpy as np


def orthogonal_procrustes(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """argmin over ``P`` with ``P P^H = I`` of ``||B - A P||_F``.

    ``A`` is K x p and ``B`` is K x q with p <= q; the result is p x q with
    orthonormal rows. Since ``||A P||_F`` is fixed by the constraint, the
    minimiser maximises ``Re tr(P^H A^H B)``: with the thin SVD
    ``A^H B = U S V^H`` it is ``P = U V^H``. When ``A^H B`` is rank deficient
    the SVD's completion of U and V is used as is.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    p, q = A.shape[1], B.shape[1]
    if p > q:
        raise ValueError(f"need p <= q, got p={p}, q={q}")
    U, _, Vh = np.linalg.svd(A.conj().T @ B, full_matrices=False)
    return U @ Vh


def newton_scalar_root(f, bracket, tol: float = 1e-12, fprime=None, max_iter: int = 200) -> float:
    """Root of a monotone ``f`` inside ``bracket = (lo, hi)``.

    Newton steps (derivative from ``fprime``, else a secant through the last
    two iterates) are taken when they land inside the current bracket;
    otherwise, or whenever the bracket has not halved over two steps, the
    step is a bisection. Returns once ``|f(x)| < tol`` or the bracket has
    collapsed to machine precision.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ValueError("f has no sign change on the bracket")
    x = 0.5 * (lo + hi)
    fx = f(x)
    prev = None
    widths = [hi - lo, hi - lo]
    for _ in range(max_iter):
        if abs(fx) < tol:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if fprime is not None:
            d = fprime(x)
        elif prev is not None and prev[0] != x:
            d = (fx - prev[1]) / (x - prev[0])
        else:
            d = (fhi - flo) / (hi - lo)
        xn = x - fx / d if d != 0 and np.isfinite(d) else None
        if xn is None or not lo < xn < hi or hi - lo > 0.5 * widths[-2]:
            xn = 0.5 * (lo + hi)
        widths.append(hi - lo)
        if xn == x or hi - lo <= 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
            return xn
        prev = (x, fx)
        x = xn
        fx = f(x)
    return x

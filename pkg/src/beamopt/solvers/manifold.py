"""Steepest descent on the complex circle (unit-modulus) manifold."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteError(FloatingPointError):
    pass


@dataclass
class ManifoldResult:
    x: np.ndarray
    cost: float
    iterations: int
    grad_norm: float
    costs: list = field(default_factory=list)


def project_tangent(x, egrad):
    """Remove the radial component of ``egrad`` at each entry of ``x``."""
    return egrad - (egrad * x.conj()).real * x / np.abs(x) ** 2


def retract(x, modulus):
    """Per-entry renormalisation to ``|x_i| = modulus``."""
    mag = np.abs(x)
    mag[mag == 0] = 1.0
    return modulus * x / mag


def manifold_minimize(cost_and_gradient, x0, max_iter: int = 500, tol: float = 1e-8,
                      modulus: float | None = None, armijo: float = 1e-4,
                      backtrack: float = 0.5, step0: float = 1.0,
                      max_backtracks: int = 60) -> ManifoldResult:
    """Minimise ``f`` over complex arrays whose entries all have modulus ``modulus``.

    ``cost_and_gradient(x)`` returns ``(f, G)`` where ``G`` is the Euclidean
    gradient in the convention ``f(x + d) ~ f(x) + Re <G, d>``. Each step is a
    retracted steepest-descent move with Armijo backtracking starting from
    ``step0``, so the cost sequence never increases. Stops when the Riemannian
    gradient norm drops below ``tol``. ``modulus`` defaults to
    ``1/sqrt(x0.shape[0])``.
    """
    x0 = np.asarray(x0, dtype=complex)
    if modulus is None:
        modulus = 1.0 / np.sqrt(x0.shape[0])
    x = retract(x0.copy(), modulus)
    f, g = cost_and_gradient(x)
    costs = [float(f)]
    it = 0
    gn = 0.0
    for it in range(max_iter + 1):
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite cost or gradient at iteration {it}")
        rg = project_tangent(x, g)
        gn = float(np.linalg.norm(rg))
        if gn < tol or it == max_iter:
            break
        step = step0
        accepted = False
        for _ in range(max_backtracks):
            xn = retract(x - step * rg, modulus)
            fn, gnext = cost_and_gradient(xn)
            if np.isfinite(fn) and fn <= f - armijo * step * gn**2:
                accepted = True
                break
            step *= backtrack
        if not accepted:
            break
        x, f, g = xn, fn, gnext
        costs.append(float(f))
    return ManifoldResult(x=x, cost=float(f), iterations=it, grad_norm=gn, costs=costs)

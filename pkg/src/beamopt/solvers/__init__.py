"""Numerical engines shared by the beamformer designers."""
from .conic import ConicProblem, ConicSolution, conic_solve, psd_project, smat, svec
from .lifting import principal_eigenvector, real_embedding, solve_hermitian_sdp
from .manifold import ManifoldResult, NonFiniteError, manifold_minimize
from .scalar import newton_scalar_root, orthogonal_procrustes

__all__ = [
    "ConicProblem", "ConicSolution", "conic_solve", "psd_project", "svec", "smat",
    "real_embedding", "solve_hermitian_sdp", "principal_eigenvector",
    "ManifoldResult", "NonFiniteError", "manifold_minimize",
    "newton_scalar_root", "orthogonal_procrustes",
]

"""Principal eigenpair of the discrete p-Laplacian.

The iteration is a shifted inverse power method built on the resolvent,

    u_{k+1} = normalize_p( max(J_alpha(N(u_k)), 0) ),

started from the interior-constant function. Eigenfunctions are fixed points
of the normalized map because ``J_alpha(N(u)) = (1 + alpha*lam)^(-1/(p-1)) u``
whenever ``A(u) = lam * N(u)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import GridFunction, Mesh
from .operators import (
    _check_p,
    duality_map,
    energy_a,
    energy_n,
    grad_a,
    p_norm,
    q_norm,
)
from .errors import SolverError
from .resolvent import ResolveOptions, resolve


@dataclass
class EigOptions:
    alpha: float = 1.0
    rel_tol: float = 1e-8
    res_tol: float = 1e-6
    max_iters: int = 500
    start: GridFunction | None = None
    resolve: ResolveOptions = field(default_factory=ResolveOptions)


@dataclass
class EigResult:
    lambda1: float
    eigfn: GridFunction
    residual: float
    iterations: int
    converged: bool
    resolve_iterations: int = 0


def rayleigh(u: GridFunction, p: float) -> float:
    """Rayleigh quotient ``sum |grad u|^p / sum w |u|^p``."""
    den = energy_n(u, p)
    if den == 0:
        raise ValueError("Rayleigh quotient of the zero function")
    return energy_a(u, p) / den


def eig_residual(u: GridFunction, lam: float, p: float) -> float:
    """``||A(u) - lam * N(u)||_q``."""
    return q_norm(grad_a(u, p) - lam * duality_map(u, p), p)


def _normalize(u: GridFunction, p: float) -> GridFunction:
    nrm = p_norm(u, p)
    if nrm == 0:
        raise SolverError("eigen iteration collapsed to the zero function")
    return GridFunction(u.mesh, u.values / nrm)


def principal_eig(mesh: Mesh, p: float, opts: EigOptions | None = None) -> EigResult:
    """Principal eigenvalue and nonnegative eigenfunction (``||u||_p = 1``).

    Raises:
        SolverError: the iterate collapsed to zero (for instance a bad
            ``alpha``), or the resolvent hit a non-finite value.
    """
    _check_p(p)
    opts = opts or EigOptions()
    if not opts.alpha > 0:
        raise ValueError(f"alpha must be positive, got {opts.alpha}")
    start = opts.start if opts.start is not None else GridFunction(mesh, np.ones(mesh.n_interior))
    u = _normalize(GridFunction(mesh, np.maximum(start.values, 0.0)), p)
    lam = rayleigh(u, p)
    res = eig_residual(u, lam, p)
    inner = 0
    for k in range(1, opts.max_iters + 1):
        shrink = (1.0 + opts.alpha * lam) ** (-1.0 / (p - 1.0))
        ropts = ResolveOptions(**{**opts.resolve.__dict__, "warm_start": shrink * u})
        sol = resolve(duality_map(u, p), opts.alpha, p, ropts)
        inner += sol.iterations
        u_new = _normalize(GridFunction(mesh, np.maximum(sol.u.values, 0.0)), p)
        lam_new = rayleigh(u_new, p)
        res = eig_residual(u_new, lam_new, p)
        done = abs(lam_new - lam) <= opts.rel_tol * lam and res <= opts.res_tol
        u, lam = u_new, lam_new
        if done:
            return EigResult(lam, u, res, k, True, inner)
    return EigResult(lam, u, res, opts.max_iters, False, inner)

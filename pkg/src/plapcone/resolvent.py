"""Resolvent ``J_alpha``: solve ``N(u) + alpha * A(u) = tau`` by convex minimization.

The solution is the unique minimizer of

    Phi(u) = energy_n(u) + alpha * energy_a(u) - <tau, u>

whose gradient density is ``N(u) + alpha * A(u) - tau``. Iteration stops once
that residual has weighted q-norm at most ``grad_tol * (||tau||_q + 1)``.

Two descent drivers share one backtracking line search:

``"cg"`` (default)
    Polak-Ribiere+ nonlinear conjugate gradients. The trial step is the
    one-dimensional Newton step along the search direction (exact for
    ``p == 2``), followed by Armijo backtracking.
``"bb"``
    Steepest descent with a Barzilai-Borwein trial step.

Both are monotone: ``Phi`` never increases beyond floating-point slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SolverError
from .mesh import GridFunction, Mesh, gradients
from .operators import (
    DualDensity,
    _check_p,
    duality_inverse,
    duality_values,
    energy_a_values,
    energy_n_values,
    grad_a_values,
    q_norm,
)


@dataclass
class ResolveOptions:
    max_iters: int = 5000
    grad_tol: float = 1e-10
    initial_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    warm_start: GridFunction | None = None
    method: str = "cg"

    def __post_init__(self) -> None:
        if not (self.grad_tol > 0 and self.initial_step > 0 and self.armijo > 0):
            raise ValueError("tolerances and step parameters must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.method not in ("cg", "bb"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class ResolveResult:
    u: GridFunction
    residual: float
    iterations: int
    converged: bool
    objective: list[float] = field(default_factory=list, repr=False)


class _Functional:
    """Phi and its derivatives on raw nodal arrays."""

    def __init__(self, m: Mesh, tau: np.ndarray, alpha: float, p: float):
        self.m, self.tau, self.alpha, self.p = m, tau, alpha, p
        self.w = m.quad_weight

    def value(self, u: np.ndarray) -> float:
        return (
            energy_n_values(self.m, u, self.p)
            + self.alpha * energy_a_values(self.m, u, self.p)
            - float(np.dot(self.w, self.tau * u))
        )

    def residual(self, u: np.ndarray) -> np.ndarray:
        return duality_values(u, self.p) + self.alpha * grad_a_values(self.m, u, self.p) - self.tau

    def dot(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.dot(self.w, a * b))

    def curvature(self, u: np.ndarray, d: np.ndarray) -> float:
        """Second derivative of ``s -> Phi(u + s d)`` at ``s = 0``."""
        p, m = self.p, self.m
        cn = (p - 1) * np.dot(self.w, np.abs(u) ** (p - 2) * d * d)
        g = gradients(m, u)
        dg = gradients(m, d)
        dg2 = np.sum(dg * dg, axis=1)
        if p == 2:
            ca = np.sum(dg2)
        else:
            g2 = np.sum(g * g, axis=1)
            gdg = np.sum(g * dg, axis=1)
            term = g2 ** ((p - 2) / 2) * dg2
            nz = g2 > 0
            term[nz] += (p - 2) * g2[nz] ** ((p - 4) / 2) * gdg[nz] ** 2
            ca = np.sum(term)
        return float(cn + self.alpha * m.cell_measure * ca)

    def ray_scale(self, v: np.ndarray) -> float:
        """Minimizer ``s >= 0`` of ``Phi(s v)``."""
        lin = float(np.dot(self.w, self.tau * v))
        hom = energy_n_values(self.m, v, self.p) + self.alpha * energy_a_values(self.m, v, self.p)
        if lin <= 0 or hom <= 0:
            return 0.0
        return (lin / (self.p * hom)) ** (1.0 / (self.p - 1))


def _start(fn: _Functional, t: DualDensity, opts: ResolveOptions) -> np.ndarray:
    if opts.warm_start is not None:
        u = opts.warm_start.values.copy()
        s = fn.ray_scale(u)
        return s * u if s > 0 and fn.value(s * u) < fn.value(u) else u
    v = duality_inverse(t, fn.p).values
    return fn.ray_scale(v) * v


def resolve(
    t: DualDensity, alpha: float, p: float, opts: ResolveOptions | None = None
) -> ResolveResult:
    """Compute ``J_alpha(t)``.

    ``alpha == 0`` returns ``duality_inverse(t)`` exactly. Non-convergence
    within ``max_iters`` is reported through ``converged=False``.

    Raises:
        SolverError: a non-finite iterate appeared.
    """
    _check_p(p)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    opts = opts or ResolveOptions()
    m = t.mesh
    if alpha == 0:
        u = duality_inverse(t, p)
        return ResolveResult(u, 0.0, 0, True, [])

    fn = _Functional(m, t.values, float(alpha), float(p))
    q = p / (p - 1)
    target = opts.grad_tol * (q_norm(t, p) + 1.0)

    def qn(r: np.ndarray) -> float:
        return float(np.dot(fn.w, np.abs(r) ** q) ** (1.0 / q))

    with np.errstate(over="ignore", invalid="ignore"):
        u = _start(fn, t, opts)
        phi = fn.value(u)
        r = fn.residual(u)
    if not (np.all(np.isfinite(u)) and math.isfinite(phi) and np.all(np.isfinite(r))):
        raise SolverError("non-finite starting point for the resolvent (data too large)")
    res = qn(r)
    trace = [phi]
    d = -r
    r_old = None
    s_prev = y_prev = None
    k = 0
    while res > target and k < opts.max_iters:
        if opts.method == "cg" and r_old is not None:
            beta = max(0.0, fn.dot(r, r - r_old) / fn.dot(r_old, r_old))
            d = -r + beta * d
            if fn.dot(r, d) >= 0:
                d = -r
        else:
            d = -r
        slope = fn.dot(r, d)

        if opts.method == "bb" and s_prev is not None and fn.dot(s_prev, y_prev) > 0:
            step = fn.dot(s_prev, s_prev) / fn.dot(s_prev, y_prev)
        else:
            curv = fn.curvature(u, d)
            step = -slope / curv if curv > 0 and math.isfinite(curv) else opts.initial_step

        slack = 4e-16 * (abs(phi) + fn.dot(np.abs(fn.tau), np.abs(u)))
        for _ in range(80):
            u_new = u + step * d
            phi_new = fn.value(u_new)
            if phi_new <= phi + opts.armijo * step * slope + slack:
                break
            step *= opts.shrink
        else:
            break  # no acceptable step: stalled at roundoff level
        if not math.isfinite(phi_new):
            raise SolverError("non-finite objective in resolvent iteration")
        r_new = fn.residual(u_new)
        if not np.all(np.isfinite(r_new)):
            raise SolverError("non-finite gradient in resolvent iteration")
        s_prev, y_prev = u_new - u, r_new - r
        r_old, r, u, phi = r, r_new, u_new, phi_new
        res = qn(r)
        trace.append(phi)
        k += 1
    return ResolveResult(GridFunction(m, u), res, k, res <= target, trace)


def resolve_family(
    t: DualDensity, alphas: Sequence[float], p: float, opts: ResolveOptions | None = None
) -> list[ResolveResult]:
    """Resolve for an ascending list of ``alphas``, warm-starting each solve."""
    alphas = list(alphas)
    if any(a < 0 for a in alphas) or any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be nonnegative and sorted ascending")
    opts = opts or ResolveOptions()
    out: list[ResolveResult] = []
    warm = opts.warm_start
    for a in alphas:
        o = ResolveOptions(**{**opts.__dict__, "warm_start": warm})
        res = resolve(t, a, p, o)
        out.append(res)
        warm = res.u
    return out

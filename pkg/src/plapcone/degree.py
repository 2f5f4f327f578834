"""Fixed-point map ``Phi_alpha``, degree verdicts, and the existence search.

``Phi_alpha(u) = J_alpha(r(N(u) + alpha * F(u)))`` maps the cone into
itself; its fixed points with ``r`` inactive are exactly the solutions of
``A(u) = F(u)``.

Degrees are never computed homologically. For ``rho * N`` the degree on a
ball is 1 when ``rho < lambda1`` everywhere and 0 when ``rho > lambda1``
everywhere; the slopes of ``f`` at zero and infinity pick the degree on
small and large balls. Unequal values certify a nontrivial solution in the
annulus between them, and the search then looks for a witness:

1. damped Picard iteration on ``Phi_alpha`` from scaled copies of the
   principal eigenfunction, over a decreasing ``alpha`` ladder;
2. if Picard finds nothing, an amplitude scan: for each target norm ``t``
   the normalized iteration ``u <- t * Phi(u) / ||Phi(u)||`` converges to a
   profile with gain ``c(t) = ||Phi(u)|| / t``. The degree change forces
   ``c - 1`` to change sign between small and large ``t``; a root of
   ``log c`` is a fixed point of ``Phi_alpha``. This reaches solutions that
   repel plain Picard iteration along the amplitude direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from . import exprlang
from .eigensolver import EigOptions, EigResult, principal_eig
from .errors import HypothesisError
from .mesh import GridFunction, Mesh
from .operators import (
    DualDensity,
    Forcing,
    duality_map,
    grad_a,
    nemytskii,
    node_bindings,
    p_norm,
    q_norm,
    retract_dual,
)
from .problem import ProblemSpec
from .resolvent import ResolveOptions, resolve

ALPHA_LADDER = (1e-1, 1e-2, 1e-3)
START_NORMS = tuple(np.geomspace(1e-2, 1e2, 9))


@dataclass(frozen=True)
class DegreeVerdict:
    value: int | None
    basis: str | None  # "rho_below" | "rho_above" | None when undefined
    rho_summary: dict = field(default_factory=dict)
    label: str = ""

    @property
    def defined(self) -> bool:
        return self.value is not None


@dataclass
class SlopeEstimate:
    rho0: np.ndarray
    rho_inf: np.ndarray
    stable0: bool
    stable_inf: bool

    def __iter__(self):
        return iter((self.rho0, self.rho_inf))


@dataclass
class FixedPointOptions:
    theta: float = 0.5
    fp_tol: float = 1e-8
    res_tol: float = 1e-6
    max_iters: int = 1000
    blowup: float = 1e6
    floor: float = 0.0
    grad_tol: float = 1e-10


@dataclass
class SearchReport:
    lambda1: float
    rho0: np.ndarray
    rho_inf: np.ndarray
    deg_zero: DegreeVerdict
    deg_inf: DegreeVerdict
    solution: GridFunction | None
    residual: float | None
    norm_p: float | None
    starts_tried: int
    status: str  # "found" | "no_certificate" | "certificate_but_not_found"
    method: str | None = None
    alpha: float | None = None
    slopes_stable: tuple[bool, bool] = (True, True)
    eig: EigResult | None = None
    notes: list[str] = field(default_factory=list)


def residual_norm(u: GridFunction, f: Forcing, p: float) -> float:
    """``||A(u) - F(u)||_q``."""
    return q_norm(grad_a(u, p) - nemytskii(u, f, p), p)


def _inner_opts(alpha: float, res_tol: float, grad_tol: float, warm: GridFunction | None) -> ResolveOptions:
    # the coincidence residual equals the resolvent residual divided by alpha
    return ResolveOptions(grad_tol=min(grad_tol, 1e-2 * res_tol * alpha), warm_start=warm)


def phi_alpha(
    u: GridFunction,
    alpha: float,
    p: float,
    f: Forcing,
    opts: ResolveOptions | None = None,
) -> GridFunction:
    """``J_alpha(r(N(u) + alpha F(u)))``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    tau = retract_dual(duality_map(u, p) + alpha * nemytskii(u, f, p))
    res = resolve(tau, alpha, p, opts or ResolveOptions(warm_start=u))
    return GridFunction(u.mesh, np.maximum(res.u.values, 0.0))


def find_fixed_point(
    u0: GridFunction,
    alpha: float,
    p: float,
    f: Forcing,
    opts: FixedPointOptions | None = None,
    trace: list[float] | None = None,
) -> GridFunction | None:
    """Damped Picard iteration ``u <- (1 - theta) u + theta Phi_alpha(u)``.

    Succeeds when ``||u - Phi(u)||_p <= fp_tol`` and
    ``||A(u) - F(u)||_q <= res_tol``. Returns ``None`` on running out of
    iterations, on leaving the ball of radius ``blowup``, or on dropping
    below ``floor`` in norm. ``trace`` receives the iterate norms.
    """
    opts = opts or FixedPointOptions()
    if np.min(u0.values) < 0:
        raise ValueError("start must lie in the cone")
    u = u0
    for _ in range(opts.max_iters + 1):
        nrm = p_norm(u, p)
        if trace is not None:
            trace.append(nrm)
        if nrm > opts.blowup or (opts.floor > 0 and nrm < opts.floor):
            return None
        v = phi_alpha(u, alpha, p, f, _inner_opts(alpha, opts.res_tol, opts.grad_tol, u))
        if p_norm(v - u, p) <= opts.fp_tol and residual_norm(u, f, p) <= opts.res_tol:
            return u
        u = GridFunction(u.mesh, (1 - opts.theta) * u.values + opts.theta * v.values)
    return None


def degree_linear(rho, lambda1: float, radius_label: str = "") -> DegreeVerdict:
    """Degree of ``A - rho N`` on a ball: 1 below ``lambda1``, 0 above, else undefined."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if not np.all(np.isfinite(rho)):
        raise ValueError("rho must be finite")
    summary = {"min": float(rho.min()), "max": float(rho.max()), "lambda1": float(lambda1)}
    if summary["max"] < lambda1:
        return DegreeVerdict(1, "rho_below", summary, radius_label)
    if summary["min"] > lambda1:
        return DegreeVerdict(0, "rho_above", summary, radius_label)
    return DegreeVerdict(None, None, summary, radius_label)


def degree_at_zero(rho0, lambda1: float) -> DegreeVerdict:
    return degree_linear(rho0, lambda1, "zero")


def degree_at_infinity(rho_inf, lambda1: float) -> DegreeVerdict:
    return degree_linear(rho_inf, lambda1, "infinity")


def _stable(samples: Sequence[np.ndarray]) -> bool:
    for a, b in zip(samples, samples[1:]):
        scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
        if np.any(np.abs(a - b) > 1e-3 * scale):
            return False
    return True


def estimate_asymptotic_slopes(f: exprlang.Node, mesh: Mesh, p: float) -> SlopeEstimate:
    """Sample ``f(x, s) / s^(p-1)`` near ``s = 0`` and ``s = inf`` at every node.

    Successive samples must agree to ``1e-3`` relative (absolute below
    magnitude 1) for the estimate to count as stable.

    Raises:
        HypothesisError: ``f(x, 0) < 0`` at some node.
    """
    check_tangency(f, mesh)
    out = []
    for grid in ((1e-4, 1e-5, 1e-6), (1e4, 1e5, 1e6)):
        samples = []
        for s in grid:
            vals = exprlang.evaluate(f, node_bindings(mesh, np.full(mesh.n_interior, s)))
            samples.append(np.broadcast_to(np.asarray(vals, dtype=float), (mesh.n_interior,)) / s ** (p - 1))
        out.append((samples[-1].copy(), _stable(samples)))
    (r0, st0), (ri, sti) = out
    return SlopeEstimate(r0, ri, st0, sti)


def check_tangency(f: exprlang.Node, mesh: Mesh) -> None:
    """Refuse ``f`` with ``f(x, 0) < 0`` at a node (the cone would not be invariant)."""
    vals = np.broadcast_to(
        np.asarray(exprlang.evaluate(f, node_bindings(mesh, np.zeros(mesh.n_interior))), dtype=float),
        (mesh.n_interior,),
    )
    bad = np.flatnonzero(vals < 0)
    if bad.size:
        i = int(bad[0])
        raise HypothesisError(
            f"tangency hypothesis f(x,0) >= 0 violated at node {i} "
            f"x={tuple(float(c) for c in mesh.coords[i])}: f = {vals[i]:.6g}"
        )


def _normalized_profile(
    t: float,
    start: GridFunction,
    alpha: float,
    p: float,
    f: Forcing,
    tol: float,
    max_iters: int,
    inner: ResolveOptions,
) -> tuple[float, GridFunction, bool]:
    """Fixed point of ``u -> t Phi(u)/||Phi(u)||`` on the sphere of radius ``t``."""
    u = t / p_norm(start, p) * start
    c = math.nan
    for _ in range(max_iters):
        v = phi_alpha(u, alpha, p, f, ResolveOptions(**{**inner.__dict__, "warm_start": u}))
        nv = p_norm(v, p)
        c = nv / t
        u_next = (t / nv) * v
        gap = p_norm(u_next - u, p) / t
        u = u_next
        if gap <= tol:
            return c, u, True
    return c, u, False


def amplitude_search(
    mesh: Mesh,
    p: float,
    f: Forcing,
    profile: GridFunction,
    alpha: float,
    res_tol: float,
    grad_tol: float = 1e-10,
    norms: Sequence[float] = START_NORMS,
    notes: list[str] | None = None,
) -> GridFunction | None:
    """Locate a fixed point of ``Phi_alpha`` by a sign change of ``log c(t)``.

    Returns the candidate on the sphere where ``c = 1``; ``None`` if the gain
    never crosses 1 over the scanned norms (extended by two decades each way).
    """
    inner = _inner_opts(alpha, res_tol, grad_tol, None)
    tol = 1e-12
    cache: dict[float, tuple[float, GridFunction]] = {}
    warm = [profile]

    def gain(log_t: float) -> float:
        c, u, _ = _normalized_profile(math.exp(log_t), warm[0], alpha, p, f, tol, 500, inner)
        warm[0] = u
        cache[log_t] = (c, u)
        return math.log(c)

    grid = [math.log(t) for t in norms]
    grid = [grid[0] - math.log(100.0)] + grid + [grid[-1] + math.log(100.0)]
    prev = None
    for lt in grid:
        val = gain(lt)
        if prev is not None and (prev[1] < 0) != (val < 0):
            warm[0] = cache[prev[0]][1]
            root = optimize.brentq(gain, prev[0], lt, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
            c, u = cache[root] if root in cache else (math.exp(gain(root)), warm[0])
            if notes is not None:
                notes.append(f"amplitude scan: gain crosses 1 at ||u||_p = {math.exp(root):.6g} (c-1 = {c - 1:.2e})")
            return u
        prev = (lt, val)
    if notes is not None:
        notes.append("amplitude scan: gain never crosses 1")
    return None


def existence_search(
    spec: ProblemSpec,
    delta_min: float = 1e-3,
    alphas: Sequence[float] = ALPHA_LADDER,
    start_norms: Sequence[float] = START_NORMS,
    theta: float = 0.5,
    picard_iters: int = 400,
    amplitude_fallback: bool = True,
) -> SearchReport:
    """Certify and locate a nontrivial nonnegative solution of ``A(u) = F(u)``.

    Raises:
        HypothesisError: ``f(x, 0) < 0`` at some node.
    """
    mesh = spec.mesh()
    p = spec.p
    eig = principal_eig(mesh, p, EigOptions(rel_tol=spec.rel_tol, resolve=ResolveOptions(grad_tol=spec.grad_tol)))
    lam = eig.lambda1
    f = spec.f_ast(lam)
    check_tangency(f, mesh)

    explicit = spec.slope_constants(lam)
    if explicit is None:
        est = estimate_asymptotic_slopes(f, mesh, p)
        rho0, rho_inf, stable = est.rho0, est.rho_inf, (est.stable0, est.stable_inf)
    else:
        rho0 = np.full(mesh.n_interior, explicit[0])
        rho_inf = np.full(mesh.n_interior, explicit[1])
        stable = (True, True)
    d0 = degree_at_zero(rho0, lam)
    dinf = degree_at_infinity(rho_inf, lam)
    report = SearchReport(lam, rho0, rho_inf, d0, dinf, None, None, None, 0, "no_certificate",
                          slopes_stable=stable, eig=eig)
    if not all(stable):
        report.notes.append("slope estimate unstable; degree verdicts not trusted")
        return report
    if not (d0.defined and dinf.defined) or d0.value == dinf.value:
        return report

    fp = FixedPointOptions(theta=theta, fp_tol=spec.fp_tol, res_tol=spec.res_tol,
                           max_iters=picard_iters, blowup=100 * max(start_norms),
                           floor=0.1 * delta_min, grad_tol=spec.grad_tol)
    profile = eig.eigfn
    for alpha in alphas:
        for t in start_norms:
            report.starts_tried += 1
            u = find_fixed_point(t * profile, alpha, p, f, fp)
            if u is not None and p_norm(u, p) >= delta_min:
                return _found(report, u, f, p, "picard", alpha)

    if amplitude_fallback:
        alpha = alphas[0]
        cand = amplitude_search(mesh, p, f, profile, alpha, spec.res_tol, spec.grad_tol,
                                start_norms, report.notes)
        if cand is not None:
            report.starts_tried += 1
            polish = FixedPointOptions(**{**fp.__dict__, "max_iters": 50})
            u = find_fixed_point(cand, alpha, p, f, polish)
            if u is not None and p_norm(u, p) >= delta_min:
                return _found(report, u, f, p, "amplitude", alpha)
            report.notes.append(
                f"amplitude candidate rejected: residual {residual_norm(cand, f, p):.3e}"
            )
    report.status = "certificate_but_not_found"
    return report


def _found(report: SearchReport, u: GridFunction, f: Forcing, p: float, method: str, alpha: float) -> SearchReport:
    report.solution = u
    report.residual = residual_norm(u, f, p)
    report.norm_p = p_norm(u, p)
    report.status = "found"
    report.method = method
    report.alpha = alpha
    return report

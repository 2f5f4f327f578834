"""Independent reference computations used by the test-suite.

Nothing here imports the solver modules of ``plapcone`` beyond the mesh
geometry, so these values cannot inherit a bug from the paths they check.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, linalg, optimize


def shooting_first_zero(lam: float, p: float, x_max: float = 10.0) -> float:
    """First positive zero of u for -(|u'|^{p-2}u')' = lam |u|^{p-2} u, u(0)=0, u'(0)=1.

    Integrates the first-order system in ``(u, phi)`` with
    ``phi = |u'|^{p-2} u'`` so that the right-hand side stays continuous.
    """
    q = p / (p - 1.0)

    def rhs(_x, y):
        u, phi = y
        return [math.copysign(abs(phi) ** (q - 1.0), phi), -lam * math.copysign(abs(u) ** (p - 1.0), u)]

    def hit_zero(_x, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    sol = integrate.solve_ivp(
        rhs, (0.0, x_max), [0.0, 1.0], events=hit_zero, rtol=1e-12, atol=1e-14, max_step=0.01
    )
    if not sol.t_events[0].size:
        return math.inf
    return float(sol.t_events[0][0])


def shooting_eigenvalue(p: float, length: float = 1.0) -> float:
    """Principal Dirichlet eigenvalue of the 1D p-Laplacian on (0, length) by shooting + bisection."""
    lo, hi = 1e-3, 1.0
    while shooting_first_zero(hi, p) > length:
        hi *= 2.0
    return float(optimize.brentq(lambda lam: shooting_first_zero(lam, p) - length, lo, hi, xtol=1e-12, rtol=1e-12))


def closed_form_eigenvalue_1d(p: float, length: float = 1.0) -> float:
    """Known closed form ``(p-1) * (pi_p / length)^p`` with ``pi_p = 2 pi / (p sin(pi/p))``."""
    pi_p = 2.0 * math.pi / (p * math.sin(math.pi / p))
    return (p - 1.0) * (pi_p / length) ** p


def laplacian_matrix(mesh) -> np.ndarray:
    """Dense 3-point (1D) or 5-point (2D) Dirichlet Laplacian on interior nodes."""
    if mesh.dim == 1:
        n = mesh.interior_shape[0]
        h = mesh.spacing[0]
        return (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h**2
    nx, ny = mesh.interior_shape
    hx, hy = mesh.spacing
    tx = (2 * np.eye(nx) - np.eye(nx, k=1) - np.eye(nx, k=-1)) / hx**2
    ty = (2 * np.eye(ny) - np.eye(ny, k=1) - np.eye(ny, k=-1)) / hy**2
    # interior nodes are ordered with the x index slowest
    return np.kron(tx, np.eye(ny)) + np.kron(np.eye(nx), ty)


def banded_resolve_p2(mesh, tau: np.ndarray, alpha: float) -> np.ndarray:
    """Solve (I + alpha L_h) u = tau directly (banded in 1D, dense Cholesky in 2D)."""
    if mesh.dim == 1:
        n = mesh.interior_shape[0]
        h = mesh.spacing[0]
        ab = np.zeros((3, n))
        ab[0, 1:] = -alpha / h**2
        ab[1, :] = 1 + 2 * alpha / h**2
        ab[2, :-1] = -alpha / h**2
        return linalg.solve_banded((1, 1), ab, tau)
    a = np.eye(mesh.n_interior) + alpha * laplacian_matrix(mesh)
    return linalg.solve(a, tau, assume_a="pos")


def dense_principal_pair_p2(mesh) -> tuple[float, np.ndarray]:
    vals, vecs = linalg.eigh(laplacian_matrix(mesh))
    v = vecs[:, 0]
    return float(vals[0]), v * np.sign(v.sum())


def brute_force_orthant_distance(t: np.ndarray, w: np.ndarray, q: float) -> float:
    """min over c >= 0 of (sum w |t - c|^q)^{1/q}, by bounded numerical minimization."""
    def obj(c):
        return float(np.dot(w, np.abs(t - c) ** q))

    res = optimize.minimize(
        obj, np.abs(t) + 0.1, method="L-BFGS-B", bounds=[(0, None)] * t.size,
        options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10000},
    )
    return float(res.fun ** (1.0 / q))

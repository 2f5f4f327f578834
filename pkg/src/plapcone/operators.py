"""Energies, their gradients and the positive cone on a :class:`Mesh`.

Primal elements are :class:`GridFunction`; dual elements are
:class:`DualDensity`, the L^q density ``g`` of the functional
``v -> sum_i w_i g_i v_i`` with ``q = p / (p - 1)``.

Derivatives are the calculus-correct ones: the derivative of
``(1/p) * int |u|^p`` is ``|u|^(p-2) u`` with no ``1/p`` in front, and the
density of the derivative of ``(1/p) * int |grad u|^p`` is the discrete
``-div(|grad u|^(p-2) grad u)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import exprlang
from .mesh import GridFunction, Mesh, gradients, gradients_transpose


@dataclass(frozen=True, eq=False)
class DualDensity:
    """L^q density of an element of the dual space."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.mesh.n_interior:
            raise ValueError(f"expected {self.mesh.n_interior} density values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("dual density has non-finite values")
        object.__setattr__(self, "values", v)

    def __add__(self, other: DualDensity) -> DualDensity:
        return DualDensity(self.mesh, self.values + other.values)

    def __sub__(self, other: DualDensity) -> DualDensity:
        return DualDensity(self.mesh, self.values - other.values)

    def __mul__(self, c: float) -> DualDensity:
        return DualDensity(self.mesh, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> DualDensity:
        return DualDensity(self.mesh, -self.values)

    def pair(self, u: GridFunction) -> float:
        """Duality pairing ``<self, u> = sum w g u``."""
        return float(np.dot(self.mesh.quad_weight, self.values * u.values))


@dataclass(frozen=True)
class ConeSpec:
    """Nonnegative orthant of nodal values; positive-part retraction has ``L = 1``."""

    tol_cone: float = 0.0
    retract_constant: float = 1.0

    def contains(self, u: GridFunction | DualDensity) -> bool:
        return bool(np.min(u.values) >= -self.tol_cone)


def conjugate(p: float) -> float:
    return p / (p - 1.0)


def _check_p(p: float) -> None:
    if not p >= 2:
        raise ValueError(f"p must be >= 2, got {p}")


def q_norm(t: DualDensity, p: float) -> float:
    """Weighted L^q norm of a density, ``q`` conjugate to ``p``."""
    q = conjugate(p)
    return float(np.dot(t.mesh.quad_weight, np.abs(t.values) ** q) ** (1.0 / q))


def p_norm(u: GridFunction, p: float) -> float:
    return float(np.dot(u.mesh.quad_weight, np.abs(u.values) ** p) ** (1.0 / p))


# Raw-array kernels, shared with the resolvent's inner loop.


def _flux(g: np.ndarray, p: float) -> np.ndarray:
    if p == 2:
        return g
    mag = np.linalg.norm(g, axis=1) if g.shape[1] > 1 else np.abs(g[:, 0])
    return g * (mag ** (p - 2))[:, None]


def energy_a_values(m: Mesh, values: np.ndarray, p: float) -> float:
    g = gradients(m, values)
    mag2 = np.sum(g * g, axis=1)
    return float(m.cell_measure * np.sum(mag2 ** (p / 2)) / p)


def energy_n_values(m: Mesh, values: np.ndarray, p: float) -> float:
    return float(np.dot(m.quad_weight, np.abs(values) ** p) / p)


def grad_a_values(m: Mesh, values: np.ndarray, p: float) -> np.ndarray:
    """Density of the gradient of ``energy_a`` (nodal partials over weights)."""
    flux = _flux(gradients(m, values), p)
    return m.cell_measure * gradients_transpose(m, flux) / m.quad_weight


def duality_values(values: np.ndarray, p: float) -> np.ndarray:
    if p == 2:
        return values.copy()
    return np.abs(values) ** (p - 2) * values


# Public operations.


def energy_a(u: GridFunction, p: float) -> float:
    """``(1/p) * sum(cell_measure * |grad u|^p)``."""
    _check_p(p)
    return energy_a_values(u.mesh, u.values, p)


def energy_n(u: GridFunction, p: float) -> float:
    """``(1/p) * integrate(|u|^p)``."""
    _check_p(p)
    return energy_n_values(u.mesh, u.values, p)


def grad_a(u: GridFunction, p: float) -> DualDensity:
    """Discrete p-Laplacian ``-div(|grad u|^(p-2) grad u)`` as a density."""
    _check_p(p)
    return DualDensity(u.mesh, grad_a_values(u.mesh, u.values, p))


def duality_map(u: GridFunction, p: float) -> DualDensity:
    """Pointwise ``|u|^(p-2) u``."""
    _check_p(p)
    return DualDensity(u.mesh, duality_values(u.values, p))


def duality_inverse(t: DualDensity, p: float) -> GridFunction:
    """Pointwise ``|t|^(q-2) t``; inverse of :func:`duality_map`."""
    _check_p(p)
    q = conjugate(p)
    v = t.values
    if p == 2:
        return GridFunction(t.mesh, v.copy())
    out = np.zeros_like(v)
    nz = v != 0
    out[nz] = np.abs(v[nz]) ** (q - 2) * v[nz]
    return GridFunction(t.mesh, out)


Forcing = Union[exprlang.Node, Callable[[GridFunction], DualDensity]]


def node_bindings(m: Mesh, s: np.ndarray) -> dict[str, np.ndarray]:
    env = {"s": s, "x1": m.coords[:, 0]}
    if m.dim > 1:
        env["x2"] = m.coords[:, 1]
    return env


def nemytskii(u: GridFunction, f: Forcing, p: float | None = None) -> DualDensity:
    """Superposition density ``f(x_i, max(u_i, 0))``.

    ``f`` is an expression AST in ``x1``, ``x2``, ``s`` (constants such as
    ``p`` and ``L`` already substituted), or a callable returning a
    :class:`DualDensity` directly. ``p`` is substituted when given and the
    expression still refers to it.
    """
    if callable(f):
        return f(u)
    if p is not None and "p" in exprlang.free_variables(f):
        f = exprlang.substitute(f, {"p": p})
    m = u.mesh
    s = np.maximum(u.values, 0.0)
    try:
        vals = exprlang.evaluate(f, node_bindings(m, s))
    except exprlang.EvalError as exc:
        if exc.index is not None:
            x = tuple(float(c) for c in m.coords[exc.index])
            raise exprlang.EvalError(f"{exc.args[0]} at node {exc.index} x={x}", exc.pos, exc.index) from exc
        raise
    return DualDensity(m, np.broadcast_to(np.asarray(vals, dtype=float), s.shape))


def retract_dual(t: DualDensity) -> DualDensity:
    """Positive part; nearest point of the dual cone in every weighted q-norm."""
    return DualDensity(t.mesh, np.maximum(t.values, 0.0))


def dual_cone_distance(t: DualDensity, p: float) -> float:
    """``(sum w * max(-t, 0)^q)^(1/q)``."""
    q = conjugate(p)
    neg = np.maximum(-t.values, 0.0)
    return float(np.dot(t.mesh.quad_weight, neg**q) ** (1.0 / q))


def cone_distance(u: GridFunction, p: float) -> float:
    """Distance in the weighted p-norm from ``u`` to the primal cone."""
    neg = np.maximum(-u.values, 0.0)
    return float(np.dot(u.mesh.quad_weight, neg**p) ** (1.0 / p))


def tangent_cone_member(u: GridFunction, v: np.ndarray, zero_tol: float | None = None) -> bool:
    """Bouligand tangency to the cone at ``u``: ``v >= 0`` wherever ``u == 0``."""
    v = np.asarray(v, dtype=float).ravel()
    if zero_tol is None:
        zero_tol = 1e-12 * float(np.max(np.abs(u.values), initial=0.0))
    zero_set = np.abs(u.values) <= zero_tol
    return bool(np.all(v[zero_set] >= -zero_tol))

"""Uniform tensor grids on intervals and rectangles with zero Dirichlet data.

Unknowns live on interior nodes only; boundary values are identically zero
and never stored. Gradients live on cells (segments in 1D, squares in 2D)
and are forward differences, so that ``(1/p) * sum(cell_measure * |grad|^p)``
is a convex function of the nodal values and is exactly the 3-point (1D) or
5-point (2D) Dirichlet form when ``p == 2``.

Accuracy: cell gradients are first order; at ``p == 2`` the discrete
eigenvalues converge at second order in the spacing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

KINDS = ("interval", "rectangle")


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable uniform grid.

    Attributes:
        kind: ``"interval"`` or ``"rectangle"``.
        extents: physical length per axis.
        nodes_per_axis: node count per axis, boundary nodes included.
        spacing: per-axis spacing ``extent / (count - 1)``.
        interior_shape: shape of the interior node block.
        quad_weight: per-interior-node quadrature weight.
        coords: ``(n_interior, dim)`` coordinates of interior nodes.
    """

    kind: str
    extents: tuple[float, ...]
    nodes_per_axis: tuple[int, ...]
    spacing: tuple[float, ...] = field(init=False)
    interior_shape: tuple[int, ...] = field(init=False)
    quad_weight: np.ndarray = field(init=False, repr=False)
    coords: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        spacing = tuple(L / (n - 1) for L, n in zip(self.extents, self.nodes_per_axis))
        shape = tuple(n - 2 for n in self.nodes_per_axis)
        axes = [h * np.arange(1, n - 1) for h, n in zip(spacing, self.nodes_per_axis)]
        grids = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([g.ravel() for g in grids], axis=1)
        weights = np.full(int(np.prod(shape)), float(np.prod(spacing)))
        weights.setflags(write=False)
        coords.setflags(write=False)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "interior_shape", shape)
        object.__setattr__(self, "quad_weight", weights)
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def n_interior(self) -> int:
        return self.quad_weight.size

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return tuple(n - 1 for n in self.nodes_per_axis)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cell_shape))

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def interior_index(self) -> np.ndarray:
        """Multi-indices of interior nodes in the full node array, shape ``(n, dim)``."""
        idx = np.indices(self.interior_shape).reshape(self.dim, -1).T
        return idx + 1

    @property
    def cell_index(self) -> np.ndarray:
        """Lower-corner node multi-index of every gradient cell, shape ``(n_cells, dim)``."""
        return np.indices(self.cell_shape).reshape(self.dim, -1).T

    def measure(self) -> float:
        return float(np.prod(self.extents))

    def pad(self, values: np.ndarray) -> np.ndarray:
        """Embed interior values into the full node array with zero boundary."""
        full = np.zeros(self.nodes_per_axis)
        full[tuple(slice(1, -1) for _ in self.nodes_per_axis)] = np.reshape(
            values, self.interior_shape
        )
        return full


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values of a function on the interior nodes of ``mesh``."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.mesh.n_interior:
            raise ValueError(
                f"expected {self.mesh.n_interior} interior values, got {v.size}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite values")
        object.__setattr__(self, "values", v)

    def __add__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.mesh, self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.mesh, self.values - other.values)

    def __mul__(self, c: float) -> GridFunction:
        return GridFunction(self.mesh, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> GridFunction:
        return GridFunction(self.mesh, -self.values)


def build_mesh(
    kind: str, extents: float | Sequence[float], nodes_per_axis: int | Sequence[int]
) -> Mesh:
    """Build an interval or rectangle mesh.

    Raises:
        ValueError: unknown kind, fewer than 3 nodes on an axis, nonpositive
            extent, or axis counts inconsistent with ``kind``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown mesh kind {kind!r}; expected one of {KINDS}")
    dim = 1 if kind == "interval" else 2
    ext = (float(extents),) * dim if np.isscalar(extents) else tuple(map(float, extents))
    cnt = (int(nodes_per_axis),) * dim if np.isscalar(nodes_per_axis) else tuple(map(int, nodes_per_axis))
    if len(ext) != dim or len(cnt) != dim:
        raise ValueError(f"{kind} needs {dim} extent(s) and node count(s)")
    if any(n < 3 for n in cnt):
        raise ValueError(f"need at least 3 nodes per axis (one interior node), got {cnt}")
    if any(not np.isfinite(L) or L <= 0 for L in ext):
        raise ValueError(f"extents must be positive, got {ext}")
    return Mesh(kind, ext, cnt)


def integrate(m: Mesh, nodal: np.ndarray) -> float:
    """Interior-node rectangle rule: ``sum(quad_weight * nodal)``."""
    nodal = np.asarray(nodal, dtype=float).ravel()
    if nodal.size != m.n_interior:
        raise ValueError(f"expected {m.n_interior} nodal values, got {nodal.size}")
    return float(np.dot(m.quad_weight, nodal))


def gradients(m: Mesh, values: np.ndarray) -> np.ndarray:
    """Cell gradients of raw interior values, shape ``(n_cells, dim)``."""
    full = m.pad(values)
    if m.dim == 1:
        return (np.diff(full) / m.spacing[0])[:, None]
    hx, hy = m.spacing
    gx = (full[1:, :-1] - full[:-1, :-1]) / hx
    gy = (full[:-1, 1:] - full[:-1, :-1]) / hy
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def cell_gradients(m: Mesh, u: GridFunction) -> np.ndarray:
    """Forward-difference gradient on every cell, shape ``(n_cells, dim)``."""
    if u.mesh is not m and u.mesh.nodes_per_axis != m.nodes_per_axis:
        raise ValueError("grid function lives on a different mesh")
    return gradients(m, u.values)


def gradients_transpose(m: Mesh, flux: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`gradients`: maps per-cell vectors to interior nodal values.

    ``dot(gradients_transpose(m, F).ravel(), v) == sum(F * gradients(m, v))``.
    """
    interior = tuple(slice(1, -1) for _ in range(m.dim))
    if m.dim == 1:
        h = m.spacing[0]
        f = flux[:, 0] / h
        full = np.zeros(m.nodes_per_axis)
        full[:-1] -= f
        full[1:] += f
        return full[interior].ravel()
    hx, hy = m.spacing
    cs = m.cell_shape
    fx = flux[:, 0].reshape(cs) / hx
    fy = flux[:, 1].reshape(cs) / hy
    full = np.zeros(m.nodes_per_axis)
    full[:-1, :-1] -= fx + fy
    full[1:, :-1] += fx
    full[:-1, 1:] += fy
    return full[interior].ravel()


def lp_norm(m: Mesh, values: np.ndarray, p: float) -> float:
    """Weighted discrete L^p norm ``(sum w |v|^p)^(1/p)``."""
    return float(np.dot(m.quad_weight, np.abs(values) ** p) ** (1.0 / p))


def seminorm(m: Mesh, values: np.ndarray, p: float) -> float:
    """Discrete W_0^{1,p} seminorm ``(sum cell_measure |grad|^p)^(1/p)``."""
    g = np.linalg.norm(gradients(m, values), axis=1)
    return float((m.cell_measure * np.sum(g**p)) ** (1.0 / p))

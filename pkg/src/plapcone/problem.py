"""Problem-spec files: flat ``key = value`` text in three INI sections.

Example::

    [domain]
    kind = interval
    extent_x = 1.0
    nodes_x = 129

    [problem]
    p = 3
    f = s^2*(0.5*L + 1.5*L*s/(1+s))

    [solver]
    res_tol = 1e-6
    seed = 0

``f`` may use ``x1``, ``x2``, ``s``, ``p`` and ``L``; ``L`` stands for the
computed principal eigenvalue. ``rho0`` and ``rho_inf`` optionally fix the
asymptotic slopes (numbers or expressions in ``L`` and ``p``) instead of
estimating them from ``f``.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass
from pathlib import Path

from . import exprlang
from .errors import SpecError
from .mesh import build_mesh, Mesh

SECTIONS = {
    "domain": ("kind", "extent_x", "extent_y", "nodes_x", "nodes_y"),
    "problem": ("p", "f", "rho0", "rho_inf"),
    "solver": ("grad_tol", "res_tol", "fp_tol", "rel_tol", "seed"),
}
KEYS = tuple(k for keys in SECTIONS.values() for k in keys)


@dataclass(frozen=True)
class ProblemSpec:
    p: float = 2.0
    kind: str = "interval"
    extent_x: float = 1.0
    extent_y: float | None = None
    nodes_x: int = 65
    nodes_y: int | None = None
    f: str = "0"
    rho0: str | None = None
    rho_inf: str | None = None
    grad_tol: float = 1e-10
    res_tol: float = 1e-6
    fp_tol: float = 1e-8
    rel_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.p >= 2:
            raise SpecError(f"p must be >= 2, got {self.p}")
        if self.kind not in ("interval", "rectangle"):
            raise SpecError(f"kind must be interval or rectangle, got {self.kind!r}")
        if self.kind == "rectangle" and (self.extent_y is None or self.nodes_y is None):
            raise SpecError("rectangle needs extent_y and nodes_y")
        for n in (self.nodes_x, self.nodes_y):
            if n is not None and n < 3:
                raise SpecError(f"grid needs at least 3 nodes per axis, got {n}")
        for e in (self.extent_x, self.extent_y):
            if e is not None and not e > 0:
                raise SpecError(f"extents must be positive, got {e}")
        for name in ("grad_tol", "res_tol", "fp_tol", "rel_tol"):
            if not getattr(self, name) > 0:
                raise SpecError(f"{name} must be positive")
        if (self.rho0 is None) != (self.rho_inf is None):
            raise SpecError("give both rho0 and rho_inf or neither")
        try:
            exprlang.parse(self.f)
            for r in (self.rho0, self.rho_inf):
                if r is not None:
                    exprlang.parse(r, names=("p", "L"))
        except exprlang.ExprSyntaxError as exc:
            raise SpecError(f"bad expression: {exc}") from exc

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    def mesh(self) -> Mesh:
        if self.dim == 1:
            return build_mesh("interval", self.extent_x, self.nodes_x)
        return build_mesh("rectangle", (self.extent_x, self.extent_y), (self.nodes_x, self.nodes_y))

    def f_ast(self, lambda1: float | None = None) -> exprlang.Node:
        """``f`` with ``p`` (and ``L`` when given) substituted."""
        consts = {"p": self.p}
        if lambda1 is not None:
            consts["L"] = lambda1
        return exprlang.parse(self.f, constants=consts)

    def slope_constants(self, lambda1: float) -> tuple[float, float] | None:
        if self.rho0 is None:
            return None
        env = {"p": self.p, "L": lambda1}
        return tuple(
            float(exprlang.evaluate(exprlang.parse(r, names=("p", "L")), env))
            for r in (self.rho0, self.rho_inf)
        )

    def with_overrides(self, overrides: dict[str, str]) -> ProblemSpec:
        return from_mapping({**to_mapping(self), **overrides})

    def dumps(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        flat = to_mapping(self)
        for section, keys in SECTIONS.items():
            cp[section] = {k: flat[k] for k in keys if k in flat}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


_TYPES = {f.name: f.type for f in dataclasses.fields(ProblemSpec)}


def to_mapping(spec: ProblemSpec) -> dict[str, str]:
    out = {}
    for k in KEYS:
        v = getattr(spec, k)
        if v is not None:
            out[k] = repr(v) if isinstance(v, float) else str(v)
    return out


def _convert(key: str, raw: str):
    typ = _TYPES[key]
    try:
        if typ.startswith("float"):
            return float(raw)
        if typ.startswith("int"):
            return int(raw)
    except ValueError:
        raise SpecError(f"{key}: cannot read {raw!r} as {typ.split()[0]}") from None
    return raw.strip()


def from_mapping(flat: dict[str, str]) -> ProblemSpec:
    unknown = set(flat) - set(KEYS)
    if unknown:
        raise SpecError(f"unknown keys: {', '.join(sorted(unknown))}")
    kwargs = {k: _convert(k, v) for k, v in flat.items()}
    try:
        return ProblemSpec(**kwargs)
    except TypeError as exc:
        raise SpecError(str(exc)) from exc


def loads(text: str) -> ProblemSpec:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SpecError(f"unreadable spec file: {exc}") from exc
    flat: dict[str, str] = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise SpecError(f"unknown section [{section}]")
        for k, v in cp[section].items():
            if k not in SECTIONS[section]:
                raise SpecError(f"key {k!r} does not belong in [{section}]")
            flat[k] = v
    return from_mapping(flat)


def load(path: str | Path) -> ProblemSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec file: {exc}") from exc
    return loads(text)


def parse_override(item: str) -> tuple[str, str]:
    key, sep, value = item.partition("=")
    if not sep:
        raise SpecError(f"override must look like key=value, got {item!r}")
    return key.strip(), value.strip()

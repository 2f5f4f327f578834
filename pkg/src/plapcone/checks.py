"""Seeded property suite run by ``plapcone check``.

Each property draws from its own generator, derived from the run seed and
the property's position in :data:`PROPERTIES`, so output is reproducible
byte for byte and adding a property does not perturb the others.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import exprlang
from .degree import degree_linear, existence_search, find_fixed_point, FixedPointOptions, phi_alpha
from .eigensolver import EigOptions, principal_eig, rayleigh
from .errors import HypothesisError
from .mesh import GridFunction, build_mesh, cell_gradients, integrate, seminorm
from .operators import (
    DualDensity,
    duality_inverse,
    duality_map,
    dual_cone_distance,
    energy_a,
    energy_n,
    grad_a,
    p_norm,
    q_norm,
    retract_dual,
)
from .problem import ProblemSpec, loads
from .resolvent import ResolveOptions, resolve


@dataclass
class CheckContext:
    rng: np.random.Generator
    spec: ProblemSpec

    def resolve_opts(self, **kw) -> ResolveOptions:
        return ResolveOptions(grad_tol=self.spec.grad_tol, **kw)


Outcome = tuple[bool, str]
PROPERTIES: list[tuple[str, Callable[[CheckContext], Outcome]]] = []


def prop(name: str):
    def deco(fn):
        PROPERTIES.append((name, fn))
        return fn
    return deco


def _meshes():
    return [build_mesh("interval", 1.0, 17), build_mesh("rectangle", (1.0, 1.5), (7, 9))]


def _rand(ctx: CheckContext, m, positive=False) -> GridFunction:
    v = ctx.rng.uniform(0.0 if positive else -1.0, 1.0, m.n_interior)
    return GridFunction(m, v)


# mesh


@prop("mesh.linearity")
def _(ctx):
    worst = 0.0
    for m in _meshes():
        for _ in range(20):
            u, v = _rand(ctx, m), _rand(ctx, m)
            a, b = ctx.rng.normal(size=2)
            lhs = cell_gradients(m, a * u + b * v)
            rhs = a * cell_gradients(m, u) + b * cell_gradients(m, v)
            scale = np.max(np.abs(lhs)) + np.max(np.abs(rhs)) + 1e-300
            worst = max(worst, float(np.max(np.abs(lhs - rhs)) / scale))
    return worst <= 1e-14, f"max rel deviation {worst:.2e}"


@prop("mesh.poincare_positive")
def _(ctx):
    ok = True
    for m in _meshes():
        for p in (2.0, 3.0):
            for _ in range(20):
                u = _rand(ctx, m)
                ok &= seminorm(m, u.values, p) > 0
            ok &= seminorm(m, np.zeros(m.n_interior), p) == 0
    return ok, "seminorm > 0 on nonzero samples, 0 at zero"


@prop("mesh.integrate_monotone")
def _(ctx):
    ok = True
    for m in _meshes():
        for _ in range(50):
            a = ctx.rng.normal(size=m.n_interior)
            b = a + ctx.rng.uniform(0, 1, m.n_interior)
            ok &= integrate(m, a) <= integrate(m, b)
    return ok, "integrate(a) <= integrate(a + nonneg)"


# exprlang


def _random_ast(rng, depth=0):
    r = rng.uniform()
    if depth > 3 or r < 0.3:
        if rng.uniform() < 0.5:
            return exprlang.Num(float(np.round(rng.uniform(0, 10), 3)))
        return exprlang.Var(str(rng.choice(["s", "x1", "x2"])))
    if r < 0.45:
        return exprlang.Unary(str(rng.choice(["neg"] + list(exprlang.UNARY_FUNCS))), _random_ast(rng, depth + 1))
    op = str(rng.choice(["+", "-", "*", "/", "^", "min", "max"]))
    return exprlang.Binary(op, _random_ast(rng, depth + 1), _random_ast(rng, depth + 1))


@prop("expr.print_parse_roundtrip")
def _(ctx):
    for _ in range(200):
        ast = _random_ast(ctx.rng)
        if exprlang.parse(exprlang.to_text(ast)) != ast:
            return False, f"round-trip mismatch for {exprlang.to_text(ast)}"
    return True, "200 random trees"


@prop("expr.pure")
def _(ctx):
    ast = exprlang.parse("s^(p-1)*(0.5 + 1.5*s/(1+s)) + sin(x1)*max(s, 0.1)", constants={"p": 3})
    env = {"s": ctx.rng.uniform(0, 5, 100), "x1": ctx.rng.uniform(0, 1, 100)}
    a, b = exprlang.evaluate(ast, env), exprlang.evaluate(ast, env)
    return bool(np.array_equal(a, b)), "bit-identical repeated evaluation"


@prop("expr.precedence")
def _(ctx):
    names = ["s", "x1", "x2"]
    for _ in range(50):
        a, b, c = (str(x) for x in ctx.rng.choice(names, 3))
        if exprlang.parse(f"{a}+{b}*{c}") != exprlang.parse(f"{a}+({b}*{c})"):
            return False, f"{a}+{b}*{c}"
        if exprlang.parse(f"{a}^{b}^{c}") != exprlang.parse(f"{a}^({b}^{c})"):
            return False, f"{a}^{b}^{c}"
        if exprlang.parse(f"-{a}^{b}") != exprlang.parse(f"-({a}^{b})"):
            return False, f"-{a}^{b}"
    return True, "a+b*c, right-assoc ^, unary minus below ^"


# operators

PS = (2.0, 2.5, 3.0, 4.0)


@prop("ops.elementary_inequality")
def _(ctx):
    worst = np.inf
    for p in PS:
        for d in (1, 2):
            x = ctx.rng.normal(size=(10_000, d)) * ctx.rng.lognormal(size=(10_000, 1))
            y = ctx.rng.normal(size=(10_000, d)) * ctx.rng.lognormal(size=(10_000, 1))
            nx = np.linalg.norm(x, axis=1, keepdims=True)
            ny = np.linalg.norm(y, axis=1, keepdims=True)
            lhs = np.sum((nx ** (p - 2) * x - ny ** (p - 2) * y) * (x - y), axis=1)
            rhs = 2 ** (2 - p) * np.linalg.norm(x - y, axis=1) ** p
            margin = (lhs - rhs) / np.maximum(np.abs(rhs), 1e-300)
            worst = min(worst, float(margin.min()))
    return worst >= -1e-12, f"min relative margin {worst:.3e}"


@prop("ops.strong_monotonicity_N")
def _(ctx):
    worst = np.inf
    for m in _meshes():
        for p in PS:
            for _ in range(50):
                u, v = _rand(ctx, m), _rand(ctx, m)
                lhs = (duality_map(u, p) - duality_map(v, p)).pair(u - v)
                rhs = 2 ** (2 - p) * p_norm(u - v, p) ** p
                worst = min(worst, (lhs - rhs) / rhs)
    return worst >= -1e-12, f"min relative margin {worst:.3e}"


@prop("ops.strong_monotonicity_A")
def _(ctx):
    worst = np.inf
    for m in _meshes():
        for p in PS:
            for _ in range(50):
                u, v = _rand(ctx, m), _rand(ctx, m)
                lhs = (grad_a(u, p) - grad_a(v, p)).pair(u - v)
                rhs = 2 ** (2 - p) * seminorm(m, (u - v).values, p) ** p
                worst = min(worst, (lhs - rhs) / rhs)
    return worst >= -1e-12, f"min relative margin {worst:.3e}"


@prop("ops.gradient_consistency")
def _(ctx):
    worst = 0.0
    h = 1e-6
    for m in _meshes():
        for p in (2.0, 3.0, 4.0):
            for _ in range(20):
                u, v = _rand(ctx, m), _rand(ctx, m)
                for energy, grad in ((energy_a, grad_a), (energy_n, duality_map)):
                    fd = (energy(u + h * v, p) - energy(u - h * v, p)) / (2 * h)
                    an = grad(u, p).pair(v)
                    worst = max(worst, abs(fd - an) / max(abs(an), 1e-12))
    return worst <= 1e-6, f"max relative FD mismatch {worst:.2e}"


@prop("ops.cone_bijection")
def _(ctx):
    worst = 0.0
    ok = True
    for m in _meshes():
        for p in PS:
            u = _rand(ctx, m, positive=True)
            t = duality_map(u, p)
            ok &= bool(np.all(t.values >= 0))
            back = duality_inverse(t, p)
            ok &= bool(np.all(back.values >= 0))
            worst = max(worst, float(np.max(np.abs(back.values - u.values)) / np.max(np.abs(u.values))))
    return ok and worst <= 1e-12, f"orthant preserved, round-trip error {worst:.2e}"


@prop("ops.positive_part_decreases_energies")
def _(ctx):
    ok = True
    for m in _meshes():
        for p in PS:
            for _ in range(30):
                u = _rand(ctx, m)
                up = GridFunction(m, np.maximum(u.values, 0))
                um = GridFunction(m, np.maximum(-u.values, 0))
                ok &= bool(np.allclose((up - um).values, u.values, rtol=0, atol=0))
                ok &= energy_n(up, p) <= energy_n(u, p) * (1 + 1e-14)
                ok &= energy_a(up, p) <= energy_a(u, p) * (1 + 1e-14)
    return ok, "energy_n(u+) <= energy_n(u), energy_a(u+) <= energy_a(u), 1D and 2D"


@prop("ops.retraction_is_nearest")
def _(ctx):
    from scipy import optimize

    worst = 0.0
    m = build_mesh("interval", 1.0, 7)
    w = m.quad_weight
    for p in (2.0, 3.0):
        q = p / (p - 1)
        for _ in range(10):
            t = DualDensity(m, ctx.rng.normal(size=m.n_interior))
            res = optimize.minimize(
                lambda c: float(np.dot(w, np.abs(t.values - c) ** q)),
                np.abs(t.values) + 0.1, method="L-BFGS-B", bounds=[(0, None)] * m.n_interior,
                options={"ftol": 1e-15, "gtol": 1e-12},
            )
            brute = res.fun ** (1 / q)
            disp = q_norm(retract_dual(t) - t, p)
            worst = max(worst, abs(disp - brute), abs(disp - dual_cone_distance(t, p)))
    return worst <= 1e-5, f"max |displacement - distance| {worst:.2e}"


# resolvent


def _resolve_cases(ctx, n):
    meshes = [build_mesh("interval", 1.0, 17), build_mesh("rectangle", 1.0, 9)]
    for i in range(n):
        m = meshes[i % 2]
        p = float(ctx.rng.choice([2.0, 3.0]))
        alpha = float(10 ** ctx.rng.uniform(-2, 0))
        yield m, p, alpha, DualDensity(m, ctx.rng.normal(size=m.n_interior))


@prop("resolve.stationarity")
def _(ctx):
    worst = 0.0
    for m, p, alpha, tau in _resolve_cases(ctx, 20):
        res = resolve(tau, alpha, p, ctx.resolve_opts())
        r = q_norm(duality_map(res.u, p) + alpha * grad_a(res.u, p) - tau, p)
        worst = max(worst, r / (q_norm(tau, p) + 1))
    return worst <= 1e-8, f"max relative stationarity residual {worst:.2e}"


@prop("resolve.uniqueness")
def _(ctx):
    worst = 0.0
    for m, p, alpha, tau in _resolve_cases(ctx, 10):
        a = resolve(tau, alpha, p, ctx.resolve_opts(warm_start=GridFunction(m, ctx.rng.normal(size=m.n_interior))))
        b = resolve(tau, alpha, p, ctx.resolve_opts(warm_start=GridFunction(m, 5 * ctx.rng.normal(size=m.n_interior))))
        worst = max(worst, p_norm(a.u - b.u, p) / (p_norm(a.u, p) + 1))
    return worst <= 10 * ctx.spec.grad_tol, f"max relative disagreement {worst:.2e}"


@prop("resolve.monotone_descent")
def _(ctx):
    worst = 0.0
    for m, p, alpha, tau in _resolve_cases(ctx, 10):
        res = resolve(tau, alpha, p, ctx.resolve_opts())
        obj = np.asarray(res.objective)
        if obj.size > 1:
            worst = max(worst, float(np.max(np.diff(obj)) / (np.max(np.abs(obj)) + 1)))
    return worst <= 1e-13, f"max relative increase {worst:.2e}"


@prop("resolve.cone_invariance")
def _(ctx):
    worst = 0.0
    for m, p, alpha, tau in _resolve_cases(ctx, 30):
        tau = DualDensity(m, np.abs(tau.values))
        u = resolve(tau, alpha, p, ctx.resolve_opts()).u.values
        worst = max(worst, float(-u.min() / u.max()))
    return worst <= 1e-9, f"max relative undershoot {max(worst, 0.0):.2e}"


# eigensolver


def _eig_cases():
    return [(build_mesh("interval", 1.0, 33), 2.0), (build_mesh("interval", 1.0, 33), 3.0),
            (build_mesh("rectangle", 1.0, 9), 3.0)]


@prop("eig.minimality")
def _(ctx):
    worst = np.inf
    for m, p in _eig_cases():
        res = principal_eig(m, p, EigOptions(resolve=ctx.resolve_opts()))
        u = res.eigfn.values
        for k in range(50):
            # half rough random fields, half small perturbations of the eigenfunction
            if k % 2:
                v = ctx.rng.uniform(0, 1, m.n_interior) + 1e-3
            else:
                v = np.abs(u * (1 + 10.0 ** -(1 + k % 5) * ctx.rng.normal(size=u.size)))
            worst = min(worst, rayleigh(GridFunction(m, v), p) - (res.lambda1 - 1e-6))
    return worst >= 0, f"min rayleigh(v) - lambda1 = {worst:.3e}"


@prop("eig.positivity")
def _(ctx):
    worst = np.inf
    for m, p in _eig_cases():
        u = principal_eig(m, p, EigOptions(resolve=ctx.resolve_opts())).eigfn.values
        worst = min(worst, float(u.min() / u.max()))
    return worst >= 1e-8, f"min/max of eigenfunction {worst:.3e}"


@prop("eig.start_scaling")
def _(ctx):
    worst = 0.0
    for m, p in _eig_cases():
        a = principal_eig(m, p, EigOptions(resolve=ctx.resolve_opts()))
        start = GridFunction(m, 10 * np.ones(m.n_interior))
        b = principal_eig(m, p, EigOptions(start=start, resolve=ctx.resolve_opts()))
        worst = max(worst, abs(a.lambda1 - b.lambda1) / a.lambda1, p_norm(a.eigfn - b.eigfn, p))
    return worst <= 1e-6, f"max deviation {worst:.2e}"


@prop("eig.positive_lambda")
def _(ctx):
    lams = [principal_eig(m, p, EigOptions(resolve=ctx.resolve_opts())).lambda1 for m, p in _eig_cases()]
    return min(lams) > 0, "lambda1 > 0"


# degree


@prop("degree.fixed_point_equivalence")
def _(ctx):
    m = build_mesh("interval", 1.0, 33)
    p, alpha = 3.0, 0.1
    x = m.coords[:, 0]
    u = GridFunction(m, np.sin(np.pi * x))  # concave, so A(u) >= 0 and r is inactive
    target = grad_a(u, p)
    gaps = []
    for eps in (1e-1, 1e-3, 1e-5):
        g = target + DualDensity(m, eps * ctx.rng.uniform(0, 1, m.n_interior))
        gaps.append(p_norm(phi_alpha(u, alpha, p, lambda _u, g=g: g, ctx.resolve_opts(warm_start=u)) - u, p))
    ok = gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-4
    return ok, "gaps " + ", ".join(f"{gp:.2e}" for gp in gaps)


@prop("degree.verdict_scale_invariance")
def _(ctx):
    for _ in range(50):
        lam = float(ctx.rng.uniform(1, 100))
        rho = lam + ctx.rng.uniform(-1, 1, 20)
        base = degree_linear(rho, lam).value
        for scale in (1e-6, 1e-2, 10.0):
            if degree_linear(lam + scale * (rho - lam), lam).value != base:
                return False, "verdict changed under rescaling of rho - lambda1"
    return True, "verdict depends only on the sign pattern"


@prop("degree.annulus_rule")
def _(ctx):
    spec = ProblemSpec(p=3, nodes_x=33, f="s^2*(2*L - 1.5*L*s/(1+s))", grad_tol=ctx.spec.grad_tol)
    rep = existence_search(spec, amplitude_fallback=False)
    differ = rep.deg_zero.value != rep.deg_inf.value and rep.deg_zero.defined and rep.deg_inf.defined
    ok = rep.status != "found" or differ
    eq = existence_search(ProblemSpec(p=3, nodes_x=33, f="0.5*L*s^(p-1)"))
    ok &= eq.status == "no_certificate" and eq.solution is None
    return ok, f"crossing: {rep.status}; equal slopes: {eq.status}"


@prop("degree.tangency_gate")
def _(ctx):
    try:
        existence_search(ProblemSpec(p=3, nodes_x=9, f="s^2 - 0.1"))
    except HypothesisError:
        return True, "f(x,0) < 0 refused"
    return False, "f(x,0) < 0 accepted"


@prop("degree.picard_recovers_manufactured")
def _(ctx):
    m = build_mesh("interval", 1.0, 33)
    p = 3.0
    x = m.coords[:, 0]
    star = GridFunction(m, np.sin(np.pi * x))
    g = grad_a(star, p)
    opts = FixedPointOptions(res_tol=1e-6, grad_tol=ctx.spec.grad_tol)
    u = find_fixed_point(0.9 * star, 0.1, p, lambda _u: g, opts)
    if u is None:
        return False, "no fixed point"
    return bool(p_norm(u - star, p) <= 1e-4), f"distance to manufactured solution {p_norm(u - star, p):.2e}"


# cli


@prop("cli.spec_roundtrip")
def _(ctx):
    specs = [
        ProblemSpec(),
        ProblemSpec(p=3, kind="rectangle", extent_y=2.0, nodes_x=9, nodes_y=11, f="s^2*(0.5*L)",
                    rho0="0.5*L", rho_inf="2*L", seed=7),
    ]
    for _ in range(10):
        specs.append(ProblemSpec(p=float(ctx.rng.uniform(2, 5)), nodes_x=int(ctx.rng.integers(3, 200)),
                                 grad_tol=float(10 ** ctx.rng.uniform(-12, -6)), f="s^(p-1)"))
    ok = all(loads(s.dumps()) == s for s in specs)
    return ok, f"{len(specs)} specs"


@prop("cli.determinism")
def _(ctx):
    spec = ProblemSpec(p=3, nodes_x=17, grad_tol=ctx.spec.grad_tol)
    a = principal_eig(spec.mesh(), spec.p)
    b = principal_eig(spec.mesh(), spec.p)
    ok = a.lambda1 == b.lambda1 and np.array_equal(a.eigfn.values, b.eigfn.values)
    return ok, "repeated eigen solve identical"


def run_checks(seed: int = 0, spec: ProblemSpec | None = None) -> list[tuple[str, bool, str]]:
    spec = spec or ProblemSpec(seed=seed)
    results = []
    for i, (name, fn) in enumerate(PROPERTIES):
        ctx = CheckContext(np.random.default_rng([seed, i]), spec)
        try:
            ok, detail = fn(ctx)
        except Exception as exc:  # a crashing property is a failing property
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results

import numpy as np
import pytest

from plapcone.degree import (
    FixedPointOptions,
    amplitude_search,
    degree_at_infinity,
    degree_at_zero,
    degree_linear,
    estimate_asymptotic_slopes,
    existence_search,
    find_fixed_point,
    phi_alpha,
    residual_norm,
)
from plapcone.eigensolver import principal_eig
from plapcone.errors import HypothesisError
from plapcone.exprlang import parse
from plapcone.mesh import GridFunction, build_mesh
from plapcone.operators import grad_a, p_norm
from plapcone.problem import ProblemSpec

M = build_mesh("interval", 1.0, 33)
LAM = 10.0


def manufactured(m, p):
    u = GridFunction(m, np.sin(np.pi * m.coords[:, 0]))
    target = grad_a(u, p)
    return u, lambda _v: target


@pytest.mark.parametrize("factor,value", [(0.1, 1), (0.5, 1), (0.9, 1), (1.1, 0), (2.0, 0), (10.0, 0)])
def test_degree_table(factor, value):
    v = degree_linear(factor * LAM, LAM)
    assert v.value == value and v.defined
    assert v.basis == ("rho_below" if value == 1 else "rho_above")


def test_undefined_verdicts():
    mixed = np.where(np.arange(10) < 5, 0.5 * LAM, 2 * LAM)
    assert degree_linear(mixed, LAM).value is None
    assert not degree_linear(mixed, LAM).defined
    assert degree_linear(LAM, LAM).value is None
    with pytest.raises(ValueError):
        degree_linear([np.inf], LAM)


def test_zero_and_infinity_wrappers():
    assert degree_at_zero(0.5 * LAM, LAM).value == 1
    assert degree_at_infinity(2 * LAM, LAM).value == 0
    assert degree_at_zero(2 * LAM, LAM).value == 0
    assert degree_at_zero([0.5 * LAM, 2 * LAM], LAM).value is None


def test_verdict_depends_only_on_sign_pattern():
    rng = np.random.default_rng(0)
    rho = LAM + rng.normal(size=20)
    for c in (1e-6, 0.3, 7.0):
        assert degree_linear(LAM + c * (rho - LAM), LAM).value == degree_linear(rho, LAM).value
    below = LAM - np.abs(rng.normal(size=20)) - 1e-3
    for c in (1e-6, 0.3, 0.99):
        assert degree_linear(LAM - c * (LAM - below), LAM).value == 1


def test_slopes_power_law():
    est = estimate_asymptotic_slopes(parse("4.5*s^(p-1)", constants={"p": 3}), M, 3)
    np.testing.assert_allclose(est.rho0, 4.5, rtol=1e-6)
    np.testing.assert_allclose(est.rho_inf, 4.5, rtol=1e-6)
    assert est.stable0 and est.stable_inf


def test_slopes_crossover():
    f = parse("s^(p-1)*(2 + (7-2)*s/(1+s))", constants={"p": 3})
    rho0, rho_inf = estimate_asymptotic_slopes(f, M, 3)
    np.testing.assert_allclose(rho0, 2, rtol=1e-3)
    np.testing.assert_allclose(rho_inf, 7, rtol=1e-3)


def test_slopes_unstable_for_low_power():
    est = estimate_asymptotic_slopes(parse("s"), M, 3)
    assert not est.stable0


def test_slopes_refuse_negative_at_zero():
    with pytest.raises(HypothesisError, match="node 0"):
        estimate_asymptotic_slopes(parse("s^2 - 1"), M, 3)


def test_phi_trivial_and_contracting():
    zero = GridFunction(M, np.zeros(M.n_interior))
    np.testing.assert_array_equal(phi_alpha(zero, 0.1, 3, parse("0")).values, 0.0)
    u = GridFunction(M, np.random.default_rng(1).random(M.n_interior))
    assert p_norm(phi_alpha(u, 0.5, 2, parse("0")), 2) < p_norm(u, 2)
    with pytest.raises(ValueError):
        phi_alpha(u, 0.0, 2, parse("0"))


@pytest.mark.parametrize("p", [2, 3])
def test_manufactured_fixed_point(p):
    u, f = manufactured(M, p)
    assert p_norm(phi_alpha(u, 0.1, p, f) - u, p) <= 1e-6 * p_norm(u, p)
    warm = GridFunction(M, 0.9 * u.values)
    got = find_fixed_point(warm, 0.1, p, f, FixedPointOptions(res_tol=1e-6))
    assert got is not None
    assert residual_norm(got, f, p) <= 1e-5
    assert p_norm(got - u, p) <= 1e-4


def test_zero_forcing_converges_to_zero():
    u0 = GridFunction(M, np.ones(M.n_interior))
    got = find_fixed_point(u0, 0.1, 2, parse("0"), FixedPointOptions(fp_tol=1e-10))
    assert got is not None and p_norm(got, 2) < 1e-6


def test_superlinear_small_start_escapes():
    lam = principal_eig(M, 3).lambda1
    f = parse(f"{2 * lam}*s^(p-1)", constants={"p": 3})
    trace = []
    u0 = GridFunction(M, 1e-3 * np.ones(M.n_interior))
    assert find_fixed_point(u0, 0.1, 3, f, FixedPointOptions(max_iters=200, blowup=1.0), trace) is None
    assert trace[-1] > 1.0


def test_fixed_point_rejects_start_outside_cone():
    with pytest.raises(ValueError):
        find_fixed_point(GridFunction(M, -np.ones(M.n_interior)), 0.1, 3, parse("0"))


def spec(f, **kw):
    return ProblemSpec(p=3.0, nodes_x=33, f=f, **kw)


def test_search_clause_two_finds_solution():
    rep = existence_search(spec("s^2*(2*L - 1.5*L*s/(1+s))"))
    assert rep.status == "found"
    assert rep.deg_zero.value == 0 and rep.deg_inf.value == 1
    assert rep.residual <= 1e-6 and rep.norm_p >= 1e-3
    assert rep.solution.values.min() >= 0


def test_search_clause_one_finds_solution():
    rep = existence_search(spec("s^2*(0.5*L + 1.5*L*s/(1+s))"))
    assert rep.status == "found"
    assert rep.deg_zero.value == 1 and rep.deg_inf.value == 0
    assert rep.residual <= 1e-6 and rep.norm_p >= 1e-3


def test_search_equal_slopes_has_no_certificate():
    rep = existence_search(spec("0.5*L*s^(p-1)"))
    assert rep.status == "no_certificate"
    assert rep.solution is None and rep.starts_tried == 0


def test_search_unstable_slopes_has_no_certificate():
    rep = existence_search(spec("s"))
    assert rep.status == "no_certificate" and rep.solution is None
    assert rep.slopes_stable == (False, True)


def test_search_explicit_slopes_override_estimation():
    rep = existence_search(spec("0.5*L*s^(p-1)", rho0="0.5*L", rho_inf="0.5*L"))
    assert rep.status == "no_certificate" and rep.deg_zero.value == rep.deg_inf.value == 1


def test_search_refuses_negative_forcing_at_zero():
    with pytest.raises(HypothesisError):
        existence_search(spec("s^2 - 0.1"))


def test_amplitude_search_without_crossing():
    lam = principal_eig(M, 3).lambda1
    f = parse(f"{0.5 * lam}*s^2")
    notes = []
    prof = GridFunction(M, np.sin(np.pi * M.coords[:, 0]))
    assert amplitude_search(M, 3, f, prof, 0.1, 1e-6, norms=(0.1, 1.0, 10.0), notes=notes) is None
    assert "never crosses" in notes[-1]

"""Positive solutions of discrete p-Laplacian problems via coincidence degree on the positive cone."""

from .degree import (
    DegreeVerdict,
    SearchReport,
    degree_at_infinity,
    degree_at_zero,
    degree_linear,
    estimate_asymptotic_slopes,
    existence_search,
    find_fixed_point,
    phi_alpha,
)
from .eigensolver import EigOptions, EigResult, principal_eig, rayleigh
from .errors import HypothesisError, SolverError, SpecError
from .exprlang import EvalError, ExprSyntaxError, evaluate, parse
from .mesh import GridFunction, Mesh, build_mesh, gradients, integrate
from .operators import duality_inverse, duality_map, energy_a, energy_n, grad_a, nemytskii
from .problem import ProblemSpec
from .resolvent import ResolveOptions, ResolveResult, resolve, resolve_family

__version__ = "0.1.0"

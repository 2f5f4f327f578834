"""Command-line front end.

    plapcone eig    --spec FILE [--out DIR] [--override key=value ...]
    plapcone solve  --spec FILE [--out DIR] [--override key=value ...]
    plapcone degree --spec FILE [--out DIR] [--override key=value ...]
    plapcone check  [--seed N] [--spec FILE] [--out DIR] [--override key=value ...]

Each command prints one JSON object (stable key order) and, with ``--out``,
writes it to ``summary.json``; ``eig`` and a successful ``solve`` also write
``profile.csv`` (node coordinates and value, boundary nodes included).

Exit codes: 0 success (converged, found, no_certificate, certified, all
properties pass); 1 completed without success (certificate_but_not_found,
non-converged eigen iteration, failing property); 2 spec or parse error;
3 hypothesis violation; 4 solver hard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exprlang
from .checks import run_checks
from .degree import SearchReport, degree_at_infinity, degree_at_zero, estimate_asymptotic_slopes, existence_search, check_tangency
from .eigensolver import EigOptions, EigResult, principal_eig
from .errors import HypothesisError, SolverError, SpecError
from .mesh import GridFunction
from .problem import ProblemSpec, load, parse_override, to_mapping
from .resolvent import ResolveOptions

EXIT_OK, EXIT_UNSUCCESSFUL, EXIT_SPEC, EXIT_HYPOTHESIS, EXIT_SOLVER = 0, 1, 2, 3, 4
OK_STATUSES = {"converged", "found", "no_certificate", "certified", "all_properties_pass"}


@dataclass
class RunSummary:
    command: str
    status: str
    spec: dict | None = None
    lambda1: float | None = None
    verdicts: dict | None = None
    solution: dict | None = None
    iterations: dict = field(default_factory=dict)
    message: str | None = None
    wall_time: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "status": self.status,
            "spec": self.spec,
            "lambda1": self.lambda1,
            "verdicts": self.verdicts,
            "solution": self.solution,
            "iterations": self.iterations,
            "message": self.message,
        }
        out.update(self.extra)
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out

    def dumps(self) -> str:
        return json.dumps(_finite(self.to_dict()), indent=2) + "\n"


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def write_profile(path: Path, u: GridFunction) -> None:
    m = u.mesh
    full = m.pad(u.values)
    axes = [h * np.arange(n) for h, n in zip(m.spacing, m.nodes_per_axis)]
    grids = np.meshgrid(*axes, indexing="ij")
    names = ["x1", "x2"][: m.dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["value"])
        for idx in np.ndindex(full.shape):
            w.writerow([repr(float(g[idx])) for g in grids] + [repr(float(full[idx]))])


def _verdict_dict(v) -> dict:
    return {"value": v.value, "basis": v.basis, **v.rho_summary}


def _eig(spec: ProblemSpec) -> EigResult:
    return principal_eig(
        spec.mesh(), spec.p, EigOptions(rel_tol=spec.rel_tol, resolve=ResolveOptions(grad_tol=spec.grad_tol))
    )


def cmd_eig(spec: ProblemSpec, out: Path | None) -> RunSummary:
    res = _eig(spec)
    summary = RunSummary(
        "eig",
        "converged" if res.converged else "not_converged",
        lambda1=res.lambda1,
        solution={"residual": res.residual, "norm_p": 1.0, "max": float(res.eigfn.values.max()),
                  "min": float(res.eigfn.values.min())},
        iterations={"outer": res.iterations, "resolve": res.resolve_iterations},
    )
    if out is not None:
        write_profile(out / "profile.csv", res.eigfn)
    return summary


def cmd_solve(spec: ProblemSpec, out: Path | None) -> RunSummary:
    rep: SearchReport = existence_search(spec)
    solution = None
    if rep.solution is not None:
        solution = {"residual": rep.residual, "norm_p": rep.norm_p, "max": float(rep.solution.values.max()),
                    "method": rep.method, "alpha": rep.alpha}
        if out is not None:
            write_profile(out / "profile.csv", rep.solution)
    return RunSummary(
        "solve",
        rep.status,
        lambda1=rep.lambda1,
        verdicts={"zero": _verdict_dict(rep.deg_zero), "infinity": _verdict_dict(rep.deg_inf)},
        solution=solution,
        iterations={"eig_outer": rep.eig.iterations, "starts_tried": rep.starts_tried},
        message="; ".join(rep.notes) or None,
        extra={"slopes_stable": {"zero": rep.slopes_stable[0], "infinity": rep.slopes_stable[1]}},
    )


def cmd_degree(spec: ProblemSpec, out: Path | None) -> RunSummary:
    res = _eig(spec)
    lam = res.lambda1
    mesh = spec.mesh()
    f = spec.f_ast(lam)
    check_tangency(f, mesh)
    explicit = spec.slope_constants(lam)
    if explicit is None:
        est = estimate_asymptotic_slopes(f, mesh, spec.p)
        rho0, rho_inf, stable = est.rho0, est.rho_inf, (est.stable0, est.stable_inf)
    else:
        rho0, rho_inf, stable = np.full(mesh.n_interior, explicit[0]), np.full(mesh.n_interior, explicit[1]), (True, True)
    d0, dinf = degree_at_zero(rho0, lam), degree_at_infinity(rho_inf, lam)
    if not all(stable):
        conclusion, status = "slope estimate unstable", "no_certificate"
    elif not (d0.defined and dinf.defined):
        conclusion, status = "undefined verdict", "no_certificate"
    elif d0.value != dinf.value:
        conclusion, status = "nontrivial solution certified", "certified"
    else:
        conclusion, status = "no certificate", "no_certificate"
    return RunSummary(
        "degree",
        status,
        lambda1=lam,
        verdicts={"zero": _verdict_dict(d0), "infinity": _verdict_dict(dinf),
                  "annulus": None if not (d0.defined and dinf.defined) else dinf.value - d0.value},
        iterations={"eig_outer": res.iterations},
        message=conclusion,
        extra={"slopes_stable": {"zero": stable[0], "infinity": stable[1]}},
    )


def cmd_check(spec: ProblemSpec, out: Path | None) -> RunSummary:
    results = run_checks(spec.seed, spec)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in results]
    for line in lines:
        print(line)
    failed = [name for name, ok, _ in results if not ok]
    if out is not None:
        (out / "check_report.txt").write_text("\n".join(lines) + "\n")
    return RunSummary(
        "check",
        "all_properties_pass" if not failed else "properties_failed",
        extra={"properties": {name: ok for name, ok, _ in results}, "failed": failed},
    )


COMMANDS = {"eig": cmd_eig, "solve": cmd_solve, "degree": cmd_degree, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plapcone", description="Positive solutions of p-Laplacian problems on a cone.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--spec", type=Path, required=name != "check", help="problem-spec file")
        sp.add_argument("--out", type=Path, help="directory for summary.json and artifacts")
        sp.add_argument("--seed", type=int, help="seed (overrides the seed in the spec file)")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a spec key; repeatable")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out: Path | None = args.out
    summary: RunSummary
    spec = None
    try:
        spec = load(args.spec) if args.spec is not None else ProblemSpec()
        overrides = dict(parse_override(item) for item in args.override)
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        if overrides:
            spec = spec.with_overrides(overrides)
    except (SpecError, exprlang.ExprSyntaxError) as exc:
        summary, code = RunSummary(args.command, "spec_error", message=str(exc)), EXIT_SPEC
    else:
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        try:
            summary = COMMANDS[args.command](spec, out)
            code = EXIT_OK if summary.status in OK_STATUSES else EXIT_UNSUCCESSFUL
        except HypothesisError as exc:
            summary, code = RunSummary(args.command, "hypothesis_violation", message=str(exc)), EXIT_HYPOTHESIS
        except (SolverError, exprlang.EvalError) as exc:
            summary, code = RunSummary(args.command, "solver_error", message=str(exc)), EXIT_SOLVER
        summary.spec = to_mapping(spec)
        if args.command != "check":
            summary.wall_time = round(time.perf_counter() - start, 3)
    text = summary.dumps()
    if args.command != "check" or code != EXIT_OK or out is None:
        sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(text)
    if code != EXIT_OK:
        print(f"plapcone {args.command}: {summary.status}: {summary.message or ''}".rstrip(": "), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

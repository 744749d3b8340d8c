"""Command line driver: ``dmhfem solve|converge|sweep|check --config FILE``.

Exit status 0 on success, 1 for configuration errors, 2 for numerical
failures.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analytic import AnalyticError, AnalyticSolution, active_solution, nonactive_solution
from .assembly import SolverError, assemble_reduced, solve, write_matrix_market
from .condensation import SingularElementError, element_system
from .config import ConfigError, RunConfig, load, with_case
from .mesh import MeshError, build_cube_mesh
from .postprocess import (
    ErrorReport,
    compute_errors,
    line_profile,
    observed_orders,
    profile_metrics,
    recover_fields,
    write_errors_csv,
    write_fields_vtk,
    write_profile_csv,
)
from .problem import Dirichlet, Neumann, ProblemError, ProblemSpec
from .stabilization import diameter_peclet, local_peclet
from .wellposedness import WellposednessError, smallness

log = logging.getLogger("dmhfem")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _constant(x) -> bool:
    return not callable(x)


def reference_solution(spec: ProblemSpec, mode: str = "auto") -> AnalyticSolution | None:
    """Closed-form solution matching ``spec``, if the data allow one.

    Needs constant coefficients with v = (0, 0, v_z), r > 0, u = 0 at the
    bottom, u = 1 at the top and zero flux on the lateral sides. ``auto``
    returns None when these do not hold; ``nonactive``/``active`` raise.
    """
    if mode == "none":
        return None
    problems = []
    o1, o2 = spec.omega1, spec.omega2
    for c in (o1, o2):
        if not all(_constant(getattr(c, k)) for k in ("mu", "r", "g", "v")):
            problems.append("coefficients must be constants")
        elif c.v[0] != 0 or c.v[1] != 0:
            problems.append("advection must be along z")
        elif c.r <= 0:
            problems.append("reaction must be positive")
    if not (_constant(spec.kappa) and _constant(spec.sigma)):
        problems.append("kappa and sigma must be constants")
    bcs = spec.bcs
    if bcs["bottom"] != Dirichlet(0.0) or bcs["top"] != Dirichlet(1.0):
        problems.append("needs u=0 at the bottom and u=1 at the top")
    if any(bcs[s] != Neumann(0.0) for s in ("x0", "x1", "y0", "y1")):
        problems.append("needs zero flux on the lateral sides")
    if problems:
        if mode == "auto":
            return None
        raise ConfigError(f"no analytic solution for this data: {problems[0]}")
    same = (o1.mu, o1.r, o1.g, o1.v) == (o2.mu, o2.r, o2.g, o2.v)
    plain = same and spec.kappa == 1 and spec.sigma == 0
    if mode == "nonactive" and not plain:
        raise ConfigError("nonactive analytic solution needs kappa=1, sigma=0 and equal subdomains")
    if plain and mode != "active":
        return nonactive_solution(o1.mu, o1.r, o1.g, o1.v[2])
    return active_solution(
        (o1.mu, o2.mu), (o1.r, o2.r), (o1.g, o2.g), (o1.v[2], o2.v[2]), spec.kappa, spec.sigma
    )


@dataclass(frozen=True)
class RunResult:
    mesh: object
    system: object
    reduced: object
    solution: object
    fields: object


def run_pipeline(spec: ProblemSpec, n: int, mesh=None) -> RunResult:
    mesh = mesh if mesh is not None else build_cube_mesh(n)
    t0 = time.perf_counter()
    system = element_system(mesh, spec)
    reduced = assemble_reduced(mesh, spec, system.condensed)
    sol = solve(reduced, mesh)
    fields = recover_fields(sol, system.condensed, mesh)
    log.info(
        "n=%d: %d elements, %d unknowns, residual %.2e, %.2fs",
        mesh.n, mesh.num_elements, reduced.dofmap.count, sol.residual, time.perf_counter() - t0,
    )
    return RunResult(mesh, system, reduced, sol, fields)


def _fmt(x) -> str:
    return f"{x:.10e}" if isinstance(x, float) else str(x)


def cmd_solve(cfg: RunConfig, out: Path, vtk: bool = False, export_matrix: bool = False) -> int:
    exact = reference_solution(cfg.spec, cfg.analytic)
    res = run_pipeline(cfg.spec, cfg.n)
    if exact is not None:
        rep = compute_errors(res.fields, exact, res.mesh)
        write_errors_csv(out / "errors.csv", [rep])
        for k, v in zip(ErrorReport.header(), rep.row()):
            print(f"{k} = {_fmt(v)}")
    write_profile_csv(out / "profile.csv", line_profile(res.fields, res.mesh))
    if vtk:
        write_fields_vtk(out / "solution.vtk", res.fields, res.mesh)
    if export_matrix:
        write_matrix_market(out / "system", res.reduced)
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out: Path, vtk: bool = False, export_matrix: bool = False) -> int:
    exact = reference_solution(cfg.spec, cfg.analytic)
    if exact is None:
        raise ConfigError("converge needs an analytic reference solution")
    reports = []
    for n in cfg.n_list:
        res = run_pipeline(cfg.spec, n)
        reports.append(compute_errors(res.fields, exact, res.mesh))
        if vtk:
            write_fields_vtk(out / f"solution_n{n}.vtk", res.fields, res.mesh)
    write_errors_csv(out / "errors.csv", reports)
    header = ErrorReport.header()
    print(",".join(header))
    for rep in reports:
        print(",".join(_fmt(v) for v in rep.row()))
    orders = observed_orders(reports)
    if orders:
        names = header[2:]
        with open(out / "orders.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n_coarse", "n_fine"] + names)
            for (a, b), o in zip(zip(reports, reports[1:]), orders):
                w.writerow([a.n, b.n] + [f"{o[k]:.4f}" for k in names])
        print("observed orders")
        for (a, b), o in zip(zip(reports, reports[1:]), orders):
            print(f"  {a.n}->{b.n}: " + ", ".join(f"{k}={o[k]:.3f}" for k in names))
    return EXIT_OK


SWEEP_HEADER = [
    "case", "mu", "v_z", "pe_edge", "pe_diameter", "mode",
    "overshoot", "undershoot", "profile_min", "profile_max", "err_u_maxh",
]


def cmd_sweep(cfg: RunConfig, out: Path, vtk: bool = False, export_matrix: bool = False) -> int:
    if not cfg.sweep_cases:
        raise ConfigError("sweep needs sweep.cases")
    mesh = build_cube_mesh(cfg.n)
    geo = mesh.geometry
    rows = []
    for i, (mu, vz) in enumerate(cfg.sweep_cases, 1):
        v = np.array([0.0, 0.0, vz])
        pe_edge = float(local_peclet(geo.edges, v, mu).max())
        pe_diam = float(diameter_peclet(geo.diameter.max(), v, mu))
        base = with_case(cfg.spec, mu, vz, cfg.sweep_target)
        exact = reference_solution(base, cfg.analytic)
        for mode in cfg.sweep_modes:
            res = run_pipeline(replace(base, stabilization=mode), cfg.n, mesh)
            prof = line_profile(res.fields, mesh)
            write_profile_csv(out / f"profile_case{i}_{mode.value}.csv", prof)
            if vtk:
                write_fields_vtk(out / f"solution_case{i}_{mode.value}.vtk", res.fields, mesh)
            pm = profile_metrics(prof, exact)
            err = compute_errors(res.fields, exact, mesh).err_u_maxh if exact else float("nan")
            rows.append(
                [i, mu, vz, pe_edge, pe_diam, mode.value,
                 pm.overshoot, pm.undershoot, pm.profile_min, pm.profile_max, err]
            )
    with open(out / "sweep_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    print(" ".join(f"{h:>11}" for h in SWEEP_HEADER))
    for r in rows:
        print(" ".join(f"{x:>11.4g}" if isinstance(x, float) else f"{x:>11}" for x in r))
    return EXIT_OK


def cmd_check(cfg: RunConfig, out: Path, vtk: bool = False, export_matrix: bool = False,
              trace_constant: float | None = None) -> int:
    c_star = cfg.trace_constant if trace_constant is None else trace_constant
    print(smallness(cfg.spec, c_star).format())
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "converge": cmd_converge, "sweep": cmd_sweep, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dmhfem",
        description="Mixed hybrid RT0 solver for advection-diffusion-reaction "
        "with a selective interface on the unit cube.",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--vtk", action="store_true", help="also write legacy VTK files")
    p.add_argument("--export-matrix", action="store_true",
                   help="solve: write K and t in Matrix Market format")
    p.add_argument("--trace-constant", type=float, default=None,
                   help="check: trace constant C* (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        kwargs = dict(vtk=args.vtk, export_matrix=args.export_matrix)
        if args.command == "check":
            kwargs["trace_constant"] = args.trace_constant
        return COMMANDS[args.command](cfg, out, **kwargs)
    except (ConfigError, MeshError, ProblemError, WellposednessError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SingularElementError, AnalyticError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

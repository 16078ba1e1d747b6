"""
Command-line front end.

    conjpair mesh        --config run.toml [--out DIR] [--level N]
    conjpair solve       --config run.toml [--out DIR] [--level N] [--seed S]
    conjpair verify      --config run.toml [--out DIR]
    conjpair dtn         --config run.toml [--out DIR] [--level N]
    conjpair convergence --config run.toml [--out DIR]
    conjpair check-cr    [--config run.toml] [--matrix "a b c; d e f; g h i"] [--alpha "1/2 1/2 0"]

Exit codes: 0 success, 2 configuration or input error, 3 numerical
non-convergence (the report is still written). ``CONJPAIR_THREADS`` caps
the number of BLAS worker threads.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, check_seed, load_config
from .dtn import dtn_experiment
from .errors import ConjPairError, NonConvergenceError
from .fields import GradNormGamma, Nodal, gradient_norms, make_gamma, sample_w, unitarity_report
from .forms import weak_divergence_residual
from .mesh import Mesh, build_mesh
from .solver import alternating_pair_solve, pair_operators
from .studies import run_case
from .verify import (
    ExponentTriple,
    boundary_tangential_residual,
    harmonicity_residual,
    relaxed_cr_check,
    residual_report,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3

log = logging.getLogger("conjpair")


class InputError(ConjPairError, ValueError):
    pass


def _mesh(cfg: RunConfig) -> Mesh:
    return build_mesh(cfg.require_domain(), cfg.level)


def _w_values(cfg: RunConfig, mesh: Mesh, spec=None) -> np.ndarray:
    spec = cfg.w if spec is None else spec
    if isinstance(spec, tuple) and spec[0] == "nodal":
        spec = Nodal(io.load_field(cfg.resolve(spec[1])))
    return sample_w(spec, mesh)


def _gamma_values(cfg: RunConfig, mesh: Mesh, w, spec=None) -> np.ndarray:
    spec = cfg.gamma if spec is None else spec
    return make_gamma(spec, mesh, w if isinstance(spec, GradNormGamma) else None, cfg.bound)


def _mesh_stats(mesh: Mesh) -> dict:
    return {
        "domain": mesh.domain.value,
        "level": mesh.level,
        "vertices": mesh.n_vertices,
        "tets": mesh.n_tets,
        "boundary_faces": int(mesh.faces.shape[0]),
        "volume": mesh.total_volume,
        "surface_area": mesh.surface_area,
        "h": mesh.h,
        "min_volume": float(mesh.volumes.min()),
    }


def cmd_mesh(cfg: RunConfig) -> int:
    mesh = _mesh(cfg)
    io.write_vtk(cfg.out / "mesh.vtk", mesh)
    stats = _mesh_stats(mesh)
    io.write_json(cfg.out / "mesh_stats.json", stats)
    print(f"{mesh.domain.value} level {mesh.level}: {mesh.n_vertices} vertices, {mesh.n_tets} tets, volume {io.fmt(mesh.total_volume)}")
    return EXIT_OK


def _v0(cfg: RunConfig, mesh: Mesh, w):
    choice = str(cfg.solve.get("v0", "default"))
    if choice == "default":
        return None
    if choice == "w":
        return np.array(w)
    if choice in ("x1", "x2", "x3"):
        return mesh.coordinate(int(choice[1]))
    values = io.load_field(cfg.resolve(choice))
    if values.shape != (mesh.n_vertices,):
        raise InputError(f"v0 file has {values.size} values, mesh has {mesh.n_vertices} vertices")
    return values


def _needs_gamma(mode: str) -> bool:
    return mode == "gamma"


def cmd_solve(cfg: RunConfig) -> int:
    mesh = _mesh(cfg)
    w = _w_values(cfg, mesh)
    mode = cfg.solver.mode
    gamma = _gamma_values(cfg, mesh, w) if _needs_gamma(mode) else None
    rep = alternating_pair_solve(mesh, w, mode, v0=_v0(cfg, mesh, w), cfg=cfg.solver, gamma=gamma)
    final = residual_report(mesh, rep.u, rep.v, w, gamma, mode)
    report = rep.to_dict()
    report.update(
        domain=mesh.domain.value,
        level=mesh.level,
        seed=cfg.solver.seed,
        final_residuals=final.to_dict(),
        unitarity_max=unitarity_report(mesh, w)[0],
        max_grad_w=float(gradient_norms(mesh, w).max()),
    )
    io.write_json(cfg.out / "report.json", report)
    cells = {} if gamma is None else {"gamma": gamma}
    io.write_vtk(cfg.out / "fields.vtk", mesh, {"u": rep.u, "v": rep.v, "w": w}, cells)
    status = "converged" if rep.converged else "NOT converged"
    print(f"mu = {io.fmt(rep.mu)} after {rep.iterations} sweeps ({status}); r1 = {final.r1:.3e}, r2 = {final.r2:.3e}")
    for note in rep.notes:
        print(f"note: {note}")
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def _load_nodal(cfg, key, mesh):
    if key not in cfg.verify or not str(cfg.verify[key]):
        raise InputError(f"[verify] needs a field file for '{key}'")
    values = io.load_field(cfg.resolve(cfg.verify[key]), name=key)
    if values.shape != (mesh.n_vertices,):
        raise InputError(f"field '{key}' has {values.size} values, mesh has {mesh.n_vertices} vertices")
    return values


def cmd_verify(cfg: RunConfig) -> int:
    mesh = _mesh(cfg)
    u = _load_nodal(cfg, "u", mesh)
    v = _load_nodal(cfg, "v", mesh)
    w = _load_nodal(cfg, "w", mesh) if str(cfg.verify.get("w", "")) else _w_values(cfg, mesh)
    mode = cfg.solver.mode
    gamma = _gamma_values(cfg, mesh, w) if _needs_gamma(mode) else None
    rep = residual_report(mesh, u, v, w, gamma, mode)
    ops = pair_operators(mesh, w, mode, gamma)
    bnd = boundary_tangential_residual(mesh, v, w)
    out = {
        "mode": mode,
        "residuals": rep.to_dict(),
        "harmonicity_u": harmonicity_residual(ops.Ka, u, mesh.interior_nodes),
        "harmonicity_v": harmonicity_residual(ops.Kd, v, mesh.interior_nodes),
        "weak_divergence": weak_divergence_residual(mesh, v, w),
        "boundary_tangential_max": bnd.max_abs,
        "boundary_tangential_l2": bnd.l2(mesh.areas),
        "boundary_degenerate_faces": int(bnd.degenerate.sum()),
        "unitarity": dict(zip(("max", "mean"), unitarity_report(mesh, w))),
    }
    io.write_json(cfg.out / "residual_report.json", out)
    print(f"r1 = {rep.r1:.3e}, r2 = {rep.r2:.3e}, orth = {rep.orth:.3e}")
    return EXIT_OK


def cmd_dtn(cfg: RunConfig) -> int:
    mesh = _mesh(cfg)
    gamma_items = cfg.dtn_gammas or [("gamma", cfg.gamma)]
    w_items = cfg.dtn_ws or [("w", cfg.w)]
    failures = []
    ws, w_labels = [], []
    for label, spec in w_items:
        try:
            ws.append(_w_values(cfg, mesh, spec))
            w_labels.append(label)
        except ConjPairError as exc:
            failures.append({"cell": f"w[{label}]", "error": str(exc)})
    gammas, g_labels = [], []
    for label, spec in gamma_items:
        try:
            gammas.append(_gamma_values(cfg, mesh, ws[0] if ws else None, spec))
            g_labels.append(label)
        except ConjPairError as exc:
            failures.append({"cell": f"gamma[{label}]", "error": str(exc)})
    report, maps = dtn_experiment(mesh, gammas, ws, cfg.solver, g_labels, w_labels)
    report.failures = failures + report.failures
    for label, lam in zip(g_labels, maps):
        if lam is None:
            continue
        io.write_matrix_market(cfg.out / f"dtn_{label}.mtx", lam.matrix)
        io.write_matrix_csv(cfg.out / f"dtn_{label}.csv", lam.matrix)
    data = report.to_dict()
    data.update(domain=mesh.domain.value, level=mesh.level, boundary_nodes=[int(i) for i in mesh.boundary_nodes])
    io.write_json(cfg.out / "experiment.json", data)
    print(f"{len(g_labels)} conductivities x {len(w_labels)} fields; {len(report.failures)} failed cell(s)")
    return EXIT_OK


def cmd_convergence(cfg: RunConfig) -> int:
    conv = cfg.convergence
    table = run_case(str(conv.get("case", "quadratic")), conv.get("levels", [8, 16, 32]), str(conv.get("reference", "exact")), cfg.solver)
    table.write_csv(cfg.out / "convergence.csv")
    io.write_json(
        cfg.out / "convergence.json",
        {"case": conv.get("case"), "reference": conv.get("reference"), "levels": table.levels, "h": table.h,
         "errors": table.errors, "rates": table.rates, "rate": table.rate, "note": table.note},
    )
    rate = "not claimed" if table.rate is None else f"{table.rate:.4f}"
    print(f"observed rate: {rate}{' (' + table.note + ')' if table.note else ''}")
    return EXIT_OK


def _parse_numbers(text: str):
    return [float(Fraction(tok)) for tok in text.replace(",", " ").split()]


def cmd_check_cr(cfg: RunConfig, matrix: str | None = None, alpha: str | None = None) -> int:
    if matrix is not None:
        rows = [_parse_numbers(r) for r in matrix.split(";")]
    else:
        rows = cfg.check_cr.get("matrix")
        if rows is None:
            raise InputError("check-cr needs a matrix (--matrix or [check_cr] matrix)")
    J = np.array(rows, dtype=float)
    if J.shape != (3, 3):
        raise InputError(f"expected a 3x3 matrix, got shape {J.shape}")
    a = _parse_numbers(alpha) if alpha is not None else cfg.check_cr.get("alpha", [0.5, 0.5, 0.0])
    if len(a) != 3:
        raise InputError("alpha needs three exponents")
    res = relaxed_cr_check(J, ExponentTriple(*(float(x) for x in a)))
    cfg.out.mkdir(parents=True, exist_ok=True)
    io.write_json(cfg.out / "check_cr.json", {"matrix": J, "alpha": [float(x) for x in a], "residual": res})
    print(io.fmt(res))
    return EXIT_OK


COMMANDS = {
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "dtn": cmd_dtn,
    "convergence": cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conjpair", description="Conjugate harmonic pairs in 3D by finite elements.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "check-cr"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=name != "check-cr", help="TOML run configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--level", type=int, help="mesh level (overrides the config)")
        p.add_argument("--seed", type=int, help="seed for the default start vector, 0 <= S < 2^64")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "check-cr":
            p.add_argument("--matrix", help='rows separated by ";", e.g. "1 0 0; 0 2 0; 0 0 3"')
            p.add_argument("--alpha", help='three exponents, fractions allowed, e.g. "1/3 1/3 1/3"')
    return parser


def _threads() -> int | None:
    raw = os.environ.get("CONJPAIR_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise InputError(f"CONJPAIR_THREADS must be a positive integer, got {raw!r}")
    return n


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        _threads()
        cfg = load_config(args.config) if args.config is not None else RunConfig()
        if args.out is not None:
            cfg.out = args.out
        if args.level is not None:
            if args.level < 1:
                raise ConfigError(f"--level must be >= 1, got {args.level}")
            cfg.level = args.level
        if args.seed is not None:
            cfg.solver.seed = check_seed(args.seed)
        cfg.out.mkdir(parents=True, exist_ok=True)
        if args.command == "check-cr":
            return cmd_check_cr(cfg, args.matrix, args.alpha)
        return COMMANDS[args.command](cfg)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ConjPairError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:  # console-script entry point
    sys.exit(main())


if __name__ == "__main__":
    run()

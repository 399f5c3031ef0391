"""Command line entry point: ``billiard-slrt <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 1 acceptance checks failed, 2 configuration or input
error, 3 numerical convergence failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import (ConfigError, ConvergenceError, DependencyError, FitError, InsufficientDataError,
                     QuadratureError, SchemaError)
from .geometry import derive_scales, speed
from .io import ArtifactCache, load_matrix, provenance, write_csv
from .matrixstats import band_profile, size_histogram
from .response import DrivingSpec, amplitude_window, feasibility

log = logging.getLogger("billiard_slrt")

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _plan(args) -> ex.ExperimentPlan:
    if args.config:
        plan = ex.load_plan(args.config, outputs=args.out, seed=args.seed)
    else:
        plan = ex.plan_from_dict({}, outputs=args.out, seed=args.seed)
    Path(plan.outputs).mkdir(parents=True, exist_ok=True)
    return plan


def cmd_classical_spectrum(args, plan):
    spec = ex.classical_spectrum(plan.config, plan.classical, plan.seed)
    path = ex.write_spectrum(Path(plan.outputs) / "classical_spectrum.csv", plan.config, spec, plan.seed)
    print(path)


def cmd_quantum_solve(args, plan):
    cache = ArtifactCache(plan.outputs)
    cm = ex.coupling_matrix(plan.config, plan.quantum_window, cache, plan.seed)
    meta = provenance(plan.config.hash(), plan.seed, kind="levels", window=list(plan.quantum_window))
    path = write_csv(Path(plan.outputs) / "levels.csv",
                     {"index": np.arange(len(cm.energies)), "energy": cm.energies}, meta)
    print(f"{len(cm.energies)} levels in {plan.quantum_window}; {path}")


def _matrix_for(args, plan):
    if args.matrix:
        p = Path(args.matrix)
        if not p.exists():
            raise DependencyError(f"matrix file {p} not found; run `billiard-slrt quantum-solve` first")
        return load_matrix(p)
    window = tuple(float(x) for x in plan.quantum_window)
    key = ex.config_hash({"cfg": plan.config.to_dict(), "window": window, "cutoff": 2 * window[1]})
    hit = ArtifactCache(plan.outputs).get(key)
    if hit is None:
        raise DependencyError(f"no cached matrix for window {window} in {plan.outputs}; "
                              "run `billiard-slrt quantum-solve` with the same --config and --out first")
    return hit


def cmd_band_profile(args, plan):
    F, E, meta = _matrix_for(args, plan)
    X = F ** 2
    sc = derive_scales(plan.config.with_(E=0.5 * (E[0] + E[-1])))
    bp = band_profile(X, delta0=sc.Delta0)
    out = Path(plan.outputs)
    head = provenance(meta["config_hash"], plan.seed, kind="bandprofile", window=meta["window"])
    write_csv(out / "bandprofile.csv", {"r": bp.r, "omega": bp.omega, "omega_over_v": bp.omega / sc.vE,
                                        "mean": bp.mean, "median": bp.median, "count": bp.count,
                                        "C_quantum": 2 * math.pi / sc.Delta0 * bp.mean}, head)
    r_hi = max(1, min(len(E) - 1, int(round(sc.DeltaR / sc.Delta0))))
    h = size_histogram(X, (1, r_hi))
    write_csv(out / "size_histogram.csv", {"ln_x": h.centers, "count": h.counts},
              dict(head, kind="size-histogram", band=[1, r_hi], n_zero=h.n_zero))
    print(out / "bandprofile.csv")


def cmd_response_sweep(args, plan):
    cfg = plan.config
    if args.axis == "u":
        pts = [(cfg.with_(R=cfg.Ly / u), plan.sweep_u_hbar) for u in plan.sweep_u]
    else:
        pts = [(cfg, 1 / x) for x in plan.sweep_inv_hbar]
    res = ex.sweep(pts, plan.response, plan.seed, args.threads)
    meta = provenance(plan.hash(), plan.seed, kind="response-sweep", axis=args.axis)
    path = write_csv(Path(plan.outputs) / f"response_sweep_{args.axis}.csv", ex.sweep_columns(res), meta)
    print(path)


def cmd_feasibility(args, plan):
    win = amplitude_window(plan.hbar, plan.feas_b, plan.feas_DeltaL_over_Delta0, plan.hold_bounces)
    lines = [
        f"hbar = {plan.hbar:g}, b = {plan.feas_b:g}, DeltaL/Delta0 = {plan.feas_DeltaL_over_Delta0:g}, "
        f"hold = {plan.hold_bounces:g} bounces",
        f"amplitude window eps/L (exact): ({win.exact[0]:.4g}, {win.exact[1]:.4g})  "
        f"{'nonempty' if win.exact_nonempty else 'EMPTY'}",
        f"amplitude window eps/L (rough): ({win.rough[0]:.4g}, {win.rough[1]:.4g})  "
        f"{'nonempty' if win.rough_nonempty else 'EMPTY'}",
    ]
    cfg = plan.config
    sc = derive_scales(cfg)
    b = plan.feas_b
    for amp in np.geomspace(win.rough[0] / 2, win.rough[1] * 2, 7):
        rep = feasibility(DrivingSpec(amp * speed(cfg), b * sc.Delta0), cfg, T=cfg.E, hold_bounces=plan.hold_bounces)
        lines.append(f"billiard, eps/vE = {amp:.4f}: heating {'ok' if rep.heating_ok else 'no'}, "
                     f"golden rule {'ok' if rep.fgr_ok else 'no'}")
    text = "\n".join(lines) + "\n"
    (Path(plan.outputs) / "feasibility.txt").write_text(text)
    print(text, end="")


def cmd_validate(args, plan):
    from .checks import run_all
    if args.matrix:
        load_matrix(args.matrix)
    if args.classical:
        from .io import read_csv
        p = Path(args.classical)
        if not p.exists():
            raise DependencyError(f"classical data {p} not found; run `billiard-slrt classical-spectrum` first")
        read_csv(p, required=("omega", "C"))
    only = {int(x) for x in args.only.split(",")} if args.only else None
    results = run_all(seed=plan.seed, only=only)
    for r in results:
        print(r.line())
    report = {"all_passed": all(r.passed for r in results), "checks": [r.as_dict() for r in results],
              **provenance(plan.hash(), plan.seed)}
    (Path(plan.outputs) / "validate.json").write_text(json.dumps(report, indent=2, default=str) + "\n")
    return EXIT_OK if report["all_passed"] else EXIT_CHECKS


def cmd_figure3(args, plan):
    for p in ex.run_figure3(plan, ArtifactCache(plan.outputs)):
        print(p)


def cmd_figure4(args, plan):
    for p in ex.run_figure4(plan, args.threads):
        print(p)


COMMANDS = {
    "classical-spectrum": (cmd_classical_spectrum, "impulse-train power spectrum of the piston force"),
    "quantum-solve": (cmd_quantum_solve, "eigenlevels and piston coupling matrix of an energy window"),
    "band-profile": (cmd_band_profile, "bandprofile and size histogram of a stored coupling matrix"),
    "response-sweep": (cmd_response_sweep, "g-factors along a u or 1/hbar sweep"),
    "feasibility": (cmd_feasibility, "driving amplitude window for a cold-atom realisation"),
    "validate": (cmd_validate, "run the acceptance checks and write validate.json"),
    "figure3": (cmd_figure3, "bandprofiles against the classical spectrum"),
    "figure4": (cmd_figure4, "g versus 1/hbar and versus u, with surrogates"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON configuration file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="billiard-slrt", parents=[common],
                                description="Weak quantum chaos absorption in a deformed billiard.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        if name == "band-profile":
            sp.add_argument("--matrix", help="matrix file written by quantum-solve")
        if name == "response-sweep":
            sp.add_argument("--axis", choices=("u", "hbar"), default="u")
        if name == "validate":
            sp.add_argument("--only", help="comma separated criterion numbers")
            sp.add_argument("--matrix", help="also check that this matrix file is well formed")
            sp.add_argument("--classical", help="also check that this classical spectrum file exists")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for k, v in (("config", None), ("out", "out"), ("seed", None), ("threads", 1), ("verbose", False)):
        if not hasattr(args, k):
            setattr(args, k, v)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    fn = COMMANDS[args.command][0]
    try:
        plan = _plan(args)
        code = fn(args, plan)
    except (ConfigError, SchemaError, DependencyError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, QuadratureError, FitError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())

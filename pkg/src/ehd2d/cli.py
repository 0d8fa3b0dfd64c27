"""Command-line front end.

Subcommands:

    run        full simulation, writes diagnostics.csv + snapshots + stationary/
    stationary Poisson-Boltzmann solve only, writes solution + metadata
    check      evaluate the property suite on a preset, print PASS/FAIL lines
    presets    list the built-in scenario generators

Exit codes: 0 success, 1 usage/config error, 2 solver failure, 3 property
check failure. Flags: --config PATH, --out DIR, --set section.key=value
(repeatable), --preset NAME, --quiet.
"""

import argparse
import sys

import numpy as np

from .errors import ConfigError, SolverError
from .grid import div_from_faces, integrate
from . import sim
from .diagnostics import (
    csiszar_check,
    energy_report,
    entropy_production,
    error_norms,
    linearized_energy,
    total_energy,
)
from .fluid import ladyzhenskaya_ratio
from .poisson import apply_dirichlet_laplacian
from .stationary import export_stationary, sinh_form_check, solve_pb

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_CHECK = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1 instead of 2."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="ehd2d", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", default=None,
                       help="INI-style config file")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (overrides output.dir)")
        p.add_argument("--set", metavar="KEY=VALUE", action="append",
                       dest="overrides", default=[],
                       help="override a config entry, e.g. grid.nx=128")
        p.add_argument("--preset", metavar="NAME", default=None,
                       help="scenario preset supplying defaults")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output")

    common(sub.add_parser("run", help="run a full simulation"))
    common(sub.add_parser("stationary", help="solve the stationary problem only"))
    common(sub.add_parser("check", help="run the property suite on a preset"))
    sub.add_parser("presets", help="list available presets")
    return parser


def _load(args):
    config = sim.load_config(path=args.config, preset=args.preset,
                             overrides=args.overrides)
    if args.out is not None:
        values = dict(config._values)
        values[("output", "dir")] = args.out
        config = sim.SimConfig(values)
    return config


def _cmd_run(args):
    config = _load(args)
    result = sim.run(config)
    if not args.quiet:
        last = result.reports[-1] if result.reports else None
        print(f"wrote {result.csv_path} ({len(result.reports)} records)")
        if last is not None:
            print(f"final t = {last.t:.6g}  W = {last.W:.9g}  W_rel = {last.W_rel:.6g}")
    return EXIT_OK


def _cmd_stationary(args):
    config = _load(args)
    s = solve_pb(config.M, config.N, config.grid, tol=config.tol_pb)
    paths = export_stationary(s, config.outdir)
    if not args.quiet:
        print(f"converged in {s.iterations} iterations, residual {s.residual:.3e}")
        print(f"max |phi| = {float(np.abs(s.phi.data).max()):.3e}")
        print(f"sinh-form residual = {sinh_form_check(s):.3e}")
        print(f"wrote {paths['metadata']}")
    return EXIT_OK


def _cmd_presets(_args):
    for name in sim.presets():
        print(f"{name}: {sim.PRESET_DESCRIPTIONS[name]}")
    return EXIT_OK


def _cmd_check(args):
    """Property suite: initial-state contracts plus a short stepped burst."""
    config = _load(args)
    failures = []

    def report(name, ok, detail=""):
        tag = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if (detail and not ok) else ""
        print(f"{tag} {name}{suffix}")
        if not ok:
            failures.append(name)

    equilibrium = solve_pb(config.M, config.N, config.grid, tol=config.tol_pb)
    state = sim.build_initial_state(config, equilibrium)
    g = config.grid

    mv, mw = integrate(state.v), integrate(state.w)
    report("initial masses match config",
           abs(mv - config.M) <= 1e-12 * config.M and abs(mw - config.N) <= 1e-12 * config.N,
           f"masses {mv!r}, {mw!r}")
    report("initial charges nonnegative",
           state.v.data.min() >= 0.0 and state.w.data.min() >= 0.0)
    try:
        state.u.assert_no_slip(0.0)
        report("velocity boundary faces zero", True)
    except ValueError as exc:
        report("velocity boundary faces zero", False, str(exc))
    div0 = float(np.abs(div_from_faces(state.u).data).max())
    report("initial velocity divergence-free", div0 <= 1e-10, f"max div {div0:.3e}")
    res = apply_dirichlet_laplacian(state.phi)
    rnorm = float(np.sqrt(g.vol * ((res.data - (state.v.data - state.w.data)) ** 2).sum()))
    report("potential solves the charge Poisson equation",
           rnorm <= 1e-8, f"residual {rnorm:.3e}")

    parts = total_energy(state)
    recon = parts.entropy_v + parts.entropy_w + parts.electric + parts.kinetic
    report("energy decomposition consistent",
           abs(parts.W - recon) <= 1e-12 * (1.0 + abs(parts.W)))
    prod = entropy_production(state)
    report("entropy production nonnegative", prod >= 0.0, f"production {prod:.3e}")
    lhs, rhs = csiszar_check(state, equilibrium)
    slack = 1e-8 + 4.0 * (g.hx ** 2 + g.hy ** 2)
    report("Csiszar-Kullback inequality",
           lhs <= 4.0 * rhs * (1.0 + 1e-6) + slack,
           f"lhs {lhs:.6e} vs 4*rhs {4.0 * rhs:.6e}")
    e2 = error_norms(state, equilibrium, 2)
    lin = linearized_energy(state, equilibrium)
    report("quadratic error norm equals twice the linearized energy",
           abs(e2 - 2.0 * lin) <= 1e-10 * (1.0 + abs(e2)),
           f"E2 {e2!r} vs 2L {2.0 * lin!r}")

    smv = integrate(equilibrium.v)
    report("stationary masses exact",
           abs(smv - config.M) <= 1e-12 * config.M
           and abs(integrate(equilibrium.w) - config.N) <= 1e-12 * config.N)
    # The potential is signed by the majority species: with Lap phi = v - w
    # and cations distributed along +phi, an anion surplus pushes phi up.
    if config.M <= config.N:
        report("stationary potential signed by anion majority",
               float(equilibrium.phi.data.min()) >= -1e-10,
               f"min phi {float(equilibrium.phi.data.min()):.3e}")
    else:
        report("stationary potential signed by cation majority",
               float(equilibrium.phi.data.max()) <= 1e-10,
               f"max phi {float(equilibrium.phi.data.max()):.3e}")

    # a short burst of steps exercises the dynamic contracts
    burst = 10
    w_prev = parts.W
    ok_mass = ok_pos = ok_div = ok_w = ok_lady = True
    cur = state
    dt_cap = sim.cfl_limit(cur, config.cfl_safety)
    dt = min(config.dt, dt_cap)
    for _ in range(burst):
        dt = min(dt, sim.cfl_limit(cur, config.cfl_safety))
        cur = sim.step(cur, dt, tol_poisson=config.tol_poisson,
                       tol_projection=config.tol_projection,
                       cfl_safety=config.cfl_safety)
        rep = energy_report(cur, equilibrium)
        ok_mass &= abs(rep.mass_v - config.M) <= 1e-11 * config.M
        ok_mass &= abs(rep.mass_w - config.N) <= 1e-11 * config.N
        ok_pos &= cur.v.data.min() >= 0.0 and cur.w.data.min() >= 0.0
        ok_div &= float(np.abs(div_from_faces(cur.u).data).max()) <= 1e-8
        ok_w &= rep.W <= w_prev + 1e-6 * dt
        w_prev = rep.W
        if not cur.u.is_zero():
            ok_lady &= ladyzhenskaya_ratio(cur.u) <= 1.05
    report(f"masses conserved over {burst} steps", ok_mass)
    report(f"charges nonnegative over {burst} steps", ok_pos)
    report(f"velocity divergence within tolerance over {burst} steps", ok_div)
    report(f"total energy nonincreasing over {burst} steps", ok_w)
    report("Ladyzhenskaya ratio within bound", ok_lady)

    if failures:
        print(f"{len(failures)} properties failed")
        return EXIT_CHECK
    print("all properties passed")
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.subcommand == "run":
            return _cmd_run(args)
        if args.subcommand == "stationary":
            return _cmd_stationary(args)
        if args.subcommand == "check":
            return _cmd_check(args)
        if args.subcommand == "presets":
            return _cmd_presets(args)
        raise _UsageError(f"unknown subcommand {args.subcommand!r}")
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

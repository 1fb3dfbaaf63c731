"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 property-suite
failure.  Every JSON document embeds the configuration, the grid and the
package version; outputs depend only on the arguments (and ``--seed``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .energy import energy, residuals
from .grid import GridError, Params, make_grid, read_profile_csv
from .limit import SOLITON_NODES, LimitError, branch_sweep, classify_branches, limit_constants
from .solve import (GeometryError, SolveError, SolveOptions, default_starts, gaussian_start,
                    minimize, mountain_pass, probe_nonexistence, soliton_start, sweep)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3

log = logging.getLogger("csvortex")


class UsageError(Exception):
    pass


def _omega_list(text: str) -> list[float]:
    """``"a,b,c"`` or ``"lo:hi:count"``."""
    try:
        if ":" in text:
            lo, hi, cnt = text.split(":")
            return [float(x) for x in np.linspace(float(lo), float(hi), int(cnt))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--omegas: cannot parse {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csvortex", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def physics(sp, omega=True):
        sp.add_argument("--p", type=float, default=2.0)
        if omega:
            sp.add_argument("--omega", type=float, default=0.12)
        sp.add_argument("--N", type=int, default=1, help="vortex order")

    def grid_opts(sp):
        sp.add_argument("--rmax", type=float, default=40.0)
        sp.add_argument("--n", type=int, default=4000)
        sp.add_argument("--grading", choices=("uniform", "geometric"), default="uniform")
        sp.add_argument("--ratio", type=float, default=1.002)

    def solver_opts(sp):
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--max-iter", type=int, default=20000)
        sp.add_argument("--method", choices=("gd", "lbfgs"), default="lbfgs")
        sp.add_argument("--floor", type=float, default=-1e6)
        sp.add_argument("--knots", type=int, default=21)
        sp.add_argument("--seed", type=int, default=0)

    def start_opts(sp):
        sp.add_argument("--profile", help="start profile CSV (r,u); overrides --start")
        sp.add_argument("--start", choices=("soliton", "gaussian"), default="soliton")
        sp.add_argument("--rho", type=float, default=20.0, help="soliton translate centre")
        sp.add_argument("--amplitude", type=float, default=1.0)
        sp.add_argument("--width", type=float, default=2.0)
        sp.add_argument("--out", help="output prefix: writes PREFIX.json and PREFIX.csv")

    sp = sub.add_parser("limit", help="limit constants and soliton branches")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--omegas", help="branch sweep: 'a,b,c' or 'lo:hi:count'")
    sp.add_argument("--csv", help="write the branch sweep CSV here")

    sp = sub.add_parser("energy", help="energy breakdown and residuals of a profile")
    physics(sp)
    sp.add_argument("--profile", required=True)

    sp = sub.add_parser("minimize", help="descent from a start profile")
    physics(sp), grid_opts(sp), solver_opts(sp), start_opts(sp)

    sp = sub.add_parser("mountainpass", help="saddle between 0 and a descent minimizer")
    physics(sp), grid_opts(sp), solver_opts(sp), start_opts(sp)

    sp = sub.add_parser("sweep", help="minimal energy over a frequency sweep")
    physics(sp, omega=False), grid_opts(sp), solver_opts(sp)
    sp.add_argument("--omegas", required=True)
    sp.add_argument("--starts", type=int, default=4)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", help="CSV path (default stdout)")

    sp = sub.add_parser("probe", help="multi-start collapse probe")
    physics(sp), grid_opts(sp), solver_opts(sp)
    sp.add_argument("--starts", type=int, default=10)
    sp.add_argument("--out", help="JSON path (default stdout)")

    sp = sub.add_parser("check", help="run the property suites")
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--out", help="JSON path for the results")
    return ap


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "verbose"}


def _dump(doc: dict, path=None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _params(args) -> Params:
    return Params(args.p, args.omega, args.N)


def _grid(args):
    return make_grid(args.rmax, args.n, args.grading, args.ratio)


def _opts(args) -> SolveOptions:
    return SolveOptions(tol=args.tol, max_iter=args.max_iter, method=args.method,
                        floor=args.floor, knots=args.knots)


def _start(args, params):
    if args.profile:
        return read_profile_csv(args.profile)
    grid = _grid(args)
    if args.start == "soliton":
        return soliton_start(params, grid, args.rho)
    return gaussian_start(grid, args.amplitude, args.rho, args.width)


def cmd_limit(args) -> int:
    consts = limit_constants(args.p)
    doc = {"version": __version__, "config": _config(args),
           "grid": {"soliton_nodes": SOLITON_NODES}, **consts.to_dict()}
    if args.omega is not None:
        doc["branches"] = classify_branches(args.p, args.omega, consts).to_dict()
    if args.omegas:
        rows = branch_sweep(args.p, _omega_list(args.omegas))
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["omega", "k1", "k2", "J_k1", "J_k2"])
                for b in rows:
                    w.writerow([repr(b.omega)] + ["" if x is None else repr(float(x))
                                                  for x in (b.k1, b.k2, b.J_k1, b.J_k2)])
        else:
            doc["sweep"] = [b.to_dict() for b in rows]
    _dump(doc)
    return EXIT_OK


def cmd_energy(args) -> int:
    u = read_profile_csv(args.profile)
    params = _params(args)
    doc = {"version": __version__, "config": _config(args), "grid": u.grid.describe(),
           **energy(u, params).to_dict(), **residuals(u, params).to_dict()}
    _dump(doc)
    return EXIT_OK


def _emit_report(rep, args) -> int:
    extra = {"config": _config(args), "seed": args.seed}
    if args.out:
        Path(args.out + ".json").write_text(rep.to_json(**extra) + "\n")
        rep.profile.write_csv(args.out + ".csv")
    else:
        print(rep.to_json(**extra))
    return EXIT_OK if rep.status != "max_iter" else EXIT_NUMERIC


def cmd_minimize(args) -> int:
    params = _params(args)
    return _emit_report(minimize(params, _start(args, params), _opts(args)), args)


def cmd_mountainpass(args) -> int:
    params = _params(args)
    opts = _opts(args)
    low = minimize(params, _start(args, params), opts)
    if low.status != "converged_nontrivial" or low.total >= 0:
        print(f"error: descent ended {low.status} with energy {low.total:.6g}; "
              f"no negative endpoint for the mountain pass at omega={params.omega}",
              file=sys.stderr)
        return EXIT_NUMERIC
    return _emit_report(mountain_pass(params, low.profile, opts), args)


def cmd_sweep(args) -> int:
    omegas = _omega_list(args.omegas)
    rows = sweep(args.p, args.N, omegas, _grid(args), _opts(args), seed=args.seed,
                 count=args.starts, workers=args.workers)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", "min_energy", "status", "el_norm"])
        for omega, rep in rows:
            w.writerow([repr(omega), repr(rep.total), rep.status, repr(rep.residuals.el_norm)])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_probe(args) -> int:
    params = _params(args)
    grid = _grid(args)
    starts = default_starts(params, grid, args.seed, args.starts)
    rep = probe_nonexistence(params, starts, _opts(args))
    doc = {**rep.to_dict(), "config": _config(args), "grid": grid.describe(), "seed": args.seed}
    _dump(doc, args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_all
    results = run_all(args.seed)
    for r in results:
        print(r.line())
    if args.out:
        _dump({"version": __version__, "config": _config(args), "seed": args.seed,
               "grid": {"note": "per-check grids"},
               "results": [r.to_dict() for r in results]}, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


COMMANDS = {"limit": cmd_limit, "energy": cmd_energy, "minimize": cmd_minimize,
            "mountainpass": cmd_mountainpass, "sweep": cmd_sweep, "probe": cmd_probe,
            "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, GridError, LimitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if "must" in str(exc) or "unknown" in str(exc) else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``schwarzdd solve`` and ``schwarzdd partition``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import partition
from .driver import PipelineError, ProblemSpec, SolverConfig, emit_table, failed_record, run

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_BREAKDOWN = 0, 1, 2, 3

_SETUP_STAGES = {"splitting", "gevp", "coarse", "setup", "gmres"}


def _problem_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", metavar="PATH", help="Matrix Market file (or .sddc binary cache)")
    src.add_argument("--gen", choices=["identity", "lap1d", "lap2d", "convdiff2d"], help="generated problem")
    p.add_argument("--grid", nargs="+", type=int, default=[32, 32], metavar="N",
                   help="grid size NX [NY] (identity/lap1d use NX only)")
    p.add_argument("--nu", nargs="+", type=float, default=[1.0], help="diffusion scale(s) for convdiff2d")
    p.add_argument("--kappa", choices=["constant", "bands"], default="constant")


def _problems(args):
    nx = args.grid[0]
    ny = args.grid[1] if len(args.grid) > 1 else nx
    if args.matrix:
        return [ProblemSpec(kind="matrix", path=args.matrix)]
    if args.gen == "convdiff2d":
        return [ProblemSpec(kind="convdiff2d", nx=nx, ny=ny, nu=nu, kappa=args.kappa) for nu in args.nu]
    return [ProblemSpec(kind=args.gen, nx=nx, ny=ny)]


def build_parser():
    d = SolverConfig()
    parser = argparse.ArgumentParser(prog="schwarzdd", description="Two-level algebraic Schwarz solver harness")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve A x = b with GMRES and a Schwarz preconditioner")
    _problem_args(s)
    s.add_argument("--nsub", nargs="+", type=int, default=[d.nsub], help="number(s) of subdomains")
    s.add_argument("--partition-file", metavar="PATH", help="owner id per vertex, 0-based")
    s.add_argument("--seed", type=int, default=d.seed, help="partitioner seed")
    s.add_argument("--pou", choices=["boolean", "multiplicity"], default=d.pou)
    s.add_argument("--tau", type=float, default=d.tau)
    s.add_argument("--max-ev", type=int, default=d.max_ev)
    s.add_argument("--kernel-tol", type=float, default=d.kernel_tol)
    s.add_argument("--variant", choices=["asm", "ras"], default=d.variant)
    s.add_argument("--coarse", choices=["none", "additive", "deflated"], default=d.coarse)
    s.add_argument("--restart", type=int, default=d.restart)
    s.add_argument("--rtol", type=float, default=d.rtol)
    s.add_argument("--maxit", type=int, default=d.maxit)
    s.add_argument("--rhs", choices=["random", "problem"], default=d.rhs)
    s.add_argument("--rhs-seed", type=int, default=d.rhs_seed)
    s.add_argument("--workers", type=int, default=d.workers)
    s.add_argument("--condition", action="store_true", help="also compute the dense condition number of M^-1 A")
    s.add_argument("--dump-local", metavar="DIR", help="write each lumped local matrix as Matrix Market")
    s.add_argument("--out", metavar="PATH", help="write the run records as JSON")
    s.add_argument("--show-config", action="store_true", help="print the resolved configuration and exit")

    pt = sub.add_parser("partition", help="write a partition file for a matrix")
    _problem_args(pt)
    pt.add_argument("--nsub", type=int, required=True)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--out", metavar="PATH", required=True)
    return parser


def _config(args, nsub):
    return SolverConfig(
        nsub=nsub, partition_file=args.partition_file, seed=args.seed, pou=args.pou, tau=args.tau,
        max_ev=args.max_ev, kernel_tol=args.kernel_tol, variant=args.variant, coarse=args.coarse,
        restart=args.restart, rtol=args.rtol, maxit=args.maxit, rhs=args.rhs, rhs_seed=args.rhs_seed,
        workers=args.workers, condition=args.condition, dump_local=args.dump_local,
    )


def _solve(args):
    configs = [_config(args, n) for n in args.nsub]
    if args.show_config:
        print(json.dumps(configs[0].as_dict(), indent=2))
        return EXIT_OK
    records = []
    code = EXIT_OK
    for prob in _problems(args):
        for cfg in configs:
            if cfg.dump_local and (len(configs) > 1 or len(args.nu) > 1):
                cfg = replace(cfg, dump_local=str(Path(cfg.dump_local) / f"{prob.identifier()}-N{cfg.nsub}"))
            try:
                rec = run(prob, cfg)
            except PipelineError as exc:
                print(f"error: {exc}", file=sys.stderr)
                if exc.stage not in _SETUP_STAGES:
                    return EXIT_ERROR
                # construction failure: shown as a dagger row like a GMRES breakdown
                rec = failed_record(prob, cfg, exc)
            records.append(rec)
            if rec.breakdown:
                code = max(code, EXIT_BREAKDOWN)
            elif not rec.converged:
                code = max(code, EXIT_NOT_CONVERGED)
    if records:
        table, doc = emit_table(records)
        print(table)
        if args.out:
            Path(args.out).write_text(doc + "\n")
    return code


def _partition(args):
    prob = _problems(args)[0]
    try:
        a = prob.build()
        parts = partition.partition_graph(partition.build_graph(a), args.nsub, args.seed)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    owners = np.empty(a.n_rows, dtype=np.int64)
    for i, p in enumerate(parts):
        owners[p] = i
    Path(args.out).write_text("\n".join(str(o) for o in owners) + "\n")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "solve":
        return _solve(args)
    return _partition(args)


if __name__ == "__main__":
    sys.exit(main())

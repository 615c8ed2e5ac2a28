"""Command line entry point: ``nematic {run,check-coefficients,verify,oracle-compare}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings

from . import __version__
from .coefficients import check_dissipation
from .config import ConfigError, RunConfig, format_config, load_config, parse_config
from .diagnostics import CSV_COLUMNS
from .galerkin import compare
from .grid import PeriodicGrid
from .initial import PresetError, make_initial_data
from .io import CheckpointError, format_row, load_checkpoint, save_checkpoint
from .solver import AdmissibilityError, SolverError, run

EXIT_OK, EXIT_VALIDATION, EXIT_BLOWUP, EXIT_CONFIG = 0, 2, 3, 4

log = logging.getLogger("nematic")


def _err(msg: str) -> None:
    print(f"nematic: {msg}", file=sys.stderr)


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    over = {}
    if getattr(args, "seed", None) is not None:
        over["run__seed"] = args.seed
    if getattr(args, "force", False):
        over["run__force"] = True
    if getattr(args, "output", None):
        over["output__dir"] = args.output
    return cfg.replace(**over) if over else cfg


def _initial_state(cfg: RunConfig, resume: str | None = None):
    grid = PeriodicGrid(cfg.dim, cfg.n, cfg["stepper.dealias"])
    path = resume or cfg.checkpoint
    if path:
        if not resume:
            path = os.path.join(cfg.base_dir, path)
        s = load_checkpoint(path, M1=cfg.M1, M2=cfg.M2, dealias=cfg["stepper.dealias"])
        if s.grid.dim != cfg.dim or s.grid.n != grid.n:
            raise CheckpointError(f"checkpoint grid {s.grid.n} does not match the configured grid {grid.n}")
        # velocity is re-projected on load
        uh = s.grid.leray_hat(s.u_hat)
        return s.with_arrays(s.rho_hat, uh, s.d_hat, s.t)
    return make_initial_data(cfg["initial.preset"], grid, cfg.seed, cfg.initial_spec(), cfg.M1, cfg.M2,
                             cfg.coefficients())


def cmd_check(args) -> int:
    cfg = _load(args)
    rep = check_dissipation(cfg.coefficients(), cfg["coefficients.parodi_tol"])
    for line in rep.lines():
        print(line)
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_run(args) -> int:
    cfg = _load(args)
    c = cfg.coefficients()
    rep = check_dissipation(c, cfg["coefficients.parodi_tol"])
    force = cfg["run.force"]
    if not rep.ok and not force:
        _err("inadmissible coefficients: " + ", ".join(rep.violations + ([] if rep.parodi_ok else ["parodi"])))
        return EXIT_VALIDATION
    if c.lambda1 == 0:
        _err("lambda1 = 0 cannot be simulated")
        return EXIT_VALIDATION
    state = _initial_state(cfg, args.resume)
    out = cfg["output.dir"]
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.used"), "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
    csv_path = os.path.join(out, "diagnostics.csv")
    every = cfg["output.checkpoint_every"]
    counter = [0]

    def checkpoint(s):
        counter[0] += 1
        save_checkpoint(os.path.join(out, "checkpoint.elcs"), s)

    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(f"# forced={str(bool(force)).lower()} seed={cfg.seed}\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")

        def emit(r):
            fh.write(format_row(r.csv_row()) + "\n")
            fh.flush()

        try:
            res = run(state, c, cfg.stepper(force=force), cfg.T, on_report=emit, on_checkpoint=checkpoint,
                      checkpoint_every=every)
        except AdmissibilityError as exc:
            _err(str(exc))
            return EXIT_VALIDATION
        except SolverError as exc:
            _err(f"numerical failure: {exc}")
            return EXIT_BLOWUP
    print(f"t={res.final.t!r} steps={res.steps} E={res.reports[-1].total!r} csv={csv_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    cfg = _load(args)
    results = run_all(cfg.seed, print)
    failed = [r for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_VALIDATION


def cmd_oracle(args) -> int:
    cfg = _load(args)
    c = cfg.coefficients()
    state = _initial_state(cfg, args.resume)
    if cfg["oracle.reading"] == "eqL2":
        rho = state.grid.ifft(state.rho_hat)
        if rho.max() - rho.min() > 1e-14 * abs(rho.max()):
            _err("warning: the stepper and the eqL2 oracle coincide only for constant density")
    rep = compare(state, c, cfg["oracle.m"], cfg["oracle.dt"], cfg["oracle.T"], cfg["oracle.reading"],
                  substeps=4)
    for line in rep.lines():
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nematic", description="Pseudo-spectral nematic flow simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, hlp in (
        ("run", cmd_run, "integrate a configured run"),
        ("check-coefficients", cmd_check, "print the admissibility report"),
        ("verify", cmd_verify, "run the seeded property suite"),
        ("oracle-compare", cmd_oracle, "compare the Galerkin oracle with the stepper"),
    ):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--output", metavar="DIR")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--force", action="store_true", help="bypass the admissibility gate")
        sp.add_argument("--resume", metavar="CHECKPOINT")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    args = build_parser().parse_args(argv)
    threads = os.environ.get("NEMATIC_THREADS")
    if threads is not None and (not threads.isdigit() or int(threads) < 1):
        _err("NEMATIC_THREADS must be a positive integer")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            _err(e)
        return EXIT_CONFIG
    except (PresetError, CheckpointError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except AdmissibilityError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    except SolverError as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())

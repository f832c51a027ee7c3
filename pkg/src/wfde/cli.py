"""wfde command line: simulate | check | sweep | constants | verify-exact.

Exit codes: 0 success, 1 configuration error, 2 solver or quadrature
failure, 3 I/O error, 4 a check did not give the expected verdict.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import integrate

from . import __version__
from . import exact, inequalities, solver
from .config import ConfigError, RunConfig
from .estimates import measure_ledger
from .geometry import GeometryError, QuadratureNonConvergence
from .params import DomainError, RangeViolation, validate_params
from .reports import ConstantLedger, reports_to_csv, reports_to_json
from .runner import CheckContext, UnknownCheck, run_checks, select_checks

log = logging.getLogger("wfde")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3, 4

CONFIG_ERRORS = (ConfigError, RangeViolation, DomainError, GeometryError,
                 solver.GradingError, UnknownCheck, exact.RegimeError)
SOLVER_ERRORS = (solver.NewtonDivergence, solver.NonphysicalState,
                 solver.NotExtinct, QuadratureNonConvergence)

SWEEP_AXES = {
    "m": "params.m", "p": "params.p", "gamma": "params.gamma",
    "beta": "params.beta", "R": "problem.datum.R", "delta": "problem.bc.delta",
    "mass": "problem.datum.amplitude",
}


class CliIOError(RuntimeError):
    pass


def _out_dir(args, cfg: RunConfig | None) -> Path:
    d = args.out or os.environ.get("WFDE_OUT") or (cfg.output.get("directory") if cfg else None) or "out"
    path = Path(d)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliIOError(f"cannot create output directory {path}: {exc}") from exc
    return path


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliIOError(f"cannot write {path}: {exc}") from exc


def _load_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise CliIOError(f"cannot read config {args.config}: {exc}") from exc
    return RunConfig.from_json(text)


def _config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(cfg.to_json().encode()).hexdigest()[:16]


def _manifest(cfg: RunConfig, files, **extra) -> str:
    doc = {"version": __version__, "config": cfg.to_dict(),
           "config_hash": _config_hash(cfg), "files": sorted(files),
           "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
           **extra}
    return json.dumps(doc, indent=2, sort_keys=True)


# ------------------------------------------------------------------ simulate

def _simulate(cfg: RunConfig, out: Path):
    spec = cfg.build_spec()
    traj = solver.run(spec)
    formats = cfg.output.get("formats", ["json"])
    files = []
    _write(out / "trajectory.json", traj.to_json())
    files.append("trajectory.json")
    if "csv" in formats:
        _write(out / "trajectory.csv", traj.to_csv())
        files.append("trajectory.csv")
    for k, member in enumerate(traj.members):
        name = f"trajectory_delta_{k}.json"
        _write(out / name, member.to_json())
        files.append(name)
    _write(out / "manifest.json", _manifest(cfg, files, grid_id=traj.grid.grid_id))
    return traj, files


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    traj, files = _simulate(cfg, out)
    print(f"wrote {len(files)} trajectory file(s) to {out} "
          f"({len(traj.times)} times, {traj.grid.n} cells)")
    return EXIT_OK


# --------------------------------------------------------------------- check

def _cached_trajectory(cfg: RunConfig, out: Path):
    man, tf = out / "manifest.json", out / "trajectory.json"
    if not (man.exists() and tf.exists()):
        return None
    try:
        doc = json.loads(man.read_text())
        if doc.get("config_hash") != _config_hash(cfg):
            return None
        return solver.Trajectory.from_json(tf.read_text())
    except (OSError, ValueError, KeyError):
        return None


def _load_ledger(args):
    if not getattr(args, "ledger", None):
        return None
    try:
        return ConstantLedger.from_json(Path(args.ledger).read_text())
    except OSError as exc:
        raise CliIOError(f"cannot read ledger {args.ledger}: {exc}") from exc


def cmd_check(args) -> int:
    cfg = _load_config(args)
    entries = select_checks(cfg, args.names)
    out = _out_dir(args, cfg)
    if not entries:
        _write(out / "reports.json", "[]")
        print("no checks requested")
        return EXIT_OK
    ctx = CheckContext(cfg, _load_ledger(args), args.seed, _cached_trajectory(cfg, out))
    results = run_checks(ctx, entries)
    reports = [r for _, r, _ in results]
    _write(out / "reports.json", reports_to_json(reports))
    _write(out / "reports.csv", reports_to_csv(reports))
    bad = 0
    for e, rep, ok in results:
        want = e.get("expect", "pass")
        print(f"{'OK  ' if ok else 'BAD '} {rep.name:<26} pass={rep.passed!s:<5} "
              f"expect={want:<4} constant={rep.measured_constant:.6g}")
        bad += not ok
    return EXIT_CHECK if bad else EXIT_OK


# --------------------------------------------------------------------- sweep

def _parse_values(text: str) -> list:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            vals.append(float(tok))
        except ValueError as exc:
            raise ConfigError(f"sweep value {tok!r} is not a number") from exc
    return vals


def _sweep_point(job):
    cfg_json, path, value, seed = job
    base = RunConfig.from_json(cfg_json)
    rows = []
    try:
        if path == "checks.eps":
            d = base.to_dict()
            for e in d["checks"]:
                e["eps"] = value
            cfg = RunConfig.from_dict(d)
        else:
            cfg = base.with_value(path, value)
        params = cfg.build_params()
        head = {"value": value, "m_c": params.m_c, "p_c": params.p_c}
        ctx = CheckContext(cfg, seed=seed)
        for e, rep, ok in run_checks(ctx, select_checks(cfg)):
            rows.append({**head, "check": rep.name, "lhs": rep.lhs, "rhs": rep.rhs,
                         "constant": rep.measured_constant, "pass": int(rep.passed),
                         "status": "ok" if ok else "unexpected"})
        if not rows:
            rows.append({**head, "check": "", "lhs": "", "rhs": "", "constant": "",
                         "pass": "", "status": "ok"})
    except (*CONFIG_ERRORS, *SOLVER_ERRORS, ValueError) as exc:
        rows.append({"value": value, "m_c": "", "p_c": "", "check": "", "lhs": "",
                     "rhs": "", "constant": "", "pass": "",
                     "status": f"error: {type(exc).__name__}: {exc}"})
    return rows


SWEEP_COLUMNS = ["axis", "value", "m_c", "p_c", "check", "lhs", "rhs", "constant",
                 "pass", "status"]


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if args.axis in SWEEP_AXES:
        path = SWEEP_AXES[args.axis]
    elif args.axis == "eps":
        path = "checks.eps"
    elif "." in args.axis:
        path = args.axis
    else:
        raise ConfigError(f"unknown sweep axis {args.axis!r}")
    values = _parse_values(args.values)
    jobs = [(cfg.to_json(), path, v, args.seed) for v in values]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            chunks = list(pool.map(_sweep_point, jobs))
    else:
        chunks = [_sweep_point(j) for j in jobs]
    buf = io.StringIO()
    wr = csv.DictWriter(buf, SWEEP_COLUMNS, lineterminator="\n")
    wr.writeheader()
    flagged = 0
    for rows in chunks:
        for row in rows:
            wr.writerow({"axis": args.axis, **{k: (repr(v) if isinstance(v, float) else v)
                                               for k, v in row.items()}})
            flagged += row["status"] != "ok"
    out = _out_dir(args, cfg)
    _write(out / "sweep.csv", buf.getvalue())
    print(f"sweep over {args.axis}: {len(values)} points, {flagged} flagged row(s)")
    if flagged:
        log.warning("%d sweep row(s) failed or gave an unexpected verdict", flagged)
        return EXIT_CHECK if args.strict else EXIT_OK
    return EXIT_OK


# ----------------------------------------------------------------- constants

def cmd_constants(args) -> int:
    cfg = _load_config(args)
    params = cfg.build_params()
    ledger = measure_ledger(params)
    out = _out_dir(args, cfg)
    _write(out / "ledger.json",
           ledger.to_json(params=params.as_dict(),
                          probe_family_version=inequalities.PROBE_FAMILY_VERSION,
                          probe_family_hash=inequalities.probe_family_hash(params)))
    print(f"recorded {len(ledger.names())} constants in {out / 'ledger.json'}")
    return EXIT_OK


# -------------------------------------------------------------- verify-exact

def exact_oracle_suite():
    """[(name, value, passed)] for the closed-form solution oracles."""
    rows = []
    sep_params = validate_params(3, 1.0, 0.0, 0.25, 2.0)
    sep = exact.separable(sep_params, 1.0)
    order, _ = exact.residual_order(sep, 0.5, 0.6, 0.05)
    rows.append(("separable residual order", order, order >= 2.0))
    c_expected = (0.25 * 1.0 * (1.0 - 0.25 / 0.75)) ** (1.0 / 0.75)
    rows.append(("separable amplitude", sep.c, abs(sep.c - c_expected) <= 1e-14))
    bar_params = validate_params(3, 1.0, 0.0, 0.6, 1.0)
    bar = exact.barenblatt(bar_params, D=2.0)
    xi = np.geomspace(1e-3, 1e2, 50)
    res = float(np.max(np.abs(exact.profile_ode_residual(bar, xi))))
    rows.append(("barenblatt profile ODE residual", res, res <= 1e-12))
    # N = 3, gamma = 1: the mu_gamma density of a radial field is 4 pi r u
    quad, _ = integrate.quad(lambda r: 4.0 * np.pi * r * bar.evaluate(1.0, r), 0.0,
                             np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    rel = abs(quad - bar.mass()) / bar.mass()
    rows.append(("barenblatt mass vs quadrature", rel, rel <= 1e-6))
    b_order, _ = exact.residual_order(bar, 1.0, 0.5, 0.05)
    rows.append(("barenblatt residual order", b_order, b_order >= 2.0))
    return rows


def cmd_verify_exact(args) -> int:
    rows = exact_oracle_suite()
    bad = 0
    for name, val, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {val:.6g}")
        bad += not ok
    if args.out:
        out = _out_dir(args, None)
        _write(out / "verify_exact.json", json.dumps(
            [{"name": n, "value": float(v), "pass": bool(ok)} for n, v, ok in rows],
            indent=2, sort_keys=True))
    return EXIT_CHECK if bad else EXIT_OK


# ---------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wfde", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--strict", action="store_true",
                        help="treat flagged sweep rows as failures")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomised time pairs")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the solver")
    p = sub.add_parser("check", parents=[common], help="evaluate named checks")
    p.add_argument("names", nargs="*", help="check names (default: all in config)")
    p.add_argument("--ledger", help="ledger file with installed constants")
    p = sub.add_parser("sweep", parents=[common], help="repeat checks along an axis")
    p.add_argument("--axis", required=True,
                   help=f"one of {', '.join([*SWEEP_AXES, 'eps'])} or a dotted key")
    p.add_argument("--values", required=True, help="comma separated values")
    sub.add_parser("constants", parents=[common], help="measure the constant ledger")
    sub.add_parser("verify-exact", parents=[common], help="closed-form oracle suite")
    return ap


COMMANDS = {"simulate": cmd_simulate, "check": cmd_check, "sweep": cmd_sweep,
            "constants": cmd_constants, "verify-exact": cmd_verify_exact}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except UnknownCheck as exc:
        print(f"error: unknown check {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

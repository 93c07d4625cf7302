"""Config-driven batch front end.

Usage:
  repfeedback solve --config run.json --out out/
  repfeedback simulate --config run.json --seed 11 --threads 4
  repfeedback verify --config run.json [--solution out/equilibrium.csv]

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import committee as cm
from . import policy as pol
from .checks import run_suite
from .dynamics import (SimSettings, boundary_hitting, ct_coefficients, drift_and_kl,
                       risky_increment_stats, simulate_paths, PATH_COLUMNS)
from .measure import P1_COLUMNS, P2_COLUMNS, P3_COLUMNS, export_regression_tables, sign_diagnostics
from .model import ModelParams, ParamError
from .solver import (CSV_COLUMNS, Grid, SolveSettings, SolverError, comparative_sweep, fmt,
                     read_table, value_iteration, write_table)

COMMANDS = ("solve", "simulate", "statics", "bonus", "committee", "ctlimit", "measure", "verify")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# block -> key -> (type(s), default); None default means required when the block is used
SCHEMA = {
    "solve": {
        "damping": (float, 0.4), "tolerance": (float, 1e-6), "maxIterations": (int, 10000),
        "bisectionIterations": (int, 80), "bracketWidth": (float, 6.0),
        "safeUpdate": (str, "recOnly"), "gridPoints": (int, 321),
        "gridLow": (float, 0.05), "gridHigh": (float, 0.95),
    },
    "sim": {
        "pi0": (float, 0.5), "horizon": (int, 150), "replications": (int, 250),
        "trueType": (str, "both"),
    },
    "statics": {"sweeps": (list, None)},
    "bonus": {
        "pis": (list, [0.3, 0.5, 0.7]), "betas": (list, [0.0, 0.25, 0.5]),
        "rhoTarget": ((float, type(None)), None), "step": (float, 1e-4),
        "weighting": (str, "successProb"),
    },
    "committee": {
        "n": (int, None), "ks": (list, None), "lambda": ((float, type(None)), None),
        "rho0": ((float, type(None)), None), "rho1": ((float, type(None)), None),
        "pis": ((list, type(None)), None),
    },
    "boundaries": {"piLow": (float, 0.1), "piHigh": (float, 0.9)},
    "measure": {"alpha0": (float, 1.0), "beta0": (float, 1.0), "riskyOnly": (bool, True)},
    "verify": {"sweeps": (bool, True)},
}
TOP_KEYS = {"model", "outputDir", "seed", *SCHEMA}
OPTIONAL_NONE = {"rhoTarget", "lambda", "rho0", "rho1", "pis"}


def _typed(path, value, types):
    types = types if isinstance(types, tuple) else (types,)
    if float in types and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if bool not in types and isinstance(value, bool):
        raise ConfigError(f"{path}: expected {types[0].__name__}, got boolean")
    if not isinstance(value, types):
        raise ConfigError(f"{path}: expected {types[0].__name__}, got {type(value).__name__}")
    return value


def resolve_config(raw: dict) -> dict:
    """Fill defaults and reject unknown keys, reporting dotted field paths."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"config: unknown key(s) {', '.join(unknown)}")
    cfg = {}
    try:
        model = ModelParams.from_dict(raw["model"]) if "model" in raw else ModelParams()
    except ParamError as e:
        raise ConfigError(f"model: {e}") from e
    cfg["model"] = model.to_dict()
    for block, keys in SCHEMA.items():
        given = raw.get(block, {})
        if not isinstance(given, dict):
            raise ConfigError(f"{block}: must be a JSON object")
        bad = sorted(set(given) - set(keys))
        if bad:
            raise ConfigError(f"{block}.{bad[0]}: unknown key")
        out = {}
        for k, (types, default) in keys.items():
            if k in given and given[k] is None and default is None:
                out[k] = None  # explicit null for an unset key
            elif k in given:
                out[k] = _typed(f"{block}.{k}", given[k], types)
            elif default is not None or k in OPTIONAL_NONE:
                out[k] = default
            else:
                out[k] = None
        cfg[block] = out
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    cfg["seed"] = seed
    out_dir = raw.get("outputDir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError("outputDir: must be a string")
    cfg["outputDir"] = out_dir
    if cfg["sim"]["trueType"] not in ("H", "L", "both"):
        raise ConfigError("sim.trueType: must be H, L or both")
    return cfg


def _settings(cfg) -> tuple[ModelParams, Grid, SolveSettings]:
    s = cfg["solve"]
    try:
        params = ModelParams.from_dict(cfg["model"])
        grid = Grid.uniform(s["gridPoints"], s["gridLow"], s["gridHigh"])
        st = SolveSettings(s["damping"], s["tolerance"], s["maxIterations"],
                           s["bisectionIterations"], s["bracketWidth"], s["safeUpdate"])
    except ParamError as e:
        raise ConfigError(f"solve: {e}") from e
    return params, grid, st


def _sim(cfg, theta):
    s = cfg["sim"]
    try:
        return SimSettings(s["pi0"], s["horizon"], s["replications"], cfg["seed"], theta)
    except ParamError as e:
        raise ConfigError(f"sim: {e}") from e


class Writer:
    """Writes tables and their metadata sidecars."""

    def __init__(self, out: Path, command: str, cfg: dict, fmt_: str):
        self.out, self.command, self.cfg, self.fmt = out, command, cfg, fmt_
        out.mkdir(parents=True, exist_ok=True)
        self.files = []

    def validated(self, digest):
        rec = self.out / "verify.json"
        if not rec.exists() or digest is None:
            return False
        try:
            v = json.loads(rec.read_text())
        except json.JSONDecodeError:
            return False
        return v.get("passed") is True and v.get("solutionHash") == digest

    def table(self, stem, table, columns, digest=None):
        if self.fmt == "json":
            path = self.out / f"{stem}.json"
            n = len(table[columns[0]]) if columns else 0
            rows = [{c: _scalar(table[c][i]) for c in columns} for i in range(n)]
            path.write_text(json.dumps(rows, separators=(",", ":")) + "\n")
        else:
            path = self.out / f"{stem}.csv"
            write_table(path, table, columns)
        self.sidecar(path, digest)
        return path

    def document(self, stem, obj, digest=None):
        path = self.out / f"{stem}.json"
        path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_scalar) + "\n")
        self.sidecar(path, digest)
        return path

    def sidecar(self, path: Path, digest):
        meta = {
            "command": self.command, "version": __version__, "config": self.cfg,
            "solutionHash": digest, "validated": self.validated(digest),
            "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        }
        path.with_name(path.name + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        self.files.append(path)


def _scalar(x):
    if isinstance(x, (np.floating, float)):
        return float(fmt(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.str_):
        return str(x)
    if isinstance(x, np.ndarray):
        return [_scalar(v) for v in x]
    return x


def cmd_solve(cfg, w: Writer, args):
    params, grid, st = _settings(cfg)
    sol = value_iteration(params, grid, st)
    w.table("equilibrium", sol.table(), CSV_COLUMNS, sol.digest())
    print(f"solved: {sol.iterations} sweeps, residual {sol.residual:.3e}, hash {sol.digest()[:12]}")
    return sol


def cmd_simulate(cfg, w: Writer, args, sol=None):
    params, grid, st = _settings(cfg)
    sol = sol or value_iteration(params, grid, st)
    digest = sol.digest()
    types = ("H", "L") if cfg["sim"]["trueType"] == "both" else (cfg["sim"]["trueType"],)
    bnd = cfg["boundaries"]
    summary = {}
    ensembles = {}
    for th in types:
        ens = simulate_paths(sol, _sim(cfg, th), threads=args.threads)
        stem = "paths" if len(types) == 1 else f"paths_{th}"
        w.table(stem, ens.table(), PATH_COLUMNS, digest)
        fl, fh, fn = boundary_hitting(ens, bnd["piLow"], bnd["piHigh"])
        summary[th] = {"riskyIncrement": risky_increment_stats(ens), "clampCount": ens.clamp_count,
                       "boundaryHitting": {"fracLow": fl, "fracHigh": fh, "fracNeither": fn}}
        ensembles[th] = ens
    d = drift_and_kl(sol)
    summary["closedFormDrift"] = d.to_json(sol.grid.points)
    w.document("simulation_summary", summary, digest)
    print(f"simulated {', '.join(types)}: {cfg['sim']['replications']} x {cfg['sim']['horizon']}")
    return ensembles


def cmd_statics(cfg, w: Writer, args):
    params, grid, st = _settings(cfg)
    sweeps = cfg["statics"]["sweeps"] or [
        {"axis": "sigmaH", "values": [0.8, 1.0]},
        {"axis": "lambda", "values": [0.5, 0.6]},
        {"axis": "delta", "values": [0.90, 0.95]},
    ]
    cols = ["axis", "from", "to", "pi", "sStarFrom", "sStarTo", "moved", "interior"]
    tab = {c: [] for c in cols}
    summary = []
    for i, sw in enumerate(sweeps):
        if not isinstance(sw, dict) or set(sw) != {"axis", "values"}:
            raise ConfigError(f"statics.sweeps[{i}]: needs exactly the keys axis and values")
        try:
            rep = comparative_sweep(params, sw["axis"], sw["values"], grid, st, threads=args.threads)
        except ParamError as e:
            raise ConfigError(f"statics.sweeps[{i}]: {e}") from e
        for step, s0, s1 in zip(rep.steps, rep.solutions, rep.solutions[1:]):
            interior = (s0.clamp == 0) & (s1.clamp == 0)
            for j, x in enumerate(grid.points):
                for c, v in zip(cols, (sw["axis"], step.before, step.after, x, s0.cutoffs[j],
                                       s1.cutoffs[j], int(step.moved[j]), int(interior[j]))):
                    tab[c].append(v)
            summary.append({"axis": sw["axis"], "from": step.before, "to": step.after,
                            "expectedDirection": "up" if rep.direction > 0 else "down",
                            "violations": step.violations, "interior": step.interior})
            print(f"{sw['axis']} {step.before:g}->{step.after:g}: "
                  f"{step.violations}/{step.interior} interior violations")
    w.table("statics", {k: np.array(v) for k, v in tab.items()}, cols)
    w.document("statics_summary", summary)


def cmd_bonus(cfg, w: Writer, args):
    params, grid, st = _settings(cfg)
    sol = value_iteration(params, grid, st)
    b = cfg["bonus"]
    if b["weighting"] not in pol.WEIGHTINGS:
        raise ConfigError(f"bonus.weighting: must be one of {pol.WEIGHTINGS}")
    pis = [float(x) for x in b["pis"]]
    betas = [float(x) for x in b["betas"]]
    tab = pol.bonus_sweep(sol, pis, betas, st, b["step"])
    w.table("bonus", tab, pol.BONUS_COLUMNS, sol.digest())
    status = EXIT_OK
    if b["rhoTarget"] is not None:
        rec = {"rhoTarget": b["rhoTarget"], "calibration": {}}
        for x in pis:
            try:
                beta = pol.calibrate_bonus(x, sol.value, params, b["rhoTarget"], st)
                rec["calibration"][fmt(x)] = {"beta1": beta,
                                              "rho": pol.rho_of_beta(x, sol.value, params, beta, st)}
            except (pol.CalibrationError, ParamError) as e:
                rec["calibration"][fmt(x)] = {"error": str(e)}
                status = EXIT_NUMERIC
                print(f"calibration at pi={x:g} failed: {e}", file=sys.stderr)
        w.document("bonus_calibration", rec, sol.digest())
    return status


def cmd_committee(cfg, w: Writer, args):
    c = cfg["committee"]
    if c["n"] is None:
        raise ConfigError("committee.n: required")
    n = c["n"]
    ks = c["ks"] or list(range(1, n + 1))
    lam = c["lambda"] if c["lambda"] is not None else cfg["model"]["lambda"]
    cases = []
    if c["pis"]:
        params, grid, st = _settings(cfg)
        sol = value_iteration(params, grid, st)
        for x in c["pis"]:
            cases.append(cm.member_risk_probs(float(x), float(sol.cutoff_at(x)), params))
    elif c["rho0"] is not None and c["rho1"] is not None:
        cases.append((c["rho0"], c["rho1"]))
    else:
        raise ConfigError("committee: give rho0 and rho1, or pis")
    tab = {k: [] for k in cm.COMMITTEE_COLUMNS}
    for r0, r1 in cases:
        for k in ks:
            try:
                spec = cm.CommitteeSpec(n, lam, {0: r0, 1: r1}, k=int(k))
            except ParamError as e:
                raise ConfigError(f"committee: {e}") from e
            for col, v in zip(cm.COMMITTEE_COLUMNS, (n, int(k), lam, r0, r1, cm.pivot_k_of_n(spec))):
                tab[col].append(v)
    w.table("committee", {k: np.array(v) for k, v in tab.items()}, cm.COMMITTEE_COLUMNS)


def cmd_ctlimit(cfg, w: Writer, args):
    params, grid, st = _settings(cfg)
    sol = value_iteration(params, grid, st)
    ct = ct_coefficients(sol)
    tab = {"pi": ct.pi, "mu": ct.mu, "sigma2": ct.sigma2, "Lambda": ct.intensity, "rho": ct.rho}
    w.table("ctlimit", tab, list(tab), sol.digest())
    w.document("ctlimit_by_grid", ct.to_json(), sol.digest())


def cmd_measure(cfg, w: Writer, args):
    params, grid, st = _settings(cfg)
    sol = value_iteration(params, grid, st)
    theta = "H" if cfg["sim"]["trueType"] == "both" else cfg["sim"]["trueType"]
    ens = simulate_paths(sol, _sim(cfg, theta), threads=args.threads)
    m = cfg["measure"]
    tabs = export_regression_tables(ens, alpha0=m["alpha0"], beta0=m["beta0"], risky_only=m["riskyOnly"])
    for name, cols in (("p1", P1_COLUMNS), ("p2", P2_COLUMNS), ("p3", P3_COLUMNS)):
        w.table(name, tabs[name], cols, sol.digest())
    w.document("measure_signs", sign_diagnostics(ens), sol.digest())


def cmd_verify(cfg, w: Writer, args):
    params, grid, st = _settings(cfg)
    table = read_table(args.solution) if args.solution else None
    sol = value_iteration(params, grid, st)
    checks = run_suite(sol, table, params, st, sweeps=cfg["verify"]["sweeps"], threads=args.threads)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    rec = {"passed": not failed, "solutionHash": sol.digest(),
           "firstFailure": failed[0].name if failed else None,
           "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks]}
    w.document("verify", rec, sol.digest())
    if failed:
        print(f"verification failed: first failed invariant is {failed[0].name}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "simulate": cmd_simulate, "statics": cmd_statics,
            "bonus": cmd_bonus, "committee": cmd_committee, "ctlimit": cmd_ctlimit,
            "measure": cmd_measure, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="repfeedback", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run config (baseline defaults when omitted)")
    ap.add_argument("--out", help="output directory (overrides outputDir)")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed override")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--solution", help="verify: an equilibrium.csv to check against the config")
    return ap


def run(command: str, cfg: dict, args) -> int:
    w = Writer(Path(cfg["outputDir"]), command, cfg, args.format)
    status = HANDLERS[command](cfg, w, args)
    return status if isinstance(status, int) else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = {}
        if args.config:
            try:
                raw = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"config: cannot read {args.config}: {e}") from e
        if args.seed is not None:
            raw = {**raw, "seed": args.seed}
        if args.out is not None:
            raw = {**raw, "outputDir": args.out}
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        cfg = resolve_config(raw)
        return run(args.command, cfg, args)
    except (ConfigError, ParamError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ArithmeticError, pol.CalibrationError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        residuals = getattr(e, "residuals", None)
        if residuals:
            print("residual history (last 10): " + ", ".join(f"{r:.3e}" for r in residuals[-10:]),
                  file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())

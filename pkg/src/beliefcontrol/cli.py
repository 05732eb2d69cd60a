"""Command-line interface.

Exit codes: 0 success, 1 infeasible design or failed check, 2 bad input.
Reports go to standard output as JSON; matrices and traces are written as
CSV to ``-o`` (default: ``$BELIEFCONTROL_OUTDIR`` or the working directory).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .io import (InputError, RunManifest, load_network, read_block, read_desired, read_likelihoods,
                 write_json, write_matrix, write_trace)
from .joint import EpsilonPolicy, Status, joint_design
from .limits import InvalidWeakStructure
from .network import CombinationMatrix, DimensionError, ValidationConfig, build_C, validate_network
from .sim import SimConfig, empirical_limit, run_simulation, verify_design
from .tsr import TOL_POS, TOL_ZERO, InfeasibleDesign, check_attainable, compute_V, design_TSR

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

OUTDIR_ENV = "BELIEFCONTROL_OUTDIR"

DEFAULTS = {
    "tol_stochastic": 1e-12,
    "tol_zero": TOL_ZERO,
    "tol_pos": TOL_POS,
    "epsilon": None,
    "epsilon_cap": 0.01,
    "y_policy": "zero",
    "iterations": 7000,
    "seed": 42,
    "stride": 10,
    "window": 1,
    "analytic_tol": 1e-8,
}


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value
    unknown = set(flat) - set(DEFAULTS)
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    return flat


def resolve(args, keys) -> dict:
    """Flag value if given, else config file value, else default."""
    config = _load_config(getattr(args, "config", None))
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else config.get(key, DEFAULTS[key])
    return out


def _outdir(args) -> Path:
    out = Path(args.output or os.environ.get(OUTDIR_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(report: dict) -> None:
    json.dump(report, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _manifest(args, inputs: dict, config: dict) -> dict:
    return RunManifest(args.command, {k: str(v) for k, v in inputs.items() if v is not None},
                       config, __version__).to_dict()


def _t_rr(spec, path):
    n = spec.topology.n_receiving
    if path is not None:
        return read_block(path, (n, n), "T_RR")
    if spec.A is None:
        raise InputError("T_RR is needed: give --trr or weights in the network file")
    return np.array(spec.A.T_RR)


def cmd_validate(args) -> int:
    cfg = resolve(args, ["tol_stochastic"])
    spec = load_network(args.network)
    report = validate_network(spec.topology, spec.A, ValidationConfig(cfg["tol_stochastic"]))
    out = report.to_dict()
    out["manifest"] = _manifest(args, {"network": args.network}, cfg)
    _emit(out)
    return 0 if report.valid else 1


def cmd_attainable(args) -> int:
    cfg = resolve(args, ["tol_zero", "tol_pos"])
    spec = load_network(args.network)
    Q = read_desired(args.q, spec.topology)
    T_RR = _t_rr(spec, args.trr)
    V = compute_V(Q, T_RR)
    report = check_attainable(V, build_C(spec.topology), cfg["tol_zero"], cfg["tol_pos"],
                              spec.topology.receiving_ids)
    out = report.to_dict()
    out["V"] = V.tolist()
    out["manifest"] = _manifest(args, {"network": args.network, "q": args.q, "trr": args.trr}, cfg)
    _emit(out)
    return 0 if report.attainable else 1


def _y_policy(value):
    if value in (None, "zero"):
        return None
    path = Path(value)
    if not path.exists():
        raise InputError(f"y policy must be 'zero' or a JSON file, got {value!r}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InputError("y policy file must map receiving agents to vectors or weight objects")
    return {int(k): v for k, v in data.items()}


def cmd_design_tsr(args) -> int:
    cfg = resolve(args, ["tol_zero", "tol_pos", "y_policy"])
    spec = load_network(args.network)
    top = spec.topology
    Q = read_desired(args.q, top)
    T_RR = _t_rr(spec, args.trr)
    policy = _y_policy(cfg["y_policy"])
    manifest = _manifest(args, {"network": args.network, "q": args.q, "trr": args.trr}, cfg)
    try:
        T_SR = design_TSR(Q, T_RR, top, policy, cfg["tol_zero"], cfg["tol_pos"])
    except InfeasibleDesign as exc:
        _emit({"attainable": False, "violations": [v.to_dict() for v in exc.violations],
               "message": str(exc), "manifest": manifest})
        return 1
    out = _outdir(args)
    path = out / "T_SR.csv"
    write_matrix(path, T_SR, top.sending_ids, top.receiving_ids)
    write_json(out / "manifest.json", manifest)
    _emit({"attainable": True, "violations": [], "T_SR": str(path), "manifest": manifest})
    return 0


def _overrides(path):
    if path is None:
        return None
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read overrides {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("overrides must map agents to {'rr': {...}, 'sr': {...}}")
    return {int(k): {part: {int(a): float(w) for a, w in v.get(part, {}).items()} for part in ("rr", "sr")}
            for k, v in data.items()}


def cmd_design_joint(args) -> int:
    cfg = resolve(args, ["epsilon", "epsilon_cap"])
    spec = load_network(args.network)
    top = spec.topology
    Q = read_desired(args.q, top)
    policy = EpsilonPolicy(fixed=cfg["epsilon"], cap=cfg["epsilon_cap"])
    design = joint_design(Q, top, policy, _overrides(args.overrides), fallback_ls=args.fallback_ls)
    out = _outdir(args)
    manifest = _manifest(args, {"network": args.network, "q": args.q, "overrides": args.overrides},
                         dict(cfg, fallback_ls=args.fallback_ls))
    report = design.to_dict()
    report["manifest"] = manifest
    if design.solved:
        write_matrix(out / "T_SR.csv", design.T_SR, top.sending_ids, top.receiving_ids)
        write_matrix(out / "T_RR.csv", design.T_RR, top.receiving_ids, top.receiving_ids)
        report["matrices"] = {"T_SR": str(out / "T_SR.csv"), "T_RR": str(out / "T_RR.csv")}
    write_json(out / "design.json", report)
    _emit(report)
    if not design.solved:
        return 1
    if not args.fallback_ls and any(c.local_status is not Status.EXACT for c in design.columns):
        return 1
    return 0


def _overlay(spec, tsr, trr) -> CombinationMatrix:
    if spec.A is None:
        raise InputError("simulation needs weights in the network file")
    top = spec.topology
    T_SR = read_block(tsr, (top.n_sending, top.n_receiving), "T_SR") if tsr else None
    T_RR = read_block(trr, (top.n_receiving, top.n_receiving), "T_RR") if trr else None
    return spec.A.with_blocks(T_SR, T_RR)


def _sim_config(cfg) -> SimConfig:
    try:
        return SimConfig(iterations=int(cfg["iterations"]), seed=int(cfg["seed"]),
                         trace_stride=int(cfg["stride"]), averaging_window=int(cfg["window"]))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_simulate(args) -> int:
    cfg = resolve(args, ["iterations", "seed", "stride", "window"])
    config = _sim_config(cfg)
    spec = load_network(args.network)
    A = _overlay(spec, args.tsr, args.trr)
    report = validate_network(spec.topology, A)
    if not report.valid:
        _emit({"error": "network is not a valid weak graph", "validation": report.to_dict()})
        return 1
    lik = read_likelihoods(args.likelihoods, spec)
    trace = run_simulation(A, lik, spec.states, config)
    out = _outdir(args)
    write_trace(out / "trace.csv", trace)
    manifest = _manifest(args, {"network": args.network, "likelihoods": ",".join(args.likelihoods),
                                "tsr": args.tsr, "trr": args.trr}, cfg)
    write_json(out / "manifest.json", manifest)
    window = min(config.averaging_window, len(trace.iterations))
    _emit({"trace": str(out / "trace.csv"), "stored": len(trace.iterations),
           "states": list(spec.states.labels),
           "final": trace.final.tolist(), "empirical_limit": empirical_limit(trace, window).tolist(),
           "manifest": manifest})
    return 0


def cmd_verify(args) -> int:
    cfg = resolve(args, ["iterations", "seed", "stride", "window", "analytic_tol"])
    spec = load_network(args.network)
    top = spec.topology
    Q = read_desired(args.q, top)
    T_SR = read_block(args.tsr, (top.n_sending, top.n_receiving), "T_SR")
    T_RR = read_block(args.trr, (top.n_receiving, top.n_receiving), "T_RR")
    lik = read_likelihoods(args.likelihoods, spec) if args.likelihoods else None
    if lik is not None and spec.A is None:
        raise InputError("simulation needs T_SS weights in the network file")
    T_SS = None if spec.A is None else spec.A.T_SS
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
    report = verify_design(T_SR, T_RR, Q, top, lik, _sim_config(cfg), T_SS, spec.states, seeds)
    out = report.to_dict(top.receiving_ids)
    out["manifest"] = _manifest(args, {"network": args.network, "q": args.q, "tsr": args.tsr, "trr": args.trr,
                                       "likelihoods": ",".join(args.likelihoods or []) or None}, cfg)
    _emit(out)
    return 0 if report.analytic_vs_target <= cfg["analytic_tol"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beliefcontrol", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, output=False):
        p.add_argument("--config", help="TOML file with defaults; flags take precedence")
        if output:
            p.add_argument("-o", "--output", help=f"output directory (default ${OUTDIR_ENV} or .)")
        return p

    p = common(sub.add_parser("validate", help="check a network file"))
    p.add_argument("network")
    p.add_argument("--tol-stochastic", dest="tol_stochastic", type=float)
    p.set_defaults(func=cmd_validate)

    p = common(sub.add_parser("attainable", help="test whether Q is reachable for the given T_RR"))
    p.add_argument("network")
    p.add_argument("q")
    p.add_argument("--trr", help="T_RR CSV (default: weights in the network file)")
    p.add_argument("--tol-zero", dest="tol_zero", type=float)
    p.add_argument("--tol-pos", dest="tol_pos", type=float)
    p.set_defaults(func=cmd_attainable)

    p = common(sub.add_parser("design-tsr", help="design T_SR for a fixed T_RR"), output=True)
    p.add_argument("network")
    p.add_argument("q")
    p.add_argument("--trr")
    p.add_argument("--y-policy", dest="y_policy", help="'zero' or a JSON file of per-agent choices")
    p.add_argument("--tol-zero", dest="tol_zero", type=float)
    p.add_argument("--tol-pos", dest="tol_pos", type=float)
    p.set_defaults(func=cmd_design_tsr)

    p = common(sub.add_parser("design-joint", help="design T_SR and T_RR together"), output=True)
    p.add_argument("network")
    p.add_argument("q")
    p.add_argument("--epsilon", type=float, help="fixed floor for receiving weights")
    p.add_argument("--epsilon-cap", dest="epsilon_cap", type=float)
    p.add_argument("--overrides", help="JSON pinning free weights per agent")
    p.add_argument("--fallback-ls", dest="fallback_ls", action="store_true",
                   help="fit infeasible agents by constrained least squares")
    p.set_defaults(func=cmd_design_joint)

    def sim_flags(p):
        p.add_argument("--iters", dest="iterations", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--stride", type=int)
        p.add_argument("--window", type=int, help="stored snapshots averaged for the empirical limit")

    p = common(sub.add_parser("simulate", help="run the diffusion learning rule"), output=True)
    p.add_argument("network")
    p.add_argument("likelihoods", nargs="+")
    p.add_argument("--tsr")
    p.add_argument("--trr")
    sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("verify", help="compare a design's limits with Q"))
    p.add_argument("network")
    p.add_argument("q")
    p.add_argument("tsr")
    p.add_argument("trr")
    p.add_argument("likelihoods", nargs="*")
    p.add_argument("--seeds", help="comma-separated seeds to average over")
    p.add_argument("--analytic-tol", dest="analytic_tol", type=float)
    sim_flags(p)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        return args.func(args)
    except (InputError, DimensionError, InvalidWeakStructure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if not isinstance(exc, InvalidWeakStructure) else 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    boundcount2d bound compute|scan-k0|scan-g   --config run.json
    boundcount2d oracle count|trajectories       --config run.json
    boundcount2d conditions check                --config run.json
    boundcount2d conditions a17 --gamma 0.75
    boundcount2d verify appendix|all            [--config run.json]

Exit status: 0 success, 1 a check or I/O failed, 2 bad configuration or usage.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from typing import Any, Optional, Sequence

import numpy as np
import scipy
import sklearn
from threadpoolctl import threadpool_limits

from . import __version__
from .bound import REPORT_FIELDS, compute_bound, g_scaling_check, k0_invariance_scan, regularized
from .bskernel import MAX_ACTIVE, build_a, build_K, build_Kprime
from .conditions import classify_a17, condition_integrals
from .exceptions import ConfigurationError, DomainError
from .oracle import bs_count, converged_count, radial_count, trajectories, trajectory_rows
from .potential import Grid2D, PotentialSpec, corpus, default_half_width, is_central, sample_negative_part
from .verify import appendix_suite, full_suite

logger = logging.getLogger("boundcount2d")

CONFIG_SCHEMA = {
    "potential": None,
    "grid": {"n", "L"},
    "kernel": {"k0", "eps", "mu"},
    "oracle": {"L_box", "n_box", "g_list"},
    "scan": {"k0_list", "g_list"},
}

DEFAULTS = {
    "grid": {"n": 64, "L": None},
    "kernel": {"k0": 1.0, "eps": "auto", "mu": None},
    "oracle": {"L_box": None, "n_box": 96, "g_list": [0.5, 1.0, 5.0]},
    "scan": {"k0_list": [0.1, 0.5, 1.0, 2.0, 10.0], "g_list": [0.1, 1.0, 10.0, 100.0]},
}


class CheckFailed(Exception):
    pass


# --- configuration -----------------------------------------------------------

def load_config(path: Optional[str]) -> dict:
    doc: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigurationError("config must be a JSON object")
    unknown = set(doc) - set(CONFIG_SCHEMA)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    cfg: dict[str, Any] = {}
    for section, keys in CONFIG_SCHEMA.items():
        if keys is None:
            continue
        given = doc.get(section, {})
        if not isinstance(given, dict):
            raise ConfigurationError(f"config section {section!r} must be an object")
        bad = set(given) - keys
        if bad:
            raise ConfigurationError(f"unknown keys in {section!r}: {sorted(bad)}")
        cfg[section] = {**DEFAULTS[section], **given}
    if "potential" in doc:
        cfg["potential"] = PotentialSpec.from_dict(doc["potential"]).to_dict()
    return cfg


def apply_overrides(cfg: dict, args) -> dict:
    if args.k0 is not None:
        cfg["kernel"]["k0"] = args.k0
    if args.grid_n is not None:
        cfg["grid"]["n"] = args.grid_n
    if args.grid_L is not None:
        cfg["grid"]["L"] = args.grid_L
    if args.g is not None:
        cfg["oracle"]["g_list"] = list(args.g)
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _potential(cfg: dict) -> PotentialSpec:
    if "potential" not in cfg:
        raise ConfigurationError("this command needs a 'potential' in the config")
    return PotentialSpec.from_dict(cfg["potential"])


def _versions() -> dict:
    return {"boundcount2d": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__}


# --- report emission ---------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render(payload: dict, fmt: str, columns: Sequence[str] = (), rows: Sequence[dict] = ()) -> str:
    """JSON (sorted keys, shortest round-trip floats) or CSV with a provenance comment line."""
    if fmt == "json":
        return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# config_hash={payload['config_hash']} versions={json.dumps(payload['versions'], sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def write_report(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CheckFailed(f"cannot write {path}: {exc}") from None


# --- commands ----------------------------------------------------------------

def _field(cfg: dict, spec: PotentialSpec):
    L = cfg["grid"]["L"]
    grid = Grid2D(default_half_width(spec) if L is None else float(L), int(cfg["grid"]["n"]))
    return sample_negative_part(spec, grid)


def _L_box(cfg: dict, spec: PotentialSpec) -> float:
    L_box = cfg["oracle"]["L_box"]
    return 2.0 * default_half_width(spec) if L_box is None else float(L_box)


def cmd_bound_compute(cfg, args, payload):
    spec = _potential(cfg)
    k = cfg["kernel"]
    g_list = [1.0] if args.g is None else list(args.g)
    raw = _field(cfg, spec)
    reports = [compute_bound(raw, k0=k["k0"], eps=k["eps"], mu=k["mu"], g=g) for g in g_list]
    payload["reports"] = [r.to_dict() for r in reports]
    # with an oracle section the reference count is recorded next to the bound
    if "oracle" in (args.raw_sections or ()):
        checks = []
        for rep in reports:
            fd = converged_count(spec, _L_box(cfg, spec), int(cfg["oracle"]["n_box"]), rep.g)
            checks.append({"g": rep.g, "oracle_count": fd.count, "converged": fd.converged,
                           "N_total_bound": rep.N_total_bound, "holds": rep.N_total_bound >= fd.count})
        payload["oracle"] = checks
        if not all(c["holds"] for c in checks):
            payload["status"] = "fail"
    return list(REPORT_FIELDS), payload["reports"]


def cmd_bound_scan_k0(cfg, args, payload):
    spec = _potential(cfg)
    k = cfg["kernel"]
    field = regularized(_field(cfg, spec), k["eps"], k["mu"])
    method = "dense" if np.count_nonzero(field.values) <= MAX_ACTIVE else "fft"
    scan = k0_invariance_scan(field, cfg["scan"]["k0_list"], method=method)
    rows = [{"k0": r[0], "T1": r[1], "T2": r[2], "T3": r[3],
             "N_total_bound": 1.0 + r[1] - 2.0 * r[2] + r[3] ** 2, "N_I_bound": r[1] - r[2]}
            for r in scan["rows"]]
    payload.update(rows=rows, deviation_total=scan["deviation_total"], deviation_N_I=scan["deviation_N_I"],
                   deviation_T1=scan["deviation_T1"])
    if scan["deviation_total"] > 1e-10:
        payload["status"] = "fail"
    return ["k0", "T1", "T2", "T3", "N_I_bound", "N_total_bound"], rows


def cmd_bound_scan_g(cfg, args, payload):
    spec = _potential(cfg)
    k = cfg["kernel"]
    base = compute_bound(_field(cfg, spec), k0=k["k0"], eps=k["eps"], mu=k["mu"])
    g_list = cfg["scan"]["g_list"] if args.g is None else list(args.g)
    res = g_scaling_check((base.T1, base.T2, base.T3), g_list)
    rows = [{"g": g, "N_total_bound": nb, "ratio": r} for g, nb, r in zip(res["g"], res["N_total_bound"], res["ratio"])]
    payload.update(rows=rows, deviation=res["deviation"])
    return ["g", "N_total_bound", "ratio"], rows


def cmd_oracle_count(cfg, args, payload):
    spec = _potential(cfg)
    k = cfg["kernel"]
    field = regularized(_field(cfg, spec), k["eps"], k["mu"])
    kprime = None
    if 0 < np.count_nonzero(field.values) <= MAX_ACTIVE:
        K = build_K(field, k["k0"])
        kprime = build_Kprime(K, build_a(field, K.active))
    rows = []
    for g in cfg["oracle"]["g_list"]:
        fd = converged_count(spec, _L_box(cfg, spec), int(cfg["oracle"]["n_box"]), float(g))
        row = {"g": float(g), "fd_count": fd.count, "converged": fd.converged,
               "radial_count": radial_count(spec, g=float(g)) if is_central(spec) else None,
               "bs_count": bs_count(kprime, float(g)) if kprime is not None else None}
        if row["bs_count"] is not None and abs(row["bs_count"] - fd.count) > 1:
            logger.warning("deflated-kernel estimate %d differs from fd count %d at g=%r",
                           row["bs_count"], fd.count, g)
        rows.append(row)
    payload["rows"] = rows
    return ["g", "fd_count", "converged", "radial_count", "bs_count"], rows


def cmd_oracle_trajectories(cfg, args, payload):
    spec = _potential(cfg)
    g_list = sorted(float(g) for g in cfg["oracle"]["g_list"])
    res = trajectories(spec, g_list, _L_box(cfg, spec), int(cfg["oracle"]["n_box"]))
    rows = [{"branch_id": b, "g": g, "E": e} for g, b, e in trajectory_rows(res["branches"])]
    payload.update(rows=rows, monotone=res["monotone"], fh_max_rel_error=res["fh_max_rel_error"],
                   flagged_intervals=res["flagged_intervals"])
    if not res["monotone"]:
        payload["status"] = "fail"
    return ["branch_id", "g", "E"], rows


def cmd_conditions_check(cfg, args, payload):
    spec = _potential(cfg)
    rep = condition_integrals(_field(cfg, spec))
    payload["report"] = rep.to_dict()
    row = {k: v for k, v in rep.to_dict().items() if k != "flags"}
    return list(row), [row]


def cmd_conditions_a17(cfg, args, payload):
    if not args.gamma:
        raise ConfigurationError("conditions a17 needs --gamma")
    results = [classify_a17(g) for g in args.gamma]
    payload["results"] = [{k: v for k, v in r.items() if k != "rows"} for r in results]
    verdicts = [f"I: {r['I']}, A3: {r['A3']}" for r in results]
    stream = sys.stderr if args.out is None else sys.stdout
    for gamma, line in zip(args.gamma, verdicts):
        prefix = f"gamma={gamma!r} " if len(args.gamma) > 1 else ""
        print(prefix + line, file=stream)
    rows = [row for r in results for row in r["rows"]]
    return ["gamma", "cutoff_u", "I_partial", "A3_partial", "I_verdict", "A3_verdict"], rows


def _suite_targets(cfg):
    return {"potential": _potential(cfg)} if "potential" in cfg else corpus()


def _run_suite(checks, payload):
    rows = [c.to_dict() for c in checks]
    payload["checks"] = rows
    if not all(c.passed for c in checks):
        payload["status"] = "fail"
    for c in checks:
        logger.info("%s %s value=%r", "PASS" if c.passed else "FAIL", c.name, c.value)
    return ["name", "passed", "value", "tolerance", "detail"], rows


def cmd_verify_appendix(cfg, args, payload):
    return _run_suite(appendix_suite(_suite_targets(cfg), int(cfg["grid"]["n"]), cfg["grid"]["L"]), payload)


def cmd_verify_all(cfg, args, payload):
    o = cfg["oracle"]
    checks = full_suite(_suite_targets(cfg), int(cfg["grid"]["n"]), cfg["grid"]["L"],
                        [float(g) for g in o["g_list"]], int(o["n_box"]), o["L_box"])
    return _run_suite(checks, payload)


COMMANDS = {
    "bound": {"compute": cmd_bound_compute, "scan-k0": cmd_bound_scan_k0, "scan-g": cmd_bound_scan_g},
    "oracle": {"count": cmd_oracle_count, "trajectories": cmd_oracle_trajectories},
    "conditions": {"check": cmd_conditions_check, "a17": cmd_conditions_a17},
    "verify": {"appendix": cmd_verify_appendix, "all": cmd_verify_all},
}

DEFAULT_FORMAT = {("oracle", "trajectories"): "csv", ("conditions", "a17"): "csv"}


def _positive_float(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(val) and val > 0):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return val


def _grid_n(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 8:
        raise argparse.ArgumentTypeError("grid size must be >= 8")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), help="report format")
    common.add_argument("--k0", type=_positive_float, help="scale inside ln(k0 |x - y|)")
    common.add_argument("--grid-n", type=_grid_n, help="grid nodes per axis")
    common.add_argument("--grid-L", type=_positive_float, help="grid half-width")
    common.add_argument("--gamma", type=_positive_float, nargs="+", help="a17 family exponent(s)")
    common.add_argument("--g", type=_positive_float, nargs="+", help="coupling(s)")
    common.add_argument("--verbose", "-v", action="count", default=0)

    parser = argparse.ArgumentParser(prog="boundcount2d", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)
    for group, subs in COMMANDS.items():
        gp = groups.add_parser(group)
        sp = gp.add_subparsers(dest="command", required=True)
        for name in subs:
            sp.add_parser(name, parents=[common])
    return parser


def _thread_cap() -> Optional[int]:
    raw = os.environ.get("S2B_THREADS")
    if raw is None or raw == "":
        return None
    try:
        val = int(raw)
    except ValueError:
        raise ConfigurationError(f"S2B_THREADS must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise ConfigurationError(f"S2B_THREADS must be a positive integer, got {raw!r}")
    return val


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), args)
        args.raw_sections = _raw_sections(args.config)
        threads = _thread_cap()
        run = {"command": f"{args.group} {args.command}", "config": cfg,
               "gamma": args.gamma, "g": args.g}
        payload = {**run, "config_hash": config_hash(run), "versions": _versions(), "status": "pass"}
        with threadpool_limits(limits=threads):
            columns, rows = COMMANDS[args.group][args.command](cfg, args, payload)
        fmt = args.format or DEFAULT_FORMAT.get((args.group, args.command), "json")
        write_report(render(payload, fmt, columns, rows), args.out)
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except CheckFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if payload["status"] != "pass":
        print("check failed; see report", file=sys.stderr)
        return 1
    return 0


def _raw_sections(path: Optional[str]) -> tuple:
    if path is None:
        return ()
    with open(path) as fh:
        return tuple(json.load(fh))


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()

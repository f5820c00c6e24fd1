"""Command-line front end: lens comparison, the L = 14 construction, jet recovery, sublevel sweeps, chords.

Exit codes: 0 claims hold, 1 claims violated, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import OracleDataset, TabulatedDataset
from .errors import LensJetError
from .geodesic import chord_between
from .jets import run_pipeline
from .lens import build_lens_table, compare_lens, default_direction_grid, level_grid, sublevel_measures
from .section5 import build_f1, build_f2, verify_section5
from .warp import load_warp

EXIT_OK, EXIT_CLAIMS, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
THREADS_ENV = "LENSJET_THREADS"
# per-order abs_err bounds used by jet-recover when --tol is not given
JET_TOLERANCES = (1e-8, 1e-4, 1e-2, 0.2)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    out: str | None = None
    tol: float | None = None
    threads: int = 1
    seed: int = 0
    options: dict = field(default_factory=dict)

    def echo(self):
        return asdict(self)


def _fmt(v):
    return f"{v:.17g}"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _out_path(cfg, name):
    if cfg.out is None:
        return None
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _emit(cfg, name, summary):
    text = _dumps(summary)
    path = _out_path(cfg, name)
    if path is not None:
        path.write_text(text)
    sys.stdout.write(text)


def _write_csv(cfg, name, header, rows):
    path = _out_path(cfg, name)
    if path is None:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _positive(kind):
    def parse(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return v

    return parse


def _resolve_warp(spec, L=None):
    try:
        return load_warp(spec, L)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --- subcommands ---------------------------------------------------------------


def cmd_lens_compare(cfg):
    o = cfg.options
    tol = 1e-8 if cfg.tol is None else cfg.tol
    wa, wb = _resolve_warp(o["a"], o["L"]), _resolve_warp(o["b"], o["L"])
    grid = default_direction_grid(o["directions"], o["bound"])
    methods = ("quadrature", "ode") if o["method"] == "both" else (o["method"],)
    rows, sups = [], {}
    for method in methods:
        ta = build_lens_table(wa, grid, method=method, threads=cfg.threads)
        tb = build_lens_table(wb, grid, method=method, threads=cfg.threads)
        d = compare_lens(ta, tb)
        sups[method] = {"T": d.T, "delta_x": d.delta_x, "exit_u": d.exit_u}
        for ra, rb in zip(ta.records, tb.records):
            rows.append(
                [method, ra.entry_u, ra.T, rb.T, ra.delta_x, rb.delta_x, ra.exit_side, rb.exit_side, ra.exit_u, rb.exit_u]
            )
    _write_csv(
        cfg,
        "lens_compare.csv",
        ["method", "entry_u", "T_a", "T_b", "delta_x_a", "delta_x_b", "exit_side_a", "exit_side_b", "exit_u_a", "exit_u_b"],
        rows,
    )
    ok = all(s["T"] <= tol and s["delta_x"] <= tol for s in sups.values())
    _emit(cfg, "lens_compare.json", {"config": cfg.echo(), "sup": sups, "tol": tol, "claims_hold": ok})
    return EXIT_OK if ok else EXIT_CLAIMS


def cmd_build_c1(cfg):
    o = cfg.options
    tol = 1e-6 if cfg.tol is None else cfg.tol
    profile = build_f1(o["peak"])
    f2 = build_f2(profile, o["samples"])
    report = verify_section5(profile, f2, n_levels=o["levels"], n_directions=o["directions"], threads=cfg.threads)
    r = report.to_dict()
    checks = {
        "equimeasurable": r["equimeasure_gap"] <= tol,
        "f1_slope0": abs(r["f1_slope0"] - 1.0) <= 1e-6,
        "f2_slope0": abs(r["f2_slope0"]) <= 1e-4,
        "lens": max(r["lens_T"], r["lens_delta_x"]) <= tol,
        "jets_differ_at_order_1": r["jet_first_difference"] == 1,
    }
    path = _out_path(cfg, "sec5_f2.json")
    if path is not None:
        path.write_text(_dumps(f2.to_json()))
    ok = all(checks.values())
    _emit(cfg, "sec5_report.json", {"config": cfg.echo(), "report": r, "checks": checks, "claims_hold": ok})
    return EXIT_OK if ok else EXIT_CLAIMS


def _dataset(cfg):
    o = cfg.options
    if o["data"]:
        return TabulatedDataset.from_csv(o["data"], h=o["h"])
    if not o["warp"]:
        raise UsageError("jet-recover needs --warp or --data")
    w = _resolve_warp(o["warp"], o["L"])
    return OracleDataset(w, x0=o["x0"], eps=o["eps"], h=o["h"])


def cmd_jet_recover(cfg):
    o = cfg.options
    ds = _dataset(cfg)
    if o["export"]:
        if not isinstance(ds, OracleDataset):
            raise UsageError("--export needs an oracle dataset (--warp)")
        TabulatedDataset.from_oracle(ds).to_csv(o["export"])
    report = run_pipeline(ds, o["K"]).to_dict()
    for entry in report["orders"]:
        k = entry["k"]
        bound = cfg.tol if cfg.tol is not None else JET_TOLERANCES[min(k, len(JET_TOLERANCES) - 1)]
        entry["within_tol"] = None if entry["abs_err"] is None else entry["abs_err"] <= bound
    _emit(cfg, "jet_report.json", {"config": cfg.echo(), "source": ds.source, "report": report})
    if report["errors"]:
        return EXIT_NUMERICAL
    if any(e["within_tol"] is False for e in report["orders"]):
        return EXIT_CLAIMS
    return EXIT_OK


def cmd_sublevel(cfg):
    o = cfg.options
    tol = 1e-8 if cfg.tol is None else cfg.tol
    warps = [_resolve_warp(o["a"], o["L"])]
    if o["b"]:
        warps.append(_resolve_warp(o["b"], o["L"]))
    lo = o["lo"] if o["lo"] is not None else min(w.extrema[0] for w in warps)
    hi = o["hi"] if o["hi"] is not None else max(w.extrema[1] for w in warps)
    if hi < lo:
        raise UsageError("--hi must not be below --lo")
    levels = level_grid(lo, hi, o["levels"]) if hi > lo else np.array([lo])
    cols = [sublevel_measures(w, levels) for w in warps]
    header = ["r"] + [f"m{i + 1}" for i in range(len(warps))]
    _write_csv(cfg, "sublevel.csv", header, zip(levels, *cols))
    gap = float(np.max(np.abs(cols[0] - cols[1]))) if len(cols) == 2 else None
    ok = gap is None or gap <= tol
    summary = {"config": cfg.echo(), "n_levels": len(levels), "max_gap": gap, "claims_hold": ok}
    if cfg.out is None:
        summary["rows"] = [[float(v) for v in row] for row in zip(levels, *cols)]
    _emit(cfg, "sublevel.json", summary)
    return EXIT_OK if ok else EXIT_CLAIMS


def cmd_chord(cfg):
    o = cfg.options
    w = _resolve_warp(o["warp"], o["L"])
    ch = chord_between(w, o["x1"], o["x2"])
    mu = math.sqrt(float(w(0.0))) * abs(o["x2"] - o["x1"])
    _emit(cfg, "chord.json", {"config": cfg.echo(), "chord": asdict(ch), "mu": mu, "tau": min(ch.length, mu)})
    return EXIT_OK


COMMANDS = {
    "lens-compare": cmd_lens_compare,
    "build-c1": cmd_build_c1,
    "jet-recover": cmd_jet_recover,
    "sublevel": cmd_sublevel,
    "chord": cmd_chord,
}


def _common_flags(default):
    common = argparse.ArgumentParser(add_help=False, argument_default=default)
    common.add_argument("--out", help="directory for CSV/JSON outputs (JSON summary always goes to stdout)")
    common.add_argument("--tol", type=_positive(float), help="claim tolerance (subcommand-specific default)")
    common.add_argument("--threads", type=_positive(int), help=f"worker threads (fallback: ${THREADS_ENV}, then 1)")
    common.add_argument("--seed", type=int, help="seed recorded in the config echo (default 0)")
    return common


def build_parser():
    p = argparse.ArgumentParser(prog="lensjet", description=__doc__.splitlines()[0], parents=[_common_flags(None)])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    # globals are accepted before or after the subcommand; SUPPRESS keeps
    # an absent subcommand-level flag from clobbering a top-level one
    sub_common = _common_flags(argparse.SUPPRESS)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text, parents=[sub_common], argument_default=argparse.SUPPRESS)
        sp.add_argument("--L", type=_positive(float), default=None, help="strip width for presets that allow it")
        return sp

    s = add("lens-compare", "compare lens data of two strips")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--directions", type=_positive(int), default=101)
    s.add_argument("--bound", type=_positive(float), default=0.99)
    s.add_argument("--method", choices=("both", "quadrature", "ode"), default="both")

    s = add("build-c1", "build the rearranged profile f2 and verify the pair")
    s.add_argument("--peak", type=_positive(float), default=3.25)
    s.add_argument("--samples", type=_positive(int), default=3001)
    s.add_argument("--levels", type=_positive(int), default=256)
    s.add_argument("--directions", type=_positive(int), default=51)

    s = add("jet-recover", "recover the boundary jet of g_11 from localized distance data")
    s.add_argument("--warp", help="preset name or warp JSON file (oracle data)")
    s.add_argument("--data", help="tabulated CSV (x1,x2,tau) with its .json sidecar")
    s.add_argument("--K", type=int, default=2, help="highest normal order to recover")
    s.add_argument("--x0", type=float, default=0.0, help="base point on y = 0")
    s.add_argument("--eps", type=_positive(float), default=None, help="window half-width (default 0.05 L)")
    s.add_argument("--h", type=_positive(float), default=None, help="dataset step used at order 0 and for tabulation (default eps/50)")
    s.add_argument("--export", help="also write the oracle data as a tabulated CSV here")

    s = add("sublevel", "sublevel-set measures of one or two profiles")
    s.add_argument("--a", required=True)
    s.add_argument("--b")
    s.add_argument("--levels", type=_positive(int), default=256)
    s.add_argument("--lo", type=float, help="lowest level (default min f)")
    s.add_argument("--hi", type=float, help="highest level (default max f)")

    s = add("chord", "single boundary chord between x1 and x2 on y = 0")
    s.add_argument("--warp", required=True)
    s.add_argument("--x1", type=float, required=True)
    s.add_argument("--x2", type=float, required=True)
    return p


_GLOBALS = ("out", "tol", "threads", "seed")


def make_config(args):
    ns = vars(args).copy()
    command = ns.pop("command")
    glob = {k: ns.pop(k, None) for k in _GLOBALS}
    threads = glob["threads"]
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
        if threads <= 0:
            raise UsageError(f"{THREADS_ENV} must be positive")
    opts = {k: ns.get(k) for k in sorted(ns)}
    if command == "jet-recover" and opts.get("K", 0) < 0:
        raise UsageError("--K must be non-negative")
    if command == "sublevel":
        opts.setdefault("b", None)
        opts.setdefault("lo", None)
        opts.setdefault("hi", None)
    if command == "jet-recover":
        for key in ("warp", "data", "export"):
            opts.setdefault(key, None)
    return RunConfig(
        command=command,
        out=glob["out"],
        tol=glob["tol"],
        threads=threads,
        seed=0 if glob["seed"] is None else glob["seed"],
        options=opts,
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"lensjet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LensJetError, ArithmeticError, np.linalg.LinAlgError) as exc:
        tag = getattr(exc, "tag", type(exc).__name__)
        print(f"lensjet: numerical failure [{tag}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"lensjet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

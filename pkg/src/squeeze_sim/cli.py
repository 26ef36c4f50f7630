"""Command-line interface: simulate, verify, constants, sweep.

Exit codes: 0 success, 1 configuration or runtime error, 2 quench.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, kernels
from .config import config_from_dict, config_to_dict, load_config
from .errors import ConfigurationError, SqueezeSimError
from .evolution import compute_constants, evolve, picard_solve
from .verification import load_tolerances, run_estimate_suite

log = logging.getLogger("squeeze_sim")

EXIT_OK, EXIT_ERROR, EXIT_QUENCH = 0, 1, 2
CSV_COLUMNS = ("t", "min_gap", "X_norm", "ball_distance", "u_center", "w_center")


# -- output helpers -------------------------------------------------------------------------


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _g17(x):
    return format(float(x), ".17g")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj):
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


def timeseries_rows(traj):
    u_c, w_c = traj.center_values()
    cols = (traj.times, traj.min_gap, traj.X_norm, traj.ball_distance, u_c, w_c)
    return [tuple(c[i] for c in cols) for i in range(len(traj))]


def timeseries_csv(traj):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in timeseries_rows(traj):
        writer.writerow([_g17(x) for x in row])
    return buf.getvalue()


def timeseries_json(traj):
    rows = timeseries_rows(traj)
    return dumps({name: [float(r[j]) for r in rows] for j, name in enumerate(CSV_COLUMNS)})


def snapshots_json(traj, every):
    snaps = []
    for i in range(0, len(traj), every):
        snaps.append({
            "t": float(traj.times[i]),
            "w": (traj.w_nodal(i) + traj.params.theta_2).tolist(),
            "u": (traj.u_tilde[i] + traj.params.theta_1).tolist(),
        })
    return dumps({"grid_shape": list(traj.grid.shape), "snapshots": snaps})


def _ledger_text(ledger):
    lines = []
    for key, val in ledger.to_dict().items():
        if key == "provenance":
            continue
        if isinstance(val, list):
            val = ", ".join(_g17(v) for v in val)
        else:
            val = _g17(val)
        note = ledger.provenance.get(key, "")
        lines.append(f"{key:18s} {val}" + (f"   [{note}]" if note else ""))
    return "\n".join(lines) + "\n"


# -- commands -------------------------------------------------------------------------------


def _load(args):
    if not args.config:
        raise ConfigurationError("--config is required")
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.window is not None:
        changes["window"] = args.window
    return cfg.with_(**changes) if changes else cfg


def cmd_simulate(args):
    cfg = _load(args)
    ledger = compute_constants(cfg)
    traj = evolve(cfg)
    out = args.out or "run_output"
    outputs = {}
    if args.format == "json":
        outputs["timeseries"] = "timeseries.json"
        write_atomic(os.path.join(out, "timeseries.json"), timeseries_json(traj))
    else:
        outputs["timeseries"] = "timeseries.csv"
        write_atomic(os.path.join(out, "timeseries.csv"), timeseries_csv(traj))
    if cfg.snapshot_every:
        outputs["snapshots"] = "snapshots.json"
        write_atomic(os.path.join(out, "snapshots.json"), snapshots_json(traj, cfg.snapshot_every))
    quench = None
    if traj.quench is not None:
        q = traj.quench
        quench = {"time": q.time, "location": list(q.location) if q.location else None,
                  "min_gap": q.min_gap, "threshold": q.threshold}
    manifest = {
        "version": __version__,
        "config": config_to_dict(cfg),
        "seed": cfg.seed,
        "ledger": ledger.to_dict(),
        "outputs": outputs,
        "status": "quench" if quench else "ok",
        "quench": quench,
        "method": traj.info.get("method"),
    }
    write_atomic(os.path.join(out, "manifest.json"), dumps(manifest))
    if quench:
        log.warning("quench at t=%s; outputs in %s", _g17(quench["time"]), out)
        return EXIT_QUENCH
    log.info("simulated %d samples to t=%s; outputs in %s", len(traj), _g17(traj.times[-1]), out)
    return EXIT_OK


def _verify_trials(args):
    if args.trials is not None:
        return args.trials
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(args.config)
        return cp.getint("verify", "trials", fallback=20)
    except (configparser.Error, ValueError):
        return 20


def cmd_verify(args):
    cfg = _load(args)
    tol = load_tolerances(args.tolerances) if args.tolerances else None
    trials = _verify_trials(args)
    workers = int(os.environ.get("SQUEEZE_SIM_THREADS", "1") or 1)
    reports = run_estimate_suite(cfg, trials, tolerances=tol, workers=max(workers, 1))
    if not reports:
        log.warning("no checks were run (trials=0)")
    payload = {"trials": trials, "seed": cfg.seed, "reports": [r.to_dict() for r in reports]}
    if args.out:
        write_atomic(os.path.join(args.out, "verify_report.json"), dumps(payload))
    if args.format == "json":
        sys.stdout.write(dumps(payload))
    elif not args.quiet:
        for r in reports:
            status = "PASS" if r.passed else "FAIL"
            sys.stdout.write(f"{status} {r.anchor:24s} max_error={r.max_error:.3e} tol={r.tolerance:.3e} {r.notes}\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_ERROR


def cmd_constants(args):
    cfg = _load(args)
    ledger = compute_constants(cfg, measure_trials=args.measure or 0)
    text = dumps(ledger.to_dict()) if args.format == "json" else _ledger_text(ledger)
    if args.out:
        write_atomic(os.path.join(args.out, "constants." + ("json" if args.format == "json" else "txt")), text)
    sys.stdout.write(text)
    return EXIT_OK


_SWEEP_KEYS = {
    "beta_F": "physics", "beta_p": "physics", "theta_1": "physics", "theta_2": "physics",
    "n_interior": "domain", "n_modes": "domain", "dt": "solver", "horizon": "solver",
}


def sweep_grid(sweep_path):
    """Cartesian product of the [sweep] lists, in file order."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(sweep_path):
        raise ConfigurationError(f"cannot read sweep file {sweep_path!r}")
    if not cp.has_section("sweep"):
        raise ConfigurationError("sweep file needs a [sweep] section")
    keys, values = [], []
    for key, raw in cp["sweep"].items():
        if key not in _SWEEP_KEYS:
            raise ConfigurationError(f"unknown sweep key {key!r}")
        items = [x.strip() for x in raw.split(",") if x.strip()]
        if not items:
            raise ConfigurationError(f"sweep key {key!r} has no values")
        keys.append(key)
        values.append(items)
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def run_sweep_row(base, point):
    """Evaluate one sweep point; returns a summary dict (never raises)."""
    data = {s: dict(v) for s, v in base.items()}
    for key, val in point.items():
        data[_SWEEP_KEYS[key]][key] = val
    row = dict(point)
    try:
        cfg = config_from_dict(data)
        ledger = compute_constants(cfg)
        row["T0"] = ledger.T0
        if math.isfinite(ledger.T0):
            T = 0.5 * ledger.T0
            res = picard_solve(cfg.with_(dt=T / 200, horizon=T), T)
            row["max_contraction"] = max(res.ratios) if res.ratios else 0.0
        else:
            row["max_contraction"] = 0.0
        traj = evolve(cfg)
        if traj.quench is not None:
            row.update(status="quench", end_time=traj.quench.time)
        else:
            row.update(status="ok", end_time=float(traj.times[-1]))
    except SqueezeSimError as exc:
        row.update(status="error", error=str(exc))
    return row


def _sweep_workers():
    raw = os.environ.get("SQUEEZE_SIM_THREADS", "")
    try:
        return max(int(raw), 1) if raw else (os.cpu_count() or 1)
    except ValueError as exc:
        raise ConfigurationError("SQUEEZE_SIM_THREADS must be an integer") from exc


def cmd_sweep(args):
    base_cfg = _load(args)
    base = config_to_dict(base_cfg)
    if not args.sweep:
        raise ConfigurationError("--sweep FILE is required")
    points = sweep_grid(args.sweep)
    workers = min(_sweep_workers(), len(points))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_sweep_row, [base] * len(points), points))
    else:
        rows = [run_sweep_row(base, p) for p in points]
    for i, row in enumerate(rows):
        row["index"] = i
    cols = ["index"] + list(points[0].keys()) + ["T0", "max_contraction", "status", "end_time", "error"]
    if args.format == "json":
        text = dumps({"rows": rows})
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_g17(row[c]) if isinstance(row.get(c), float) else row.get(c, "") for c in cols])
        text = buf.getvalue()
    if args.out:
        write_atomic(os.path.join(args.out, "sweep." + ("json" if args.format == "json" else "csv")), text)
    if not args.quiet:
        sys.stdout.write(text)
    return EXIT_ERROR if any(r["status"] == "error" for r in rows) else EXIT_OK


# -- entry point ----------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config or run manifest (JSON)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--window", type=float, help="use Picard windows of at most this length")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    parser = argparse.ArgumentParser(prog="squeeze-sim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate and write time series")
    v = sub.add_parser("verify", parents=[common], help="run the estimate suite")
    v.add_argument("--trials", type=int, help="samples per check (default: [verify] trials or 20)")
    v.add_argument("--tolerances", help="tolerance manifest overriding the shipped one")
    c = sub.add_parser("constants", parents=[common], help="print the constants ledger")
    c.add_argument("--measure", type=int, help="also measure C_o and C_o* with this many samples")
    s = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    s.add_argument("--sweep", help="INI file with a [sweep] section of comma-separated lists")
    return parser


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "constants": cmd_constants, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    log.debug("kernel backend: %s", kernels.BACKEND)
    try:
        return COMMANDS[args.command](args)
    except SqueezeSimError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

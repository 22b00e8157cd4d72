"""Command-line front end: run experiments, emit presets, plot results.

    hallmimo presets fig5 > fig5.json
    hallmimo run fig5.json --out results/fig5 --set network_realizations=5
    hallmimo plot results/fig5/results.csv

Exit codes: 0 success, 1 configuration error, 2 runtime/numerical error.
The HALLMIMO_OUT environment variable overrides the default output
directory when neither --out nor the config's output_dir is given.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

from . import __version__, experiment
from .experiment import ConfigError, UnknownPreset

log = logging.getLogger("hallmimo")

ENV_OUTPUT_DIR = "HALLMIMO_OUT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

_INT_RE = re.compile(r"^-?\d+$")


def _num(text: str):
    if _INT_RE.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def _resolve_out_dir(flag_value: str | None, cfg_value: str | None) -> Path:
    if flag_value:
        return Path(flag_value)
    if cfg_value:
        return Path(cfg_value)
    return Path(os.environ.get(ENV_OUTPUT_DIR, "out"))


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = experiment.load_config(args.config)
        if args.set:
            cfg = experiment.apply_overrides(cfg, args.set)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    out_dir = _resolve_out_dir(args.out, cfg.get("output_dir"))
    try:
        manifest = experiment.run_experiment(cfg, out_dir, workers=args.workers)
    except Exception as exc:  # noqa: BLE001 - report and map to exit code
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME
    log.info("wrote %s (%d rows)", out_dir / "results.csv", manifest["rows"])
    return EXIT_OK


def _cmd_presets(args: argparse.Namespace) -> int:
    try:
        cfg = experiment.preset(args.name)
    except UnknownPreset as exc:
        log.error("%s", exc.args[0])
        return EXIT_CONFIG
    json.dump(cfg, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_plot(args: argparse.Namespace) -> int:
    from . import plotting  # deferred: pulls in matplotlib

    results_path = Path(args.results)
    try:
        rows = experiment.read_results_csv(results_path)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    out_dir = Path(args.out) if args.out else results_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if set(rows[0]) == set(experiment.VALIDATION_HEADER):
            png = _plot_validation(rows, out_dir, plotting)
        elif set(rows[0]) == set(experiment.RESULT_HEADER):
            png = _plot_outage(rows, out_dir, plotting)
        else:
            log.error("unrecognized results header in %s", results_path)
            return EXIT_CONFIG
    except (KeyError, ValueError) as exc:
        log.error("malformed results file %s: %s", results_path, exc)
        return EXIT_CONFIG
    log.info("wrote %s", png)
    return EXIT_OK


def _plot_outage(rows: list[dict], out_dir: Path, plotting) -> Path:
    axis = plotting.infer_axis(rows)
    raw = [[
        r["deployment"], r["traffic"], _num(r["axis_value"]),
        _num(r["M"]), _num(r["Q"]), _num(r["S"]), _num(r["K"]), _num(r["l"]),
        _num(r["p_out"]), _num(r["ci_halfwidth"]), _num(r["trials"]), _num(r["seed"]),
    ] for r in rows]
    header, table = experiment.pivot_plot_data(raw)
    (out_dir / "plot_data.csv").write_bytes(experiment._csv_bytes(header, table))
    return plotting.render_outage_plot(rows, axis, out_dir / f"outage_vs_{axis}.png")


def _plot_validation(rows: list[dict], out_dir: Path, plotting) -> Path:
    import numpy as np

    # the binned table carries no raw samples, so re-plots show the marginals only
    marginals = {}
    edges = None
    for axis in ("x", "y"):
        axis_rows = sorted(
            (r for r in rows if r["axis"] == axis), key=lambda r: float(r["bin_left"])
        )
        if not axis_rows:
            raise ValueError(f"no rows for axis {axis}")
        edges = np.array(
            [float(r["bin_left"]) for r in axis_rows]
            + [float(axis_rows[-1]["bin_right"])]
        )
        marginals[axis] = (
            np.array([float(r["empirical_density"]) for r in axis_rows]),
            np.array([float(r["theoretical_density"]) for r in axis_rows]),
        )
    return plotting.render_marginals(edges, marginals, out_dir / "sampler_marginals.png")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hallmimo",
        description="Uplink outage Monte Carlo for centralized and distributed "
        "massive MIMO in a square industrial hall.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="experiment JSON (or a manifest.json)")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config entry (dotted path, JSON value)",
    )
    p_run.add_argument("--workers", type=int, default=1,
                       help="parallel processes for network realizations")
    p_run.set_defaults(func=_cmd_run)

    p_presets = sub.add_parser("presets", help="print a preset experiment config")
    p_presets.add_argument("name", help=f"one of: {', '.join(experiment.preset_names())}")
    p_presets.set_defaults(func=_cmd_presets)

    p_plot = sub.add_parser("plot", help="render figures from a results.csv")
    p_plot.add_argument("results", help="path to results.csv")
    p_plot.add_argument("--out", help="output directory (default: next to input)")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

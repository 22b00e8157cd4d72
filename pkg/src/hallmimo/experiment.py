"""Experiment files: JSON schema, presets, execution, and result artifacts.

An experiment file mirrors the simulation configuration plus an optional
sweep axis and output location. Running one produces results.csv (RFC 4180),
manifest.json (the fully resolved config, digests, and any skipped points),
and a plot-ready pivot table. The manifest embeds the resolved config, so
re-running from the manifest reproduces results.csv byte for byte.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import logging
from pathlib import Path

import jsonschema
import numpy as np
from scipy import stats

from . import __version__
from .channel import RadioConfig
from .geometry import DeploymentSpec, Position, SiteConfig
from .montecarlo import SimConfig, SweepEntry, derive_stream, run_sweep
from .traffic import AlarmEvent, TrafficModel, alarm_density, in_hall_mass, sample_alarm

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Experiment file failed schema or semantic validation."""


class UnknownPreset(KeyError):
    """No preset with the requested name."""


RESULT_HEADER = [
    "deployment", "traffic", "axis_value",
    "M", "Q", "S", "K", "l",
    "p_out", "ci_halfwidth", "trials", "seed",
]

VALIDATION_HEADER = [
    "axis", "bin_left", "bin_right", "empirical_density", "theoretical_density",
]

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_COUNT = {"type": "integer", "minimum": 1}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "task": {"enum": ["outage", "alarm_sampler_check"]},
        "site": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "side_length_m": _POSITIVE,
                "ap_height_m": _POSITIVE,
                "mtd_height_m": {"type": "number", "minimum": 0},
            },
        },
        "radio": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "carrier_freq_ghz": _POSITIVE,
                "path_loss_exponent": _POSITIVE,
                "shadowing_std_db": {"type": "number", "minimum": 0},
                "tx_power_w": _POSITIVE,
                "noise_psd_dbm_hz": _NUMBER,
                "bandwidth_hz": _POSITIVE,
                "noise_figure_db": {"type": "number", "minimum": 0},
                "target_rate_bpshz": _POSITIVE,
            },
        },
        "traffic": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "active_count": _COUNT,
                "modes": {
                    "type": "array",
                    "items": {"enum": ["regular", "alarm"]},
                    "minItems": 1,
                    "uniqueItems": True,
                },
                "alarm": {
                    "type": ["object", "null"],
                    "additionalProperties": False,
                    "properties": {
                        "epicenter_m": {
                            "type": "array",
                            "items": _NUMBER,
                            "minItems": 3,
                            "maxItems": 3,
                        },
                        "intensity_m": _POSITIVE,
                    },
                    "required": ["epicenter_m", "intensity_m"],
                },
            },
        },
        "deployments": {
            "type": "array",
            "items": {"enum": ["centralized", "grid", "linear"]},
            "minItems": 1,
            "uniqueItems": True,
        },
        "total_antennas": _COUNT,
        "antennas_per_ap": _COUNT,
        "combiner": {"enum": ["mmse", "zf", "mrc"]},
        "sweep": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "properties": {
                "axis": {"enum": ["K", "M", "l"]},
                "values": {"type": "array", "items": _NUMBER, "minItems": 1},
            },
            "required": ["axis", "values"],
        },
        "network_realizations": _COUNT,
        "fading_realizations": _COUNT,
        "master_seed": {"type": "integer", "minimum": 0},
        "validation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "devices": _COUNT,
                "realizations": _COUNT,
                "bins": {"type": "integer", "minimum": 4},
            },
        },
        "output_dir": {"type": ["string", "null"]},
    },
}

DEFAULT_CONFIG = {
    "task": "outage",
    "site": {"side_length_m": 250.0, "ap_height_m": 6.0, "mtd_height_m": 1.5},
    "radio": {
        "carrier_freq_ghz": 3.5,
        "path_loss_exponent": 3.19,
        "shadowing_std_db": 7.56,
        "tx_power_w": 0.1,
        "noise_psd_dbm_hz": -174.0,
        "bandwidth_hz": 20e6,
        "noise_figure_db": 7.0,
        "target_rate_bpshz": 1.0,
    },
    "traffic": {"active_count": 16, "modes": ["regular"], "alarm": None},
    "deployments": ["centralized", "grid", "linear"],
    "total_antennas": 64,
    "antennas_per_ap": 4,
    "combiner": "mmse",
    "sweep": None,
    "network_realizations": 100,
    "fading_realizations": 1000,
    "master_seed": 1,
    "validation": {"devices": 1000, "realizations": 1000, "bins": 50},
    "output_dir": None,
}


def _deep_merge(defaults: dict, override: dict) -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def validate_config(raw: dict) -> dict:
    """Validate, fill defaults, and semantically check an experiment dict."""
    if not isinstance(raw, dict):
        raise ConfigError("experiment file must hold a JSON object")
    try:
        jsonschema.validate(raw, EXPERIMENT_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {path}: {exc.message}") from exc
    cfg = _deep_merge(DEFAULT_CONFIG, raw)
    if "alarm" in cfg["traffic"]["modes"] and cfg["traffic"]["alarm"] is None:
        raise ConfigError("traffic.modes includes 'alarm' but traffic.alarm is null")
    if cfg["task"] == "alarm_sampler_check" and cfg["traffic"]["alarm"] is None:
        raise ConfigError("alarm_sampler_check requires traffic.alarm")
    return cfg


def load_config(path: str | Path) -> dict:
    """Read an experiment file; a manifest.json is unwrapped to its config."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if isinstance(raw, dict) and "config" in raw:
        raw = raw["config"]
    return validate_config(raw)


def apply_overrides(cfg: dict, pairs: list[str]) -> dict:
    """Apply `dotted.key=value` overrides; values parse as JSON when possible."""
    updated = copy.deepcopy(cfg)
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, raw_value = pair.split("=", 1)
        try:
            value = json.loads(raw_value)
        except json.JSONDecodeError:
            value = raw_value
        node = updated
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return validate_config(updated)


# Parameterized setups matching the reported experiments.
_PRESETS = {
    "fig5": {
        "task": "outage",
        "total_antennas": 64,
        "antennas_per_ap": 4,
        "traffic": {
            "active_count": 16,
            "modes": ["regular", "alarm"],
            "alarm": {"epicenter_m": [62.5, 62.5, 0.0], "intensity_m": 50.0},
        },
        "sweep": {"axis": "K", "values": [16, 32, 48, 64]},
    },
    "fig6": {
        "task": "outage",
        "total_antennas": 64,
        "antennas_per_ap": 4,
        "traffic": {
            "active_count": 16,
            "modes": ["regular", "alarm"],
            "alarm": {"epicenter_m": [62.5, 62.5, 0.0], "intensity_m": 50.0},
        },
        "sweep": {"axis": "M", "values": [16, 32, 48, 64, 80, 96]},
    },
    "fig7": {
        "task": "outage",
        "total_antennas": 64,
        "antennas_per_ap": 4,
        "traffic": {
            "active_count": 16,
            "modes": ["regular", "alarm"],
            "alarm": {"epicenter_m": [62.5, 62.5, 0.0], "intensity_m": 50.0},
        },
        "sweep": {"axis": "l", "values": [250, 500, 750, 1000]},
    },
    "fig4-validation": {
        "task": "alarm_sampler_check",
        "traffic": {
            "active_count": 16,
            "modes": ["alarm"],
            "alarm": {"epicenter_m": [62.5, 125.0, 0.0], "intensity_m": 25.0},
        },
        "validation": {"devices": 1000, "realizations": 1000, "bins": 50},
    },
}


def preset(name: str) -> dict:
    """Fully resolved experiment config for a named preset."""
    if name not in _PRESETS:
        raise UnknownPreset(
            f"unknown preset {name!r}; available: {', '.join(sorted(_PRESETS))}"
        )
    return validate_config(_PRESETS[name])


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def build_sim_config(cfg: dict) -> SimConfig:
    """Base SimConfig for a resolved experiment dict (centralized placeholder)."""
    site = SiteConfig(**cfg["site"])
    radio = RadioConfig(**cfg["radio"])
    alarm = None
    if cfg["traffic"]["alarm"] is not None:
        x, y, z = cfg["traffic"]["alarm"]["epicenter_m"]
        alarm = AlarmEvent(
            epicenter=Position(float(x), float(y), float(z)),
            intensity_m=float(cfg["traffic"]["alarm"]["intensity_m"]),
        )
    traffic = TrafficModel(
        mode="regular", active_count=cfg["traffic"]["active_count"], alarm=alarm
    )
    return SimConfig(
        deployment=DeploymentSpec.centralized(cfg["total_antennas"]),
        site=site,
        radio=radio,
        traffic=traffic,
        network_realizations=cfg["network_realizations"],
        fading_realizations=cfg["fading_realizations"],
        combiner=cfg["combiner"],
        master_seed=cfg["master_seed"],
    )


def experiment_digest(cfg: dict) -> str:
    payload = json.dumps(cfg, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def result_rows(entries: list[SweepEntry]) -> list[list]:
    rows = []
    for e in entries:
        if e.result is None:
            continue
        dep = e.config.deployment
        rows.append([
            e.deployment_kind,
            e.traffic_mode,
            e.value,
            dep.total_antennas,
            dep.ap_count,
            dep.antennas_per_ap,
            e.config.traffic.active_count,
            e.config.site.side_length_m,
            e.result.p_out,
            e.result.ci_halfwidth_95,
            e.result.total_decode_trials,
            e.result.seed,
        ])
    return rows


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf)  # RFC 4180: comma separated, CRLF line endings
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def pivot_plot_data(rows: list[list]) -> tuple[list[str], list[list]]:
    """Wide table: one x column plus p_out and CI columns per series."""
    series = []
    for dep in ("centralized", "grid", "linear"):
        for mode in ("regular", "alarm"):
            if any(r[0] == dep and r[1] == mode for r in rows):
                series.append((dep, mode))
    xs = sorted({r[2] for r in rows})
    lookup = {(r[0], r[1], r[2]): (r[8], r[9]) for r in rows}
    header = ["axis_value"]
    for dep, mode in series:
        header += [f"{dep}_{mode}_pout", f"{dep}_{mode}_ci"]
    table = []
    for x in xs:
        row = [x]
        for key in series:
            pair = lookup.get((*key, x))
            row += ["", ""] if pair is None else [pair[0], pair[1]]
        table.append(row)
    return header, table


def run_outage_experiment(cfg: dict, out_dir: Path, workers: int = 1) -> dict:
    """Execute an outage experiment and write its artifacts. Returns the manifest."""
    base = build_sim_config(cfg)
    sweep = cfg["sweep"] or {"axis": "K", "values": [cfg["traffic"]["active_count"]]}
    entries = run_sweep(
        base,
        sweep["axis"],
        sweep["values"],
        deployments=tuple(cfg["deployments"]),
        traffic_modes=tuple(cfg["traffic"]["modes"]),
        antennas_per_ap=cfg["antennas_per_ap"],
        workers=workers,
    )
    rows = result_rows(entries)
    results_bytes = _csv_bytes(RESULT_HEADER, rows)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.csv").write_bytes(results_bytes)
    header, table = pivot_plot_data(rows)
    (out_dir / "plot_data.csv").write_bytes(_csv_bytes(header, table))

    manifest = {
        "artifact": "hallmimo",
        "version": __version__,
        "config": cfg,
        "config_digest": experiment_digest(cfg),
        "axis": sweep["axis"],
        "rows": len(rows),
        "results_sha256": hashlib.sha256(results_bytes).hexdigest(),
        "skipped": [
            {
                "axis_value": e.value,
                "deployment": e.deployment_kind,
                "traffic": e.traffic_mode,
                "reason": e.skip_reason,
            }
            for e in entries
            if e.skip_reason is not None
        ],
    }
    _write_manifest(out_dir, manifest)
    return manifest


def run_sampler_check(cfg: dict, out_dir: Path) -> dict:
    """Draw alarm-traffic positions over many realizations and compare the
    empirical coordinate marginals against the truncated Gaussian they
    should follow. Writes the binned marginals, a rendered figure, and a
    manifest carrying KS statistics and the density normalization check."""
    site = SiteConfig(**cfg["site"])
    spec = cfg["traffic"]["alarm"]
    x, y, z = spec["epicenter_m"]
    event = AlarmEvent(Position(float(x), float(y), float(z)), float(spec["intensity_m"]))
    devices = cfg["validation"]["devices"]
    realizations = cfg["validation"]["realizations"]
    n_bins = cfg["validation"]["bins"]
    seed = cfg["master_seed"]

    samples = np.empty((devices * realizations, 2))
    for r in range(realizations):
        rng = derive_stream(seed, [0, r, 0])
        pos = sample_alarm(devices, event, site, rng)
        samples[r * devices:(r + 1) * devices, 0] = [p.x for p in pos]
        samples[r * devices:(r + 1) * devices, 1] = [p.y for p in pos]

    l = site.side_length_m
    nu = event.intensity_m
    edges = np.linspace(0.0, l, n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    rows = []
    ks = {}
    marginals = {}
    for axis, center, values in (("x", event.epicenter.x, samples[:, 0]),
                                 ("y", event.epicenter.y, samples[:, 1])):
        dist = stats.truncnorm((0.0 - center) / nu, (l - center) / nu,
                               loc=center, scale=nu)
        ks[axis] = float(stats.kstest(values, dist.cdf).statistic)
        emp, _ = np.histogram(values, bins=edges, density=True)
        theo = dist.pdf(centers)
        marginals[axis] = (emp, theo)
        rows += [
            [axis, edges[i], edges[i + 1], emp[i], theo[i]] for i in range(n_bins)
        ]

    # trapezoid check that the truncated density integrates to 1 over the hall
    grid = np.linspace(0.0, l, 401)
    dens = np.array([[alarm_density(gx, gy, event, site) for gx in grid] for gy in grid])
    integral = float(np.trapezoid(np.trapezoid(dens, grid, axis=1), grid))

    results_bytes = _csv_bytes(VALIDATION_HEADER, rows)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.csv").write_bytes(results_bytes)

    from .plotting import render_sampler_check  # deferred: pulls in matplotlib

    render_sampler_check(edges, marginals, samples, site, event,
                         out_dir / "sampler_check.png")

    manifest = {
        "artifact": "hallmimo",
        "version": __version__,
        "config": cfg,
        "config_digest": experiment_digest(cfg),
        "rows": len(rows),
        "results_sha256": hashlib.sha256(results_bytes).hexdigest(),
        "validation": {
            "samples": int(samples.shape[0]),
            "ks_x": ks["x"],
            "ks_y": ks["y"],
            "density_integral": integral,
            "in_hall_mass": in_hall_mass(event, site),
        },
        "skipped": [],
    }
    _write_manifest(out_dir, manifest)
    log.info("sampler check: ks_x=%.4g ks_y=%.4g integral=%.6f",
             ks["x"], ks["y"], integral)
    return manifest


def run_experiment(cfg: dict, out_dir: Path, workers: int = 1) -> dict:
    if cfg["task"] == "alarm_sampler_check":
        return run_sampler_check(cfg, out_dir)
    return run_outage_experiment(cfg, out_dir, workers=workers)


def _write_manifest(out_dir: Path, manifest: dict) -> None:
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_results_csv(path: str | Path) -> list[dict]:
    """Rows of a results.csv as dicts; raises ConfigError on malformed input."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ConfigError(f"{path} is empty")
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path} has no data rows")
    return rows

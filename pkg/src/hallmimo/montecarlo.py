"""Nested Monte Carlo estimation of uplink outage probability.

Outer loop: network realizations (device positions + shadowing). Inner
loop: small-scale fading draws. Every realization consumes its own random
stream derived from (master seed, sweep point, realization index, purpose),
and per-realization results are integers merged in realization order, so a
run is bit-identical regardless of worker count or scheduling.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .channel import RadioConfig, build_large_scale, draw_channel, noise_power_w
from .geometry import (
    DeploymentSpec,
    Position,
    SiteConfig,
    deployment_positions,
    _is_perfect_square,
)
from .receiver import COMBINER_KINDS, build_combiner, decode, sinr_per_user
from .traffic import TrafficModel, sample_alarm, sample_regular

log = logging.getLogger(__name__)

SWEEP_AXES = ("K", "M", "l")

# purpose tags for derived random streams
_TAG_POSITIONS = 0
_TAG_SHADOWING = 1
_TAG_FADING = 2


class ConfigInvalid(ValueError):
    """A simulation configuration violates its preconditions."""


@dataclass(frozen=True)
class SimConfig:
    """Everything one outage-probability point needs, plus the master seed."""

    deployment: DeploymentSpec
    site: SiteConfig
    radio: RadioConfig
    traffic: TrafficModel
    network_realizations: int = 100
    fading_realizations: int = 1000
    combiner: str = "mmse"
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.network_realizations < 1 or self.fading_realizations < 1:
            raise ConfigInvalid("realization counts must be >= 1")
        if self.combiner not in COMBINER_KINDS:
            raise ConfigInvalid(f"unknown combiner {self.combiner!r}")
        if self.deployment.total_antennas < self.traffic.active_count:
            raise ConfigInvalid(
                f"need M >= K, got M={self.deployment.total_antennas} "
                f"K={self.traffic.active_count}"
            )
        if self.traffic.mode == "alarm":
            epi = self.traffic.alarm.epicenter
            l = self.site.side_length_m
            if not (0.0 <= epi.x <= l and 0.0 <= epi.y <= l):
                raise ConfigInvalid(f"alarm epicenter ({epi.x}, {epi.y}) outside hall")


@dataclass(frozen=True)
class OutageResult:
    """Estimated outage probability with CI and provenance."""

    p_out: float
    ci_halfwidth_95: float
    total_decode_trials: int
    config_digest: str
    seed: int


@dataclass(frozen=True)
class SweepEntry:
    """One sweep point: parameters, its config, and the result or skip reason."""

    axis: str
    value: float | int
    deployment_kind: str
    traffic_mode: str
    config: SimConfig | None
    result: OutageResult | None
    skip_reason: str | None = None


def derive_stream(master_seed: int, path: list[int]) -> np.random.Generator:
    """Independent random stream for a (seed, hierarchical path) pair."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(path))
    return np.random.default_rng(seq)


def config_digest(cfg: SimConfig) -> str:
    """Stable hash of the fully resolved configuration."""
    payload = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _sample_positions(cfg: SimConfig, rng: np.random.Generator) -> list[Position]:
    k = cfg.traffic.active_count
    if cfg.traffic.mode == "alarm":
        return sample_alarm(k, cfg.traffic.alarm, cfg.site, rng)
    return sample_regular(k, cfg.site, rng)


def _realization_counts(
    cfg: SimConfig, point_index: int, realization: int
) -> tuple[int, int]:
    """(sum D, sum D^2) over the fading draws of one network realization."""
    rng_pos = derive_stream(cfg.master_seed, [point_index, realization, _TAG_POSITIONS])
    rng_shadow = derive_stream(cfg.master_seed, [point_index, realization, _TAG_SHADOWING])
    rng_fade = derive_stream(cfg.master_seed, [point_index, realization, _TAG_FADING])

    mtds = _sample_positions(cfg, rng_pos)
    aps = deployment_positions(cfg.deployment, cfg.site)
    ls = build_large_scale(mtds, aps, cfg.radio, rng_shadow)
    noise = noise_power_w(cfg.radio)
    p_tx = cfg.radio.tx_power_w
    rate = cfg.radio.target_rate_bpshz

    d_sum = 0
    d_sq_sum = 0
    for _ in range(cfg.fading_realizations):
        g = draw_channel(ls, cfg.deployment, rng_fade)
        v = build_combiner(cfg.combiner, g, noise, p_tx)
        report = decode(sinr_per_user(v, g, p_tx, noise), rate)
        d_sum += report.decoded_count
        d_sq_sum += report.decoded_count**2
    return d_sum, d_sq_sum


def _realization_worker(args: tuple[SimConfig, int, int]) -> tuple[int, int]:
    cfg, point_index, realization = args
    return _realization_counts(cfg, point_index, realization)


def run_point(cfg: SimConfig, point_index: int = 0, workers: int = 1) -> OutageResult:
    """Estimate outage probability for one configuration point.

    Network realizations may run in parallel processes; decoded counts are
    integers reduced in realization order, so the result does not depend
    on `workers`.
    """
    n = cfg.network_realizations
    tasks = [(cfg, point_index, i) for i in range(n)]
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_realization_worker, tasks, chunksize=max(1, n // (4 * workers))))
    else:
        counts = [_realization_worker(t) for t in tasks]

    k = cfg.traffic.active_count
    trials = n * cfg.fading_realizations  # decode trials = fading draws
    d_total = sum(c[0] for c in counts)
    d_sq_total = sum(c[1] for c in counts)

    mean_frac = d_total / (k * trials)
    if trials > 1:
        # sample variance of the per-trial decoded fraction D/K
        var = (d_sq_total / k**2 - trials * mean_frac**2) / (trials - 1)
        ci = 1.96 * float(np.sqrt(max(var, 0.0) / trials))
    else:
        ci = 0.0
    return OutageResult(
        p_out=1.0 - mean_frac,
        ci_halfwidth_95=ci,
        total_decode_trials=k * trials,
        config_digest=config_digest(cfg),
        seed=cfg.master_seed,
    )


def _deployment_for(kind: str, m_total: int, antennas_per_ap: int) -> DeploymentSpec:
    """Deployment spec for a sweep point; raises on infeasible splits."""
    if kind == "centralized":
        return DeploymentSpec.centralized(m_total)
    if m_total % antennas_per_ap != 0:
        raise ConfigInvalid(f"M={m_total} not divisible by S={antennas_per_ap}")
    q = m_total // antennas_per_ap
    if kind == "grid":
        if not _is_perfect_square(q):
            raise ConfigInvalid(f"grid needs a square AP count, Q={q}")
        return DeploymentSpec.grid(m_total, q)
    if q % 4 != 0:
        raise ConfigInvalid(f"linear needs Q divisible by 4, Q={q}")
    return DeploymentSpec.linear(m_total, q)


def _point_config(
    base: SimConfig,
    axis: str,
    value: float,
    deployment_kind: str,
    traffic_mode: str,
    antennas_per_ap: int,
) -> SimConfig:
    k = int(value) if axis == "K" else base.traffic.active_count
    m_total = int(value) if axis == "M" else base.deployment.total_antennas
    site = base.site
    alarm = base.traffic.alarm
    if axis == "l":
        site = replace(site, side_length_m=float(value))
        if alarm is not None:
            # keep the epicenter at the same fractional position in the hall
            ratio = float(value) / base.site.side_length_m
            epi = alarm.epicenter
            alarm = replace(
                alarm, epicenter=Position(epi.x * ratio, epi.y * ratio, epi.z)
            )
    if traffic_mode == "alarm" and alarm is None:
        raise ConfigInvalid("sweep includes alarm traffic but no alarm event is set")
    traffic = TrafficModel(mode=traffic_mode, active_count=k, alarm=alarm)
    deployment = _deployment_for(deployment_kind, m_total, antennas_per_ap)
    return replace(base, deployment=deployment, site=site, traffic=traffic)


def run_sweep(
    base: SimConfig,
    axis: str,
    values: list[float],
    deployments: tuple[str, ...] = ("centralized", "grid", "linear"),
    traffic_modes: tuple[str, ...] = ("regular", "alarm"),
    antennas_per_ap: int = 4,
    workers: int = 1,
) -> list[SweepEntry]:
    """Evaluate the Cartesian product of axis values, deployments, and traffic.

    Infeasible combinations (antenna split, M < K) are skipped and recorded.
    Point order, and therefore derived seeding, is value-major and stable:
    skipped points still consume their point index.
    """
    if axis not in SWEEP_AXES:
        raise ConfigInvalid(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    entries: list[SweepEntry] = []
    point_index = 0
    for value in values:
        for kind in deployments:
            for mode in traffic_modes:
                idx = point_index
                point_index += 1
                try:
                    cfg = _point_config(base, axis, value, kind, mode, antennas_per_ap)
                except (ConfigInvalid, ValueError) as exc:
                    log.warning(
                        "skipping %s=%s %s/%s: %s", axis, value, kind, mode, exc
                    )
                    entries.append(
                        SweepEntry(axis, value, kind, mode, None, None, str(exc))
                    )
                    continue
                result = run_point(cfg, point_index=idx, workers=workers)
                log.info(
                    "%s=%s %s/%s: p_out=%.4g (ci %.2g)",
                    axis, value, kind, mode, result.p_out, result.ci_halfwidth_95,
                )
                entries.append(SweepEntry(axis, value, kind, mode, cfg, result))
    return entries

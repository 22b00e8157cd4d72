"""Indoor-factory NLOS channel: path loss, shadowing, Rayleigh fading.

Large-scale gains follow the measured indoor-industrial model
PL[dB] = 32.5 + 20 log10(f_GHz) + 10 eta log10(d_m) plus i.i.d. log-normal
shadowing per link. Small-scale fading is circularly symmetric complex
Gaussian per antenna element, scaled so each element of an AP block has
second moment beta_kq.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DeploymentSpec, Position, distance_3d

PATH_LOSS_CONST_DB = 32.5


class NonPositiveDistance(ValueError):
    """Path loss is undefined at zero distance."""


class DimensionMismatch(ValueError):
    """Array shapes disagree with the deployment layout."""


@dataclass(frozen=True)
class RadioConfig:
    """Radio-link parameters; defaults are the indoor-industrial setup."""

    carrier_freq_ghz: float = 3.5
    path_loss_exponent: float = 3.19
    shadowing_std_db: float = 7.56
    tx_power_w: float = 0.1  # 20 dBm
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 7.0
    target_rate_bpshz: float = 1.0

    def __post_init__(self) -> None:
        if self.carrier_freq_ghz <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("carrier frequency and bandwidth must be positive")
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be positive")
        if self.shadowing_std_db < 0 or self.noise_figure_db < 0:
            raise ValueError("shadowing std and noise figure must be >= 0")
        if self.tx_power_w <= 0:
            raise ValueError("tx_power_w must be positive")
        if self.target_rate_bpshz <= 0:
            raise ValueError("target_rate_bpshz must be positive")


@dataclass
class LargeScaleMap:
    """Per-link large-scale gains and distances, shape (K devices, Q APs)."""

    beta: np.ndarray
    distances: np.ndarray


@dataclass
class ChannelMatrix:
    """One M x K complex channel draw; column k stacks S-element AP blocks."""

    g: np.ndarray

    @property
    def m(self) -> int:
        return self.g.shape[0]

    @property
    def k(self) -> int:
        return self.g.shape[1]


def _mean_path_loss_db(distance_m, cfg: RadioConfig):
    return (
        PATH_LOSS_CONST_DB
        + 20.0 * np.log10(cfg.carrier_freq_ghz)
        + 10.0 * cfg.path_loss_exponent * np.log10(distance_m)
    )


def path_loss_db(distance_m: float, cfg: RadioConfig) -> float:
    """Mean path loss in dB at a 3D distance in meters (carrier in GHz)."""
    if distance_m <= 0:
        raise NonPositiveDistance(f"distance_m must be > 0, got {distance_m}")
    return float(_mean_path_loss_db(distance_m, cfg))


def shadowing_db(cfg: RadioConfig, rng: np.random.Generator) -> float:
    """One zero-mean log-normal shadowing draw, in dB."""
    return float(rng.normal(0.0, cfg.shadowing_std_db))


def large_scale_gain(distance_m: float, shadow_db: float, cfg: RadioConfig) -> float:
    """Linear large-scale gain beta = 10^(-(PL + shadowing)/10)."""
    return float(10.0 ** (-(path_loss_db(distance_m, cfg) + shadow_db) / 10.0))


def noise_power_w(cfg: RadioConfig) -> float:
    """Receiver noise power sigma^2 = N0 * B * NF in Watts."""
    psd_w_hz = 10.0 ** ((cfg.noise_psd_dbm_hz - 30.0) / 10.0)
    return psd_w_hz * cfg.bandwidth_hz * 10.0 ** (cfg.noise_figure_db / 10.0)


def build_large_scale(
    mtds: list[Position],
    aps: list[Position],
    cfg: RadioConfig,
    rng: np.random.Generator,
) -> LargeScaleMap:
    """Distances, path loss, and one independent shadowing draw per link."""
    if not mtds or not aps:
        raise ValueError("need at least one device and one AP")
    d = np.array([[distance_3d(m, a) for a in aps] for m in mtds])
    if (d <= 0).any():
        raise NonPositiveDistance("device and AP positions must not coincide")
    shadow = rng.normal(0.0, cfg.shadowing_std_db, size=d.shape)
    beta = 10.0 ** (-(_mean_path_loss_db(d, cfg) + shadow) / 10.0)
    return LargeScaleMap(beta=beta, distances=d)


def draw_channel(
    ls: LargeScaleMap, spec: DeploymentSpec, rng: np.random.Generator
) -> ChannelMatrix:
    """One small-scale fading draw assembled into the M x K channel matrix.

    Each S-element block (k, q) is i.i.d. CN(0, beta_kq I_S); blocks are
    stacked in AP order so row m belongs to AP m // S.
    """
    n_mtds, n_aps = ls.beta.shape
    if n_aps != spec.ap_count:
        raise DimensionMismatch(
            f"large-scale map has {n_aps} APs, deployment expects {spec.ap_count}"
        )
    m_total = spec.total_antennas
    # (M, K) element scale: row block q repeats sqrt(beta[:, q] / 2) S times
    scale = np.repeat(np.sqrt(ls.beta.T * 0.5), spec.antennas_per_ap, axis=0)
    z = rng.standard_normal((2, m_total, n_mtds))
    g = (z[0] + 1j * z[1]) * scale
    return ChannelMatrix(g=g)

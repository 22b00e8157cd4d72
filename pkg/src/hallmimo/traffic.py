"""Active-device position sampling for regular and alarm traffic.

Regular traffic draws device positions uniformly over the hall. Alarm
traffic concentrates devices around an event epicenter: activation falls
off with distance as a Gaussian bump, which makes the active-device
locations follow a 2D Gaussian truncated to the hall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Position, SiteConfig, distance_3d


class NegativeDistance(ValueError):
    """Distances are nonnegative by construction."""


class OutOfHall(ValueError):
    """Raised when a point that must lie inside the hall does not."""


@dataclass(frozen=True)
class AlarmEvent:
    """An alarm at a fixed epicenter with spatial intensity in meters."""

    epicenter: Position
    intensity_m: float

    def __post_init__(self) -> None:
        if self.intensity_m <= 0:
            raise ValueError("intensity_m must be positive")


@dataclass(frozen=True)
class TrafficModel:
    """Which traffic mode is active and how many devices transmit per slot."""

    mode: str  # "regular" | "alarm"
    active_count: int
    alarm: AlarmEvent | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("regular", "alarm"):
            raise ValueError(f"unknown traffic mode {self.mode!r}")
        if self.active_count < 1:
            raise ValueError("active_count must be >= 1")
        if self.mode == "alarm" and self.alarm is None:
            raise ValueError("alarm traffic requires an AlarmEvent")


def sample_regular(k: int, site: SiteConfig, rng: np.random.Generator) -> list[Position]:
    """k device positions with x, y ~ Uniform[0, l] at device height."""
    if k < 1:
        raise ValueError("k must be >= 1")
    xy = rng.uniform(0.0, site.side_length_m, size=(k, 2))
    z = site.mtd_height_m
    return [Position(float(x), float(y), z) for x, y in xy]


def activation_probability(distance_m: float, intensity_m: float) -> float:
    """Probability that a device at the given distance from the epicenter wakes up.

    Gaussian falloff exp(-d^2 / (2 nu^2)): 1 at the epicenter, strictly
    decreasing, vanishing far away.
    """
    if distance_m < 0:
        raise NegativeDistance(f"distance_m must be >= 0, got {distance_m}")
    if intensity_m <= 0:
        raise ValueError("intensity_m must be positive")
    return math.exp(-(distance_m**2) / (2.0 * intensity_m**2))


def _std_normal_cdf(t: float) -> float:
    return 0.5 * (1.0 + math.erf(t / math.sqrt(2.0)))


def in_hall_mass(event: AlarmEvent, site: SiteConfig) -> float:
    """Probability mass of the untruncated 2D Gaussian inside the hall."""
    l = site.side_length_m
    nu = event.intensity_m
    mass = 1.0
    for center in (event.epicenter.x, event.epicenter.y):
        mass *= _std_normal_cdf((l - center) / nu) - _std_normal_cdf((0.0 - center) / nu)
    return mass


def alarm_density(x: float, y: float, event: AlarmEvent, site: SiteConfig) -> float:
    """Truncated 2D Gaussian density of active-device locations, at (x, y).

    Renormalized by the in-hall mass so it integrates to exactly 1 over
    the hall. Raises OutOfHall outside [0, l]^2.
    """
    l = site.side_length_m
    if not (0.0 <= x <= l and 0.0 <= y <= l):
        raise OutOfHall(f"({x}, {y}) outside [0, {l}]^2")
    nu = event.intensity_m
    quad = ((x - event.epicenter.x) / nu) ** 2 + ((y - event.epicenter.y) / nu) ** 2
    base = math.exp(-0.5 * quad) / (2.0 * math.pi * nu**2)
    return base / in_hall_mass(event, site)


def sample_alarm(
    k: int, event: AlarmEvent, site: SiteConfig, rng: np.random.Generator
) -> list[Position]:
    """k device positions drawn i.i.d. from the truncated alarm density.

    Rejection sampling from the untruncated Gaussian centered at the
    epicenter; terminates with probability 1 since the epicenter lies
    inside the hall.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    l = site.side_length_m
    cx, cy = event.epicenter.x, event.epicenter.y
    if not (0.0 <= cx <= l and 0.0 <= cy <= l):
        raise OutOfHall(f"epicenter ({cx}, {cy}) outside [0, {l}]^2")
    nu = event.intensity_m
    accepted = np.empty((0, 2))
    while accepted.shape[0] < k:
        n = max(2 * (k - accepted.shape[0]), 64)
        cand = rng.normal(loc=(cx, cy), scale=nu, size=(n, 2))
        inside = ((cand >= 0.0) & (cand <= l)).all(axis=1)
        accepted = np.concatenate([accepted, cand[inside]])
    z = site.mtd_height_m
    return [Position(float(x), float(y), z) for x, y in accepted[:k]]


def thin_by_activation(
    candidates: list[Position], event: AlarmEvent, rng: np.random.Generator
) -> list[Position]:
    """Keep each candidate independently with its activation probability.

    The distance to the epicenter is the full 3D distance (the epicenter
    sits at floor level, devices at device height).
    """
    if not candidates:
        return []
    probs = np.array(
        [
            activation_probability(distance_3d(event.epicenter, c), event.intensity_m)
            for c in candidates
        ]
    )
    keep = rng.uniform(size=len(candidates)) < probs
    return [c for c, kept in zip(candidates, keep) if kept]

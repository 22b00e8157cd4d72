"""Antenna placement for the three deployment layouts and 3D distances.

All placements are deterministic. AP ordering is fixed (row-major for the
grid, bottom/left/top/right walls for the linear layout) so that channel
matrices have a reproducible block layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEPLOYMENT_KINDS = ("centralized", "grid", "linear")


class NotPerfectSquare(ValueError):
    """Grid layouts require a perfect-square AP count."""


class NotDivisibleByFour(ValueError):
    """Linear layouts spread APs evenly over the four walls."""


@dataclass(frozen=True)
class SiteConfig:
    """Square hall geometry: side length and antenna/device heights, in meters."""

    side_length_m: float = 250.0
    ap_height_m: float = 6.0
    mtd_height_m: float = 1.5

    def __post_init__(self) -> None:
        if self.side_length_m <= 0:
            raise ValueError("side_length_m must be positive")
        if not (self.ap_height_m > self.mtd_height_m >= 0):
            raise ValueError("need ap_height_m > mtd_height_m >= 0")


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class DeploymentSpec:
    """Antenna architecture: total elements M split over Q APs with S each."""

    kind: str
    total_antennas: int
    ap_count: int
    antennas_per_ap: int

    def __post_init__(self) -> None:
        if self.kind not in DEPLOYMENT_KINDS:
            raise ValueError(f"unknown deployment kind {self.kind!r}")
        if min(self.total_antennas, self.ap_count, self.antennas_per_ap) < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.total_antennas != self.ap_count * self.antennas_per_ap:
            raise ValueError(
                f"total_antennas={self.total_antennas} != "
                f"ap_count*antennas_per_ap={self.ap_count * self.antennas_per_ap}"
            )
        if self.kind == "centralized" and self.ap_count != 1:
            raise ValueError("centralized deployment uses a single AP")
        if self.kind == "grid" and not _is_perfect_square(self.ap_count):
            raise NotPerfectSquare(f"grid needs a square AP count, got {self.ap_count}")
        if self.kind == "linear" and self.ap_count % 4 != 0:
            raise NotDivisibleByFour(
                f"linear needs an AP count divisible by 4, got {self.ap_count}"
            )

    @classmethod
    def centralized(cls, total_antennas: int) -> "DeploymentSpec":
        return cls("centralized", total_antennas, 1, total_antennas)

    @classmethod
    def grid(cls, total_antennas: int, ap_count: int) -> "DeploymentSpec":
        return cls("grid", total_antennas, ap_count, total_antennas // ap_count)

    @classmethod
    def linear(cls, total_antennas: int, ap_count: int) -> "DeploymentSpec":
        return cls("linear", total_antennas, ap_count, total_antennas // ap_count)


def _is_perfect_square(n: int) -> bool:
    return n >= 1 and math.isqrt(n) ** 2 == n


def place_centralized(site: SiteConfig) -> Position:
    """Single array at the hall center, at AP height."""
    half = site.side_length_m / 2.0
    return Position(half, half, site.ap_height_m)


def place_grid(site: SiteConfig, q_count: int) -> list[Position]:
    """Uniform ceiling grid of APs, row-major in (x-index, y-index)."""
    root = math.isqrt(q_count)
    if root * root != q_count:
        raise NotPerfectSquare(f"grid needs a square AP count, got {q_count}")
    pitch = site.side_length_m / root
    h = site.ap_height_m
    return [
        Position((qx - 0.5) * pitch, (qy - 0.5) * pitch, h)
        for qx in range(1, root + 1)
        for qy in range(1, root + 1)
    ]


def place_linear(site: SiteConfig, q_count: int) -> list[Position]:
    """APs strung along the perimeter walls: bottom, left, top, right.

    Q/4 APs per wall, equally spaced with pitch 4l/Q, exactly on the walls.
    """
    if q_count % 4 != 0:
        raise NotDivisibleByFour(f"linear needs an AP count divisible by 4, got {q_count}")
    per_wall = q_count // 4
    l = site.side_length_m
    h = site.ap_height_m
    offsets = [(i - 0.5) * (4.0 * l / q_count) for i in range(1, per_wall + 1)]
    bottom = [Position(o, 0.0, h) for o in offsets]
    left = [Position(0.0, o, h) for o in offsets]
    top = [Position(o, l, h) for o in offsets]
    right = [Position(l, o, h) for o in offsets]
    return bottom + left + top + right


def deployment_positions(spec: DeploymentSpec, site: SiteConfig) -> list[Position]:
    """AP positions for a deployment, in the canonical ordering."""
    if spec.kind == "centralized":
        return [place_centralized(site)]
    if spec.kind == "grid":
        return place_grid(site, spec.ap_count)
    return place_linear(site, spec.ap_count)


def distance_3d(a: Position, b: Position) -> float:
    """Euclidean distance in meters."""
    return math.dist(a.as_tuple(), b.as_tuple())

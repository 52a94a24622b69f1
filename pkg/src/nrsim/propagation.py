"""Large-scale path loss: free space, log-distance, rain, knife-edge, walls."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgument

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class Obstacle:
    height: float  # m above the direct path
    d1: float  # m, transmitter to obstacle
    d2: float  # m, obstacle to receiver

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0):
            raise InvalidArgument("obstacle distances d1 and d2 must be positive")


@dataclass(frozen=True)
class PathProfile:
    distance: float
    frequency: float
    los: bool = True
    rain_rate: float = 0.0  # mm/h
    obstacle: Optional[Obstacle] = None
    env: str = "UMi"
    walls: int = 0

    def __post_init__(self):
        if not self.distance > 0:
            raise InvalidArgument(f"distance must be positive, got {self.distance}")
        if not self.frequency > 0:
            raise InvalidArgument(f"frequency must be positive, got {self.frequency}")
        if self.rain_rate < 0:
            raise InvalidArgument("rain_rate must be >= 0")
        if self.walls < 0:
            raise InvalidArgument("walls must be >= 0")


@dataclass(frozen=True)
class PathLossParams:
    exponent: float
    sigma_shadow: float
    ref_distance: float = 1.0
    rain_k: float = 0.0
    rain_alpha: float = 0.9
    wall_loss: float = 20.0  # dB per wall

    def __post_init__(self):
        if not self.exponent > 0:
            raise InvalidArgument("exponent must be positive")
        if self.sigma_shadow < 0:
            raise InvalidArgument("sigma_shadow must be >= 0")
        if not self.ref_distance > 0:
            raise InvalidArgument("ref_distance must be positive")
        if self.rain_k < 0:
            raise InvalidArgument("rain_k must be >= 0")


@dataclass(frozen=True)
class LossBreakdown:
    free_space_or_logdist: float
    shadowing: float
    rain: float
    diffraction: float
    wall: float
    total: float = field(default=math.nan)

    def __post_init__(self):
        s = self.free_space_or_logdist + self.shadowing + self.rain + self.diffraction + self.wall
        object.__setattr__(self, "total", s)


# Named (LOS, NLOS) parameter sets.  mmWave values are common UMi 28 GHz fits;
# sub-6 sets stay inside n = 2.7..3.5, sigma = 4..8 dB.
PRESETS = {
    "umi-28ghz": (
        PathLossParams(2.1, 3.5, rain_k=0.12, rain_alpha=0.9),
        PathLossParams(3.3, 7.0, rain_k=0.12, rain_alpha=0.9),
    ),
    "umi-sub6": (PathLossParams(2.7, 4.0), PathLossParams(3.2, 7.0)),
    "uma-sub6": (PathLossParams(2.8, 4.0), PathLossParams(3.5, 8.0)),
    "rma-sub6": (PathLossParams(2.7, 4.0), PathLossParams(3.0, 6.0)),
}


def wavelength(frequency: float) -> float:
    return SPEED_OF_LIGHT / frequency


def friis_loss(distance, frequency):
    """Free-space loss ``20 log10(4 pi f d / c)`` in dB."""
    d = np.asarray(distance, dtype=float)
    f = np.asarray(frequency, dtype=float)
    if np.any(d <= 0) or np.any(f <= 0):
        raise InvalidArgument("distance and frequency must be positive")
    out = 20.0 * np.log10(4.0 * np.pi * f * d / SPEED_OF_LIGHT)
    return float(out) if out.ndim == 0 else out


def logdist_loss(profile: PathProfile, params: PathLossParams, shadowing_draw: float = 0.0) -> float:
    """``PL(d0) + 10 n log10(d / d0) + X`` with ``PL(d0)`` anchored to Friis."""
    if profile.distance < params.ref_distance:
        raise InvalidArgument(f"distance {profile.distance} m is below the reference distance {params.ref_distance} m")
    return (
        friis_loss(params.ref_distance, profile.frequency)
        + 10.0 * params.exponent * math.log10(profile.distance / params.ref_distance)
        + shadowing_draw
    )


def logdist_loss_array(distance, frequency: float, exponent, ref_distance: float = 1.0):
    """Median log-distance loss for arrays; distances below ``d0`` are clamped to it."""
    d = np.maximum(np.asarray(distance, dtype=float), ref_distance)
    return friis_loss(ref_distance, frequency) + 10.0 * np.asarray(exponent) * np.log10(d / ref_distance)


def rain_attenuation(distance: float, rain_rate: float, k: float, alpha: float) -> float:
    """Rain loss ``k R^alpha`` dB/km times the path length in km."""
    if distance < 0 or rain_rate < 0 or k < 0 or alpha < 0:
        raise InvalidArgument("rain attenuation inputs must be non-negative")
    if rain_rate == 0:
        return 0.0
    return k * rain_rate**alpha * distance / 1000.0


def fresnel_parameter(obstacle: Obstacle, frequency: float) -> float:
    lam = wavelength(frequency)
    return obstacle.height * math.sqrt(2.0 * (obstacle.d1 + obstacle.d2)) / math.sqrt(lam * obstacle.d1 * obstacle.d2)


def knife_edge_loss(obstacle: Obstacle, frequency: float) -> float:
    """``20 log10(nu)``, clamped to 0 dB for ``nu <= 1`` (no diffraction gain)."""
    if not (obstacle.d1 > 0 and obstacle.d2 > 0):
        raise InvalidArgument("obstacle distances must be positive")
    if not frequency > 0:
        raise InvalidArgument("frequency must be positive")
    if obstacle.height <= 0:
        return 0.0
    nu = fresnel_parameter(obstacle, frequency)
    return max(0.0, 20.0 * math.log10(nu))


def total_loss(profile: PathProfile, params: PathLossParams, shadowing_draw: float = 0.0) -> LossBreakdown:
    base = logdist_loss(profile, params, 0.0)
    rain = rain_attenuation(profile.distance, profile.rain_rate, params.rain_k, params.rain_alpha)
    diff = knife_edge_loss(profile.obstacle, profile.frequency) if profile.obstacle is not None else 0.0
    wall = profile.walls * params.wall_loss
    return LossBreakdown(base, shadowing_draw, rain, diff, wall)

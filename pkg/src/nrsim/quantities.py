"""Scalar unit conversions: dB/linear, dBm/W, noise power.

Link-budget arithmetic stays in dB; linear values only appear where
signal, noise and interference powers are combined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

BOLTZMANN_N0_DBM_HZ = -174.0


def db_to_linear(x):
    """Convert a dB ratio to linear. Works on scalars and arrays."""
    if np.ndim(x):
        return 10.0 ** (np.asarray(x, dtype=float) / 10.0)
    return 10.0 ** (float(x) / 10.0)


def linear_to_db(x):
    """Convert a linear power ratio to dB. Zero maps to -inf."""
    if np.ndim(x):
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(np.asarray(x, dtype=float))
    x = float(x)
    if x < 0:
        raise InvalidArgument(f"negative power ratio {x}")
    return -math.inf if x == 0.0 else 10.0 * math.log10(x)


def dbm_to_watts(p_dbm):
    return db_to_linear(p_dbm) * 1e-3


def watts_to_dbm(p_w):
    if np.ndim(p_w):
        return linear_to_db(np.asarray(p_w, dtype=float) * 1e3)
    return linear_to_db(float(p_w) * 1e3)


@dataclass(frozen=True)
class NoiseSpec:
    """Thermal noise density (dBm/Hz) plus receiver noise figure (dB)."""

    n0: float = BOLTZMANN_N0_DBM_HZ
    noise_figure: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.n0):
            raise InvalidArgument("n0 must be finite")
        if not 0.0 <= self.noise_figure <= 20.0:
            raise InvalidArgument(f"noise_figure {self.noise_figure} dB outside [0, 20]")


def noise_power_dbm(spec: NoiseSpec, bandwidth: float) -> float:
    if not bandwidth > 0:
        raise InvalidArgument(f"bandwidth must be positive, got {bandwidth}")
    return spec.n0 + 10.0 * math.log10(bandwidth) + spec.noise_figure


def noise_power(spec: NoiseSpec, bandwidth: float) -> float:
    """Receiver noise power in watts over ``bandwidth`` Hz."""
    return dbm_to_watts(noise_power_dbm(spec, bandwidth))

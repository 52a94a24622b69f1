"""Seeded random draws: small-scale fading, shadowing and LOS state.

Every random quantity comes from an :class:`RngStream`, a value object
naming the (scenario seed, drop, link) triple.  The generator behind it is
a Philox counter-based bit generator keyed by that triple, so a stream can
be rebuilt anywhere (another process, another order) and replays the same
draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

_MASK64 = (1 << 64) - 1

ENVIRONMENTS = ("UMi", "UMa", "RMa", "mmWave")


@dataclass(frozen=True)
class RngStream:
    scenario_seed: int
    drop_index: int = 0
    link_index: int = 0

    def __post_init__(self):
        if self.drop_index < 0 or self.link_index < 0:
            raise InvalidArgument("drop_index and link_index must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            int(self.scenario_seed) & _MASK64,
            spawn_key=(int(self.drop_index), int(self.link_index)),
        )
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex ``nr x nt`` flat-fading channel realization."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.entries)
        if h.ndim != 2:
            raise InvalidArgument(f"channel matrix must be 2-D, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise InvalidArgument("channel matrix has non-finite entries")
        object.__setattr__(self, "entries", h.astype(complex, copy=False))

    @property
    def nr(self) -> int:
        return self.entries.shape[0]

    @property
    def nt(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class LinkState:
    los: bool
    shadowing_db: float
    fading: ChannelMatrix

    def __post_init__(self):
        if not np.isfinite(self.shadowing_db):
            raise InvalidArgument("shadowing_db must be finite")


def complex_gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circular complex Gaussian samples (0.5 per real part)."""
    z = gen.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def draw_rayleigh(rng: RngStream, nt: int, nr: int) -> ChannelMatrix:
    if nt < 1 or nr < 1:
        raise InvalidArgument(f"channel dimensions must be >= 1, got nt={nt}, nr={nr}")
    return ChannelMatrix(complex_gaussian(rng.generator(), (nr, nt)))


def draw_shadowing(rng: RngStream, sigma_db: float) -> float:
    if sigma_db < 0:
        raise InvalidArgument(f"shadowing sigma must be >= 0, got {sigma_db}")
    return float(sigma_db * rng.generator().standard_normal())


def los_probability(distance, env: str):
    """LOS probability versus 2-D distance in meters.

    UMi and mmWave small cells use ``min(18/d, 1)(1 - e^{-d/36}) + e^{-d/36}``,
    UMa the same shape with a 63 m decay, and RMa ``exp(-(d - 10)/1000)``
    beyond 10 m.
    """
    if env not in ENVIRONMENTS:
        raise InvalidArgument(f"unknown environment {env!r}; expected one of {ENVIRONMENTS}")
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise InvalidArgument("distance must be >= 0")
    if env == "RMa":
        p = np.where(d <= 10.0, 1.0, np.exp(-(d - 10.0) / 1000.0))
    else:
        decay = 63.0 if env == "UMa" else 36.0
        with np.errstate(divide="ignore"):
            near = np.minimum(np.where(d > 0, 18.0 / np.where(d > 0, d, 1.0), 1.0), 1.0)
        tail = np.exp(-d / decay)
        p = near * (1.0 - tail) + tail
    return float(p) if np.ndim(distance) == 0 else p


def draw_los(rng: RngStream, distance: float, env: str) -> bool:
    p = los_probability(distance, env)
    return bool(rng.generator().random() < p)

"""One-way latency budgets for D2D, grant-lite M2M and BS-anchored access."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import RngStream
from .errors import InvalidArgument
from .propagation import SPEED_OF_LIGHT

COMPONENTS = ("proc", "queue", "mac", "prop")

# Per-component [min, max] in ms.
DEFAULT_RANGES = {
    "d2d": {"proc": (0.2, 0.4), "queue": (0.1, 0.3), "mac": (0.4, 0.8), "prop": (0.01, 0.05)},
    "m2m-grant-lite": {"proc": (0.3, 0.6), "queue": (0.3, 0.8), "mac": (1.0, 1.5), "prop": (0.05, 0.1)},
    "bs-anchored": {"proc": (0.5, 1.0), "queue": (1.0, 3.0), "mac": (2.0, 4.0), "prop": (0.05, 0.2)},
}


@dataclass(frozen=True)
class LatencyBudget:
    proc: float
    queue: float
    mac: float
    prop: float
    total: float = field(default=math.nan)

    def __post_init__(self):
        if min(self.proc, self.queue, self.mac, self.prop) < 0:
            raise InvalidArgument("latency components must be >= 0")
        object.__setattr__(self, "total", self.proc + self.queue + self.mac + self.prop)


@dataclass(frozen=True)
class AccessMode:
    tag: str
    tx_rx_frequency: float = 1000.0  # Hz
    component_ranges: Optional[dict] = None

    def __post_init__(self):
        if self.tag not in DEFAULT_RANGES:
            raise InvalidArgument(f"unknown access mode {self.tag!r}; expected one of {tuple(DEFAULT_RANGES)}")
        if not self.tx_rx_frequency > 0:
            raise InvalidArgument("tx_rx_frequency must be positive")
        ranges = dict(DEFAULT_RANGES[self.tag])
        ranges.update(self.component_ranges or {})
        for name in ranges:
            if name not in COMPONENTS:
                raise InvalidArgument(f"unknown latency component {name!r}")
        ranges = {k: (float(v[0]), float(v[1])) for k, v in ranges.items()}
        for name, (lo, hi) in ranges.items():
            if lo < 0 or lo > hi:
                raise InvalidArgument(f"bad range for {name}: [{lo}, {hi}]")
        object.__setattr__(self, "component_ranges", ranges)

    def bounds(self) -> tuple:
        lo = sum(r[0] for r in self.component_ranges.values())
        hi = sum(r[1] for r in self.component_ranges.values())
        return lo, hi


def d2d_latency(f_tx_rx: float) -> float:
    """One periodic Tx/Rx cycle, in ms."""
    if not f_tx_rx > 0:
        raise InvalidArgument(f"f_tx_rx must be positive, got {f_tx_rx}")
    return 1000.0 / f_tx_rx


def m2m_latency(distance: float, f_tx_rx: float) -> float:
    """Propagation over ``distance`` meters plus one cycle, in ms."""
    if distance < 0:
        raise InvalidArgument("distance must be >= 0")
    return 1000.0 * distance / SPEED_OF_LIGHT + d2d_latency(f_tx_rx)


def sample_latency_components(gen: np.random.Generator, mode: AccessMode, n: int, hop_distance: Optional[float] = None) -> dict:
    """``n`` uniform draws per component, in the fixed order proc, queue, mac, prop."""
    out = {}
    for name in COMPONENTS:
        lo, hi = mode.component_ranges[name]
        out[name] = gen.uniform(lo, hi, n)
    if hop_distance is not None:
        if hop_distance < 0:
            raise InvalidArgument("hop_distance must be >= 0")
        out["prop"] = np.full(n, 1000.0 * hop_distance / SPEED_OF_LIGHT)
    return out


def sample_latency_stack(rng: RngStream, mode: AccessMode, hop_distance: Optional[float] = None) -> LatencyBudget:
    c = sample_latency_components(rng.generator(), mode, 1, hop_distance)
    return LatencyBudget(*(float(c[name][0]) for name in COMPONENTS))


def sample_latency_totals(gen: np.random.Generator, mode: AccessMode, n: int, hop_distance: Optional[float] = None) -> np.ndarray:
    c = sample_latency_components(gen, mode, n, hop_distance)
    return c["proc"] + c["queue"] + c["mac"] + c["prop"]

"""Carrier-aggregation throughput and power/spectrum allocation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, NoCapacityError


@dataclass(frozen=True)
class ComponentCarrier:
    bandwidth: float  # Hz
    channel_gain: float  # |h|^2, linear
    noise_density: float  # W/Hz

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InvalidArgument(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.channel_gain >= 0:
            raise InvalidArgument(f"channel_gain must be >= 0, got {self.channel_gain}")
        if not self.noise_density > 0:
            raise InvalidArgument(f"noise_density must be positive, got {self.noise_density}")


@dataclass(frozen=True)
class CarrierPowerAllocation:
    powers: tuple  # W per carrier, input order
    water_level: float = math.nan


@dataclass(frozen=True)
class SpectrumDemand:
    """Weighted log utility ``weight * ln(1 + rate_coefficient * x)``."""

    weight: float
    rate_coefficient: float

    def __post_init__(self):
        if not self.weight > 0 or not self.rate_coefficient > 0:
            raise InvalidArgument("weight and rate_coefficient must be positive")

    def utility(self, x):
        return self.weight * np.log1p(self.rate_coefficient * np.asarray(x, dtype=float))

    def marginal(self, x):
        return self.weight * self.rate_coefficient / (1.0 + self.rate_coefficient * np.asarray(x, dtype=float))


def effective_gain(cc: ComponentCarrier) -> float:
    """Gain-to-noise ratio per watt, ``|h|^2 / (N0 B)``."""
    if not cc.bandwidth > 0:
        raise InvalidArgument("bandwidth must be positive")
    return cc.channel_gain / (cc.noise_density * cc.bandwidth)


def _gains(carriers) -> np.ndarray:
    return np.array([effective_gain(c) if isinstance(c, ComponentCarrier) else float(c) for c in carriers])


def waterfill_gains(gains: Sequence[float], p_total: float) -> CarrierPowerAllocation:
    """Sorted-activation water-filling over effective gains.

    Carriers are visited in descending gain order.  At step ``k`` the
    tentative level is ``(P_t + sum_{j<=k} 1/g_j) / k``; the loop stops at
    the first carrier whose allocation would not be positive and falls back
    to the previous active set.  Zero-gain carriers never enter the loop.
    """
    g = np.asarray(gains, dtype=float)
    if not p_total > 0:
        raise InvalidArgument(f"p_total must be positive, got {p_total}")
    if g.size == 0:
        raise InvalidArgument("no carriers")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise InvalidArgument("gains must be finite and non-negative")
    live = np.flatnonzero(g > 0)
    if live.size == 0:
        raise NoCapacityError("all carrier gains are zero")

    order = live[np.argsort(-g[live], kind="stable")]
    with np.errstate(over="ignore"):
        inv = 1.0 / g[order]
    n = len(order)
    # the strongest carrier alone always takes the full budget
    mu = p_total + inv[0]
    k = 1
    while k < n:
        tentative = (p_total + inv[: k + 1].sum()) / (k + 1)
        if tentative - inv[k] <= 0:
            break
        mu = tentative
        k += 1
    powers = np.zeros_like(g)
    if k == 1:
        powers[order[0]] = p_total
    else:
        powers[order[:k]] = mu - inv[:k]
    return CarrierPowerAllocation(tuple(powers), float(mu))


def waterfill_carriers(carriers: Sequence[ComponentCarrier], p_total: float) -> CarrierPowerAllocation:
    return waterfill_gains(_gains(carriers), p_total)


def equal_power(carriers: Sequence, p_total: float) -> CarrierPowerAllocation:
    if len(carriers) == 0:
        raise InvalidArgument("no carriers")
    if not p_total >= 0:
        raise InvalidArgument(f"p_total must be >= 0, got {p_total}")
    share = p_total / len(carriers)
    return CarrierPowerAllocation(tuple([share] * len(carriers)))


def ca_throughput(carriers: Sequence[ComponentCarrier], allocation: CarrierPowerAllocation) -> float:
    """Aggregate rate ``sum_i B_i log2(1 + P_i g_i)`` in bit/s."""
    powers = allocation.powers if isinstance(allocation, CarrierPowerAllocation) else tuple(allocation)
    if len(powers) != len(carriers):
        raise InvalidArgument(f"{len(powers)} powers for {len(carriers)} carriers")
    bw = np.array([c.bandwidth for c in carriers])
    return float(np.sum(bw * np.log2(1.0 + np.asarray(powers) * _gains(carriers))))


def batch_waterfill_gains(gains: np.ndarray, p_total) -> np.ndarray:
    """Vectorized form of :func:`waterfill_gains` over leading axes.

    Same active set as the sorted loop (the loop stops at the first
    non-positive allocation, which for sorted gains is also the largest
    feasible prefix).
    """
    g = np.asarray(gains, dtype=float)
    p = np.broadcast_to(np.asarray(p_total, dtype=float), g.shape[:-1])[..., None]
    order = np.argsort(-g, axis=-1, kind="stable")
    gs = np.take_along_axis(g, order, axis=-1)
    with np.errstate(divide="ignore", over="ignore"):
        inv = np.where(gs > 0, 1.0 / np.where(gs > 0, gs, 1.0), np.inf)
    m = g.shape[-1]
    ks = np.arange(1, m + 1)
    finite_inv = np.where(np.isfinite(inv), inv, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        mu_k = (p + np.cumsum(finite_inv, axis=-1)) / ks
    ok = (mu_k - inv) > 0
    ok[..., 0] = gs[..., 0] > 0
    # first failing index ends the prefix
    k_active = np.where(ok.all(axis=-1), m, np.argmin(ok, axis=-1))
    mu = np.take_along_axis(mu_k, np.maximum(k_active - 1, 0)[..., None], axis=-1)
    sorted_p = np.where(ks <= k_active[..., None], mu - finite_inv, 0.0)
    sorted_p[..., 0] = np.where(k_active == 1, p[..., 0], sorted_p[..., 0])
    out = np.empty_like(sorted_p)
    np.put_along_axis(out, order, np.maximum(sorted_p, 0.0), axis=-1)
    return out


def allocate_spectrum(demands: Sequence[SpectrumDemand], s_total: float, rtol: float = 1e-9) -> list:
    """Split ``s_total`` Hz to maximize sum of weighted log utilities.

    KKT: ``x_i = [w_i / nu - 1 / a_i]^+`` with the multiplier ``nu`` found by
    bisection so the allocations sum to ``s_total``.
    """
    if len(demands) == 0:
        raise InvalidArgument("no demands")
    if not s_total > 0:
        raise InvalidArgument(f"s_total must be positive, got {s_total}")
    w = np.array([d.weight for d in demands])
    a = np.array([d.rate_coefficient for d in demands])

    def alloc(nu):
        return np.maximum(w / nu - 1.0 / a, 0.0)

    # at nu = max marginal at zero nothing is allocated; shrink nu until it overfills
    hi = float(np.max(w * a))
    lo = hi
    while alloc(lo).sum() < s_total:
        lo /= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if alloc(mid).sum() > s_total:
            lo = mid
        else:
            hi = mid
        if abs(alloc(mid).sum() - s_total) <= rtol * s_total:
            break
    x = alloc(mid)
    # remove the residual bisection error on the active set
    active = x > 0
    x[active] += (s_total - x.sum()) / active.sum()
    return [float(v) for v in x]

"""Spectral efficiency of SISO/SIMO/MISO/MIMO links.

``rho`` is always the per-transmit-antenna SNR ``P_t / (N_t sigma_n^2)``,
so the total transmit SNR is ``rho * nt``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelMatrix
from .errors import InvalidArgument, NoCapacityError


class MimoMode(str, enum.Enum):
    BEAMFORMING = "beamforming"
    DIVERSITY = "diversity"
    MULTIPLEXING_EQUAL_POWER = "multiplexing-equal-power"
    MULTIPLEXING_WATERFILLING = "multiplexing-waterfilling"


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenvalues of H H^H in descending order, one per spatial mode."""

    eigenvalues: tuple

    def __post_init__(self):
        ev = tuple(float(v) for v in self.eigenvalues)
        if any(v < 0 for v in ev):
            raise InvalidArgument("eigenvalues must be non-negative")
        object.__setattr__(self, "eigenvalues", tuple(sorted(ev, reverse=True)))

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True)
class EigenPowerAllocation:
    powers: tuple
    water_level: float


def _as_matrix(h) -> np.ndarray:
    m = h.entries if isinstance(h, ChannelMatrix) else np.asarray(h, dtype=complex)
    if m.ndim != 2:
        raise InvalidArgument(f"channel matrix must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgument("channel matrix has non-finite entries")
    return m


def _check_rho(rho: float):
    if not rho >= 0:
        raise InvalidArgument(f"rho must be >= 0, got {rho}")


def batch_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Eigenvalues of H H^H for a stack of ``(..., nr, nt)`` matrices.

    Returns ``(..., min(nr, nt))`` values, descending, clamped at zero.
    """
    nr, nt = h.shape[-2:]
    # the smaller Gram matrix has the same non-zero spectrum
    gram = h @ np.conj(np.swapaxes(h, -1, -2)) if nr <= nt else np.conj(np.swapaxes(h, -1, -2)) @ h
    ev = np.linalg.eigvalsh(gram)[..., ::-1]
    return np.maximum(ev, 0.0)


def eigen_spectrum(h) -> EigenSpectrum:
    m = _as_matrix(h)
    return EigenSpectrum(tuple(batch_eigenvalues(m)))


def efficiency_from_eigenvalues(eigenvalues: Sequence[float], rho: float) -> float:
    """Rank-sum form: sum_i log2(1 + rho * lambda_i)."""
    _check_rho(rho)
    ev = np.asarray(eigenvalues, dtype=float)
    return float(np.sum(np.log2(1.0 + rho * ev)))


def spectral_efficiency_equal_power(h, rho: float) -> float:
    """log2 det(I + rho H H^H), evaluated directly as a log-determinant."""
    _check_rho(rho)
    m = _as_matrix(h)
    a = np.eye(m.shape[0]) + rho * (m @ m.conj().T)
    sign, logdet = np.linalg.slogdet(a)
    return float(logdet / np.log(2.0))


def waterfill_eigenmodes(spectrum, p_total: float, noise: float) -> EigenPowerAllocation:
    """Water-filling across eigenmodes: ``p_i = [mu - noise / lambda_i]^+``.

    ``spectrum`` may be an :class:`EigenSpectrum` or any sequence of
    eigenvalues; powers come back aligned with the input order.  A mode whose
    allocation would be exactly zero is left inactive.
    """
    ev = np.asarray(spectrum.eigenvalues if isinstance(spectrum, EigenSpectrum) else spectrum, dtype=float)
    if not p_total > 0:
        raise InvalidArgument(f"p_total must be positive, got {p_total}")
    if not noise > 0:
        raise InvalidArgument(f"noise must be positive, got {noise}")
    if np.any(ev < 0):
        raise InvalidArgument("eigenvalues must be non-negative")
    positive = np.flatnonzero(ev > 0)
    if positive.size == 0:
        raise NoCapacityError("all eigenvalues are zero")

    order = positive[np.argsort(-ev[positive], kind="stable")]
    with np.errstate(over="ignore"):
        inv = noise / ev[order]
    k = len(order)
    while k > 1:
        mu = (p_total + inv[:k].sum()) / k
        if mu - inv[k - 1] > 0:
            break
        k -= 1
    powers = np.zeros_like(ev)
    if k == 1:
        mu = p_total + inv[0]
        powers[order[0]] = p_total
    else:
        powers[order[:k]] = mu - inv[:k]
    return EigenPowerAllocation(tuple(powers), float(mu))


def batch_waterfill(eigenvalues: np.ndarray, p_total) -> np.ndarray:
    """Vectorized eigenmode water-filling with unit noise.

    ``eigenvalues`` is ``(..., m)`` sorted descending; ``p_total`` broadcasts
    over the leading axes.  Rows with no positive eigenvalue get zero power.
    """
    ev = np.asarray(eigenvalues, dtype=float)
    p = np.broadcast_to(np.asarray(p_total, dtype=float), ev.shape[:-1])[..., None]
    with np.errstate(divide="ignore", over="ignore"):
        inv = np.where(ev > 0, 1.0 / np.where(ev > 0, ev, 1.0), np.inf)
    m = ev.shape[-1]
    ks = np.arange(1, m + 1)
    finite_inv = np.where(np.isfinite(inv), inv, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        mu_k = (p + np.cumsum(finite_inv, axis=-1)) / ks
    valid = (mu_k - inv) > 0
    valid[..., 0] = ev[..., 0] > 0
    # number of active modes: largest k whose level clears its weakest mode
    k_active = np.where(valid.any(axis=-1), m - np.argmax(valid[..., ::-1], axis=-1), 0)
    mu = np.take_along_axis(mu_k, np.maximum(k_active - 1, 0)[..., None], axis=-1)
    powers = np.where(ks <= k_active[..., None], mu - finite_inv, 0.0)
    powers[..., 0] = np.where(k_active == 1, p[..., 0], powers[..., 0])
    return np.maximum(powers, 0.0)


def mode_efficiency(eigenvalues: np.ndarray, rho, nt: int, mode: MimoMode) -> np.ndarray:
    """Vectorized spectral efficiency from ``(..., m)`` descending eigenvalues."""
    mode = MimoMode(mode)
    ev = np.asarray(eigenvalues, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if mode is MimoMode.MULTIPLEXING_EQUAL_POWER:
        return np.sum(np.log2(1.0 + rho[..., None] * ev), axis=-1)
    if mode is MimoMode.BEAMFORMING:
        return np.log2(1.0 + rho * nt * ev[..., 0])
    if mode is MimoMode.DIVERSITY:
        # trace(H H^H) is the squared Frobenius norm
        return np.log2(1.0 + rho * nt * ev.sum(axis=-1))
    powers = batch_waterfill(ev, rho * nt)
    return np.sum(np.log2(1.0 + powers * ev), axis=-1)


def spectral_efficiency_mode(h, rho: float, mode) -> float:
    """Spectral efficiency for one transmission mode.

    beamforming
        full power on the dominant eigenmode, ``log2(1 + rho nt lambda_max)``
    diversity
        one stream with full array gain, ``log2(1 + rho nt ||H||_F^2)``
    multiplexing-equal-power
        ``log2 det(I + rho H H^H)``
    multiplexing-waterfilling
        eigenmode water-filling of the total SNR ``rho nt``
    """
    _check_rho(rho)
    mode = MimoMode(mode)
    m = _as_matrix(h)
    if mode is MimoMode.MULTIPLEXING_EQUAL_POWER:
        return spectral_efficiency_equal_power(m, rho)
    if mode is MimoMode.DIVERSITY:
        return float(np.log2(1.0 + rho * m.shape[1] * np.sum(np.abs(m) ** 2)))
    ev = batch_eigenvalues(m)
    if mode is MimoMode.BEAMFORMING:
        return float(np.log2(1.0 + rho * m.shape[1] * ev[0]))
    if rho == 0 or not np.any(ev > 0):
        return 0.0
    alloc = waterfill_eigenmodes(ev, rho * m.shape[1], 1.0)
    return float(np.sum(np.log2(1.0 + np.asarray(alloc.powers) * ev)))

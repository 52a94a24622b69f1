"""Hexagonal site layouts, UE drops and per-UE link budgets."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .channel import LinkState, RngStream
from .errors import InvalidArgument
from .propagation import PathLossParams, logdist_loss_array
from .quantities import NoiseSpec, db_to_linear, linear_to_db, noise_power_dbm

# (min, max) transmit power in dBm per cell type
TX_POWER_BOUNDS = {
    "macro": (43.0, 46.0),
    "micro": (30.0, 46.0),
    "small-cell": (30.0, 37.0),
}


@dataclass(frozen=True)
class Area:
    x0: float
    y0: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidArgument(f"degenerate area {self.width} x {self.height} m")

    @property
    def center(self):
        return (self.x0 + self.width / 2.0, self.y0 + self.height / 2.0)

    @property
    def km2(self) -> float:
        return self.width * self.height / 1e6

    def contains(self, xy: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        xy = np.atleast_2d(xy)
        return (
            (xy[:, 0] >= self.x0 - tol)
            & (xy[:, 0] <= self.x0 + self.width + tol)
            & (xy[:, 1] >= self.y0 - tol)
            & (xy[:, 1] <= self.y0 + self.height + tol)
        )


@dataclass(frozen=True)
class Site:
    position: tuple = (0.0, 0.0)
    height: float = 25.0
    tx_power: float = 46.0  # dBm per carrier
    band: str = ""
    cell_type: str = "macro"

    def __post_init__(self):
        if not self.height > 0:
            raise InvalidArgument("site height must be positive")
        if self.cell_type not in TX_POWER_BOUNDS:
            raise InvalidArgument(f"unknown cell type {self.cell_type!r}")
        lo, hi = TX_POWER_BOUNDS[self.cell_type]
        if not lo <= self.tx_power <= hi:
            raise InvalidArgument(f"{self.cell_type} tx_power {self.tx_power} dBm outside [{lo}, {hi}]")


@dataclass(frozen=True)
class UeCapability:
    max_ccs: int = 5
    max_layers: int = 4

    def __post_init__(self):
        if self.max_ccs < 1 or self.max_layers < 1:
            raise InvalidArgument("UE capability limits must be >= 1")


@dataclass(frozen=True)
class UserEquipment:
    position: tuple
    height: float = 1.5
    capability: UeCapability = field(default_factory=UeCapability)


@dataclass(frozen=True)
class NetworkLayout:
    sites: tuple
    ues: tuple
    isd: float
    area: Area

    @property
    def site_xy(self) -> np.ndarray:
        return np.array([s.position for s in self.sites], dtype=float).reshape(-1, 2)

    def neighbors(self) -> list:
        """First tier: the (up to six) lattice neighbors one ISD away."""
        xy = self.site_xy
        d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
        near = np.abs(d - self.isd) <= 1e-6 * self.isd
        return [np.flatnonzero(row) for row in near]

    def to_table(self) -> str:
        """Site table as CSV text: site_id, x, y, type."""
        buf = io.StringIO()
        buf.write("site_id,x,y,type\n")
        for i, s in enumerate(self.sites):
            buf.write(f"{i},{s.position[0]:.6f},{s.position[1]:.6f},{s.cell_type}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class LinkBudget:
    rx_power: float  # dBm, serving link
    noise: float  # dBm
    interference: float  # dBm, -inf when none
    snr: float  # dB
    sinr: float  # dB
    serving_site: int


def hex_lattice(isd: float, area: Area) -> np.ndarray:
    """Triangular-lattice points with spacing ``isd`` inside ``area``.

    The lattice is anchored at the area center, so a small area always
    holds at least the center site.
    """
    if not isd > 0:
        raise InvalidArgument(f"isd must be positive, got {isd}")
    cx, cy = area.center
    dy = isd * math.sqrt(3.0) / 2.0
    nrow = int(math.ceil(area.height / 2.0 / dy)) + 1
    ncol = int(math.ceil(area.width / 2.0 / isd)) + 2
    pts = []
    for j in range(-nrow, nrow + 1):
        shift = 0.5 * isd if j % 2 else 0.0
        for i in range(-ncol, ncol + 1):
            pts.append((cx + i * isd + shift, cy + j * dy))
    pts = np.array(pts)
    pts = pts[area.contains(pts)]
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    return pts[order]


def build_hex_layout(isd: float, area: Area, site_template: Site) -> NetworkLayout:
    xy = hex_lattice(isd, area)
    sites = tuple(replace(site_template, position=(float(x), float(y))) for x, y in xy)
    return NetworkLayout(sites=sites, ues=(), isd=float(isd), area=area)


def site_density(isd: float) -> float:
    """Sites per km^2 for a hexagonal lattice: ``2 / (sqrt(3) ISD^2)``."""
    if not isd > 0:
        raise InvalidArgument(f"isd must be positive, got {isd}")
    isd_km = isd / 1000.0
    return 2.0 / (math.sqrt(3.0) * isd_km**2)


def uniform_positions(gen: np.random.Generator, area: Area, n: int) -> np.ndarray:
    u = gen.random((n, 2))
    return np.column_stack((area.x0 + u[:, 0] * area.width, area.y0 + u[:, 1] * area.height))


def drop_ues(
    rng: RngStream,
    layout: NetworkLayout,
    count_per_cell: int,
    height: float = 1.5,
    capability: Optional[UeCapability] = None,
) -> list:
    if count_per_cell < 0:
        raise InvalidArgument("count_per_cell must be >= 0")
    cap = capability or UeCapability()
    xy = uniform_positions(rng.generator(), layout.area, count_per_cell * len(layout.sites))
    return [UserEquipment((float(x), float(y)), height, cap) for x, y in xy]


@dataclass(frozen=True)
class Interferer:
    """A fixed co-channel emitter at ``distance`` meters from every UE."""

    distance: float = 50.0
    power: float = 30.0  # dBm


def link_budgets(
    ue_xy: np.ndarray,
    ue_height: float,
    layout: NetworkLayout,
    frequency: float,
    bandwidth: float,
    los: np.ndarray,
    shadowing_db: np.ndarray,
    los_params: PathLossParams,
    nlos_params: PathLossParams,
    noise: NoiseSpec,
    extra_loss_db=0.0,
    beam_gain_db: float = 0.0,
    narrow_beams: bool = True,
    interferer: Optional[Interferer] = None,
    neighbors: Optional[Sequence] = None,
    serving: Optional[np.ndarray] = None,
    rain_db_per_km: float = 0.0,
) -> dict:
    """Vectorized downlink budgets for ``U`` UEs against ``S`` sites.

    ``los`` and ``shadowing_db`` are ``(U, S)``; ``extra_loss_db`` broadcasts
    to ``(U, S)`` (walls, diffraction, implementation loss); rain adds
    ``rain_db_per_km`` times each link's length.  The
    serving site is the strongest average received power unless
    ``serving`` is supplied.  Interference is the linear sum over the
    serving site's first-tier neighbors plus the optional fixed emitter.
    Returned arrays are indexed by UE.
    """
    site_xy = layout.site_xy
    heights = np.array([s.height for s in layout.sites])
    tx = np.array([s.tx_power for s in layout.sites])
    d2 = np.hypot(ue_xy[:, None, 0] - site_xy[None, :, 0], ue_xy[:, None, 1] - site_xy[None, :, 1])
    d3 = np.sqrt(d2**2 + (heights[None, :] - ue_height) ** 2)
    exponent = np.where(los, los_params.exponent, nlos_params.exponent)
    pl = logdist_loss_array(d3, frequency, exponent, los_params.ref_distance) + shadowing_db + extra_loss_db
    if rain_db_per_km:
        pl = pl + rain_db_per_km * d3 / 1000.0
    rx = tx[None, :] - pl

    n_ue = ue_xy.shape[0]
    if serving is None:
        serving = np.argmax(rx, axis=1)
    rows = np.arange(n_ue)
    signal = rx[rows, serving] + beam_gain_db

    if neighbors is None:
        neighbors = layout.neighbors()
    mask = np.zeros_like(rx, dtype=bool)
    for s, nb in enumerate(neighbors):
        sel = serving == s
        if nb.size and sel.any():
            mask[np.ix_(sel, nb)] = True
    interferer_gain = 0.0 if narrow_beams else beam_gain_db
    interf_mw = np.sum(np.where(mask, db_to_linear(rx + interferer_gain), 0.0), axis=1)
    if interferer is not None:
        pl_i = logdist_loss_array(interferer.distance, frequency, los_params.exponent, los_params.ref_distance)
        interf_mw = interf_mw + db_to_linear(interferer.power - pl_i)

    noise_dbm = noise_power_dbm(noise, bandwidth)
    noise_mw = db_to_linear(noise_dbm)
    signal_mw = db_to_linear(signal)
    snr_db = signal - noise_dbm
    sinr_db = np.where(interf_mw > 0, linear_to_db(signal_mw / (noise_mw + interf_mw)), snr_db)
    return {
        "rx_all": rx,
        "serving": serving,
        "signal_dbm": signal,
        "noise_dbm": np.full(n_ue, noise_dbm),
        "interference_dbm": linear_to_db(interf_mw),
        "snr_db": snr_db,
        "sinr_db": np.minimum(sinr_db, snr_db),
        "distance": d3[rows, serving],
    }


def compute_link_budget(
    ue: UserEquipment,
    layout: NetworkLayout,
    channel: Sequence[LinkState],
    params,
    optional_interferer: Optional[Interferer] = None,
    *,
    frequency: float,
    bandwidth: float,
    noise: NoiseSpec = NoiseSpec(),
    beam_gain_db: float = 0.0,
    narrow_beams: bool = True,
) -> LinkBudget:
    """Link budget for one UE; ``channel`` holds one :class:`LinkState` per site.

    ``params`` is either one :class:`PathLossParams` or a ``(los, nlos)`` pair.
    """
    if not layout.sites:
        raise InvalidArgument("layout has no sites")
    if len(channel) != len(layout.sites):
        raise InvalidArgument(f"{len(channel)} link states for {len(layout.sites)} sites")
    los_p, nlos_p = (params, params) if isinstance(params, PathLossParams) else params
    los = np.array([[ls.los for ls in channel]])
    shadow = np.array([[ls.shadowing_db for ls in channel]], dtype=float)
    out = link_budgets(
        np.array([ue.position], dtype=float),
        ue.height,
        layout,
        frequency,
        bandwidth,
        los,
        shadow,
        los_p,
        nlos_p,
        noise,
        beam_gain_db=beam_gain_db,
        narrow_beams=narrow_beams,
        interferer=optional_interferer,
    )
    return LinkBudget(
        rx_power=float(out["signal_dbm"][0]),
        noise=float(out["noise_dbm"][0]),
        interference=float(out["interference_dbm"][0]),
        snr=float(out["snr_db"][0]),
        sinr=float(out["sinr_db"][0]),
        serving_site=int(out["serving"][0]),
    )

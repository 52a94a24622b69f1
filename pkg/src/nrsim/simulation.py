"""Monte Carlo engine: drops, per-UE KPIs, refarming and confidence intervals.

A drop is a pure function of ``(config, drop_index)``.  Each random block
in a drop (UE positions, LOS states, shadowing, fading per carrier, indoor
flags, latency samples) comes from its own Philox stream keyed by
``(seed, drop_index, stream_id)``, so drops can run in any order or in
parallel and still reproduce bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import __version__
from .aggregation import (
    ComponentCarrier,
    batch_waterfill_gains,
    ca_throughput,
    equal_power,
    waterfill_carriers,
)
from .channel import RngStream, complex_gaussian, los_probability
from .config import Band, RefarmPolicy, ScenarioConfig
from .errors import InsufficientSamples, InvalidArgument, PolicyRejected
from .latency import AccessMode, sample_latency_totals
from .mimo import MimoMode, batch_eigenvalues, mode_efficiency
from .network import (
    Area,
    Interferer,
    NetworkLayout,
    Site,
    UeCapability,
    build_hex_layout,
    link_budgets,
    uniform_positions,
)
from .propagation import Obstacle, knife_edge_loss
from .quantities import NoiseSpec, db_to_linear

STREAM_POSITIONS = 0
STREAM_LOS = 1
STREAM_SHADOW = 2
STREAM_INDOOR = 3
STREAM_LATENCY = 4
STREAM_FADING = 16  # + carrier index
STREAM_BOOTSTRAP = 1 << 20
STREAM_ABLATION = 1 << 21

PROCESSING_ORDER = "ue_caps_then_overhead"
SUB1GHZ = 1e9
SINR_HIST_EDGES = tuple(float(x) for x in np.arange(-20.0, 52.0, 2.0))


class UeKpi(NamedTuple):
    snr_db: float
    sinr_db: float
    throughput_bps: float
    covered: bool


# --- small policy helpers ----------------------------------------------------


def coverage_arrays(sinr_db, throughput, tau_db: float, t_min: float) -> float:
    sinr_db = np.asarray(sinr_db, dtype=float)
    throughput = np.asarray(throughput, dtype=float)
    if sinr_db.size == 0:
        raise InvalidArgument("no UEs to evaluate")
    ok = (sinr_db >= tau_db) & (throughput >= t_min)
    return 100.0 * np.count_nonzero(ok) / ok.size


def coverage(per_ue: Sequence, tau_db: float, t_min: float) -> float:
    """Percent of UEs with SINR >= tau and throughput >= t_min."""
    if len(per_ue) == 0:
        raise InvalidArgument("no UEs to evaluate")
    return coverage_arrays([u.sinr_db for u in per_ue], [u.throughput_bps for u in per_ue], tau_db, t_min)


def apply_ue_caps(capability: UeCapability, ccs: int, layers: int) -> tuple:
    return min(ccs, capability.max_ccs), min(layers, capability.max_layers)


def apply_overhead(gross, overhead: float):
    if not 0.0 <= overhead < 1.0:
        raise InvalidArgument(f"overhead must be in [0, 1), got {overhead}")
    return gross * (1.0 - overhead)


def apply_refarm(policy: Optional[RefarmPolicy], bands: Sequence[Band]) -> list:
    """Move LTE bandwidth to NR band by band.

    A partially moved band splits into an LTE carrier and an NR carrier
    (LTE first).  With the guard-rail on, at least one sub-1 GHz band must
    exist and none of them may be touched.
    """
    bands = list(bands)
    if policy is None:
        return bands
    by_freq = {b.frequency: b for b in bands}
    fractions = {}
    for mv in policy.moves:
        if mv.band not in by_freq:
            raise InvalidArgument(f"refarm move names unknown band {mv.band} Hz")
        if not 0.0 <= mv.fraction_to_nr <= 1.0:
            raise InvalidArgument(f"fraction_to_nr {mv.fraction_to_nr} outside [0, 1]")
        fractions[mv.band] = mv.fraction_to_nr

    if policy.guard_rail:
        low = [b for b in bands if b.frequency < SUB1GHZ]
        if not low:
            raise PolicyRejected("guard-rail needs a sub-1 GHz coverage layer but none is configured")
        touched = [b.frequency for b in low if fractions.get(b.frequency, 0.0) > 0.0 and b.role == "LTE"]
        if touched:
            raise PolicyRejected(f"guard-rail: refarming would alter the sub-1 GHz layer(s) {touched}")

    out = []
    for b in bands:
        f = fractions.get(b.frequency, 0.0)
        if b.role != "LTE" or f == 0.0:
            out.append(b)
            continue
        if f < 1.0:
            out.append(Band(b.frequency, b.bandwidth * (1.0 - f), "LTE"))
        out.append(Band(b.frequency, b.bandwidth * f, "NR"))
    return out


# --- confidence intervals ----------------------------------------------------


@dataclass(frozen=True)
class ConfidenceInterval:
    mean: float
    ci95: float  # half-width

    @property
    def low(self):
        return self.mean - self.ci95

    @property
    def high(self):
        return self.mean + self.ci95


@dataclass(frozen=True)
class Estimate:
    value: float
    low: float
    high: float


def aggregate_ci(samples) -> ConfidenceInterval:
    """Normal-approximation 95% interval, ``mean +/- 1.96 s / sqrt(n)``."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {x.size}")
    return ConfidenceInterval(float(x.mean()), float(1.96 * x.std(ddof=1) / math.sqrt(x.size)))


def bootstrap_ci(
    clusters: Sequence[np.ndarray],
    statistic: Callable[[np.ndarray], np.ndarray],
    gen: np.random.Generator,
    resamples: int = 1000,
) -> np.ndarray:
    """Percentile bootstrap over clusters (drops), 95% level.

    ``statistic`` maps pooled samples to a vector; returns ``(2, k)`` bounds.
    """
    if len(clusters) < 2:
        raise InsufficientSamples("bootstrap needs at least 2 clusters")
    n = len(clusters)
    stats = []
    for _ in range(resamples):
        idx = gen.integers(0, n, n)
        stats.append(statistic(np.concatenate([clusters[i] for i in idx])))
    return np.percentile(np.asarray(stats), [2.5, 97.5], axis=0)


# --- scenario geometry -------------------------------------------------------


def scenario_layout(cfg: ScenarioConfig) -> NetworkLayout:
    lay = cfg.layout
    area = Area(0.0, 0.0, lay.area.width, lay.area.height)
    template = Site(height=lay.bs_height, tx_power=lay.tx_power_dbm, band="", cell_type=lay.cell_type)
    return build_hex_layout(lay.isd, area, template)


def scenario_carriers(cfg: ScenarioConfig) -> list:
    return apply_refarm(cfg.refarm_policy, cfg.bands)


# --- one drop ----------------------------------------------------------------


@dataclass
class DropResult:
    drop_index: int
    ue_xy: np.ndarray
    serving: np.ndarray
    snr_db: np.ndarray
    sinr_db: np.ndarray
    throughput_bps: np.ndarray
    covered: np.ndarray
    rat_covered: dict = field(default_factory=dict)  # role -> per-UE bool
    latency_ms: Optional[np.ndarray] = None

    @property
    def per_ue(self) -> list:
        return [
            UeKpi(float(a), float(b), float(c), bool(d))
            for a, b, c, d in zip(self.snr_db, self.sinr_db, self.throughput_bps, self.covered)
        ]


def _carrier_mimo(cfg: ScenarioConfig, role: str):
    m = cfg.mimo if role == "NR" else cfg.lte_mimo
    return m.nt, m.nr, MimoMode(m.mode)


def _efficiency(h: np.ndarray, sinr_lin: np.ndarray, mode: MimoMode, max_layers: int) -> np.ndarray:
    """Per-UE spectral efficiency for one carrier under the UE layer cap."""
    nr, nt = h.shape[-2:]
    _, layers = apply_ue_caps(UeCapability(max_layers=max_layers), 1, min(nt, nr))
    if mode is MimoMode.MULTIPLEXING_EQUAL_POWER and layers < min(nt, nr):
        # without transmit CSI the capped UE is served from a subset of ports
        h = h[..., :layers]
        nt = layers
    ev = batch_eigenvalues(h)
    if mode is MimoMode.MULTIPLEXING_WATERFILLING:
        ev = ev[..., :layers]
    return mode_efficiency(ev, sinr_lin / nt, nt, mode)


def simulate_drop(cfg: ScenarioConfig, drop_index: int, layout: Optional[NetworkLayout] = None) -> DropResult:
    layout = layout or scenario_layout(cfg)
    carriers = scenario_carriers(cfg)
    n_site = len(layout.sites)
    n_ue = cfg.ue.count_per_cell * n_site
    seed = cfg.seed

    def stream(k):
        return RngStream(seed, drop_index, k).generator()

    ue_xy = uniform_positions(stream(STREAM_POSITIONS), layout.area, n_ue)
    site_xy = layout.site_xy
    d2 = np.hypot(ue_xy[:, None, 0] - site_xy[None, :, 0], ue_xy[:, None, 1] - site_xy[None, :, 1])
    los = stream(STREAM_LOS).random((n_ue, n_site)) < los_probability(d2, cfg.environment)
    los_p, nlos_p = cfg.pathloss_params()
    shadow = stream(STREAM_SHADOW).standard_normal((n_ue, n_site)) * np.where(
        los, los_p.sigma_shadow, nlos_p.sigma_shadow
    )
    indoor = stream(STREAM_INDOOR).random(n_ue) < cfg.indoor_fraction

    noise = NoiseSpec(cfg.noise.n0_dbm_hz, cfg.noise.noise_figure_db)
    beam_db = 10.0 * math.log10(cfg.beam.n_ant)
    interferer = Interferer(cfg.interferer.distance, cfg.interferer.power_dbm) if cfg.interferer else None
    neighbors = layout.neighbors()

    def extra_loss(frequency):
        loss = np.full((n_ue, n_site), cfg.implementation_loss_db)
        loss = loss + np.where(indoor, cfg.wall_loss_db, 0.0)[:, None]
        if cfg.obstacle is not None:
            ob = cfg.obstacle
            loss = loss + np.where(los, 0.0, knife_edge_loss(Obstacle(ob.height, ob.d1, ob.d2), frequency))
        return loss

    def budget(c: Band, serving=None):
        rain = 0.0
        if cfg.rain.rate_mm_h > 0:
            rain = los_p.rain_k * cfg.rain.rate_mm_h**los_p.rain_alpha
        return link_budgets(
            ue_xy, cfg.layout.ue_height, layout, c.frequency, c.bandwidth, los, shadow, los_p, nlos_p, noise,
            extra_loss_db=extra_loss(c.frequency), beam_gain_db=beam_db, narrow_beams=cfg.beam.narrow_beams,
            interferer=interferer, neighbors=neighbors, serving=serving, rain_db_per_km=rain,
        )

    # association on the lowest-frequency carrier, shared by all carriers
    anchor = min(range(len(carriers)), key=lambda i: carriers[i].frequency)
    budgets = [None] * len(carriers)
    budgets[anchor] = budget(carriers[anchor])
    serving = budgets[anchor]["serving"]
    for i, c in enumerate(carriers):
        if budgets[i] is None:
            budgets[i] = budget(c, serving)

    attached = np.bincount(serving, minlength=n_site)
    share = 1.0 / np.maximum(attached[serving], 1)

    n_cc = len(carriers)
    snr_db = np.empty((n_ue, n_cc))
    sinr_db = np.empty((n_ue, n_cc))
    fading = []
    for i, (c, b) in enumerate(zip(carriers, budgets)):
        if cfg.link_snr_db is not None:
            snr_db[:, i] = sinr_db[:, i] = cfg.link_snr_db
        else:
            snr_db[:, i] = b["snr_db"]
            sinr_db[:, i] = b["sinr_db"]
        nt, nr, _ = _carrier_mimo(cfg, c.role)
        if cfg.fading == "rayleigh":
            fading.append(complex_gaussian(stream(STREAM_FADING + i), (n_ue, nr, nt)))
        else:
            fading.append(np.broadcast_to(np.eye(nr, nt, dtype=complex), (n_ue, nr, nt)))

    bw = np.array([c.bandwidth for c in carriers])
    sinr_lin = db_to_linear(sinr_db)

    def carrier_rates(sinr):
        rates = np.empty((n_ue, n_cc))
        for i, c in enumerate(carriers):
            _, _, mode = _carrier_mimo(cfg, c.role)
            rates[:, i] = bw[i] * _efficiency(fading[i], sinr[:, i], mode, cfg.ue.max_layers)
        return rates

    rates = carrier_rates(sinr_lin)

    # UE caps first: keep the strongest carriers the UE can aggregate
    cap_cc, _ = apply_ue_caps(UeCapability(cfg.ue.max_ccs, cfg.ue.max_layers), n_cc, 1)
    rank = np.argsort(-rates, axis=1, kind="stable")
    selected = np.zeros((n_ue, n_cc), dtype=bool)
    np.put_along_axis(selected, rank[:, :cap_cc], True, axis=1)

    if cfg.ca_policy == "water-filling" and n_ue:
        # per-CC power is the unit; the selected carriers share cap_cc units
        gains = np.where(selected, sinr_lin, 0.0)
        powers = batch_waterfill_gains(gains, float(cap_cc))
        rates = carrier_rates(powers * sinr_lin)

    per_carrier = np.where(selected, rates, 0.0) * share[:, None]
    throughput = apply_overhead(per_carrier.sum(axis=1), cfg.overhead)

    th = cfg.coverage_thresholds
    best_sinr = sinr_db.max(axis=1) if n_cc else np.full(n_ue, -np.inf)
    covered = (best_sinr >= th.tau_db) & (throughput >= th.t_min_bps)

    rat_covered = {}
    for role in ("LTE", "NR"):
        mask = np.array([c.role == role for c in carriers])
        if not mask.any():
            rat_covered[role] = np.zeros(n_ue, dtype=bool)
            continue
        r_sinr = sinr_db[:, mask].max(axis=1)
        r_thr = apply_overhead(per_carrier[:, mask].sum(axis=1), cfg.overhead)
        rat_covered[role] = (r_sinr >= th.tau_db) & (r_thr >= th.t_min_bps)

    latency = None
    if cfg.latency_mode is not None:
        lm = cfg.latency_mode
        mode = AccessMode(lm.mode, lm.tx_rx_frequency, lm.ranges)
        latency = sample_latency_totals(stream(STREAM_LATENCY), mode, lm.samples_per_drop, lm.hop_distance)

    return DropResult(
        drop_index=drop_index,
        ue_xy=ue_xy,
        serving=serving,
        snr_db=snr_db.max(axis=1),
        sinr_db=best_sinr,
        throughput_bps=throughput,
        covered=covered,
        rat_covered=rat_covered,
        latency_ms=latency,
    )


def _drop_worker(args):
    cfg, drop_index = args
    return simulate_drop(cfg, drop_index)


def run_drops(cfg: ScenarioConfig, parallelism: int = 1) -> list:
    """All drops of a scenario, ordered by drop index."""
    if parallelism < 1:
        raise InvalidArgument("parallelism must be >= 1")
    scenario_carriers(cfg)  # reject bad refarm policies before any drop runs
    jobs = [(cfg, i) for i in range(cfg.drops)]
    if parallelism == 1 or cfg.drops == 1:
        layout = scenario_layout(cfg)
        return [simulate_drop(cfg, i, layout) for i in range(cfg.drops)]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        results = list(pool.map(_drop_worker, jobs, chunksize=max(1, cfg.drops // (4 * parallelism))))
    return sorted(results, key=lambda r: r.drop_index)


# --- report ------------------------------------------------------------------


@dataclass
class KpiReport:
    scenario_id: str
    coverage_pct: ConfidenceInterval
    median_throughput: Estimate
    p5_throughput: Estimate
    median_sinr: Estimate
    sinr_distribution: dict
    extra: dict = field(default_factory=dict)  # name -> (ConfidenceInterval, unit)
    latency_summary: Optional[dict] = None
    metadata: dict = field(default_factory=dict)
    drops: list = field(default_factory=list, repr=False)


def _ci_or_nan(samples) -> ConfidenceInterval:
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        return ConfidenceInterval(float(x.mean()), math.nan)
    return aggregate_ci(x)


def _percentile_estimates(clusters, qs, gen) -> list:
    pooled = np.concatenate(clusters)
    values = np.percentile(pooled, qs) if pooled.size else np.full(len(qs), math.nan)
    if len(clusters) >= 2 and pooled.size:
        bounds = bootstrap_ci(clusters, lambda x: np.percentile(x, qs), gen)
    else:
        bounds = np.full((2, len(qs)), math.nan)
    return [Estimate(float(values[k]), float(bounds[0, k]), float(bounds[1, k])) for k in range(len(qs))]


def summarize(cfg: ScenarioConfig, results: Sequence[DropResult]) -> KpiReport:
    th = cfg.coverage_thresholds
    per_drop_cov = [coverage_arrays(r.sinr_db, r.throughput_bps, th.tau_db, th.t_min_bps) for r in results]
    gen = RngStream(cfg.seed, 0, STREAM_BOOTSTRAP).generator()
    thr = [r.throughput_bps for r in results]
    p5, med = _percentile_estimates(thr, [5.0, 50.0], gen)
    (sinr_med,) = _percentile_estimates([r.sinr_db for r in results], [50.0], gen)

    all_sinr = np.concatenate([r.sinr_db for r in results])
    edges = np.array(SINR_HIST_EDGES)
    counts, _ = np.histogram(np.clip(all_sinr, edges[0], edges[-1]), bins=edges)

    extra = {}
    if cfg.deployment == "nsa-sa":
        nsa = [100.0 * np.mean(r.rat_covered["LTE"] | r.rat_covered["NR"]) for r in results]
        sa = [100.0 * np.mean(r.rat_covered["NR"]) for r in results]
        extra["coverage_nsa_pct"] = (_ci_or_nan(nsa), "percent")
        extra["coverage_sa_pct"] = (_ci_or_nan(sa), "percent")

    latency = None
    if cfg.latency_mode is not None:
        lat = [r.latency_ms for r in results]
        (lat_med,) = _percentile_estimates(lat, [50.0], gen)
        latency = {"mode": cfg.latency_mode.mode, "median_ms": lat_med, "mean_ms": _ci_or_nan(np.concatenate(lat))}

    meta = {
        "seed": cfg.seed,
        "config_digest": cfg.digest(),
        "version": __version__,
        "drops": cfg.drops,
        "ues_per_drop": int(results[0].throughput_bps.size) if results else 0,
        "processing_order": PROCESSING_ORDER,
        "boundary": "no wrap-around; edge cells see only in-area interferers",
    }
    return KpiReport(
        scenario_id=cfg.scenario_id,
        coverage_pct=_ci_or_nan(per_drop_cov),
        median_throughput=med,
        p5_throughput=p5,
        median_sinr=sinr_med,
        sinr_distribution={"edges_db": list(SINR_HIST_EDGES), "counts": [int(c) for c in counts]},
        extra=extra,
        latency_summary=latency,
        metadata=meta,
        drops=list(results),
    )


def run_scenario(cfg: ScenarioConfig, parallelism: int = 1) -> KpiReport:
    """Run every drop of ``cfg`` and aggregate KPIs with 95% intervals."""
    return summarize(cfg, run_drops(cfg, parallelism))


def per_drop_coverage(report: KpiReport, key: str = "combined") -> np.ndarray:
    """Per-drop coverage percentages: ``combined``, ``nsa`` or ``sa``."""
    out = []
    for r in report.drops:
        if key == "combined":
            out.append(100.0 * np.mean(r.covered))
        elif key == "nsa":
            out.append(100.0 * np.mean(r.rat_covered["LTE"] | r.rat_covered["NR"]))
        elif key == "sa":
            out.append(100.0 * np.mean(r.rat_covered["NR"]))
        else:
            raise InvalidArgument(f"unknown coverage key {key!r}")
    return np.array(out)


# --- equal-power vs water-filling ablation -----------------------------------


def wf_ablation_gains(
    seed: int,
    drops: int = 100,
    snr_range_db: tuple = (10.0, 20.0),
    min_spread_db: float = 3.0,
    n_carriers: tuple = (3, 4, 5),
    bandwidth: float = 20e6,
) -> np.ndarray:
    """Relative sum-rate gain of water-filling over equal power, one per drop.

    Each drop draws a carrier count and per-carrier SNRs (under the
    equal-power baseline) uniformly in dB, redrawing until the spread
    between the best and worst carrier reaches ``min_spread_db``.
    """
    n0 = 1e-20
    gains = np.empty(drops)
    for d in range(drops):
        gen = RngStream(seed, d, STREAM_ABLATION).generator()
        n = int(gen.choice(n_carriers))
        while True:
            snr_db = gen.uniform(*snr_range_db, n)
            if snr_db.max() - snr_db.min() >= min_spread_db:
                break
        # one watt per carrier under equal power, so g_i equals the per-CC SNR
        ccs = [ComponentCarrier(bandwidth, s * n0 * bandwidth, n0) for s in db_to_linear(snr_db)]
        p_total = float(n)
        eq = ca_throughput(ccs, equal_power(ccs, p_total))
        wf = ca_throughput(ccs, waterfill_carriers(ccs, p_total))
        gains[d] = wf / eq - 1.0
    return gains

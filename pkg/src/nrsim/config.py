"""Scenario configuration: schema, validation, presets and digests.

Configs are YAML (or JSON) mappings whose shape mirrors the dataclasses
below.  Unknown keys are rejected at every level and every error names the
dotted path of the offending field.  Numeric strings such as ``3.5e9``
(which YAML 1.1 loads as text) are accepted for numeric fields.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import yaml

from .channel import ENVIRONMENTS
from .errors import ConfigError
from .latency import COMPONENTS, DEFAULT_RANGES
from .mimo import MimoMode
from .network import TX_POWER_BOUNDS
from .propagation import PRESETS as PATHLOSS_PRESETS

SCENARIO_IDS = ("S1-sub6-mimo", "S2-ca-refarm", "S3-mmwave-28", "S4-nsa-sa")
CA_POLICIES = ("equal-power", "water-filling")
ROLES = ("LTE", "NR")
DEPLOYMENTS = ("single", "nsa-sa")
FADING = ("rayleigh", "none")


@dataclass(frozen=True)
class AreaConfig:
    width: float = 1000.0
    height: float = 1000.0


@dataclass(frozen=True)
class LayoutConfig:
    isd: float = 500.0
    area: AreaConfig = field(default_factory=AreaConfig)
    bs_height: float = 25.0
    ue_height: float = 1.5
    tx_power_dbm: float = 46.0
    cell_type: str = "macro"


@dataclass(frozen=True)
class Band:
    frequency: float  # Hz
    bandwidth: float  # Hz
    role: str = "NR"


@dataclass(frozen=True)
class MimoConfig:
    nt: int = 2
    nr: int = 2
    mode: str = "multiplexing-equal-power"


@dataclass(frozen=True)
class RefarmMove:
    band: float  # Hz, matches Band.frequency
    fraction_to_nr: float


@dataclass(frozen=True)
class RefarmPolicy:
    moves: tuple = ()
    guard_rail: bool = True


@dataclass(frozen=True)
class UeConfig:
    count_per_cell: int = 10
    max_ccs: int = 5
    max_layers: int = 4


@dataclass(frozen=True)
class CoverageThresholds:
    tau_db: float = 0.0
    t_min_bps: float = 10e6


@dataclass(frozen=True)
class NoiseConfig:
    n0_dbm_hz: float = -174.0
    noise_figure_db: float = 7.0


@dataclass(frozen=True)
class PathLossSet:
    exponent: float
    sigma_db: float


@dataclass(frozen=True)
class PathLossConfig:
    preset: Optional[str] = None
    los: Optional[PathLossSet] = None
    nlos: Optional[PathLossSet] = None


@dataclass(frozen=True)
class RainConfig:
    rate_mm_h: float = 0.0
    k: Optional[float] = None
    alpha: Optional[float] = None


@dataclass(frozen=True)
class ObstacleConfig:
    height: float
    d1: float
    d2: float


@dataclass(frozen=True)
class BeamConfig:
    n_ant: int = 1
    narrow_beams: bool = True


@dataclass(frozen=True)
class InterfererConfig:
    distance: float = 50.0
    power_dbm: float = 23.0


@dataclass(frozen=True)
class LatencyConfig:
    mode: str = "d2d"
    tx_rx_frequency: float = 1000.0
    samples_per_drop: int = 100
    hop_distance: Optional[float] = None
    ranges: Optional[dict] = None


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    drops: int = 100
    seed: int = 1
    environment: str = "UMa"
    pathloss: PathLossConfig = field(default_factory=lambda: PathLossConfig(preset="uma-sub6"))
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    bands: tuple = ()
    mimo: MimoConfig = field(default_factory=MimoConfig)
    lte_mimo: MimoConfig = field(default_factory=MimoConfig)
    ca_policy: str = "equal-power"
    refarm_policy: Optional[RefarmPolicy] = None
    ue: UeConfig = field(default_factory=UeConfig)
    overhead: float = 0.1
    coverage_thresholds: CoverageThresholds = field(default_factory=CoverageThresholds)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    fading: str = "rayleigh"
    link_snr_db: Optional[float] = None
    implementation_loss_db: float = 0.0
    beam: BeamConfig = field(default_factory=BeamConfig)
    rain: RainConfig = field(default_factory=RainConfig)
    obstacle: Optional[ObstacleConfig] = None
    indoor_fraction: float = 0.0
    wall_loss_db: float = 20.0
    interferer: Optional[InterfererConfig] = None
    deployment: str = "single"
    latency_mode: Optional[LatencyConfig] = None

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        return to_plain(self)

    def digest(self) -> str:
        return config_digest(self)

    def with_overrides(self, overrides: dict) -> "ScenarioConfig":
        """Return a copy with dotted-path overrides applied (``{"ue.count_per_cell": 5}``)."""
        data = self.to_dict()
        for key, value in overrides.items():
            set_path(data, key, value)
        return from_dict(data)

    def pathloss_params(self):
        """Resolved ``(los, nlos)`` :class:`PathLossParams` pair."""
        from .propagation import PathLossParams

        pl = self.pathloss
        base_los, base_nlos = PATHLOSS_PRESETS[pl.preset] if pl.preset else (None, None)

        def build(base, override):
            exponent = override.exponent if override else base.exponent
            sigma = override.sigma_db if override else base.sigma_shadow
            k = self.rain.k if self.rain.k is not None else (base.rain_k if base else 0.0)
            alpha = self.rain.alpha if self.rain.alpha is not None else (base.rain_alpha if base else 0.9)
            return PathLossParams(exponent, sigma, 1.0, k, alpha, self.wall_loss_db)

        return build(base_los, pl.los), build(base_nlos, pl.nlos)


# --- generic (de)serialization -------------------------------------------------


def to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    return obj


def _coerce(tp, value, path: str):
    origin = typing.get_origin(tp)
    if origin is Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(args[0], value, path)
    if value is None:
        raise ConfigError(path, "value is required")
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if tp is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(path, f"expected true/false, got {value!r}")
    if tp is int:
        if isinstance(value, bool):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value, 0)
            except ValueError:
                pass
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if tp is float:
        if isinstance(value, bool):
            raise ConfigError(path, f"expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(path, f"expected a number, got {value!r}") from None
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if tp is dict:
        if not isinstance(value, dict):
            raise ConfigError(path, "expected a mapping")
        return value
    raise ConfigError(path, f"unsupported field type {tp}")


# element types of tuple-valued fields
_SEQUENCE_ITEMS = {("ScenarioConfig", "bands"): Band, ("RefarmPolicy", "moves"): RefarmMove}


def _build(cls, data, path: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", f"expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{path}.{key}" if path else str(key), "unknown key")
    kwargs = {}
    for f in dataclasses.fields(cls):
        sub = f"{path}.{f.name}" if path else f.name
        if f.name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigError(sub, "missing required field")
            continue
        item = _SEQUENCE_ITEMS.get((cls.__name__, f.name))
        if item is not None:
            seq = data[f.name]
            if not isinstance(seq, (list, tuple)):
                raise ConfigError(sub, "expected a list")
            kwargs[f.name] = tuple(_build(item, v, f"{sub}[{i}]") for i, v in enumerate(seq))
        else:
            kwargs[f.name] = _coerce(hints[f.name], data[f.name], sub)
    return cls(**kwargs)


def from_dict(data) -> ScenarioConfig:
    if data is None or data == {}:
        raise ConfigError("<root>", "empty configuration")
    return _build(ScenarioConfig, data)


def set_path(data: dict, dotted: str, value):
    keys = dotted.split(".")
    cur = data
    for k in keys[:-1]:
        if not isinstance(cur, dict) or k not in cur:
            raise ConfigError(dotted, "invalid override key")
        if cur[k] is None:
            cur[k] = {}
        cur = cur[k]
    if not isinstance(cur, dict) or keys[-1] not in cur:
        raise ConfigError(dotted, "invalid override key")
    cur[keys[-1]] = value


def parse_override(text: str):
    """Split ``key=value``; the value is parsed as YAML (numbers, booleans, null, lists)."""
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw) if raw.strip() else None


def canonical_json(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_digest(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def parse_config(path) -> ScenarioConfig:
    """Load and validate a YAML or JSON scenario file."""
    p = Path(path)
    text = p.read_text()  # missing file -> OSError
    try:
        data = yaml.safe_load(text) if text.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"not valid YAML/JSON: {exc}") from None
    return from_dict(data)


# --- validation --------------------------------------------------------------


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def validate(cfg: ScenarioConfig):
    _require(cfg.scenario_id in SCENARIO_IDS, "scenario_id", f"must be one of {SCENARIO_IDS}")
    _require(cfg.drops >= 1, "drops", "must be >= 1")
    _require(0 <= cfg.seed < 2**64, "seed", "must be a 64-bit unsigned integer")
    _require(cfg.environment in ENVIRONMENTS, "environment", f"must be one of {ENVIRONMENTS}")

    pl = cfg.pathloss
    if pl.preset is not None:
        _require(pl.preset in PATHLOSS_PRESETS, "pathloss.preset", f"must be one of {tuple(PATHLOSS_PRESETS)}")
    else:
        _require(pl.los is not None and pl.nlos is not None, "pathloss", "needs a preset or both los and nlos")
    for name in ("los", "nlos"):
        s = getattr(pl, name)
        if s is not None:
            _require(_finite(s.exponent) and s.exponent > 0, f"pathloss.{name}.exponent", "must be positive")
            _require(_finite(s.sigma_db) and s.sigma_db >= 0, f"pathloss.{name}.sigma_db", "must be >= 0")

    lay = cfg.layout
    _require(_finite(lay.isd) and lay.isd > 0, "layout.isd", "must be positive")
    _require(_finite(lay.area.width) and lay.area.width > 0, "layout.area.width", "must be positive")
    _require(_finite(lay.area.height) and lay.area.height > 0, "layout.area.height", "must be positive")
    _require(_finite(lay.bs_height) and lay.bs_height > 0, "layout.bs_height", "must be positive")
    _require(_finite(lay.ue_height) and lay.ue_height > 0, "layout.ue_height", "must be positive")
    _require(lay.cell_type in TX_POWER_BOUNDS, "layout.cell_type", f"must be one of {tuple(TX_POWER_BOUNDS)}")
    lo, hi = TX_POWER_BOUNDS[lay.cell_type]
    _require(
        _finite(lay.tx_power_dbm) and lo <= lay.tx_power_dbm <= hi,
        "layout.tx_power_dbm",
        f"{lay.tx_power_dbm} dBm outside the {lay.cell_type} range [{lo}, {hi}] dBm",
    )

    _require(len(cfg.bands) >= 1, "bands", "at least one band is required")
    for i, b in enumerate(cfg.bands):
        _require(_finite(b.frequency) and b.frequency > 0, f"bands[{i}].frequency", "must be positive (Hz)")
        _require(_finite(b.bandwidth) and 0 < b.bandwidth <= 400e6, f"bands[{i}].bandwidth", "must be in (0, 400 MHz]")
        _require(b.role in ROLES, f"bands[{i}].role", f"must be one of {ROLES}")
    freqs = [b.frequency for b in cfg.bands]
    _require(len(set(freqs)) == len(freqs), "bands", "duplicate band frequency")

    for name in ("mimo", "lte_mimo"):
        m = getattr(cfg, name)
        _require(1 <= m.nt <= 64, f"{name}.nt", "must be in [1, 64]")
        _require(1 <= m.nr <= 64, f"{name}.nr", "must be in [1, 64]")
        try:
            MimoMode(m.mode)
        except ValueError:
            raise ConfigError(f"{name}.mode", f"must be one of {[x.value for x in MimoMode]}") from None

    _require(cfg.ca_policy in CA_POLICIES, "ca_policy", f"must be one of {CA_POLICIES}")
    if cfg.refarm_policy is not None:
        for i, mv in enumerate(cfg.refarm_policy.moves):
            p = f"refarm_policy.moves[{i}]"
            _require(0.0 <= mv.fraction_to_nr <= 1.0, f"{p}.fraction_to_nr", "must be in [0, 1]")
            _require(mv.band in freqs, f"{p}.band", f"no configured band at {mv.band} Hz")

    _require(cfg.ue.count_per_cell >= 0, "ue.count_per_cell", "must be >= 0")
    _require(cfg.ue.max_ccs >= 1, "ue.max_ccs", "must be >= 1")
    _require(cfg.ue.max_layers >= 1, "ue.max_layers", "must be >= 1")
    _require(_finite(cfg.overhead) and 0.0 <= cfg.overhead <= 0.3, "overhead", "must be in [0, 0.3]")
    th = cfg.coverage_thresholds
    _require(_finite(th.tau_db), "coverage_thresholds.tau_db", "must be finite")
    _require(_finite(th.t_min_bps) and th.t_min_bps >= 0, "coverage_thresholds.t_min_bps", "must be finite and >= 0")
    _require(_finite(cfg.noise.n0_dbm_hz), "noise.n0_dbm_hz", "must be finite")
    _require(0.0 <= cfg.noise.noise_figure_db <= 20.0, "noise.noise_figure_db", "must be in [0, 20] dB")
    _require(cfg.fading in FADING, "fading", f"must be one of {FADING}")
    if cfg.link_snr_db is not None:
        _require(_finite(cfg.link_snr_db), "link_snr_db", "must be finite")
    _require(_finite(cfg.implementation_loss_db) and cfg.implementation_loss_db >= 0, "implementation_loss_db", "must be >= 0")
    _require(cfg.beam.n_ant >= 1, "beam.n_ant", "must be >= 1")
    _require(_finite(cfg.rain.rate_mm_h) and cfg.rain.rate_mm_h >= 0, "rain.rate_mm_h", "must be >= 0")
    if cfg.rain.k is not None:
        _require(cfg.rain.k >= 0, "rain.k", "must be >= 0")
    if cfg.rain.alpha is not None:
        _require(cfg.rain.alpha >= 0, "rain.alpha", "must be >= 0")
    if cfg.obstacle is not None:
        _require(cfg.obstacle.d1 > 0, "obstacle.d1", "must be positive")
        _require(cfg.obstacle.d2 > 0, "obstacle.d2", "must be positive")
    _require(0.0 <= cfg.indoor_fraction <= 1.0, "indoor_fraction", "must be in [0, 1]")
    _require(cfg.wall_loss_db >= 0, "wall_loss_db", "must be >= 0")
    if cfg.interferer is not None:
        _require(cfg.interferer.distance > 0, "interferer.distance", "must be positive")
    _require(cfg.deployment in DEPLOYMENTS, "deployment", f"must be one of {DEPLOYMENTS}")
    if cfg.latency_mode is not None:
        lm = cfg.latency_mode
        _require(lm.mode in DEFAULT_RANGES, "latency_mode.mode", f"must be one of {tuple(DEFAULT_RANGES)}")
        _require(lm.tx_rx_frequency > 0, "latency_mode.tx_rx_frequency", "must be positive")
        _require(lm.samples_per_drop >= 1, "latency_mode.samples_per_drop", "must be >= 1")
        if lm.hop_distance is not None:
            _require(lm.hop_distance >= 0, "latency_mode.hop_distance", "must be >= 0")
        for name, rng in (lm.ranges or {}).items():
            p = f"latency_mode.ranges.{name}"
            _require(name in COMPONENTS, p, f"unknown component; expected one of {COMPONENTS}")
            ok = isinstance(rng, (list, tuple)) and len(rng) == 2 and all(_finite(v) for v in rng)
            _require(ok and 0 <= rng[0] <= rng[1], p, "must be [min, max] with 0 <= min <= max")


# --- presets -----------------------------------------------------------------


def preset_text(scenario_id: str) -> str:
    if scenario_id not in SCENARIO_IDS:
        raise ConfigError("scenario_id", f"unknown preset {scenario_id!r}; expected one of {SCENARIO_IDS}")
    return resources.files("nrsim").joinpath("presets", f"{scenario_id}.yaml").read_text()


def load_preset(scenario_id: str) -> ScenarioConfig:
    return from_dict(yaml.safe_load(preset_text(scenario_id)))


def preset_ids() -> tuple:
    return SCENARIO_IDS


# Rural (UMa macro) counterpart of an urban scenario, with the rural
# throughput threshold of 2 Mbps.
RURAL_OVERRIDES = {
    "environment": "UMa",
    "pathloss": {"preset": "uma-sub6", "los": None, "nlos": None},
    "layout.isd": 500.0,
    "layout.area": {"width": 2000.0, "height": 2000.0},
    "layout.bs_height": 25.0,
    "layout.tx_power_dbm": 46.0,
    "layout.cell_type": "macro",
    "ue.count_per_cell": 10,
    "coverage_thresholds.t_min_bps": 2e6,
}


def zone_variant(cfg: ScenarioConfig, zone: str) -> ScenarioConfig:
    if zone == "urban":
        return cfg
    if zone == "rural":
        return cfg.with_overrides(RURAL_OVERRIDES)
    raise ConfigError("zone", f"unknown zone {zone!r}; expected urban or rural")

"""Configuration schema with strict JSON loading.

Defaults follow the simulation's standard parameter set: 2 GHz carrier,
50 RBs of 180 kHz, 6 dBm VUE transmit power, 30 km/h vehicles, Poisson
safety traffic (0.02 pkt/ms, exp. 6400-bit packets) and periodic
autonomous traffic (12800 bits every 10 ms).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

SLICES = ("safety", "autonomous")

TTI_MS = 1.0  # one scheduling time unit


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration."""


@dataclass
class GridConfig:
    blocks_x: int = 3
    blocks_y: int = 3
    block_w: float = 250.0
    block_h: float = 433.0
    lane_offset: float = 5.0

    def validate(self):
        if self.blocks_x < 1 or self.blocks_y < 1:
            raise ConfigError("grid: blocks_x and blocks_y must be >= 1")
        if self.block_w <= 0 or self.block_h <= 0:
            raise ConfigError("grid: block_w and block_h must be > 0")
        if self.lane_offset < 0:
            raise ConfigError("grid: lane_offset must be >= 0")

    @property
    def width(self) -> float:
        return self.blocks_x * self.block_w

    @property
    def height(self) -> float:
        return self.blocks_y * self.block_h


@dataclass
class FleetConfig:
    pairs_safety: int = 20
    pairs_autonomous: int = 20
    speed_kmh: float = 30.0
    pair_gap_m: float = 40.0

    def validate(self):
        if self.pairs_safety + self.pairs_autonomous < 1:
            raise ConfigError("fleet: at least one VUE pair is required")
        if self.pairs_safety < 0 or self.pairs_autonomous < 0:
            raise ConfigError("fleet: pair counts must be >= 0")
        if self.speed_kmh <= 0:
            raise ConfigError("fleet: speed_kmh must be > 0")
        if self.pair_gap_m <= 0:
            raise ConfigError("fleet: pair_gap_m must be > 0")

    @property
    def speed_mps(self) -> float:
        return self.speed_kmh / 3.6

    def pairs(self, slice_id: str) -> int:
        return self.pairs_safety if slice_id == "safety" else self.pairs_autonomous


@dataclass
class ChannelConfig:
    carrier_ghz: float = 2.0
    rb_bandwidth_hz: float = 180e3
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    tx_power_dbm: float = 6.0
    bler_midpoint_db: float = 5.0
    bler_slope_per_db: float = 1.0
    spectral_eff_factor: float = 0.75
    max_spectral_eff: float = 4.8
    sinr_floor_db: float = -40.0

    def validate(self):
        if self.rb_bandwidth_hz <= 0:
            raise ConfigError("channel: rb_bandwidth_hz must be > 0")
        if not (0 < self.spectral_eff_factor <= 1):
            raise ConfigError("channel: spectral_eff_factor must be in (0, 1]")
        if self.max_spectral_eff <= 0:
            raise ConfigError("channel: max_spectral_eff must be > 0")


@dataclass
class SliceTrafficConfig:
    model: str = "poisson"  # "poisson" or "periodic"
    arrival_rate_per_tti: float = 0.02
    mean_size_bits: float = 6400.0
    period_ttis: int = 10
    size_bits: int = 12800
    latency_bound_ttis: int = 100
    reliability_target: float = 0.99

    def validate(self, name: str):
        if self.model not in ("poisson", "periodic"):
            raise ConfigError(f"traffic.{name}: unknown model {self.model!r}")
        if self.latency_bound_ttis < 1:
            raise ConfigError(f"traffic.{name}: latency_bound_ttis must be >= 1")
        if not (0 < self.reliability_target < 1):
            raise ConfigError(f"traffic.{name}: reliability_target must be in (0, 1)")
        if self.model == "poisson" and self.arrival_rate_per_tti < 0:
            raise ConfigError(f"traffic.{name}: arrival_rate_per_tti must be >= 0")
        if self.model == "periodic" and self.period_ttis < 1:
            raise ConfigError(f"traffic.{name}: period_ttis must be >= 1")


@dataclass
class TrafficConfig:
    safety: SliceTrafficConfig = field(default_factory=SliceTrafficConfig)
    autonomous: SliceTrafficConfig = field(
        default_factory=lambda: SliceTrafficConfig(
            model="periodic",
            period_ttis=10,
            size_bits=12800,
            latency_bound_ttis=10,
            reliability_target=0.99999,
        )
    )

    def validate(self):
        self.safety.validate("safety")
        self.autonomous.validate("autonomous")

    def for_slice(self, slice_id: str) -> SliceTrafficConfig:
        return getattr(self, slice_id)


@dataclass
class SlicingConfig:
    total_rbs: int = 50
    rb_granularity: int = 5
    min_rbs_per_slice: int = 5

    def validate(self):
        if self.total_rbs < 2 * self.min_rbs_per_slice:
            raise ConfigError("slicing: total_rbs too small for minimum allocations")
        if self.total_rbs % self.rb_granularity != 0:
            raise ConfigError("slicing: total_rbs must be a multiple of rb_granularity")

    @property
    def n_partitions(self) -> int:
        return self.total_rbs // self.rb_granularity - 1


@dataclass
class RevenueConfig:
    w_safety: float = 1.0
    w_autonomous: float = 2.0
    alpha: float = 0.5
    beta: float = 0.5
    cost_per_rb_fraction: float = 0.2

    def validate(self):
        for name in ("w_safety", "w_autonomous", "alpha", "beta", "cost_per_rb_fraction"):
            if getattr(self, name) < 0:
                raise ConfigError(f"revenue: {name} must be >= 0")
        if abs(self.alpha + self.beta - 1.0) > 1e-12:
            raise ConfigError("revenue: alpha + beta must equal 1")

    def weight(self, slice_id: str) -> float:
        return self.w_safety if slice_id == "safety" else self.w_autonomous


@dataclass
class ObservationConfig:
    density_cells_x: int = 3
    density_cells_y: int = 3

    def validate(self):
        if self.density_cells_x < 1 or self.density_cells_y < 1:
            raise ConfigError("observation: density cells must be >= 1")


@dataclass
class AgentConfig:
    discount: float = 0.9
    lr: float = 1e-3
    batch_windows: int = 16
    window_len: int = 8
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_cycles: int = 2000
    target_sync_every: int = 100
    warmup_transitions: int = 500
    replay_capacity: int = 10000
    lstm_units: int = 128
    hidden_units: int = 24

    def validate(self):
        if not (0 <= self.discount < 1):
            raise ConfigError("agent: discount must be in [0, 1)")
        for name in ("eps_start", "eps_end"):
            if not (0 <= getattr(self, name) <= 1):
                raise ConfigError(f"agent: {name} must be in [0, 1]")
        if self.window_len < 1 or self.batch_windows < 1:
            raise ConfigError("agent: window_len and batch_windows must be >= 1")


@dataclass
class EpisodeConfig:
    ttis_per_cycle: int = 100
    cycles_per_episode: int = 500
    train_episodes: int = 40
    eval_cycles: int = 50
    train_steps_per_cycle: int = 4

    def validate(self):
        if self.ttis_per_cycle < 1:
            raise ConfigError("episode: ttis_per_cycle must be >= 1")
        if self.cycles_per_episode < 1:
            raise ConfigError("episode: cycles_per_episode must be >= 1")
        if self.train_steps_per_cycle < 1:
            raise ConfigError("episode: train_steps_per_cycle must be >= 1")


@dataclass
class EngineConfig:
    pathloss_refresh_ttis: int = 10

    def validate(self):
        if self.pathloss_refresh_ttis < 1:
            raise ConfigError("engine: pathloss_refresh_ttis must be >= 1")


@dataclass
class MetricsConfig:
    bler_bins: int = 20
    bler_min: float = 0.0
    bler_max: float = 0.5
    latency_bins: int = 20
    latency_min: float = 0.0
    latency_max: float = 100.0

    def validate(self):
        if self.bler_bins < 1 or self.latency_bins < 1:
            raise ConfigError("metrics: bin counts must be >= 1")
        if self.bler_max <= self.bler_min or self.latency_max <= self.latency_min:
            raise ConfigError("metrics: bin ranges must be increasing")


@dataclass
class BaselineConfig:
    urgency_exponent: float = 0.1

    def validate(self):
        if self.urgency_exponent < 0:
            raise ConfigError("baseline: urgency_exponent must be >= 0")


@dataclass
class SimConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    fleet: FleetConfig = field(default_factory=FleetConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    slicing: SlicingConfig = field(default_factory=SlicingConfig)
    revenue: RevenueConfig = field(default_factory=RevenueConfig)
    observation: ObservationConfig = field(default_factory=ObservationConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)

    def validate(self):
        self.grid.validate()
        self.fleet.validate()
        self.channel.validate()
        self.traffic.validate()
        self.slicing.validate()
        self.revenue.validate()
        self.observation.validate()
        self.agent.validate()
        self.episode.validate()
        self.engine.validate()
        self.metrics.validate()
        self.baseline.validate()

    def to_dict(self) -> dict:
        return asdict(self)


def _merge(dc, data: dict, path: str):
    """Overlay a plain dict onto a dataclass instance, rejecting unknown keys."""
    known = {f.name: f for f in fields(dc)}
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(f"unknown configuration key: {where!r}")
        current = getattr(dc, key)
        if is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r}: expected an object")
            _merge(current, value, where)
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                raise ConfigError(f"{where!r}: expected a number or string")
            expected = type(current)
            if expected is int:
                if isinstance(value, float) and not value.is_integer():
                    raise ConfigError(f"{where!r}: expected an integer")
                if isinstance(value, str):
                    raise ConfigError(f"{where!r}: expected an integer")
                value = int(value)
            elif expected is float:
                if isinstance(value, str):
                    raise ConfigError(f"{where!r}: expected a number")
                value = float(value)
            elif expected is str and not isinstance(value, str):
                raise ConfigError(f"{where!r}: expected a string")
            setattr(dc, key, value)


def config_from_dict(data: dict) -> SimConfig:
    if not isinstance(data, dict):
        raise ConfigError("top-level configuration must be a JSON object")
    cfg = SimConfig()
    _merge(cfg, data, "")
    cfg.validate()
    return cfg


def parse_config(path: str | Path) -> SimConfig:
    """Load and validate a JSON config file; missing keys take defaults."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from exc
    return config_from_dict(data)


def write_resolved(cfg: SimConfig, out_dir: str | Path, seed: int):
    """Echo the fully resolved config (plus seed) into a run directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"seed": int(seed), **cfg.to_dict()}
    (out / "config.resolved.json").write_text(json.dumps(payload, indent=2) + "\n")

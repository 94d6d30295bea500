"""Two-timescale simulation loop.

Per TTI (1 ms): packet arrivals, deadline drops, per-slice scheduling,
transmissions, mobility step. Per 100-TTI cycle: snapshot aggregation,
controller action, revenue. On top of that, training and evaluation
runs with full determinism: all randomness flows from four named streams
(mobility, traffic, fading, agent) derived from the run seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import channel, metrics, mobility, neuralnet as nn, traffic
from .agent import ActionSpace, Agent, epsilon_at
from .baseline import SlicingDecision, demand_based_partition
from .config import SLICES, ConfigError, SimConfig, write_resolved
from .metrics import PacketRecord, fmt
from .observation import Snapshot, aggregate_cycle, feature_length, zero_snapshot
from .revenue import compute_revenue
from .scheduler import SchedulerKind, SlicePartition, schedule, transmit
from .stats import CycleStats

_STREAM_MOBILITY, _STREAM_TRAFFIC, _STREAM_FADING, _STREAM_AGENT = range(4)

DEFAULT_DECISION = SlicingDecision(
    SlicePartition(25, 25), SchedulerKind.ROUND_ROBIN, SchedulerKind.ROUND_ROBIN)


def stream_rng(seed: int, stream: int, episode: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream, int(episode)])


@dataclass
class Link:
    id: int
    slice_id: str
    tx_idx: int
    rx_idx: int
    phase: int
    queue: traffic.LinkQueue
    attempts: int = 0
    failures: int = 0
    pathloss_db: float = 0.0
    sinr_est_db: float = 0.0
    pl_tti: int = -(10 ** 9)


class Engine:
    """One deterministic simulation world (one episode's worth of state)."""

    def __init__(self, config: SimConfig, seed: int, episode: int = 0,
                 record_packets: bool = False):
        config.validate()
        self.config = config
        self.rng_mob = stream_rng(seed, _STREAM_MOBILITY, episode)
        self.rng_traffic = stream_rng(seed, _STREAM_TRAFFIC, episode)
        self.rng_fading = stream_rng(seed, _STREAM_FADING, episode)
        self.grid, self.fleet = mobility.build_grid(config.grid, config.fleet,
                                                    self.rng_mob)
        self.factory = traffic.PacketFactory()
        self.links: list[Link] = []
        self.slice_links: dict[str, list[Link]] = {s: [] for s in SLICES}
        link_id = 0
        for slice_id in SLICES:
            n_pairs = config.fleet.pairs(slice_id)
            period = config.traffic.for_slice(slice_id).period_ttis
            for k in range(n_pairs):
                pair_global = len(self.links)
                link = Link(
                    id=link_id,
                    slice_id=slice_id,
                    tx_idx=2 * pair_global,
                    rx_idx=2 * pair_global + 1,
                    phase=k % max(period, 1),
                    queue=traffic.LinkQueue(link_id),
                )
                self.links.append(link)
                self.slice_links[slice_id].append(link)
                link_id += 1
        self.rr_state = {s: 0 for s in SLICES}
        self.tti = 0
        self.record_packets = record_packets
        self.records: list[PacketRecord] = []
        self._noise_1rb = channel.noise_dbm(config.channel, 1)
        self._positions = None
        self._positions_tti = -1

    # -- helpers -----------------------------------------------------------

    def _positions_now(self) -> np.ndarray:
        if self._positions_tti != self.tti:
            self._positions = self.fleet.positions()
            self._positions_tti = self.tti
        return self._positions

    def _refresh_link(self, link: Link):
        if self.tti - link.pl_tti < self.config.engine.pathloss_refresh_ttis:
            return
        pos = self._positions_now()
        is_los, d1, d2 = mobility.link_geometry(
            tuple(pos[link.tx_idx]), tuple(pos[link.rx_idx]), self.grid)
        link.pathloss_db = channel.pathloss_db(is_los, d1, d2,
                                               self.config.channel.carrier_ghz)
        link.sinr_est_db = max(
            self.config.channel.tx_power_dbm - link.pathloss_db - self._noise_1rb,
            self.config.channel.sinr_floor_db)
        link.pl_tti = self.tti

    def apply_decision(self, decision: SlicingDecision):
        decision.partition.validate(self.config.slicing.total_rbs,
                                    self.config.slicing.min_rbs_per_slice,
                                    self.config.slicing.rb_granularity)
        self.decision = decision
        self.rr_state = {s: 0 for s in SLICES}

    # -- core loop ---------------------------------------------------------

    def run_tti(self, stats: CycleStats):
        cfg = self.config
        tti = self.tti
        # 1. arrivals
        for slice_id in SLICES:
            t_cfg = cfg.traffic.for_slice(slice_id)
            links = self.slice_links[slice_id]
            if not links:
                continue
            s = stats[slice_id]
            if t_cfg.model == "poisson":
                counts = self.rng_traffic.poisson(t_cfg.arrival_rate_per_tti,
                                                  len(links))
                for k in np.flatnonzero(counts):
                    link = links[k]
                    for _ in range(int(counts[k])):
                        size = max(1, int(np.ceil(
                            self.rng_traffic.exponential(t_cfg.mean_size_bits))))
                        pkt = self.factory.make(link.id, size, tti,
                                                t_cfg.latency_bound_ttis)
                        link.queue.push(pkt)
                        s.arrived += 1
                        s.bits_arrived += size
            else:
                ph = tti % t_cfg.period_ttis
                for link in links:
                    if link.phase == ph:
                        pkt = self.factory.make(link.id, t_cfg.size_bits, tti,
                                                t_cfg.latency_bound_ttis)
                        link.queue.push(pkt)
                        s.arrived += 1
                        s.bits_arrived += t_cfg.size_bits
        # 2. deadline drops
        for link in self.links:
            if link.queue.packets:
                dropped = link.queue.drop_expired(tti)
                if dropped:
                    s = stats[link.slice_id]
                    s.dropped += len(dropped)
                    if self.record_packets:
                        for pkt in dropped:
                            self.records.append(PacketRecord(
                                link.id, link.slice_id, pkt.arrival_tti,
                                "dropped", None, pkt.size_bits))
        # 3. schedule + 4. transmit, per slice
        for slice_id in SLICES:
            links = self.slice_links[slice_id]
            if not links:
                continue
            backlogged = [ln for ln in links if ln.queue.backlog_bits() > 0]
            if not backlogged:
                continue
            for link in backlogged:
                self._refresh_link(link)
            entries = [(ln.id, ln.queue.backlog_bits(), ln.sinr_est_db)
                       for ln in links]
            grant, self.rr_state[slice_id] = schedule(
                self.decision.scheduler(slice_id), entries,
                self.decision.partition.rbs(slice_id),
                self.rr_state[slice_id], cfg.channel)
            s = stats[slice_id]
            by_id = {ln.id: ln for ln in links}
            for link_id in sorted(grant):
                link = by_id[link_id]
                outcome = transmit(link_id, grant[link_id], link.pathloss_db,
                                   cfg.channel, self.rng_fading, link.queue, tti)
                link.attempts += 1
                s.attempts += 1
                stats.rbs_used_total += grant[link_id]
                if outcome.failed:
                    link.failures += 1
                    s.failures += 1
                else:
                    for pkt in outcome.delivered:
                        lat = traffic.packet_latency_ms(pkt, tti)
                        s.delivered += 1
                        s.latency_sum_ms += lat
                        if self.record_packets:
                            self.records.append(PacketRecord(
                                link.id, link.slice_id, pkt.arrival_tti,
                                "delivered", lat, pkt.size_bits))
        # 5. mobility
        self.fleet.step(1e-3, self.rng_mob)
        self.tti += 1

    def run_cycle(self, decision: SlicingDecision
                  ) -> tuple[CycleStats, Snapshot, float]:
        self.apply_decision(decision)
        stats = CycleStats()
        stats.n_ttis = self.config.episode.ttis_per_cycle
        for _ in range(self.config.episode.ttis_per_cycle):
            self.run_tti(stats)
        for slice_id in SLICES:
            s = stats[slice_id]
            for link in self.slice_links[slice_id]:
                s.backlog_bits_end += link.queue.backlog_bits()
                s.in_queue_end += link.queue.in_queue()
        density = mobility.density_snapshot(
            self._positions_now(), self.grid,
            self.config.observation.density_cells_x,
            self.config.observation.density_cells_y)
        snapshot = aggregate_cycle(stats, density, decision.partition,
                                   self.config)
        rev = compute_revenue(stats, self.config)
        return stats, snapshot, rev

    def audit_counters(self):
        """arrived = delivered + dropped + in-queue, for every link."""
        for link in self.links:
            q = link.queue
            if q.arrived != q.delivered + q.dropped + len(q.packets):
                raise AssertionError(
                    f"counter audit failed for link {link.id}: "
                    f"{q.arrived} != {q.delivered}+{q.dropped}+{len(q.packets)}")


# -- controllers -----------------------------------------------------------


class BaselineController:
    def __init__(self, config: SimConfig):
        self.config = config
        self.prev_stats: CycleStats | None = None

    def decide(self, snapshot: Snapshot) -> SlicingDecision:
        n_vehicles = 2 * (self.config.fleet.pairs_safety
                          + self.config.fleet.pairs_autonomous)
        if self.prev_stats is None:
            offered = {s: 0.0 for s in SLICES}
        else:
            offered = {s: float(self.prev_stats[s].bits_arrived) for s in SLICES}
        return demand_based_partition(n_vehicles, offered, self.config)

    def observe(self, stats: CycleStats):
        self.prev_stats = stats


class FixedController:
    def __init__(self, config: SimConfig, action_index: int):
        self.decision = ActionSpace.from_config(config.slicing) \
            .encode_action(action_index)

    def decide(self, snapshot: Snapshot) -> SlicingDecision:
        return self.decision

    def observe(self, stats: CycleStats):
        pass


class DrlController:
    """Greedy (eps = 0) policy from a trained checkpoint."""

    def __init__(self, config: SimConfig, checkpoint: str | Path, seed: int):
        spec, params, meta = nn.load_checkpoint(checkpoint)
        expected = feature_length(config)
        if spec.input_dim != expected:
            raise ConfigError(
                f"checkpoint input_dim {spec.input_dim} does not match the "
                f"configured observation length {expected}")
        self.space = ActionSpace.from_config(config.slicing)
        if spec.output_dim != self.space.n_actions:
            raise ConfigError("checkpoint output_dim does not match the action space")
        self.agent = Agent(spec, config.agent, self.space,
                           stream_rng(seed, _STREAM_AGENT), params=params)
        self.rng = stream_rng(seed, _STREAM_AGENT)

    def decide(self, snapshot: Snapshot) -> SlicingDecision:
        idx = self.agent.act(snapshot.vector(), 0.0, self.rng)
        return self.space.encode_action(idx)

    def observe(self, stats: CycleStats):
        pass


def make_controller(config: SimConfig, kind: str, seed: int,
                    checkpoint: str | Path | None = None,
                    action_index: int | None = None):
    if kind == "baseline":
        return BaselineController(config)
    if kind == "fixed":
        if action_index is None:
            raise ConfigError("fixed controller requires an action index")
        return FixedController(config, action_index)
    if kind == "drl":
        if checkpoint is None:
            raise ConfigError("drl evaluation requires --checkpoint")
        return DrlController(config, checkpoint, seed)
    raise ConfigError(f"unknown controller {kind!r}")


# -- top-level runs --------------------------------------------------------


def train(config: SimConfig, out_dir: str | Path, seed: int,
          resume: str | Path | None = None) -> Path:
    """Train the DRL controller; writes training_log.csv and checkpoint.json."""
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved(config, out, seed)

    space = ActionSpace.from_config(config.slicing)
    obs_dim = feature_length(config)
    agent_rng = stream_rng(seed, _STREAM_AGENT)
    if resume is not None:
        spec, params, meta = nn.load_checkpoint(resume)
        if spec.input_dim != obs_dim or spec.output_dim != space.n_actions:
            raise ConfigError("resume checkpoint does not match the config")
        agent = Agent(spec, config.agent, space, agent_rng, params=params)
        global_cycle = int(meta.get("cycle", 0))
        agent.updates = int(meta.get("updates", 0))
    else:
        spec = nn.NetSpec(input_dim=obs_dim,
                          lstm_units=config.agent.lstm_units,
                          hidden_units=config.agent.hidden_units,
                          output_dim=space.n_actions)
        agent = Agent(spec, config.agent, space, agent_rng)
        global_cycle = 0

    rows = ["cycle,episode,epsilon,action_index,revenue,loss"]
    for ep in range(config.episode.train_episodes):
        eng = Engine(config, seed, episode=ep)
        agent.reset_episode()
        snap = zero_snapshot(config).vector()
        for cyc in range(config.episode.cycles_per_episode):
            eps = epsilon_at(global_cycle, config.agent)
            a_idx = agent.act(snap, eps, agent_rng)
            stats, next_snap, rev = eng.run_cycle(space.encode_action(a_idx))
            agent.buffer.push(snap, a_idx, rev, next_snap.vector(), cyc == 0)
            loss = None
            for _ in range(config.episode.train_steps_per_cycle):
                loss = agent.learn(agent_rng)
            rows.append(f"{global_cycle},{ep},{fmt(eps)},{a_idx},{fmt(rev)},"
                        f"{'' if loss is None else fmt(loss)}")
            snap = next_snap.vector()
            global_cycle += 1
        eng.audit_counters()

    (out / "training_log.csv").write_text("\n".join(rows) + "\n")
    ckpt = out / "checkpoint.json"
    nn.save_checkpoint(ckpt, agent.spec, agent.online, meta={
        "cycle": global_cycle,
        "updates": agent.updates,
        "epsilon": epsilon_at(global_cycle, config.agent),
        "hyper": {
            "discount": config.agent.discount,
            "lr": config.agent.lr,
            "batch_windows": config.agent.batch_windows,
            "window_len": config.agent.window_len,
        },
    })
    return ckpt


def evaluate(config: SimConfig, out_dir: str | Path, seed: int, kind: str,
             checkpoint: str | Path | None = None,
             action_index: int | None = None) -> dict:
    """Run greedy evaluation cycles and export the metrics files."""
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved(config, out, seed)
    controller = make_controller(config, kind, seed, checkpoint, action_index)

    eng = Engine(config, seed, episode=0, record_packets=True)
    snap = zero_snapshot(config)
    revenues = []
    snap_rows = ["cycle," + ",".join(f"f{i}" for i in range(feature_length(config)))]
    for cyc in range(config.episode.eval_cycles):
        decision = controller.decide(snap)
        stats, snap, rev = eng.run_cycle(decision)
        controller.observe(stats)
        revenues.append(rev)
        snap_rows.append(f"{cyc}," + ",".join(fmt(x) for x in snap.vector()))
    eng.audit_counters()
    (out / "snapshots.csv").write_text("\n".join(snap_rows) + "\n")

    # per-VUE BLER paired with each delivered packet's latency
    link_bler = {ln.id: metrics.per_vue_bler(ln.attempts, ln.failures)
                 for ln in eng.links}
    samples = [(link_bler[r.link_id], float(r.latency_ms))
               for r in eng.records if r.outcome == "delivered"]
    m = config.metrics
    pdf = metrics.joint_pdf(
        samples,
        np.linspace(m.bler_min, m.bler_max, m.bler_bins + 1),
        np.linspace(m.latency_min, m.latency_max, m.latency_bins + 1))

    summary = {"controller": kind, "seed": int(seed),
               "mean_revenue": float(np.mean(revenues)), "slices": {}}
    for slice_id in SLICES:
        links = eng.slice_links[slice_id]
        recs = [r for r in eng.records if r.slice_id == slice_id]
        delivered = [r for r in recs if r.outcome == "delivered"]
        dropped = [r for r in recs if r.outcome == "dropped"]
        lats = sorted(r.latency_ms for r in delivered)
        decided = len(delivered) + len(dropped)
        summary["slices"][slice_id] = {
            "arrived": sum(ln.queue.arrived for ln in links),
            "delivered": len(delivered),
            "dropped": len(dropped),
            "delivered_ratio": len(delivered) / decided if decided else 1.0,
            "mean_latency_ms": float(np.mean(lats)) if lats else 0.0,
            "p95_latency_ms": float(lats[int(0.95 * (len(lats) - 1))]) if lats else 0.0,
            "mean_bler": float(np.mean([link_bler[ln.id] for ln in links]))
            if links else 0.0,
        }
    summary["config"] = {"seed": int(seed), **config.to_dict()}
    metrics.export(eng.records, pdf, summary, out)
    return summary

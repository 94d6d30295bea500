import json

import numpy as np
import pytest

from slicesim import engine as eng_mod
from slicesim import neuralnet as nn
from slicesim.config import ConfigError, SimConfig, config_from_dict
from slicesim.engine import (DEFAULT_DECISION, BaselineController,
                             DrlController, Engine, FixedController, evaluate,
                             make_controller, stream_rng, train)
from slicesim.observation import feature_length, zero_snapshot
from slicesim.scheduler import SchedulerKind, SlicePartition
from slicesim.stats import CycleStats
from slicesim.baseline import SlicingDecision


def small_config(**episode):
    cfg = config_from_dict({
        "fleet": {"pairs_safety": 3, "pairs_autonomous": 3},
        "agent": {"lstm_units": 8, "hidden_units": 8,
                  "warmup_transitions": 20, "batch_windows": 4},
        "episode": {"cycles_per_episode": 5, "train_episodes": 2,
                    "eval_cycles": 4, **episode},
    })
    return cfg


def decision(safety, autonomous, s1=SchedulerKind.ROUND_ROBIN,
             s2=SchedulerKind.ROUND_ROBIN):
    return SlicingDecision(SlicePartition(safety, autonomous), s1, s2)


def test_stream_rngs_are_independent_and_deterministic():
    a = stream_rng(7, 0, 0).random(4)
    b = stream_rng(7, 0, 0).random(4)
    np.testing.assert_array_equal(a, b)
    c = stream_rng(7, 1, 0).random(4)
    d = stream_rng(7, 0, 1).random(4)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_idle_tti_makes_no_grants():
    cfg = config_from_dict({
        "fleet": {"pairs_safety": 2, "pairs_autonomous": 0},
        "traffic": {"safety": {"arrival_rate_per_tti": 0.0}},
    })
    eng = Engine(cfg, seed=0)
    stats, snap, rev = eng.run_cycle(DEFAULT_DECISION)
    assert stats.rbs_used_total == 0
    assert stats["safety"].arrived == 0
    assert stats["safety"].attempts == 0


def test_single_backlogged_link_takes_whole_slice():
    cfg = config_from_dict({
        "fleet": {"pairs_safety": 2, "pairs_autonomous": 0},
        "traffic": {"safety": {"arrival_rate_per_tti": 0.0}},
    })
    eng = Engine(cfg, seed=0)
    eng.apply_decision(DEFAULT_DECISION)
    eng.links[0].queue.push(eng.factory.make(0, 10 ** 6, 0, 100))
    stats = CycleStats(n_ttis=1)
    eng.run_tti(stats)
    assert stats.rbs_used_total == 25
    assert stats["safety"].attempts == 1


def test_packet_can_be_served_in_arrival_tti():
    # autonomous periodic packet: 12800 bits <= 45*864 per TTI, so phase-0
    # links deliver in the same TTI whenever the attempt succeeds
    cfg = config_from_dict({
        "fleet": {"pairs_safety": 1, "pairs_autonomous": 1},
        "traffic": {"safety": {"arrival_rate_per_tti": 0.0}},
    })
    eng = Engine(cfg, seed=1, record_packets=True)
    eng.run_cycle(decision(5, 45))
    delivered = [r for r in eng.records if r.outcome == "delivered"]
    assert delivered
    assert any(r.latency_ms == 1 for r in delivered)


def test_cycle_determinism():
    cfg = small_config()
    runs = []
    for _ in range(2):
        eng = Engine(cfg, seed=3)
        stats, snap, rev = eng.run_cycle(decision(25, 25))
        runs.append((stats, snap.vector(), rev))
    assert runs[0][0] == runs[1][0]
    np.testing.assert_array_equal(runs[0][1], runs[1][1])
    assert runs[0][2] == runs[1][2]


def test_autonomous_capacity_at_45_rbs():
    # one autonomous link with 45 RBs: 10 packets per cycle, all delivered
    # within the 10 ms bound
    cfg = config_from_dict({
        "fleet": {"pairs_safety": 1, "pairs_autonomous": 1},
        "traffic": {"safety": {"arrival_rate_per_tti": 0.0}},
    })
    eng = Engine(cfg, seed=4, record_packets=True)
    for _ in range(5):
        stats, _, _ = eng.run_cycle(decision(5, 45))
        assert stats["autonomous"].arrived == 10
    auto = [r for r in eng.records if r.slice_id == "autonomous"]
    assert len([r for r in auto if r.outcome == "delivered"]) == 50
    assert all(r.latency_ms <= 10 for r in auto if r.outcome == "delivered")


def test_rbs_usage_bounded_by_budget():
    cfg = small_config()
    eng = Engine(cfg, seed=5)
    for k in range(3):
        stats, _, _ = eng.run_cycle(decision(25, 25))
        assert stats.rbs_used_total <= 50 * 100
    eng.audit_counters()


def test_counter_conservation_over_cycles():
    cfg = small_config()
    eng = Engine(cfg, seed=6)
    for _ in range(5):
        eng.run_cycle(decision(10, 40))
    eng.audit_counters()
    for link in eng.links:
        q = link.queue
        assert q.arrived == q.delivered + q.dropped + q.in_queue()


def test_apply_decision_resets_rr_pointers_and_validates():
    cfg = small_config()
    eng = Engine(cfg, seed=7)
    eng.run_cycle(decision(25, 25))
    eng.rr_state["safety"] = 2
    eng.apply_decision(decision(25, 25))
    assert eng.rr_state == {"safety": 0, "autonomous": 0}
    with pytest.raises(ValueError):
        eng.apply_decision(decision(27, 23))


def test_traffic_stream_is_controller_invariant():
    # identical arrival counts whatever the slicing decision
    cfg = small_config()
    arrived = []
    for dec in (decision(5, 45), decision(45, 5)):
        eng = Engine(cfg, seed=8)
        stats, _, _ = eng.run_cycle(dec)
        arrived.append((stats["safety"].arrived, stats["safety"].bits_arrived,
                        stats["autonomous"].arrived))
    assert arrived[0] == arrived[1]


def test_baseline_controller_cold_start_and_update():
    cfg = small_config()
    ctrl = BaselineController(cfg)
    d0 = ctrl.decide(zero_snapshot(cfg))
    assert (d0.partition.rbs_safety, d0.partition.rbs_autonomous) == (25, 25)
    stats = CycleStats(n_ttis=100)
    stats["safety"].bits_arrived = 10 ** 6
    stats["autonomous"].bits_arrived = 10 ** 6
    ctrl.observe(stats)
    d1 = ctrl.decide(zero_snapshot(cfg))
    assert d1.partition.rbs_autonomous > d1.partition.rbs_safety


def test_fixed_controller_uses_action_codec():
    cfg = small_config()
    ctrl = FixedController(cfg, 40)  # 40 = 4*9 + 1*3 + 1
    d = ctrl.decide(zero_snapshot(cfg))
    assert (d.partition.rbs_safety, d.partition.rbs_autonomous) == (25, 25)
    assert d.sched_safety == SchedulerKind.CHANNEL_QUALITY
    assert d.sched_autonomous == SchedulerKind.CHANNEL_QUALITY


def test_make_controller_errors():
    cfg = small_config()
    with pytest.raises(ConfigError):
        make_controller(cfg, "drl", 0, checkpoint=None)
    with pytest.raises(ConfigError):
        make_controller(cfg, "fixed", 0)
    with pytest.raises(ConfigError):
        make_controller(cfg, "nonsense", 0)


def test_drl_controller_rejects_mismatched_checkpoint(tmp_path):
    cfg = small_config()
    spec = nn.NetSpec(input_dim=5, lstm_units=4, hidden_units=4, output_dim=81)
    params = nn.init_params(spec, np.random.default_rng(0))
    path = tmp_path / "ckpt.json"
    nn.save_checkpoint(path, spec, params)
    with pytest.raises(ConfigError, match="input_dim"):
        DrlController(cfg, path, seed=0)


def test_train_smoke_and_outputs(tmp_path):
    cfg = small_config()
    ckpt = train(cfg, tmp_path, seed=11)
    log = (tmp_path / "training_log.csv").read_text().splitlines()
    assert log[0] == "cycle,episode,epsilon,action_index,revenue,loss"
    assert len(log) == 1 + 2 * 5
    for row in log[1:]:
        cyc, ep, eps, a, rev, loss = row.split(",")
        assert 0 <= int(a) < 81
        assert np.isfinite(float(rev))
        if loss:
            assert np.isfinite(float(loss))
    spec, params, meta = nn.load_checkpoint(ckpt)
    assert spec.input_dim == feature_length(cfg)
    assert meta["cycle"] == 10
    assert (tmp_path / "config.resolved.json").exists()


def test_train_deterministic(tmp_path):
    cfg = small_config()
    a = train(cfg, tmp_path / "a", seed=12)
    b = train(cfg, tmp_path / "b", seed=12)
    assert a.read_text() == b.read_text()
    assert ((tmp_path / "a" / "training_log.csv").read_text()
            == (tmp_path / "b" / "training_log.csv").read_text())


def test_resume_zero_episodes_preserves_checkpoint(tmp_path):
    cfg = small_config()
    ckpt = train(cfg, tmp_path / "first", seed=13)
    cfg2 = small_config(train_episodes=0)
    ckpt2 = train(cfg2, tmp_path / "second", seed=13, resume=ckpt)
    _, p1, _ = nn.load_checkpoint(ckpt)
    _, p2, _ = nn.load_checkpoint(ckpt2)
    np.testing.assert_array_equal(p1, p2)
    s1 = evaluate(cfg, tmp_path / "e1", 99, "drl", checkpoint=ckpt)
    s2 = evaluate(cfg, tmp_path / "e2", 99, "drl", checkpoint=ckpt2)
    assert s1 == s2


def test_evaluate_baseline_outputs_and_determinism(tmp_path):
    cfg = small_config()
    s1 = evaluate(cfg, tmp_path / "r1", 21, "baseline")
    s2 = evaluate(cfg, tmp_path / "r2", 21, "baseline")
    for name in ("packets.csv", "joint_pdf.csv", "summary.json",
                 "snapshots.csv", "config.resolved.json"):
        assert (tmp_path / "r1" / name).read_bytes() == \
            (tmp_path / "r2" / name).read_bytes()
    assert s1 == s2
    assert s1["controller"] == "baseline"
    for slice_id in ("safety", "autonomous"):
        sl = s1["slices"][slice_id]
        assert sl["arrived"] >= sl["delivered"] + sl["dropped"]
        assert 0.0 <= sl["delivered_ratio"] <= 1.0


def test_evaluate_summary_matches_packets_csv(tmp_path):
    import csv
    cfg = small_config()
    summary = evaluate(cfg, tmp_path, 22, "fixed", action_index=40)
    with open(tmp_path / "packets.csv") as fh:
        rows = list(csv.DictReader(fh))
    for slice_id in ("safety", "autonomous"):
        recs = [r for r in rows if r["slice_id"] == slice_id]
        delivered = [r for r in recs if r["outcome"] == "delivered"]
        dropped = [r for r in recs if r["outcome"] == "dropped"]
        sl = summary["slices"][slice_id]
        assert sl["delivered"] == len(delivered)
        assert sl["dropped"] == len(dropped)
        decided = len(delivered) + len(dropped)
        expected_ratio = len(delivered) / decided if decided else 1.0
        assert sl["delivered_ratio"] == pytest.approx(expected_ratio)
        if delivered:
            lats = [int(r["latency_ms"]) for r in delivered]
            assert sl["mean_latency_ms"] == pytest.approx(np.mean(lats))
            bound = cfg.traffic.for_slice(slice_id).latency_bound_ttis
            assert max(lats) <= bound


def test_evaluate_writes_valid_summary_json(tmp_path):
    cfg = small_config()
    evaluate(cfg, tmp_path, 23, "baseline")
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["seed"] == 23
    assert data["config"]["fleet"]["pairs_safety"] == 3
    assert np.isfinite(data["mean_revenue"])

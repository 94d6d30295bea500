"""Service-demand based slicing: the non-learning comparison controller.

RB shares are proportional to a per-slice demand score combining VUE
count, offered traffic, and QoS urgency; intra-slice scheduling is always
round robin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .config import SLICES, SimConfig
from .scheduler import SchedulerKind, SlicePartition


@dataclass(frozen=True, slots=True)
class SlicingDecision:
    partition: SlicePartition
    sched_safety: SchedulerKind
    sched_autonomous: SchedulerKind

    def scheduler(self, slice_id: str) -> SchedulerKind:
        return self.sched_safety if slice_id == "safety" else self.sched_autonomous


def _urgency(latency_bound_ms: float, reliability_target: float,
             exponent: float) -> float:
    return (100.0 / latency_bound_ms) * (1.0 / (1.0 - reliability_target)) ** exponent


def demand_based_partition(density_total: float,
                           per_slice_offered_bits: dict[str, float],
                           config: SimConfig) -> SlicingDecision:
    """Split the RB budget proportionally to demand scores (round-robin slices)."""
    slicing = config.slicing
    scores = {}
    for slice_id in SLICES:
        offered = per_slice_offered_bits.get(slice_id, 0.0)
        if offered < 0:
            raise ValueError("offered bits must be >= 0")
        t = config.traffic.for_slice(slice_id)
        scores[slice_id] = (config.fleet.pairs(slice_id) * offered
                            * _urgency(t.latency_bound_ttis, t.reliability_target,
                                       config.baseline.urgency_exponent))
    total_score = sum(scores.values())
    total = slicing.total_rbs
    gran = slicing.rb_granularity
    lo = slicing.min_rbs_per_slice
    hi = total - lo
    if total_score <= 0.0:
        autonomous = total // 2
        autonomous -= autonomous % gran
    else:
        raw = total * scores["autonomous"] / total_score
        autonomous = int(math.floor(raw / gran + 0.5)) * gran  # half rounds up
    safety = min(max(total - autonomous, lo), hi)
    partition = SlicePartition(rbs_safety=safety, rbs_autonomous=total - safety)
    return SlicingDecision(partition, SchedulerKind.ROUND_ROBIN,
                           SchedulerKind.ROUND_ROBIN)

"""Network operating revenue: the per-cycle reward.

revenue = sum_s w_s * (alpha * lat_score_s + beta * rel_score_s)
          - cost * rb_usage_fraction

Latency score is the fraction of decided packets delivered within the
slice bound (identical to the delivered ratio, since late packets are
dropped rather than served); reliability score is the delivered ratio
against the slice's reliability target, capped at 1. Slices with no
decided packets count as fully satisfied.
"""
from __future__ import annotations

from .config import SLICES, RevenueConfig, SimConfig
from .stats import CycleStats


def compute_revenue(stats: CycleStats, config: SimConfig) -> float:
    rev_cfg: RevenueConfig = config.revenue
    total = 0.0
    for slice_id in SLICES:
        s = stats[slice_id]
        ratio = s.delivered_ratio()
        target = config.traffic.for_slice(slice_id).reliability_target
        lat_score = ratio
        rel_score = min(ratio / target, 1.0)
        total += rev_cfg.weight(slice_id) * (rev_cfg.alpha * lat_score
                                             + rev_cfg.beta * rel_score)
    capacity = config.slicing.total_rbs * max(stats.n_ttis, 1)
    usage = stats.rbs_used_total / capacity
    return total - rev_cfg.cost_per_rb_fraction * usage

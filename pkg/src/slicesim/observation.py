"""Per-cycle network snapshot: the controller's observation vector.

Feature layout: flattened density cells first (row-major, north-west cell
first), then for each slice in order (safety, autonomous):
offered_load, backlog, mean_latency, bler, n_vues. All features are
normalized into [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel
from .config import SLICES, SimConfig
from .mobility import DensityGrid
from .scheduler import SlicePartition
from .stats import CycleStats


def normalize(raw_value: float, scale: float) -> float:
    """clamp(raw/scale, 0, 1)."""
    if scale <= 0:
        raise ValueError("scale must be > 0")
    return min(max(raw_value / scale, 0.0), 1.0)


@dataclass(slots=True)
class Snapshot:
    features: np.ndarray

    def vector(self) -> np.ndarray:
        return self.features


def feature_length(config: SimConfig) -> int:
    obs = config.observation
    return obs.density_cells_x * obs.density_cells_y + 5 * len(SLICES)


def zero_snapshot(config: SimConfig) -> Snapshot:
    return Snapshot(np.zeros(feature_length(config)))


def aggregate_cycle(stats: CycleStats, density: DensityGrid,
                    partition: SlicePartition, config: SimConfig) -> Snapshot:
    """Fold one 100-TTI cycle into the fixed-length observation vector."""
    n_vehicles = 2 * (config.fleet.pairs_safety + config.fleet.pairs_autonomous)
    n_cells = density.cells.size
    cell_scale = 2.0 * n_vehicles / n_cells
    feats = [normalize(float(c), cell_scale) for c in density.cells.ravel()]

    per_rb_bits = channel.bits_per_tti(1e3, 1, config.channel)  # capped rate
    total_pairs = config.fleet.pairs_safety + config.fleet.pairs_autonomous
    for slice_id in SLICES:
        s = stats[slice_id]
        t = config.traffic.for_slice(slice_id)
        capacity = max(partition.rbs(slice_id) * per_rb_bits * stats.n_ttis, 1)
        feats.append(normalize(s.bits_arrived, capacity))
        feats.append(normalize(s.backlog_bits_end, capacity))
        if s.delivered == 0:
            feats.append(1.0)
            feats.append(1.0 if s.attempts > 0 else 0.0)
        else:
            feats.append(normalize(s.mean_latency_ms(), t.latency_bound_ttis))
            feats.append(s.failures / s.attempts if s.attempts else 0.0)
        feats.append(normalize(config.fleet.pairs(slice_id), total_pairs))
    vec = np.asarray(feats, dtype=np.float64)
    if not np.all(np.isfinite(vec)):
        raise AssertionError("snapshot contains non-finite features")
    return Snapshot(vec)

"""Per-cycle bookkeeping shared by the observation and revenue modules."""
from __future__ import annotations

from dataclasses import dataclass, field

from .config import SLICES


@dataclass
class SliceCycleStats:
    arrived: int = 0
    delivered: int = 0
    dropped: int = 0
    bits_arrived: int = 0
    latency_sum_ms: int = 0
    attempts: int = 0
    failures: int = 0
    backlog_bits_end: int = 0
    in_queue_end: int = 0

    def delivered_ratio(self) -> float:
        total = self.delivered + self.dropped
        return self.delivered / total if total else 1.0

    def mean_latency_ms(self) -> float:
        return self.latency_sum_ms / self.delivered if self.delivered else 0.0


@dataclass
class CycleStats:
    per_slice: dict[str, SliceCycleStats] = field(
        default_factory=lambda: {s: SliceCycleStats() for s in SLICES})
    rbs_used_total: int = 0
    n_ttis: int = 0

    def __getitem__(self, slice_id: str) -> SliceCycleStats:
        return self.per_slice[slice_id]

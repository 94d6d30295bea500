"""Intra-slice per-TTI RB allocation and transmission execution.

Three scheduling criteria are supported: round robin, channel quality
(greedy on the pathloss-only SINR estimate) and queue length (greedy on
the remaining backlog estimate). Failed transmissions keep their data
queued, which acts as an implicit retransmission.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import channel
from .config import ChannelConfig
from .traffic import LinkQueue, Packet


class SchedulerKind(IntEnum):
    ROUND_ROBIN = 0
    CHANNEL_QUALITY = 1
    QUEUE_LENGTH = 2


@dataclass(frozen=True, slots=True)
class SlicePartition:
    rbs_safety: int
    rbs_autonomous: int

    def validate(self, total_rbs: int = 50, min_rbs: int = 5, granularity: int = 5):
        if self.rbs_safety + self.rbs_autonomous > total_rbs:
            raise ValueError("partition exceeds the RB budget")
        for n in (self.rbs_safety, self.rbs_autonomous):
            if n < min_rbs or n % granularity != 0:
                raise ValueError("per-slice RB counts must be grid multiples >= minimum")

    def rbs(self, slice_id: str) -> int:
        return self.rbs_safety if slice_id == "safety" else self.rbs_autonomous


def schedule(kind: SchedulerKind,
             slice_links: list[tuple[int, int, float]],
             n_rbs: int,
             rr_state: int,
             params: ChannelConfig) -> tuple[dict[int, int], int]:
    """Allocate a slice's RBs among its backlogged links for one TTI.

    slice_links holds (link_id, backlog_bits, sinr_db_estimate) for every
    link of the slice, ordered by link_id; rr_state is the round-robin
    pointer (ordinal into that ordering). Returns ({link_id: rbs}, rr_state').
    """
    if n_rbs < 0:
        raise ValueError("n_rbs must be >= 0")
    n_links = len(slice_links)
    backlogged = [(ordinal, link) for ordinal, link in enumerate(slice_links)
                  if link[1] > 0]
    if n_rbs == 0 or not backlogged:
        return {}, rr_state

    grant: dict[int, int] = {}
    if kind == SchedulerKind.ROUND_ROBIN:
        # rotate so dealing starts at the first backlogged link at/after the pointer
        start = 0
        for j, (ordinal, _) in enumerate(backlogged):
            if ordinal >= rr_state % max(n_links, 1):
                start = j
                break
        order = backlogged[start:] + backlogged[:start]
        m = len(order)
        base, extra = divmod(n_rbs, m)
        for j, (_, (link_id, _, _)) in enumerate(order):
            rbs = base + (1 if j < extra else 0)
            if rbs:
                grant[link_id] = rbs
        last_ordinal = order[(n_rbs - 1) % m][0]
        rr_state = (last_ordinal + 1) % n_links
    elif kind == SchedulerKind.CHANNEL_QUALITY:
        # the estimate never changes mid-TTI, so the best link takes everything
        best = max(backlogged, key=lambda ol: (ol[1][2], -ol[1][0]))
        grant[best[1][0]] = n_rbs
    elif kind == SchedulerKind.QUEUE_LENGTH:
        est = {link_id: backlog for _, (link_id, backlog, _) in backlogged}
        per_rb = {link_id: max(channel.bits_per_tti(sinr, 1, params), 1)
                  for _, (link_id, _, sinr) in backlogged}
        for _ in range(n_rbs):
            link_id = max(est, key=lambda l: (est[l], -l))
            grant[link_id] = grant.get(link_id, 0) + 1
            est[link_id] -= per_rb[link_id]
    else:
        raise ValueError(f"unknown scheduler kind {kind!r}")
    return grant, rr_state


@dataclass(slots=True)
class TransmissionOutcome:
    link_id: int
    grant_rbs: int
    sinr_db: float
    failed: bool
    bits_served: int
    delivered: list[Packet]


def transmit(link_id: int, grant_rbs: int, pathloss: float,
             params: ChannelConfig, rng: np.random.Generator,
             queue: LinkQueue, tti: int) -> TransmissionOutcome:
    """One transmission attempt over the link's full grant."""
    if grant_rbs < 1:
        raise ValueError("grant_rbs must be >= 1")
    gain = channel.fading_sample(rng)
    sinr = channel.sinr_db(params, pathloss, gain, grant_rbs)
    p_err = channel.bler_prob(sinr, params)
    failed = bool(rng.random() < p_err)
    if failed:
        return TransmissionOutcome(link_id, grant_rbs, sinr, True, 0, [])
    bits = channel.bits_per_tti(sinr, grant_rbs, params)
    delivered = queue.serve_bits(bits, tti)
    return TransmissionOutcome(link_id, grant_rbs, sinr, False, bits, delivered)

"""Per-link packet generation and FIFO queues with deadline dropping.

Latency convention: a packet arriving and completing in the same TTI has
latency 1 ms (latency = completion_tti - arrival_tti + 1). A packet is
dropped once no remaining TTI could deliver it within its slice bound,
i.e. when tti >= deadline_tti, so every delivered packet meets its bound.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, SliceTrafficConfig


@dataclass(slots=True)
class Packet:
    id: int
    link_id: int
    size_bits: int
    arrival_tti: int
    deadline_tti: int
    remaining_bits: int


class LinkQueue:
    """FIFO backlog of one V2V link with cumulative counters."""

    __slots__ = ("link_id", "packets", "arrived", "delivered", "dropped",
                 "_backlog")

    def __init__(self, link_id: int):
        self.link_id = link_id
        self.packets: deque[Packet] = deque()
        self.arrived = 0
        self.delivered = 0
        self.dropped = 0
        self._backlog = 0

    def push(self, pkt: Packet):
        self.packets.append(pkt)
        self.arrived += 1
        self._backlog += pkt.remaining_bits

    def backlog_bits(self) -> int:
        return self._backlog

    def in_queue(self) -> int:
        return len(self.packets)

    def serve_bits(self, bits: int, tti: int) -> list[Packet]:
        """Drain head-first; returns fully delivered packets."""
        if bits < 0:
            raise ValueError("bits must be >= 0")
        delivered = []
        remaining = bits
        while remaining > 0 and self.packets:
            head = self.packets[0]
            if head.remaining_bits <= remaining:
                remaining -= head.remaining_bits
                self._backlog -= head.remaining_bits
                head.remaining_bits = 0
                delivered.append(head)
                self.packets.popleft()
                self.delivered += 1
            else:
                head.remaining_bits -= remaining
                self._backlog -= remaining
                remaining = 0
        return delivered

    def drop_expired(self, tti: int) -> list[Packet]:
        """Remove packets that can no longer meet their deadline this TTI."""
        dropped = []
        while self.packets and self.packets[0].deadline_tti <= tti:
            pkt = self.packets.popleft()
            self._backlog -= pkt.remaining_bits
            dropped.append(pkt)
            self.dropped += 1
        return dropped


def backlog_bits(queue: LinkQueue) -> int:
    return queue.backlog_bits()


class PacketFactory:
    """Hands out globally unique packet ids."""

    __slots__ = ("next_id",)

    def __init__(self):
        self.next_id = 0

    def make(self, link_id: int, size_bits: int, arrival_tti: int,
             bound_ttis: int) -> Packet:
        pkt = Packet(
            id=self.next_id,
            link_id=link_id,
            size_bits=size_bits,
            arrival_tti=arrival_tti,
            deadline_tti=arrival_tti + bound_ttis,
            remaining_bits=size_bits,
        )
        self.next_id += 1
        return pkt


def generate_arrivals(cfg: SliceTrafficConfig, link_id: int, phase: int,
                      tti: int, rng: np.random.Generator,
                      factory: PacketFactory) -> list[Packet]:
    """New packets for one link at one TTI under its slice's traffic model."""
    if tti < 0:
        raise ValueError("tti must be >= 0")
    if cfg.model == "poisson":
        count = int(rng.poisson(cfg.arrival_rate_per_tti))
        out = []
        for _ in range(count):
            size = max(1, math.ceil(rng.exponential(cfg.mean_size_bits)))
            out.append(factory.make(link_id, size, tti, cfg.latency_bound_ttis))
        return out
    if cfg.model == "periodic":
        if tti % cfg.period_ttis == phase % cfg.period_ttis:
            return [factory.make(link_id, cfg.size_bits, tti,
                                 cfg.latency_bound_ttis)]
        return []
    raise ConfigError(f"unknown traffic model {cfg.model!r}")


def packet_latency_ms(pkt: Packet, completion_tti: int) -> int:
    return completion_tti - pkt.arrival_tti + 1

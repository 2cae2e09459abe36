"""Deterministic gossip scheduler.

A single seeded rng drives every nondeterministic choice — latency draws,
drop decisions, fan-out sampling — in schedule order, so one config yields
one delivery schedule. A broadcast fans out to a random subset of peers;
each first-time receiver re-propagates to its own subset until coverage.
Partitions drop messages crossing the group boundary inside their window.
"""

from __future__ import annotations

import heapq
import random
from typing import Any

from .config import NetworkConfig
from .messages import message_id

DELIVER = "deliver"
TIMEOUT = "timeout"


class GossipNetwork:
    def __init__(self, config: NetworkConfig, rng: random.Random):
        self.config = config
        self.rng = rng
        self.queue: list[tuple[int, int, str, int, Any]] = []
        self.sequence = 0
        self.seen: list[set[str]] = [set() for _ in range(config.n)]
        self.dropped = 0

    def _push(self, at_ms: int, kind: str, node: int, payload: Any) -> None:
        heapq.heappush(self.queue, (at_ms, self.sequence, kind, node, payload))
        self.sequence += 1

    def pop(self) -> tuple[int, str, int, Any] | None:
        if not self.queue:
            return None
        at_ms, _, kind, node, payload = heapq.heappop(self.queue)
        return at_ms, kind, node, payload

    def schedule_timer(self, node: int, delay_ms: int, payload: Any, now: int) -> None:
        self._push(now + delay_ms, TIMEOUT, node, payload)

    def _latency(self) -> int:
        low, high = self.config.latency_ms
        return self.rng.randint(low, high)

    def _blocked(self, sender: int, receiver: int, at_ms: int) -> bool:
        return any(
            window.separates(sender, receiver, at_ms)
            for window in self.config.partitions
        )

    def send(
        self, sender: int, wire: dict, targets: list[int], now: int, mid: str
    ) -> None:
        for target in targets:
            if target == sender:
                self._push(now, DELIVER, target, (mid, wire))
                continue
            at_ms = now + self._latency()
            if self.rng.random() < self.config.drop_probability:
                self.dropped += 1
                continue
            if self._blocked(sender, target, at_ms):
                self.dropped += 1
                continue
            self._push(at_ms, DELIVER, target, (mid, wire))

    def gossip_targets(self, sender: int) -> list[int]:
        peers = [i for i in range(self.config.n) if i != sender]
        fanout = min(self.config.effective_fanout, len(peers))
        return sorted(self.rng.sample(peers, fanout))

    def broadcast(self, sender: int, wire: dict, now: int) -> None:
        """Fan out to a random subset plus the sender itself."""
        mid = message_id(wire)
        self.seen[sender].add(mid)
        self.send(sender, wire, [sender] + self.gossip_targets(sender), now, mid)

    def multicast(self, sender: int, wire: dict, targets: list[int], now: int) -> None:
        mid = message_id(wire)
        self.seen[sender].add(mid)
        self.send(sender, wire, targets, now, mid)

    def note_delivery(self, node: int, mid: str) -> bool:
        """Mark receipt; True when this node sees the message first."""
        if mid in self.seen[node]:
            return False
        self.seen[node].add(mid)
        return True

    def relay(self, node: int, wire: dict, now: int, mid: str) -> None:
        # flood on first receipt: dedup stops loops, and with no drops every
        # broadcast provably reaches every node despite crashed relays
        peers = [i for i in range(self.config.n) if i != node]
        self.send(node, wire, peers, now, mid)

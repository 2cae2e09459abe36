"""Deterministic whole-network simulation runner.

Logical time only: the scheduler advances a single event queue, each node
is a sequential state machine, and the seeded rng in the gossip layer is
the sole source of nondeterminism, so a config fully determines the trace.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..crypto import KeyBundle, hash_digest
from ..ledger import Transaction
from .config import CRASH, NetworkConfig
from .network import DELIVER, GossipNetwork
from .node import Effects, Node


@dataclass
class Trace:
    """Config plus ordered event records; nodes kept for state inspection."""

    config: NetworkConfig
    events: list[dict] = field(default_factory=list)
    nodes: list[Node] = field(default_factory=list)

    def to_ndjson(self) -> str:
        lines = [json.dumps({"type": "config", **self.config.to_wire()}, sort_keys=True)]
        lines.extend(json.dumps(event, sort_keys=True) for event in self.events)
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_ndjson())

    @classmethod
    def from_ndjson(cls, text: str) -> "Trace":
        lines = [line for line in text.splitlines() if line.strip()]
        header = json.loads(lines[0])
        if header.get("type") != "config":
            raise ValueError("trace must start with a config record")
        config = NetworkConfig.from_wire(header)
        events = [json.loads(line) for line in lines[1:]]
        return cls(config=config, events=events)

    @classmethod
    def load(cls, path: str | Path) -> "Trace":
        return cls.from_ndjson(Path(path).read_text())

    def commits(self) -> list[dict]:
        return [e for e in self.events if e["type"] == "commit"]

    def validator_keys(self) -> list[str]:
        return build_validators(self.config)[1]


def build_validators(config: NetworkConfig) -> tuple[list[KeyBundle], list[str]]:
    bundles = []
    for index in range(config.n):
        seed = config.validator_seed(index)
        agreement = hash_digest(seed + b"-agreement").value
        bundles.append(KeyBundle.generate(signing_seed=seed, agreement_private=agreement))
    return bundles, [bundle.signing.public_hex for bundle in bundles]


def run_simulation(
    config: NetworkConfig,
    pending: list[Transaction] | None = None,
    on_commit: Callable[[int, dict], None] | None = None,
) -> Trace:
    """Run until every honest node reaches the target height or time runs out.

    ``pending`` seeds every honest node's transaction list before the run.
    More than a third of faulty nodes is allowed but leaves the run unable
    to promise safety margins; the trace records whatever happens.
    """
    rng = random.Random(config.seed)
    bundles, validators = build_validators(config)
    nodes = [
        Node(
            index,
            bundles[index],
            validators,
            fault_kind=config.fault_for(index).kind,
            block_time_ms=config.block_time_ms,
        )
        for index in range(config.n)
    ]
    honest = [
        node for node in nodes if config.fault_for(node.index).kind == "honest"
    ]
    if pending:
        for node in nodes:
            for tx in pending:
                node.submit(tx)

    network = GossipNetwork(config, rng)
    trace = Trace(config=config, nodes=nodes)

    def absorb(node: Node, effects: Effects, now: int) -> None:
        for wire in effects.broadcasts:
            network.broadcast(node.index, wire, now)
        for wire, targets in effects.multicasts:
            network.multicast(node.index, wire, targets, now)
        for delay, payload in effects.timers:
            network.schedule_timer(node.index, delay, payload, now)
        for event in effects.events:
            record = dict(event, time=now)
            trace.events.append(record)
            if record["type"] == "commit" and on_commit is not None:
                on_commit(node.index, record)

    def maybe_crash(node: Node, now: int) -> None:
        fault = config.fault_for(node.index)
        if fault.kind != CRASH or node.crashed:
            return
        due_steps = fault.after_steps is not None and node.steps_processed >= fault.after_steps
        due_time = fault.after_ms is not None and now >= fault.after_ms
        if due_steps or due_time:
            node.crashed = True
            trace.events.append({"type": "crash", "time": now, "node": node.index})

    for node in nodes:
        maybe_crash(node, 0)
        if not node.crashed:
            absorb(node, node.start(0), 0)

    done = False
    while not done:
        item = network.pop()
        if item is None:
            break
        now, kind, index, payload = item
        if now > config.max_time_ms:
            break
        node = nodes[index]
        maybe_crash(node, now)
        if kind == DELIVER:
            mid, wire = payload
            first_sight = network.note_delivery(index, mid)
            if node.crashed:
                continue
            if first_sight:
                network.relay(index, wire, now, mid)
            node.steps_processed += 1
            absorb(node, node.on_message(wire, now), now)
        else:
            if node.crashed:
                continue
            node.steps_processed += 1
            absorb(node, node.on_timeout(payload, now), now)
        maybe_crash(node, now)
        done = all(peer.chain.height >= config.heights for peer in honest)

    trace.events.append(
        {
            "type": "end",
            "time": now if trace.events else 0,
            "heights": {str(n.index): n.chain.height for n in nodes},
            "dropped": network.dropped,
        }
    )
    return trace

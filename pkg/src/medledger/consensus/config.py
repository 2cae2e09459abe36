"""Simulation scenario configuration.

A scenario fixes everything that can influence a run: node count, per-node
fault assignment, latency bounds, drop probability, partition windows, the
rng seed and block time. Identical configs produce byte-identical traces.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

HONEST = "honest"
CRASH = "crash"
BYZANTINE = "byzantine-equivocate"


@dataclass(frozen=True)
class FaultSpec:
    """Crash faults trigger after N processed steps or at a wall-clock ms."""

    kind: str = HONEST
    after_steps: int | None = None
    after_ms: int | None = None

    def to_wire(self) -> dict:
        wire: dict = {"kind": self.kind}
        if self.after_steps is not None:
            wire["after_steps"] = self.after_steps
        if self.after_ms is not None:
            wire["after_ms"] = self.after_ms
        return wire

    @classmethod
    def from_wire(cls, data: dict) -> "FaultSpec":
        return cls(
            kind=data.get("kind", HONEST),
            after_steps=data.get("after_steps"),
            after_ms=data.get("after_ms"),
        )


@dataclass(frozen=True)
class PartitionWindow:
    """While active, messages crossing the group boundary are dropped."""

    start_ms: int
    end_ms: int
    group: frozenset[int]

    def separates(self, a: int, b: int, at_ms: int) -> bool:
        if not self.start_ms <= at_ms < self.end_ms:
            return False
        return (a in self.group) != (b in self.group)

    def to_wire(self) -> dict:
        return {"start_ms": self.start_ms, "end_ms": self.end_ms, "group": sorted(self.group)}

    @classmethod
    def from_wire(cls, data: dict) -> "PartitionWindow":
        return cls(
            start_ms=int(data["start_ms"]),
            end_ms=int(data["end_ms"]),
            group=frozenset(int(x) for x in data["group"]),
        )


@dataclass(frozen=True)
class NetworkConfig:
    n: int
    heights: int = 1
    seed: int = 0
    block_time_ms: int = 100
    latency_ms: tuple[int, int] = (5, 50)
    drop_probability: float = 0.0
    fanout: int | None = None
    max_time_ms: int = 120_000
    faults: dict[int, FaultSpec] = field(default_factory=dict)
    partitions: tuple[PartitionWindow, ...] = ()

    def __post_init__(self) -> None:
        byzantine = sum(1 for f in self.faults.values() if f.kind == BYZANTINE)
        if byzantine and self.n < 4:
            raise ValueError("Byzantine scenarios require at least 4 nodes")

    @property
    def effective_fanout(self) -> int:
        return self.fanout if self.fanout is not None else math.ceil(self.n / 2)

    @property
    def fault_count(self) -> int:
        return sum(1 for f in self.faults.values() if f.kind != HONEST)

    def fault_for(self, index: int) -> FaultSpec:
        return self.faults.get(index, FaultSpec())

    def validator_seed(self, index: int) -> bytes:
        material = f"validator-{self.seed}-{index}".encode()
        return hashlib.sha256(material).digest()

    def to_wire(self) -> dict:
        return {
            "n": self.n,
            "heights": self.heights,
            "seed": self.seed,
            "block_time_ms": self.block_time_ms,
            "latency_ms": list(self.latency_ms),
            "drop_probability": self.drop_probability,
            "fanout": self.fanout,
            "max_time_ms": self.max_time_ms,
            "faults": {str(i): f.to_wire() for i, f in sorted(self.faults.items())},
            "partitions": [p.to_wire() for p in self.partitions],
        }

    @classmethod
    def from_wire(cls, data: dict) -> "NetworkConfig":
        return cls(
            n=int(data["n"]),
            heights=int(data.get("heights", 1)),
            seed=int(data.get("seed", 0)),
            block_time_ms=int(data.get("block_time_ms", 100)),
            latency_ms=tuple(data.get("latency_ms", (5, 50))),
            drop_probability=float(data.get("drop_probability", 0.0)),
            fanout=data.get("fanout"),
            max_time_ms=int(data.get("max_time_ms", 120_000)),
            faults={
                int(i): FaultSpec.from_wire(f)
                for i, f in data.get("faults", {}).items()
            },
            partitions=tuple(
                PartitionWindow.from_wire(p) for p in data.get("partitions", ())
            ),
        )

    @classmethod
    def load(cls, path: str | Path) -> "NetworkConfig":
        return cls.from_wire(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_wire(), indent=2, sort_keys=True))


def quorum_size(n: int) -> int:
    """Smallest count strictly exceeding two thirds of the validator set."""
    return (2 * n) // 3 + 1


def skip_threshold(n: int) -> int:
    """Smallest count guaranteeing at least one honest member: f + 1."""
    return (n - 1) // 3 + 1

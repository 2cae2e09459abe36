"""Replicated commit engine.

The system runs n logical nodes, each owning a chain file and a blob
store replica under its own directory. In BFT mode a live in-process
consensus cluster commits submitted transactions and every honest node
persists each committed block as it happens; in PoW mode blocks are mined
locally and replicated. Because every node holds the full chain and every
blob, any single surviving node directory is enough to restore the whole
system: on startup, nodes with missing or damaged state are rebuilt from
the best surviving replica.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from ..consensus import GossipNetwork, NetworkConfig, Node, build_validators
from ..consensus.network import DELIVER
from ..ledger import (
    BFT_MODE,
    POW_MODE,
    Block,
    ChainState,
    InvalidBlock,
    Transaction,
    append_pending,
    apply_block,
    detect_tamper,
    form_block,
    make_genesis,
    mine_pow,
    replay_chain,
    validate_transaction,
)
from ..store import BlobStore, ContentId

CLUSTER_FILE = "cluster.json"
CHAIN_FILE = "chain.ndjson"


class CommitError(Exception):
    pass


def write_chain_file(path: Path, blocks) -> None:
    lines = [json.dumps(block.to_wire(), sort_keys=True) for block in blocks]
    path.write_text("\n".join(lines) + "\n")


def read_chain_file(path: Path) -> list[Block]:
    blocks = []
    for line in path.read_text().splitlines():
        if line.strip():
            blocks.append(Block.from_wire(json.loads(line)))
    return blocks


class Cluster:
    """n replicated node directories plus the commit path over them."""

    def __init__(
        self,
        root: str | Path,
        n: int = 3,
        mode: str = BFT_MODE,
        seed: int = 0,
        block_time_ms: int = 200,
        pow_bits: int = 12,
        max_drive_events: int = 200_000,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        config_path = self.root / CLUSTER_FILE
        if config_path.exists():
            stored = json.loads(config_path.read_text())
            n = stored["n"]
            mode = stored["mode"]
            seed = stored["seed"]
            block_time_ms = stored["block_time_ms"]
            pow_bits = stored["pow_bits"]
        else:
            config_path.write_text(
                json.dumps(
                    {
                        "n": n,
                        "mode": mode,
                        "seed": seed,
                        "block_time_ms": block_time_ms,
                        "pow_bits": pow_bits,
                    },
                    indent=2,
                    sort_keys=True,
                )
            )
        self.n = n
        self.mode = mode
        self.seed = seed
        self.block_time_ms = block_time_ms
        self.pow_bits = pow_bits
        self.max_drive_events = max_drive_events

        self.stores = [BlobStore(self.node_dir(i)) for i in range(n)]
        self.states: list[ChainState] = []
        self._load_or_recover()

        if self.mode == BFT_MODE:
            self._init_consensus()

    def node_dir(self, index: int) -> Path:
        return self.root / f"node{index}"

    def _chain_path(self, index: int) -> Path:
        return self.node_dir(index) / CHAIN_FILE

    # -- startup and recovery ------------------------------------------------

    def _load_or_recover(self) -> None:
        loaded: list[ChainState | None] = []
        for index in range(self.n):
            path = self._chain_path(index)
            if not path.exists():
                loaded.append(None)
                continue
            try:
                loaded.append(replay_chain(read_chain_file(path), self.mode))
            except (InvalidBlock, ValueError, KeyError, json.JSONDecodeError):
                loaded.append(None)

        survivors = [s for s in loaded if s is not None]
        if not survivors:
            genesis_state = ChainState.genesis(self.mode)
            for index in range(self.n):
                write_chain_file(self._chain_path(index), genesis_state.blocks)
            self.states = [ChainState.genesis(self.mode) for _ in range(self.n)]
            return

        canonical = max(survivors, key=lambda s: (s.cumulative_work, s.height))
        donor = loaded.index(canonical)
        for index in range(self.n):
            rebuild = loaded[index] is None
            if self.mode == POW_MODE and not rebuild:
                # PoW replicas are a single logical chain; align stale ones
                rebuild = loaded[index].height < canonical.height
            if rebuild:
                write_chain_file(self._chain_path(index), canonical.blocks)
                loaded[index] = replay_chain(canonical.blocks, self.mode)
                self._replicate_blobs(donor, index)
        self.states = [s for s in loaded if s is not None]

    def _replicate_blobs(self, donor: int, target: int) -> None:
        source, sink = self.stores[donor], self.stores[target]
        for cid in source.content_ids():
            sink.put(source.get(cid))
            sink.announce(cid, f"node{target}")

    # -- consensus plumbing (BFT mode) ----------------------------------------

    def _init_consensus(self) -> None:
        self._sim_config = NetworkConfig(
            n=self.n,
            heights=1,
            seed=self.seed,
            block_time_ms=self.block_time_ms,
            latency_ms=(1, 10),
        )
        bundles, validators = build_validators(self._sim_config)
        self.validators = validators
        self._nodes = [
            Node(
                index,
                bundles[index],
                validators,
                block_time_ms=self.block_time_ms,
            )
            for index in range(self.n)
        ]
        for node, state in zip(self._nodes, self.states):
            node.chain = state
            node.height = state.height + 1
        self._network = GossipNetwork(self._sim_config, random.Random(self.seed))
        self._now = 0
        self._started = False

    def _absorb(self, node: Node, effects) -> None:
        for wire in effects.broadcasts:
            self._network.broadcast(node.index, wire, self._now)
        for wire, targets in effects.multicasts:
            self._network.multicast(node.index, wire, targets, self._now)
        for delay, payload in effects.timers:
            self._network.schedule_timer(node.index, delay, payload, self._now)
        for event in effects.events:
            if event["type"] == "commit":
                self._persist_commit(event)

    def _persist_commit(self, event: dict) -> None:
        index = event["node"]
        self.states[index] = self._nodes[index].chain
        with self._chain_path(index).open("a") as handle:
            handle.write(json.dumps(event["block"], sort_keys=True) + "\n")

    def _drive(self, finished) -> None:
        if not self._started:
            self._started = True
            for node in self._nodes:
                self._absorb(node, node.start(self._now))
        for _ in range(self.max_drive_events):
            if finished():
                return
            item = self._network.pop()
            if item is None:
                break
            self._now, kind, index, payload = item
            node = self._nodes[index]
            if kind == DELIVER:
                mid, wire = payload
                if self._network.note_delivery(index, mid):
                    self._network.relay(index, wire, self._now, mid)
                self._absorb(node, node.on_message(wire, self._now))
            else:
                self._absorb(node, node.on_timeout(payload, self._now))
        if not finished():
            raise CommitError("commit did not complete within the event budget")

    # -- public API -----------------------------------------------------------

    @property
    def state(self) -> ChainState:
        """The canonical read snapshot: the furthest committed replica."""
        return max(self.states, key=lambda s: (s.height, s.cumulative_work))

    def submit_and_commit(self, tx: Transaction) -> int:
        """Validate, replicate, and commit one transaction; returns its height."""
        if not validate_transaction(self.state, tx):
            raise CommitError(f"transaction {tx.id[:16]} is invalid")
        if self.mode == POW_MODE:
            return self._commit_pow(tx)
        accepted = 0
        for node in self._nodes:
            if node.submit(tx):
                accepted += 1
        if accepted == 0:
            raise CommitError(f"transaction {tx.id[:16]} rejected by every node")

        def landed() -> bool:
            return all(tx.id in state.committed_ids for state in self.states)

        self._drive(landed)
        for block in reversed(self.state.blocks):
            if any(t.id == tx.id for t in block.txs):
                return block.header.height
        raise CommitError("committed transaction not found on chain")

    def _commit_pow(self, tx: Transaction) -> int:
        state = append_pending(self.states[0], tx)
        block = mine_pow(
            form_block(state, timestamp=state.height + 1), self.pow_bits
        )
        state = apply_block(state, block)
        self.states = [state for _ in range(self.n)]
        for index in range(self.n):
            with self._chain_path(index).open("a") as handle:
                handle.write(json.dumps(block.to_wire(), sort_keys=True) + "\n")
        return block.header.height

    def put_blob(self, blob: bytes) -> ContentId:
        """Store on every node and announce each holder; fully replicated."""
        cid = None
        for index, store in enumerate(self.stores):
            cid = store.put(blob)
            store.announce(cid, f"node{index}")
        assert cid is not None
        return cid

    def get_blob(self, cid: ContentId) -> bytes:
        last_error: Exception | None = None
        for store in self.stores:
            try:
                return store.get(cid)
            except Exception as exc:
                last_error = exc
        raise last_error if last_error else KeyError(cid.hex)

    def verify(self) -> dict[int, int | None]:
        """Per-node first tampered height (None = clean)."""
        results = {}
        for index in range(self.n):
            blocks = read_chain_file(self._chain_path(index))
            results[index] = detect_tamper(blocks, self.mode)
        return results

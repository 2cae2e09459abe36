"""Per-validator consensus state machine.

Round flow at each height: the round-robin proposer broadcasts a formed
block; validators prevote its hash (or nil when locked elsewhere or no
proposal arrives in time); a polka — more than two thirds of matching
prevotes — locks the value and triggers precommits; a matching precommit
quorum commits the block under a certificate. Timeouts grow by half per
round. A locked node prevotes only its locked hash until a newer polka
releases the lock.

Equivocation (two signed messages from one sender for the same slot) is
recorded as evidence; only the first message per slot is counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..crypto import KeyBundle
from ..ledger import (
    BFT_MODE,
    Block,
    ChainState,
    Transaction,
    append_pending,
    apply_block,
    form_block,
    validate_block,
    validate_transaction,
)
from .config import BYZANTINE, quorum_size, skip_threshold
from .messages import (
    PRECOMMIT,
    PREVOTE,
    PROPOSAL,
    build_certificate,
    make_message,
    verify_certificate,
    verify_message,
)

PROPOSE_STEP = "propose"
PREVOTE_STEP = "prevote"
PRECOMMIT_STEP = "precommit"

NIL = None


@dataclass
class Effects:
    """What one step produced: messages out, timers wanted, trace events."""

    broadcasts: list[dict] = field(default_factory=list)
    multicasts: list[tuple[dict, list[int]]] = field(default_factory=list)
    timers: list[tuple[int, tuple[int, int, str]]] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)

    def extend(self, other: "Effects") -> None:
        self.broadcasts.extend(other.broadcasts)
        self.multicasts.extend(other.multicasts)
        self.timers.extend(other.timers)
        self.events.extend(other.events)


class Node:
    """One validator: sequential, deterministic, driven by the scheduler."""

    def __init__(
        self,
        index: int,
        bundle: KeyBundle,
        validators: list[str],
        fault_kind: str = "honest",
        block_time_ms: int = 100,
        max_block_txs: int = 100,
    ):
        self.index = index
        self.bundle = bundle
        self.validators = validators
        self.fault_kind = fault_kind
        self.block_time_ms = block_time_ms
        self.max_block_txs = max_block_txs

        self.chain = ChainState.genesis(BFT_MODE)
        self.height = 1
        self.round = 0
        self.step = PROPOSE_STEP
        self.locked_hash: str | None = None
        self.locked_round = -1

        self.proposals: dict[tuple[int, int], dict[str, Block]] = {}
        self.blocks_by_hash: dict[int, dict[str, Block]] = {}
        self.prevotes: dict[tuple[int, int], dict[str, str | None]] = {}
        self.precommits: dict[tuple[int, int], dict[str, str | None]] = {}
        self.precommit_wires: dict[tuple[int, int], dict[str, dict]] = {}
        self.round_claims: dict[str, int] = {}
        self.own_votes: set[tuple[int, int, str]] = set()
        self.future: list[dict] = []
        self.catchup_stash: dict[int, dict] = {}
        self.pending_commit: tuple[int, int, str] | None = None
        self.commits: list[dict] = []
        self.evidence_seen: set[tuple[int, int, str, str]] = set()
        self.invalid_dropped = 0
        self.crashed = False
        self.steps_processed = 0

    # -- identity ---------------------------------------------------------

    @property
    def public_hex(self) -> str:
        return self.bundle.signing.public_hex

    def proposer_index(self, height: int, round_number: int) -> int:
        return (height + round_number) % len(self.validators)

    def is_proposer(self, height: int, round_number: int) -> bool:
        return self.proposer_index(height, round_number) == self.index

    def timeout_ms(self, round_number: int) -> int:
        # base timeout grows by half per round so lagging rounds stay live
        return int(self.block_time_ms * (1.5**round_number))

    # -- transaction intake -------------------------------------------------

    def submit(self, tx: Transaction) -> bool:
        if not validate_transaction(self.chain, tx):
            return False
        self.chain = append_pending(self.chain, tx)
        return True

    # -- round machinery ----------------------------------------------------

    def start(self, now: int) -> Effects:
        return self._enter_round(self.height, 0, now)

    def _enter_round(self, height: int, round_number: int, now: int) -> Effects:
        effects = Effects()
        self.height = height
        self.round = round_number
        self.step = PROPOSE_STEP
        effects.timers.append(
            (self.timeout_ms(round_number), (height, round_number, PROPOSE_STEP))
        )
        if self.is_proposer(height, round_number):
            effects.extend(self._propose(now))
        effects.extend(self._revisit_round(now))
        return effects

    def _revisit_round(self, now: int) -> Effects:
        """Act on proposals and quorums that arrived before we entered the round."""
        effects = Effects()
        key = (self.height, self.round)
        slot = self.proposals.get(key)
        if slot and self.step == PROPOSE_STEP:
            effects.extend(self._consider_proposal(next(iter(slot.values())), now))
        effects.extend(self._check_polka(key, now))
        reached, value = self._quorum_value(self.precommits.get(key, {}))
        if reached:
            if value is None:
                if self.round == key[1]:
                    effects.extend(self._enter_round(self.height, key[1] + 1, now))
            else:
                effects.extend(self._commit(key[0], key[1], value, now))
        return effects

    def _prev_commit_payload(self) -> dict | None:
        if self.chain.height == 0:
            return None
        return self.chain.tip.to_wire()

    def _propose(self, now: int) -> Effects:
        effects = Effects()
        if self.fault_kind == BYZANTINE:
            return self._propose_equivocating(now)
        if self.locked_hash is not None:
            block = self.blocks_by_hash.get(self.height, {}).get(self.locked_hash)
        else:
            block = form_block(self.chain, max_txs=self.max_block_txs, timestamp=now)
        if block is None:
            return effects
        wire = make_message(
            self.bundle,
            PROPOSAL,
            self.height,
            self.round,
            block.hash_hex,
            block_wire=block.to_wire(),
            prev_commit=self._prev_commit_payload(),
        )
        effects.broadcasts.append(wire)
        return effects

    def _propose_equivocating(self, now: int) -> Effects:
        effects = Effects()
        peers = [i for i in range(len(self.validators)) if i != self.index]
        halves = (peers[0::2] + [self.index], peers[1::2])
        for offset, targets in enumerate(halves):
            block = form_block(
                self.chain, max_txs=self.max_block_txs, timestamp=now + offset
            )
            wire = make_message(
                self.bundle,
                PROPOSAL,
                self.height,
                self.round,
                block.hash_hex,
                block_wire=block.to_wire(),
                prev_commit=self._prev_commit_payload(),
            )
            effects.multicasts.append((wire, list(targets)))
        return effects

    # -- incoming ----------------------------------------------------------

    def on_message(self, wire: dict, now: int) -> Effects:
        effects = Effects()
        if self.crashed:
            return effects
        if not self._admissible(wire):
            self.invalid_dropped += 1
            return effects
        height = wire["height"]
        if height < self.height:
            return effects
        if height > self.height:
            effects.extend(self._try_catch_up(wire, now))
            if height > self.height:
                self.future.append(wire)
                return effects
        effects.extend(self._process_current(wire, now))
        return effects

    def _admissible(self, wire: dict) -> bool:
        try:
            if wire["kind"] not in (PROPOSAL, PREVOTE, PRECOMMIT):
                return False
            if wire["height"] < 1 or wire["round"] < 0:
                return False
            if wire["sender"] not in self.validators:
                return False
            return verify_message(wire)
        except Exception:
            return False

    def _try_catch_up(self, wire: dict, now: int) -> Effects:
        """Adopt proposers' embedded previous commits to rejoin the tip."""
        effects = Effects()
        prev = wire.get("prev_commit")
        if isinstance(prev, dict):
            height = prev.get("header", {}).get("height")
            if isinstance(height, int) and height >= self.height:
                self.catchup_stash.setdefault(height, prev)
        while self.height in self.catchup_stash:
            try:
                block = Block.from_wire(self.catchup_stash.pop(self.height))
            except Exception:
                break
            certificate = block.commit_certificate
            if certificate is None:
                break
            if not verify_certificate(certificate, self.validators, block.hash_hex):
                break
            if not validate_block(self.chain, block):
                break
            effects.extend(self._finalize(block, certificate, now))
        return effects

    def _process_current(self, wire: dict, now: int) -> Effects:
        kind = wire["kind"]
        effects = Effects()
        self._note_round_claim(wire)
        if kind == PROPOSAL:
            effects.extend(self._on_proposal(wire, now))
        elif kind == PREVOTE:
            effects.extend(self._on_prevote(wire, now))
        else:
            effects.extend(self._on_precommit(wire, now))
        effects.extend(self._maybe_skip_round(now))
        return effects

    def _note_round_claim(self, wire: dict) -> None:
        if wire["height"] == self.height:
            sender = wire["sender"]
            self.round_claims[sender] = max(
                self.round_claims.get(sender, 0), wire["round"]
            )

    def _maybe_skip_round(self, now: int) -> Effects:
        # f+1 distinct senders ahead of us pull us to their minimum round
        ahead = sorted(r for r in self.round_claims.values() if r > self.round)
        if len(ahead) >= skip_threshold(len(self.validators)):
            target = ahead[-skip_threshold(len(self.validators))]
            if target > self.round:
                return self._enter_round(self.height, target, now)
        return Effects()

    def _record_evidence(self, wire: dict, first: str | None, effects: Effects) -> None:
        key = (wire["height"], wire["round"], wire["kind"], wire["sender"])
        if key in self.evidence_seen:
            return
        self.evidence_seen.add(key)
        effects.events.append(
            {
                "type": "evidence",
                "observer": self.index,
                "offender": wire["sender"],
                "height": wire["height"],
                "round": wire["round"],
                "kind": wire["kind"],
                "hashes": sorted({str(first), str(wire["block_hash"])}),
            }
        )

    def _on_proposal(self, wire: dict, now: int) -> Effects:
        effects = Effects()
        height, round_number = wire["height"], wire["round"]
        proposer = self.validators[self.proposer_index(height, round_number)]
        if wire["sender"] != proposer:
            self.invalid_dropped += 1
            return effects
        try:
            block = Block.from_wire(wire["block"])
        except Exception:
            self.invalid_dropped += 1
            return effects
        if block.hash_hex != wire["block_hash"]:
            self.invalid_dropped += 1
            return effects
        slot = self.proposals.setdefault((height, round_number), {})
        if slot and block.hash_hex not in slot:
            self._record_evidence(wire, next(iter(slot)), effects)
        first_for_slot = not slot
        if block.hash_hex not in slot:
            slot[block.hash_hex] = block
        self.blocks_by_hash.setdefault(height, {})[block.hash_hex] = block

        effects.extend(self._complete_pending_commit(now))

        if round_number != self.round or self.step != PROPOSE_STEP or not first_for_slot:
            return effects
        effects.extend(self._consider_proposal(block, now))
        return effects

    def _consider_proposal(self, block: Block, now: int) -> Effects:
        if validate_block(self.chain, block) and (
            self.locked_hash is None or self.locked_hash == block.hash_hex
        ):
            vote_hash: str | None = block.hash_hex
        else:
            vote_hash = NIL
        return self._cast_prevote(vote_hash, now)

    def _cast_prevote(self, block_hash: str | None, now: int) -> Effects:
        effects = Effects()
        key = (self.height, self.round, PREVOTE)
        if key in self.own_votes:
            return effects
        self.own_votes.add(key)
        self.step = PREVOTE_STEP
        effects.timers.append(
            (self.timeout_ms(self.round), (self.height, self.round, PREVOTE_STEP))
        )
        if self.fault_kind == BYZANTINE and block_hash is not None:
            effects.extend(self._equivocate_vote(PREVOTE, block_hash))
            return effects
        effects.broadcasts.append(
            make_message(self.bundle, PREVOTE, self.height, self.round, block_hash)
        )
        return effects

    def _cast_precommit(self, block_hash: str | None, now: int) -> Effects:
        effects = Effects()
        key = (self.height, self.round, PRECOMMIT)
        if key in self.own_votes:
            return effects
        self.own_votes.add(key)
        self.step = PRECOMMIT_STEP
        effects.timers.append(
            (self.timeout_ms(self.round), (self.height, self.round, PRECOMMIT_STEP))
        )
        if self.fault_kind == BYZANTINE and block_hash is not None:
            effects.extend(self._equivocate_vote(PRECOMMIT, block_hash))
            return effects
        effects.broadcasts.append(
            make_message(self.bundle, PRECOMMIT, self.height, self.round, block_hash)
        )
        return effects

    def _equivocate_vote(self, kind: str, primary_hash: str) -> Effects:
        """Send the real vote to one half and a conflicting vote to the other."""
        effects = Effects()
        hashes = sorted(self.blocks_by_hash.get(self.height, {}))
        other = next((h for h in hashes if h != primary_hash), primary_hash)
        peers = [i for i in range(len(self.validators)) if i != self.index]
        effects.multicasts.append(
            (
                make_message(self.bundle, kind, self.height, self.round, primary_hash),
                peers[0::2] + [self.index],
            )
        )
        effects.multicasts.append(
            (
                make_message(self.bundle, kind, self.height, self.round, other),
                peers[1::2],
            )
        )
        return effects

    def _on_prevote(self, wire: dict, now: int) -> Effects:
        effects = Effects()
        key = (wire["height"], wire["round"])
        votes = self.prevotes.setdefault(key, {})
        sender = wire["sender"]
        if sender in votes:
            if votes[sender] != wire["block_hash"]:
                self._record_evidence(wire, votes[sender], effects)
            return effects
        votes[sender] = wire["block_hash"]
        effects.extend(self._check_polka(key, now))
        return effects

    def _quorum_value(self, votes: dict[str, str | None]) -> tuple[bool, str | None]:
        """(reached, value): value None may mean a nil quorum."""
        needed = quorum_size(len(self.validators))
        counts: dict[str | None, int] = {}
        for value in votes.values():
            counts[value] = counts.get(value, 0) + 1
        for value, count in counts.items():
            if count >= needed:
                return True, value
        return False, None

    def _check_polka(self, key: tuple[int, int], now: int) -> Effects:
        effects = Effects()
        height, round_number = key
        if height != self.height:
            return effects
        reached, value = self._quorum_value(self.prevotes.get(key, {}))
        if not reached:
            return effects
        if value is not None:
            # a newer polka releases an older lock
            if round_number > self.locked_round and self.locked_hash != value:
                self.locked_hash = None
            if round_number == self.round and self.step in (PROPOSE_STEP, PREVOTE_STEP):
                self.locked_hash = value
                self.locked_round = round_number
                effects.extend(self._cast_precommit(value, now))
        else:
            if round_number > self.locked_round:
                self.locked_hash = None
            if round_number == self.round and self.step == PREVOTE_STEP:
                effects.extend(self._cast_precommit(NIL, now))
        return effects

    def _on_precommit(self, wire: dict, now: int) -> Effects:
        effects = Effects()
        key = (wire["height"], wire["round"])
        votes = self.precommits.setdefault(key, {})
        wires = self.precommit_wires.setdefault(key, {})
        sender = wire["sender"]
        if sender in votes:
            if votes[sender] != wire["block_hash"]:
                self._record_evidence(wire, votes[sender], effects)
            return effects
        votes[sender] = wire["block_hash"]
        wires[sender] = wire
        reached, value = self._quorum_value(votes)
        if not reached:
            return effects
        height, round_number = key
        if value is None:
            if height == self.height and round_number >= self.round:
                effects.extend(self._enter_round(height, round_number + 1, now))
            return effects
        effects.extend(self._commit(height, round_number, value, now))
        return effects

    # -- commit ------------------------------------------------------------

    def _commit(self, height: int, round_number: int, block_hash: str, now: int) -> Effects:
        effects = Effects()
        if height != self.height:
            return effects
        votes = self.precommit_wires.get((height, round_number), {})
        matching = [w for w in votes.values() if w["block_hash"] == block_hash]
        certificate = build_certificate(height, round_number, block_hash, matching)
        block = self.blocks_by_hash.get(height, {}).get(block_hash)
        if block is None:
            self.pending_commit = (height, round_number, block_hash)
            return effects
        sealed = Block(
            header=block.header, txs=block.txs, commit_certificate=certificate
        )
        if not validate_block(self.chain, sealed):
            # disagreeing ancestry; impossible for honest flows, drop safely
            return effects
        effects.extend(self._finalize(sealed, certificate, now))
        return effects

    def _finalize(self, sealed: Block, certificate: dict, now: int) -> Effects:
        effects = Effects()
        height = sealed.header.height
        self.chain = apply_block(self.chain, sealed)
        self.commits.append(
            {
                "type": "commit",
                "node": self.index,
                "height": height,
                "round": certificate["round"],
                "hash": sealed.hash_hex,
                "block": sealed.to_wire(),
            }
        )
        effects.events.append(self.commits[-1])
        self.pending_commit = None
        self.locked_hash = None
        self.locked_round = -1
        self.round_claims = {}
        for store in (self.proposals, self.prevotes, self.precommits, self.precommit_wires):
            for key in [k for k in store if k[0] <= height]:
                del store[key]
        self.blocks_by_hash.pop(height, None)

        effects.extend(self._enter_round(height + 1, 0, now))

        # replay buffered future messages now at their height
        replayable = [w for w in self.future if w["height"] == self.height]
        self.future = [w for w in self.future if w["height"] > self.height]
        for wire in replayable:
            effects.extend(self._process_current(wire, now))
        return effects

    def _complete_pending_commit(self, now: int) -> Effects:
        effects = Effects()
        if self.pending_commit is None:
            return effects
        height, round_number, block_hash = self.pending_commit
        if height != self.height:
            self.pending_commit = None
            return effects
        if block_hash in self.blocks_by_hash.get(height, {}):
            effects.extend(self._commit(height, round_number, block_hash, now))
        return effects

    # -- timeouts ----------------------------------------------------------

    def on_timeout(self, payload: tuple[int, int, str], now: int) -> Effects:
        effects = Effects()
        if self.crashed:
            return effects
        height, round_number, step = payload
        if height != self.height or round_number != self.round:
            return effects
        if step == PROPOSE_STEP and self.step == PROPOSE_STEP:
            effects.extend(self._cast_prevote(NIL, now))
        elif step == PREVOTE_STEP and self.step == PREVOTE_STEP:
            effects.extend(self._cast_precommit(NIL, now))
        elif step == PRECOMMIT_STEP and self.step == PRECOMMIT_STEP:
            effects.extend(self._enter_round(height, round_number + 1, now))
        return effects

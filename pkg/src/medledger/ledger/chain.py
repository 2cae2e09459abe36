"""Block chain state: validation predicate, pending list, block lifecycle.

The chain starts from a fixed genesis block (height 0, all-zero parent
hash). Each block's hash is the hash of its canonical header; the header
commits to the ordered transaction ids through ``tx_root``, so any change
to a transaction body changes its recomputed id, breaks the root, and
invalidates every following block through the parent-hash linkage.

State transitions are functional: operations return new ``ChainState``
values and never mutate their inputs, so readers can hold snapshots.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

from ..crypto import Digest, Signature, hash_digest, verify
from .encoding import canonical_encode
from .tx import CREATE, TRANSFER, Outpoint, Transaction

GENESIS_PREV_HASH = "0" * 64
DEFAULT_MAX_BLOCK_TXS = 100

POW_MODE = "pow"
BFT_MODE = "bft"


class InvalidTransaction(Exception):
    pass


class InvalidBlock(Exception):
    pass


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: str
    tx_root: str
    timestamp: int
    seal: dict[str, Any]

    def to_wire(self) -> dict[str, Any]:
        return {
            "height": self.height,
            "prev_hash": self.prev_hash,
            "tx_root": self.tx_root,
            "timestamp": self.timestamp,
            "seal": copy.deepcopy(self.seal),
        }

    @classmethod
    def from_wire(cls, data: dict[str, Any]) -> "BlockHeader":
        return cls(
            height=int(data["height"]),
            prev_hash=data["prev_hash"],
            tx_root=data["tx_root"],
            timestamp=int(data["timestamp"]),
            seal=copy.deepcopy(data["seal"]),
        )

    def hash(self) -> Digest:
        return hash_digest(canonical_encode(self.to_wire()))

    @property
    def hash_hex(self) -> str:
        return self.hash().hex


def compute_tx_root(tx_ids: Iterable[str]) -> str:
    """Hash over the concatenated ordered transaction id digests."""
    return hash_digest(b"".join(bytes.fromhex(t) for t in tx_ids)).hex


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    txs: tuple[Transaction, ...] = ()
    commit_certificate: dict[str, Any] | None = None

    @property
    def hash_hex(self) -> str:
        return self.header.hash_hex

    def to_wire(self) -> dict[str, Any]:
        wire: dict[str, Any] = {
            "header": self.header.to_wire(),
            "txs": [tx.to_wire() for tx in self.txs],
        }
        if self.commit_certificate is not None:
            wire["commit_certificate"] = copy.deepcopy(self.commit_certificate)
        return wire

    @classmethod
    def from_wire(cls, data: dict[str, Any]) -> "Block":
        return cls(
            header=BlockHeader.from_wire(data["header"]),
            txs=tuple(Transaction.from_wire(t) for t in data["txs"]),
            commit_certificate=copy.deepcopy(data.get("commit_certificate")),
        )


def make_genesis() -> Block:
    """The fixed height-0 block shared by every node."""
    header = BlockHeader(
        height=0,
        prev_hash=GENESIS_PREV_HASH,
        tx_root=compute_tx_root([]),
        timestamp=0,
        seal={"type": "genesis"},
    )
    return Block(header=header)


@dataclass(frozen=True)
class OutputInfo:
    owner: str
    asset_id: str


@dataclass(frozen=True)
class ChainState:
    """Committed chain, unspent-output index, and the node's pending list."""

    blocks: tuple[Block, ...]
    utxo: dict[Outpoint, OutputInfo]
    pending: tuple[Transaction, ...] = ()
    mode: str = POW_MODE
    cumulative_work: int = 0
    committed_ids: frozenset[str] = frozenset()

    @classmethod
    def genesis(cls, mode: str = POW_MODE) -> "ChainState":
        return cls(blocks=(make_genesis(),), utxo={}, mode=mode)

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.tip.header.height


def block_work(block: Block) -> int:
    """PoW blocks weigh by difficulty; one unit per block otherwise."""
    seal = block.header.seal
    if seal.get("type") == "pow":
        return 2 ** int(seal.get("difficulty_bits", 0))
    return 0 if seal.get("type") == "genesis" else 1


def _meets_difficulty(digest: Digest, bits: int) -> bool:
    if bits == 0:
        return True
    value = int.from_bytes(digest.value, "big")
    return value >> (256 - bits) == 0


def _seal_valid(header: BlockHeader, mode: str) -> bool:
    seal = header.seal
    if not isinstance(seal, dict):
        return False
    kind = seal.get("type")
    if header.height == 0:
        return kind == "genesis"
    if mode == POW_MODE:
        if kind != "pow":
            return False
        bits = seal.get("difficulty_bits")
        nonce = seal.get("nonce")
        if not isinstance(bits, int) or not isinstance(nonce, int) or not 0 <= bits <= 32:
            return False
        return _meets_difficulty(header.hash(), bits)
    return kind == "bft"


def _is_hex(value: Any, length: int) -> bool:
    if not isinstance(value, str) or len(value) != length:
        return False
    try:
        bytes.fromhex(value)
    except ValueError:
        return False
    return True


def _well_formed(tx: Transaction) -> bool:
    # one input and one output keep every asset lineage at exactly one
    # live terminal output (the conservation rule)
    if tx.kind not in (CREATE, TRANSFER):
        return False
    if len(tx.inputs) != 1 or len(tx.outputs) != 1:
        return False
    if not isinstance(tx.asset, dict):
        return False
    if tx.kind == CREATE:
        if set(tx.asset) != {"data"} or not isinstance(tx.asset["data"], dict):
            return False
        if any(i.spends is not None for i in tx.inputs):
            return False
    else:
        if set(tx.asset) != {"id"} or not _is_hex(tx.asset.get("id"), 64):
            return False
        if any(i.spends is None for i in tx.inputs):
            return False
    for inp in tx.inputs:
        if not _is_hex(inp.owner, 64) or not _is_hex(inp.signature, 128):
            return False
    for out in tx.outputs:
        if not _is_hex(out.recipient, 64):
            return False
    return True


def _signatures_verify(tx: Transaction) -> bool:
    try:
        payload = tx.signing_payload()
    except ValueError:
        return False
    for inp in tx.inputs:
        try:
            sig = Signature.from_bytes(bytes.fromhex(inp.signature))
        except (ValueError, TypeError):
            return False
        if not verify(bytes.fromhex(inp.owner), payload, sig):
            return False
    return True


def _validate_against_utxo(
    utxo: dict[Outpoint, OutputInfo],
    committed_ids: frozenset[str] | set[str],
    tx: Transaction,
) -> bool:
    """Stateful checks against one unspent-output snapshot (pending ignored)."""
    if not _well_formed(tx):
        return False
    try:
        if tx.computed_id() != tx.id:
            return False
    except ValueError:
        return False
    if tx.id in committed_ids:
        return False
    if not _signatures_verify(tx):
        return False
    if tx.kind == CREATE:
        return True
    for inp in tx.inputs:
        info = utxo.get(inp.spends)
        if info is None:
            return False
        if info.owner != inp.owner:
            return False
        if info.asset_id != tx.asset["id"]:
            return False
    return True


def pending_spends(state: ChainState, exclude_id: str | None = None) -> set[Outpoint]:
    spent: set[Outpoint] = set()
    for tx in state.pending:
        if tx.id == exclude_id:
            continue
        for inp in tx.inputs:
            if inp.spends is not None:
                spent.add(inp.spends)
    return spent


def validate_transaction(state: ChainState, tx: Transaction) -> bool:
    """Total predicate: 1 iff the transaction is acceptable right now.

    Checks well-formedness, id recomputation, signatures against current
    owners, lineage, and double spends against both the unspent index and
    the pending list. Never raises on adversarial input.
    """
    try:
        if not _validate_against_utxo(state.utxo, state.committed_ids, tx):
            return False
        if tx.kind == TRANSFER:
            taken = pending_spends(state, exclude_id=tx.id)
            if any(inp.spends in taken for inp in tx.inputs):
                return False
        return True
    except Exception:
        return False


def append_pending(state: ChainState, tx: Transaction) -> ChainState:
    """Append a validated transaction FIFO; duplicate ids are ignored."""
    if any(existing.id == tx.id for existing in state.pending):
        return state
    if not validate_transaction(state, tx):
        raise InvalidTransaction(f"transaction {tx.id[:16]} rejected")
    return replace(state, pending=state.pending + (tx,))


def form_block(
    state: ChainState,
    max_txs: int = DEFAULT_MAX_BLOCK_TXS,
    timestamp: int = 0,
    seal: dict[str, Any] | None = None,
) -> Block:
    """Assemble up to ``max_txs`` mutually consistent pending transactions.

    Selection is FIFO; a pending transaction conflicting with an earlier
    selection is skipped. Selected transactions stay in the pending list
    until the block is committed.
    """
    scratch = dict(state.utxo)
    seen_ids = set(state.committed_ids)
    selected: list[Transaction] = []
    for tx in state.pending:
        if len(selected) >= max_txs:
            break
        if _validate_against_utxo(scratch, seen_ids, tx):
            selected.append(tx)
            seen_ids.add(tx.id)
            _apply_to_utxo(scratch, tx)
    header = BlockHeader(
        height=state.height + 1,
        prev_hash=state.tip.hash_hex,
        tx_root=compute_tx_root([tx.id for tx in selected]),
        timestamp=timestamp,
        seal=seal if seal is not None else {"type": "bft"},
    )
    return Block(header=header, txs=tuple(selected))


def _apply_to_utxo(utxo: dict[Outpoint, OutputInfo], tx: Transaction) -> None:
    for inp in tx.inputs:
        if inp.spends is not None:
            del utxo[inp.spends]
    for index, out in enumerate(tx.outputs):
        utxo[Outpoint(tx_id=tx.id, index=index)] = OutputInfo(
            owner=out.recipient, asset_id=tx.asset_id
        )


def validate_block(state: ChainState, block: Block) -> bool:
    """True iff linkage, root, seal and every transaction check out.

    A single invalid transaction rejects the whole block.
    """
    try:
        header = block.header
        if header.height != state.height + 1:
            return False
        if header.prev_hash != state.tip.hash_hex:
            return False
        if header.tx_root != compute_tx_root([tx.id for tx in block.txs]):
            return False
        if not _seal_valid(header, state.mode):
            return False
        scratch = dict(state.utxo)
        seen_ids = set(state.committed_ids)
        for tx in block.txs:
            if not _validate_against_utxo(scratch, seen_ids, tx):
                return False
            seen_ids.add(tx.id)
            _apply_to_utxo(scratch, tx)
        return True
    except Exception:
        return False


def apply_block(state: ChainState, block: Block) -> ChainState:
    """Extend the chain; committed transaction ids leave the pending list."""
    if not validate_block(state, block):
        raise InvalidBlock(f"block at height {block.header.height} rejected")
    utxo = dict(state.utxo)
    for tx in block.txs:
        _apply_to_utxo(utxo, tx)
    committed = {tx.id for tx in block.txs}
    return ChainState(
        blocks=state.blocks + (block,),
        utxo=utxo,
        pending=tuple(tx for tx in state.pending if tx.id not in committed),
        mode=state.mode,
        cumulative_work=state.cumulative_work + block_work(block),
        committed_ids=state.committed_ids | committed,
    )


def replay_chain(blocks: Iterable[Block], mode: str = POW_MODE) -> ChainState:
    """Rebuild state from genesis, validating every block on the way."""
    blocks = list(blocks)
    if not blocks or blocks[0].to_wire() != make_genesis().to_wire():
        raise InvalidBlock("chain must start at the fixed genesis block")
    state = ChainState.genesis(mode)
    for block in blocks[1:]:
        state = apply_block(state, block)
    return state


def _block_internally_consistent(block: Block, mode: str) -> bool:
    header = block.header
    if header.height == 0:
        # genesis is a fixed constant: any deviation is tampering
        return block.to_wire() == make_genesis().to_wire()
    if header.tx_root != compute_tx_root([tx.id for tx in block.txs]):
        return False
    for tx in block.txs:
        try:
            if tx.computed_id() != tx.id:
                return False
        except ValueError:
            return False
        if not _signatures_verify(tx):
            return False
    return _seal_valid(header, mode)


def detect_tamper(blocks: Iterable[Block], mode: str = POW_MODE) -> int | None:
    """Lowest height whose linkage, root, seal or content breaks; None if clean."""
    previous: Block | None = None
    for block in blocks:
        height = block.header.height
        if previous is None:
            if height != 0 or not _block_internally_consistent(block, mode):
                return height
        else:
            if height != previous.header.height + 1:
                return height
            if block.header.prev_hash != previous.hash_hex:
                return height
            if not _block_internally_consistent(block, mode):
                return height
        previous = block
    return None


def get_assets_by_public_key(state: ChainState, pubkey: str) -> list[str]:
    """Asset ids whose current unspent terminal output is owned by the key."""
    owned = {info.asset_id for info in state.utxo.values() if info.owner == pubkey}
    ordered: list[str] = []
    for block in state.blocks:
        for tx in block.txs:
            if tx.kind == CREATE and tx.id in owned:
                ordered.append(tx.id)
    return ordered


def get_asset_history(state: ChainState, asset_id: str) -> list[Transaction]:
    """The CREATE then every TRANSFER of the asset, in commit order."""
    history: list[Transaction] = []
    for block in state.blocks:
        for tx in block.txs:
            if tx.asset_id == asset_id:
                history.append(tx)
    return history

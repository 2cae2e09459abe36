"""Asset ledger: transactions, blocks, chain state, PoW and fork choice."""

from .chain import (
    BFT_MODE,
    DEFAULT_MAX_BLOCK_TXS,
    GENESIS_PREV_HASH,
    POW_MODE,
    Block,
    BlockHeader,
    ChainState,
    InvalidBlock,
    InvalidTransaction,
    OutputInfo,
    append_pending,
    apply_block,
    block_work,
    compute_tx_root,
    detect_tamper,
    form_block,
    get_asset_history,
    get_assets_by_public_key,
    make_genesis,
    pending_spends,
    replay_chain,
    validate_block,
    validate_transaction,
)
from .encoding import canonical_encode, compute_tx_id
from .forkchoice import InvalidChain, chain_work, fork_choice
from .pow import DEFAULT_DIFFICULTY_BITS, mine_pow, mining_attempts
from .tx import (
    CREATE,
    TRANSFER,
    Outpoint,
    Transaction,
    TxInput,
    TxOutput,
    build_create_tx,
    build_transfer_tx,
)

__all__ = [
    "BFT_MODE",
    "CREATE",
    "DEFAULT_DIFFICULTY_BITS",
    "DEFAULT_MAX_BLOCK_TXS",
    "GENESIS_PREV_HASH",
    "POW_MODE",
    "TRANSFER",
    "Block",
    "BlockHeader",
    "ChainState",
    "InvalidBlock",
    "InvalidChain",
    "InvalidTransaction",
    "Outpoint",
    "OutputInfo",
    "Transaction",
    "TxInput",
    "TxOutput",
    "append_pending",
    "apply_block",
    "block_work",
    "build_create_tx",
    "build_transfer_tx",
    "canonical_encode",
    "chain_work",
    "compute_tx_id",
    "compute_tx_root",
    "detect_tamper",
    "fork_choice",
    "form_block",
    "get_asset_history",
    "get_assets_by_public_key",
    "make_genesis",
    "mine_pow",
    "mining_attempts",
    "pending_spends",
    "replay_chain",
    "validate_block",
    "validate_transaction",
]

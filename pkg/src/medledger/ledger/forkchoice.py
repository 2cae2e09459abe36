"""Fork choice: keep the chain with the largest cumulative work.

Only proof-of-work chains can fork; a committed BFT block is final, so
calling fork choice on a BFT-mode state is a programming error. Ties keep
the first-seen chain. When a reorg wins, transactions unique to the
abandoned branch are re-validated and returned to the pending list so
they can be considered for the next block.
"""

from __future__ import annotations

from collections.abc import Sequence

from .chain import (
    BFT_MODE,
    Block,
    ChainState,
    InvalidBlock,
    apply_block,
    append_pending,
    block_work,
    validate_transaction,
)


class InvalidChain(Exception):
    """Candidate suffix does not attach or contains an invalid block."""


def fork_choice(local: ChainState, candidate: Sequence[Block]) -> ChainState:
    """Resolve a competing suffix against the local chain.

    The candidate must fork from some committed local block; it is
    validated in full before comparison and rejected whole if any block
    fails. Returns the local state unchanged when the local chain wins
    or ties, otherwise the reorganized state.
    """
    if local.mode == BFT_MODE:
        raise InvalidChain("finalized chains do not reorganize")
    if not candidate:
        return local
    fork_index = None
    for index, block in enumerate(local.blocks):
        if block.hash_hex == candidate[0].header.prev_hash:
            fork_index = index
            break
    if fork_index is None:
        raise InvalidChain("candidate does not attach to any committed block")

    # replay the shared prefix, then the candidate suffix, validating each block
    rebuilt = _replay_prefix(local, fork_index)
    for block in candidate:
        try:
            rebuilt = apply_block(rebuilt, block)
        except InvalidBlock as exc:
            raise InvalidChain(str(exc)) from exc

    if rebuilt.cumulative_work <= local.cumulative_work:
        return local

    # reorg: abandoned-branch transactions go back through validation into pending
    new_ids = {tx.id for block in rebuilt.blocks for tx in block.txs}
    abandoned = [
        tx
        for block in local.blocks[fork_index + 1 :]
        for tx in block.txs
        if tx.id not in new_ids
    ]
    result = rebuilt
    for tx in abandoned + [t for t in local.pending if t.id not in new_ids]:
        if validate_transaction(result, tx):
            result = append_pending(result, tx)
    return result


def _replay_prefix(local: ChainState, fork_index: int) -> ChainState:
    state = ChainState.genesis(local.mode)
    for block in local.blocks[1 : fork_index + 1]:
        state = apply_block(state, block)
    return state


def chain_work(blocks: Sequence[Block]) -> int:
    return sum(block_work(block) for block in blocks)

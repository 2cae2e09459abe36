"""Proof-of-work sealing.

Desk-scale difficulty: the default 12 bits seals a block in milliseconds.
A production deployment would raise difficulty until block time reaches
minutes; that rate is a deployment parameter, not a test target.
"""

from __future__ import annotations

from dataclasses import replace

from .chain import Block, BlockHeader, _meets_difficulty

DEFAULT_DIFFICULTY_BITS = 12
MAX_DIFFICULTY_BITS = 32


def mine_pow(block: Block, difficulty_bits: int = DEFAULT_DIFFICULTY_BITS) -> Block:
    """Search nonces sequentially until the header hash meets the difficulty."""
    if not 0 <= difficulty_bits <= MAX_DIFFICULTY_BITS:
        raise ValueError(f"difficulty_bits must be within [0, {MAX_DIFFICULTY_BITS}]")
    nonce = 0
    while True:
        header = replace(
            block.header,
            seal={"type": "pow", "nonce": nonce, "difficulty_bits": difficulty_bits},
        )
        if _meets_difficulty(header.hash(), difficulty_bits):
            return Block(header=header, txs=block.txs)
        nonce += 1


def mining_attempts(block: Block) -> int:
    """Number of nonce trials the sequential search performed."""
    return int(block.header.seal["nonce"]) + 1

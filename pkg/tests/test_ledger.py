import math
import random
import statistics

import pytest

from medledger.ledger import (
    ChainState,
    InvalidChain,
    InvalidTransaction,
    Outpoint,
    Transaction,
    append_pending,
    apply_block,
    block_work,
    build_create_tx,
    build_transfer_tx,
    canonical_encode,
    compute_tx_id,
    detect_tamper,
    fork_choice,
    form_block,
    get_asset_history,
    get_assets_by_public_key,
    make_genesis,
    mine_pow,
    mining_attempts,
    replay_chain,
    validate_block,
    validate_transaction,
)

from .oracles import (
    independent_canonical_encode,
    independent_tx_id,
    oracle_utxo_from_replay,
    oracle_validate_transaction,
)


def commit(state, *txs, bits=0, timestamp=0):
    """Append, form, mine and apply one block carrying the given transactions."""
    for tx in txs:
        state = append_pending(state, tx)
    block = mine_pow(form_block(state, timestamp=timestamp), difficulty_bits=bits)
    return apply_block(state, block)


def live_outpoint(state, asset_id):
    for ref, info in state.utxo.items():
        if info.asset_id == asset_id:
            return ref
    raise AssertionError(f"no live output for {asset_id}")


class TestCanonicalEncoding:
    def test_insertion_order_is_irrelevant(self):
        first = {"b": 1, "a": {"y": 2, "x": 3}}
        second = {"a": {"x": 3, "y": 2}, "b": 1}
        assert canonical_encode(first) == canonical_encode(second)
        assert compute_tx_id(first) == compute_tx_id(second)

    def test_known_body_matches_independent_encoder(self):
        body = {
            "kind": "CREATE",
            "asset": {"data": {"type": "record", "note": "scan #1 é"}},
            "inputs": [{"owner": "ab" * 32, "signature": None, "spends": None}],
            "outputs": [{"recipient": "ab" * 32}],
            "metadata": {"n": 3},
        }
        assert canonical_encode(body).decode() == independent_canonical_encode(body)
        assert compute_tx_id(body).hex == independent_tx_id(body)

    def test_empty_metadata_differs_from_absent(self):
        base = {"kind": "CREATE", "asset": {"data": {}}}
        with_empty = dict(base, metadata={})
        assert compute_tx_id(base) != compute_tx_id(with_empty)

    def test_non_finite_numbers_rejected(self):
        with pytest.raises(ValueError):
            canonical_encode({"value": float("nan")})
        with pytest.raises(ValueError):
            canonical_encode({"value": float("inf")})

    def test_id_field_must_be_absent(self):
        with pytest.raises(ValueError):
            compute_tx_id({"id": "x", "kind": "CREATE"})


class TestBuilders:
    def test_create_gives_owner_one_unspent_output(self, key_pool):
        owner = key_pool[0]
        state = commit(ChainState.genesis(), build_create_tx(owner, {"k": "v"}))
        assets = get_assets_by_public_key(state, owner.signing.public_hex)
        assert len(assets) == 1
        refs = [r for r, info in state.utxo.items() if info.owner == owner.signing.public_hex]
        assert len(refs) == 1

    def test_transfer_moves_ownership(self, key_pool):
        owner, doctor = key_pool[0], key_pool[1]
        create = build_create_tx(owner, {"k": "v"})
        state = commit(ChainState.genesis(), create)
        transfer = build_transfer_tx(
            owner, create.id, live_outpoint(state, create.id), doctor.signing.public_hex
        )
        state = commit(state, transfer)
        assert get_assets_by_public_key(state, doctor.signing.public_hex) == [create.id]
        assert get_assets_by_public_key(state, owner.signing.public_hex) == []

    def test_transfer_of_nonexistent_asset_rejected(self, key_pool):
        owner = key_pool[0]
        state = ChainState.genesis()
        ghost = build_transfer_tx(
            owner, "ff" * 32, Outpoint("ee" * 32, 0), key_pool[1].signing.public_hex
        )
        assert not validate_transaction(state, ghost)


class TestValidation:
    def test_fresh_create_valid(self, key_pool):
        tx = build_create_tx(key_pool[0], {"type": "record"})
        assert validate_transaction(ChainState.genesis(), tx)
        assert oracle_validate_transaction((make_genesis(),), (), tx)

    def test_double_spend_rejected(self, key_pool):
        owner = key_pool[0]
        create = build_create_tx(owner, {})
        state = commit(ChainState.genesis(), create)
        ref = live_outpoint(state, create.id)
        first = build_transfer_tx(owner, create.id, ref, key_pool[1].signing.public_hex)
        second = build_transfer_tx(owner, create.id, ref, key_pool[2].signing.public_hex)
        state = commit(state, first)
        assert not validate_transaction(state, second)
        assert not oracle_validate_transaction(state.blocks, state.pending, second)

    def test_non_owner_signature_rejected(self, key_pool):
        owner, thief = key_pool[0], key_pool[3]
        create = build_create_tx(owner, {})
        state = commit(ChainState.genesis(), create)
        theft = build_transfer_tx(
            thief, create.id, live_outpoint(state, create.id), thief.signing.public_hex
        )
        assert not validate_transaction(state, theft)
        assert not oracle_validate_transaction(state.blocks, state.pending, theft)

    def test_tampered_metadata_breaks_id(self, key_pool):
        tx = build_create_tx(key_pool[0], {}, metadata={"note": "clean"})
        wire = tx.to_wire()
        wire["metadata"]["note"] = "evil"
        tampered = Transaction.from_wire(wire)
        assert not validate_transaction(ChainState.genesis(), tampered)

    def test_replayed_committed_tx_rejected(self, key_pool):
        create = build_create_tx(key_pool[0], {})
        state = commit(ChainState.genesis(), create)
        assert not validate_transaction(state, create)

    def test_wrong_lineage_rejected(self, key_pool):
        owner = key_pool[0]
        first = build_create_tx(owner, {"n": 1})
        second = build_create_tx(owner, {"n": 2})
        state = commit(ChainState.genesis(), first, second)
        crossed = build_transfer_tx(
            owner, first.id, live_outpoint(state, second.id), key_pool[1].signing.public_hex
        )
        assert not validate_transaction(state, crossed)
        assert not oracle_validate_transaction(state.blocks, state.pending, crossed)

    def test_predicate_is_total_on_garbage(self):
        junk = Transaction(
            kind="MINT", asset={}, inputs=(), outputs=(), id="zz", metadata=None
        )
        assert validate_transaction(ChainState.genesis(), junk) is False


class TestPending:
    def test_append_is_idempotent(self, key_pool):
        state = ChainState.genesis()
        tx = build_create_tx(key_pool[0], {})
        state = append_pending(append_pending(state, tx), tx)
        assert len(state.pending) == 1

    def test_conflicting_append_rejected(self, key_pool):
        owner = key_pool[0]
        create = build_create_tx(owner, {})
        state = commit(ChainState.genesis(), create)
        ref = live_outpoint(state, create.id)
        state = append_pending(
            state, build_transfer_tx(owner, create.id, ref, key_pool[1].signing.public_hex)
        )
        rival = build_transfer_tx(owner, create.id, ref, key_pool[2].signing.public_hex)
        with pytest.raises(InvalidTransaction):
            append_pending(state, rival)

    def test_fifo_order_preserved(self, key_pool):
        state = ChainState.genesis()
        txs = [build_create_tx(key_pool[0], {"n": i}) for i in range(5)]
        for tx in txs:
            state = append_pending(state, tx)
        assert [t.id for t in state.pending] == [t.id for t in txs]


class TestBlockFormation:
    def test_respects_max_txs(self, key_pool):
        state = ChainState.genesis()
        for i in range(3):
            state = append_pending(state, build_create_tx(key_pool[0], {"n": i}))
        block = form_block(state, max_txs=2)
        assert [t.id for t in block.txs] == [t.id for t in state.pending[:2]]

    def test_intra_block_conflict_skipped(self, key_pool):
        owner = key_pool[0]
        create = build_create_tx(owner, {})
        state = commit(ChainState.genesis(), create)
        ref = live_outpoint(state, create.id)
        first = build_transfer_tx(owner, create.id, ref, key_pool[1].signing.public_hex)
        rival = build_transfer_tx(owner, create.id, ref, key_pool[2].signing.public_hex)
        state = append_pending(state, first)
        # force the rival into pending to model a race between nodes
        object.__setattr__(state, "pending", state.pending + (rival,))
        block = form_block(state)
        assert [t.id for t in block.txs] == [first.id]

    def test_empty_block_links_tip(self, key_pool):
        state = ChainState.genesis()
        block = mine_pow(form_block(state), difficulty_bits=0)
        assert block.txs == ()
        assert validate_block(state, block)

    def test_pending_untouched_until_commit(self, key_pool):
        state = append_pending(ChainState.genesis(), build_create_tx(key_pool[0], {}))
        form_block(state)
        assert len(state.pending) == 1


class TestPow:
    def test_difficulty_zero_first_nonce(self):
        block = mine_pow(form_block(ChainState.genesis()), difficulty_bits=0)
        assert block.header.seal["nonce"] == 0

    def test_leading_zero_property(self):
        block = mine_pow(
            form_block(ChainState.genesis(), timestamp=7), difficulty_bits=10
        )
        digest = int(block.header.hash().value.hex(), 16)
        assert digest >> (256 - 10) == 0

    def test_mean_attempts_short_run(self, key_pool):
        attempts = []
        for seed in range(30):
            block = form_block(ChainState.genesis(), timestamp=seed)
            attempts.append(mining_attempts(mine_pow(block, difficulty_bits=6)))
        mean = statistics.mean(attempts)
        assert 0.5 * 64 <= mean <= 1.5 * 64

    def test_difficulty_bound(self):
        with pytest.raises(ValueError):
            mine_pow(form_block(ChainState.genesis()), difficulty_bits=33)


class TestBlockLifecycle:
    def test_fresh_block_validates_and_applies(self, key_pool):
        state = append_pending(ChainState.genesis(), build_create_tx(key_pool[0], {}))
        block = mine_pow(form_block(state), difficulty_bits=4)
        assert validate_block(state, block)
        applied = apply_block(state, block)
        assert applied.height == 1
        assert applied.pending == ()

    def test_corrupted_signature_rejects_whole_block(self, key_pool):
        state = append_pending(ChainState.genesis(), build_create_tx(key_pool[0], {}))
        block = mine_pow(form_block(state), difficulty_bits=0)
        wire = block.to_wire()
        sig = wire["txs"][0]["inputs"][0]["signature"]
        wire["txs"][0]["inputs"][0]["signature"] = ("0" if sig[0] != "0" else "1") + sig[1:]
        from medledger.ledger import Block

        assert not validate_block(state, Block.from_wire(wire))

    def test_mismatched_prev_hash_rejected(self, key_pool):
        state = ChainState.genesis()
        block = mine_pow(form_block(state), difficulty_bits=0)
        extended = apply_block(state, block)
        # stale block against the new tip
        assert not validate_block(extended, block)

    def test_reapplying_spends_fails(self, key_pool):
        owner = key_pool[0]
        create = build_create_tx(owner, {})
        state = append_pending(ChainState.genesis(), create)
        block = mine_pow(form_block(state), difficulty_bits=0)
        applied = apply_block(state, block)
        assert not validate_block(applied, block)

    def test_utxo_matches_replay_oracle(self, key_pool):
        rng = random.Random(11)
        state = ChainState.genesis()
        assets = []
        for round_number in range(6):
            txs = []
            minted = []
            spent_assets = set()
            for _ in range(rng.randint(1, 3)):
                if assets and rng.random() < 0.5:
                    asset_id, owner = rng.choice(assets)
                    if asset_id in spent_assets:
                        continue
                    recipient = rng.choice(key_pool)
                    tx = build_transfer_tx(
                        owner,
                        asset_id,
                        live_outpoint(state, asset_id),
                        recipient.signing.public_hex,
                    )
                    if validate_transaction(state, tx):
                        txs.append(tx)
                        spent_assets.add(asset_id)
                        assets[assets.index((asset_id, owner))] = (asset_id, recipient)
                else:
                    owner = rng.choice(key_pool)
                    tx = build_create_tx(owner, {"round": round_number})
                    txs.append(tx)
                    minted.append((tx.id, owner))
            state = commit(state, *txs)
            assets.extend(minted)
            expected = oracle_utxo_from_replay(state.blocks)
            actual = {
                (ref.tx_id, ref.index): (info.owner, info.asset_id)
                for ref, info in state.utxo.items()
            }
            assert actual == expected

    def test_conservation_one_live_output_per_lineage(self, key_pool):
        owner = key_pool[0]
        create = build_create_tx(owner, {})
        state = commit(ChainState.genesis(), create)
        transfer = build_transfer_tx(
            owner, create.id, live_outpoint(state, create.id), key_pool[1].signing.public_hex
        )
        state = commit(state, transfer)
        lineages = [info.asset_id for info in state.utxo.values()]
        assert lineages.count(create.id) == 1


class TestTamperDetection:
    def _chain(self, key_pool, length=6, bits=6):
        state = ChainState.genesis()
        for i in range(length):
            state = commit(
                state,
                build_create_tx(key_pool[i % len(key_pool)], {"h": i}),
                bits=bits,
                timestamp=i,
            )
        return state

    def test_clean_chain_reports_none(self, key_pool):
        state = self._chain(key_pool)
        assert detect_tamper(state.blocks) is None

    def test_mutated_tx_detected_and_propagates(self, key_pool):
        from medledger.ledger import Block

        state = self._chain(key_pool)
        target = 3
        blocks = list(state.blocks)
        wire = blocks[target].to_wire()
        wire["txs"][0]["asset"]["data"]["h"] = 999
        blocks[target] = Block.from_wire(wire)
        assert detect_tamper(blocks) == target
        # sequential re-validation fails from the mutated height onward
        replayed = ChainState.genesis()
        reached = 0
        for block in blocks[1:]:
            if not validate_block(replayed, block):
                break
            replayed = apply_block(replayed, block)
            reached = block.header.height
        assert reached == target - 1

    def test_timestamp_mutation_detected_at_height(self, key_pool):
        from dataclasses import replace

        from medledger.ledger import Block

        state = self._chain(key_pool, bits=8)
        target = 2
        blocks = list(state.blocks)
        header = replace(blocks[target].header, timestamp=999_999)
        blocks[target] = Block(header=header, txs=blocks[target].txs)
        assert detect_tamper(blocks) == target

    def test_genesis_mutation_detected(self, key_pool):
        from dataclasses import replace

        from medledger.ledger import Block

        state = self._chain(key_pool)
        blocks = list(state.blocks)
        blocks[0] = Block(header=replace(blocks[0].header, timestamp=5), txs=())
        assert detect_tamper(blocks) == 0


class TestForkChoice:
    def test_longer_fork_adopted_and_txs_requeued(self, key_pool):
        # two siblings race after a shared base; the two-block branch wins
        base = commit(ChainState.genesis(), build_create_tx(key_pool[0], {"base": 1}), bits=2)
        loser_tx = build_create_tx(key_pool[1], {"branch": "short"})
        local = commit(base, loser_tx, bits=2, timestamp=100)

        rival_state = append_pending(base, build_create_tx(key_pool[2], {"branch": "long"}))
        rival_first = mine_pow(form_block(rival_state, timestamp=200), difficulty_bits=2)
        rival_state = apply_block(rival_state, rival_first)
        rival_second = mine_pow(form_block(rival_state, timestamp=201), difficulty_bits=2)
        rival_state = apply_block(rival_state, rival_second)

        chosen = fork_choice(local, [rival_first, rival_second])
        assert [b.hash_hex for b in chosen.blocks] == [b.hash_hex for b in rival_state.blocks]
        assert loser_tx.id in {t.id for t in chosen.pending}

    def test_equal_work_keeps_first_seen(self, key_pool):
        base = commit(ChainState.genesis(), build_create_tx(key_pool[0], {}), bits=2)
        local = commit(base, build_create_tx(key_pool[1], {"n": 1}), bits=2, timestamp=10)
        rival_state = append_pending(base, build_create_tx(key_pool[2], {"n": 2}))
        rival = mine_pow(form_block(rival_state, timestamp=20), difficulty_bits=2)
        chosen = fork_choice(local, [rival])
        assert [b.hash_hex for b in chosen.blocks] == [b.hash_hex for b in local.blocks]

    def test_invalid_candidate_rejected_whole(self, key_pool):
        from medledger.ledger import Block

        local = commit(ChainState.genesis(), build_create_tx(key_pool[0], {}), bits=2)
        rival_state = append_pending(
            ChainState.genesis(), build_create_tx(key_pool[1], {"n": 1})
        )
        first = mine_pow(form_block(rival_state, timestamp=30), difficulty_bits=2)
        rival_state = apply_block(rival_state, first)
        rival_state = append_pending(rival_state, build_create_tx(key_pool[2], {"n": 2}))
        second = mine_pow(form_block(rival_state, timestamp=31), difficulty_bits=2)
        wire = second.to_wire()
        wire["txs"][0]["asset"]["data"]["n"] = 777  # id no longer recomputes
        with pytest.raises(InvalidChain):
            fork_choice(local, [first, Block.from_wire(wire)])

    def test_detached_candidate_rejected(self, key_pool):
        local = commit(ChainState.genesis(), build_create_tx(key_pool[0], {}), bits=2)
        foreign = commit(ChainState.genesis(), build_create_tx(key_pool[1], {}), bits=2)
        orphan = mine_pow(form_block(foreign, timestamp=50), difficulty_bits=2)
        orphan_wire = orphan.to_wire()
        orphan_wire["header"]["prev_hash"] = "ab" * 32
        from medledger.ledger import Block

        with pytest.raises(InvalidChain):
            fork_choice(local, [Block.from_wire(orphan_wire)])


class TestQueries:
    def test_history_in_commit_order(self, key_pool):
        owner = key_pool[0]
        create = build_create_tx(owner, {})
        state = commit(ChainState.genesis(), create)
        transfer = build_transfer_tx(
            owner, create.id, live_outpoint(state, create.id), key_pool[1].signing.public_hex
        )
        state = commit(state, transfer)
        history = get_asset_history(state, create.id)
        assert [t.id for t in history] == [create.id, transfer.id]

    def test_unknown_asset_empty_history(self):
        assert get_asset_history(ChainState.genesis(), "aa" * 32) == []

    def test_unknown_pubkey_empty(self):
        assert get_assets_by_public_key(ChainState.genesis(), "bb" * 32) == []


def test_replay_round_trips_wire_encoding(key_pool):
    from medledger.ledger import Block

    state = commit(ChainState.genesis(), build_create_tx(key_pool[0], {"a": 1}), bits=3)
    state = commit(state, build_create_tx(key_pool[1], {"b": 2}), bits=3, timestamp=9)
    rebuilt = replay_chain([Block.from_wire(b.to_wire()) for b in state.blocks])
    assert rebuilt.tip.hash_hex == state.tip.hash_hex
    assert rebuilt.utxo == state.utxo
    assert rebuilt.cumulative_work == state.cumulative_work

"""Trace verdicts: the independent oracle for consensus claims.

Four predicates over a complete trace, each checked from the raw events
without trusting node-internal state: Safety (honest nodes never commit
different hashes at one height), Finality (an honest node's commits only
append, never replace), Validity (every committed block replays cleanly
through ledger validation from genesis), and Certificate soundness (every
commit carries a verifying quorum certificate).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..ledger import BFT_MODE, Block, ChainState, apply_block, validate_block
from .config import HONEST, NetworkConfig
from .messages import verify_certificate
from .sim import Trace, build_validators

SAFETY = "safety"
FINALITY = "finality"
VALIDITY = "validity"
CERTIFICATES = "certificate-soundness"

PREDICATES = (SAFETY, FINALITY, VALIDITY, CERTIFICATES)


@dataclass
class Verdict:
    passed: dict[str, bool] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def fail(self, predicate: str, step: int, detail: str) -> None:
        self.passed[predicate] = False
        self.failures.append({"predicate": predicate, "step": step, "detail": detail})

    def summary(self) -> str:
        lines = [
            f"{name}: {'pass' if self.passed.get(name, False) else 'FAIL'}"
            for name in PREDICATES
        ]
        for failure in self.failures:
            lines.append(
                f"  step {failure['step']}: {failure['predicate']}: {failure['detail']}"
            )
        return "\n".join(lines)


def _honest_indices(config: NetworkConfig) -> set[int]:
    return {i for i in range(config.n) if config.fault_for(i).kind == HONEST}


def check_trace(trace: Trace) -> Verdict:
    verdict = Verdict(passed={name: True for name in PREDICATES})
    config = trace.config
    honest = _honest_indices(config)
    _, validators = build_validators(config)

    committed_hash_by_height: dict[int, tuple[str, int]] = {}
    per_node_commits: dict[int, dict[int, str]] = {}
    per_node_max_height: dict[int, int] = {}

    for step, event in enumerate(trace.events):
        if event.get("type") != "commit":
            continue
        node = event["node"]
        if node not in honest:
            continue
        height, block_hash = event["height"], event["hash"]

        # Safety: one hash per height across all honest nodes
        previous = committed_hash_by_height.get(height)
        if previous is not None and previous[0] != block_hash:
            verdict.fail(
                SAFETY,
                step,
                f"height {height}: node {node} committed {block_hash[:12]} "
                f"but step {previous[1]} committed {previous[0][:12]}",
            )
        committed_hash_by_height.setdefault(height, (block_hash, step))

        # Finality: strictly advancing heights, no second commit for a height
        node_commits = per_node_commits.setdefault(node, {})
        if height in node_commits:
            verdict.fail(
                FINALITY, step, f"node {node} committed height {height} twice"
            )
        if height <= per_node_max_height.get(node, 0):
            verdict.fail(
                FINALITY,
                step,
                f"node {node} revisited height {height} after advancing",
            )
        node_commits[height] = block_hash
        per_node_max_height[node] = max(per_node_max_height.get(node, 0), height)

        # Certificate soundness
        certificate = event["block"].get("commit_certificate")
        if certificate is None or not verify_certificate(
            certificate, validators, block_hash
        ):
            verdict.fail(
                CERTIFICATES,
                step,
                f"node {node} height {height}: missing or invalid certificate",
            )

    # Validity: replay each honest node's committed blocks through the ledger
    for node, commits in sorted(per_node_commits.items()):
        state = ChainState.genesis(BFT_MODE)
        for height in sorted(commits):
            event = next(
                e
                for e in trace.events
                if e.get("type") == "commit"
                and e["node"] == node
                and e["height"] == height
            )
            block = Block.from_wire(event["block"])
            if not validate_block(state, block):
                verdict.fail(
                    VALIDITY,
                    trace.events.index(event),
                    f"node {node} height {height}: block fails ledger validation",
                )
                break
            state = apply_block(state, block)

    return verdict

"""BFT commit engine over a deterministic simulated gossip network."""

from .checker import CERTIFICATES, FINALITY, PREDICATES, SAFETY, VALIDITY, Verdict, check_trace
from .config import (
    BYZANTINE,
    CRASH,
    HONEST,
    FaultSpec,
    NetworkConfig,
    PartitionWindow,
    quorum_size,
    skip_threshold,
)
from .messages import (
    PRECOMMIT,
    PREVOTE,
    PROPOSAL,
    build_certificate,
    make_message,
    message_id,
    verify_certificate,
    verify_message,
)
from .network import GossipNetwork
from .node import Effects, Node
from .sim import Trace, build_validators, run_simulation

__all__ = [
    "BYZANTINE",
    "CERTIFICATES",
    "CRASH",
    "Effects",
    "FINALITY",
    "FaultSpec",
    "GossipNetwork",
    "HONEST",
    "NetworkConfig",
    "Node",
    "PRECOMMIT",
    "PREDICATES",
    "PREVOTE",
    "PROPOSAL",
    "PartitionWindow",
    "SAFETY",
    "Trace",
    "VALIDITY",
    "Verdict",
    "build_certificate",
    "build_validators",
    "check_trace",
    "make_message",
    "message_id",
    "quorum_size",
    "run_simulation",
    "skip_threshold",
    "verify_certificate",
    "verify_message",
]

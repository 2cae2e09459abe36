"""Patient-centric health record exchange.

Layers, bottom up: ``crypto`` (hashing, deterministic signatures, AES-256
record encryption, key wrapping), ``store`` (content-addressed blobs),
``ledger`` (CREATE/TRANSFER asset chain with PoW and fork choice),
``consensus`` (deterministic BFT commit simulator), ``ehr`` (accounts,
records, grants, prescriptions), ``service`` (HTTP API) and ``cli``.
"""

__version__ = "0.1.0"

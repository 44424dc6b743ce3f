"""Permissioned proof-of-work ledger for consent-controlled health records."""

from .block import (
    Block,
    BlockHeader,
    decode_header,
    encode_header,
    genesis_block,
    header_hash,
    mine_block,
    validate_block,
    validate_chain,
)
from .hashing import sha256
from .keys import KeyPair, derive_address, keygen, sign, verify
from .merkle import merkle_root
from .state import (
    Rejected,
    WorldState,
    apply_tx,
    genesis_state,
    query_records,
    replay,
    state_digest,
)
from .tx import SignedTransaction, make_tx

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockHeader",
    "KeyPair",
    "Rejected",
    "SignedTransaction",
    "WorldState",
    "apply_tx",
    "decode_header",
    "derive_address",
    "encode_header",
    "genesis_block",
    "genesis_state",
    "header_hash",
    "keygen",
    "make_tx",
    "merkle_root",
    "mine_block",
    "query_records",
    "replay",
    "sha256",
    "sign",
    "state_digest",
    "validate_block",
    "validate_chain",
    "verify",
]

"""Blocks, proof-of-work mining, and chain validation.

A header commits to its predecessor's hash, the Merkle root of its
transaction ids, a timestamp, the difficulty target, and the mining nonce.
Headers hash through a fixed 89-byte layout so every node derives the same
block hash from the same fields.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

from . import tx as txmod
from .hashing import ZERO_HASH, check_hash32, leading_zero_bits, sha256
from .merkle import merkle_root

HEADER_LEN = 89
MAX_NONCE = 2**64 - 1

# Genesis is a fixed constant, not mined: exempt from the difficulty check.
GENESIS_TIMESTAMP = 0


class SearchExhausted(RuntimeError):
    """The 2^64 nonce space ran out; indicates a logic bug, not bad luck."""


class MiningCancelled(RuntimeError):
    pass


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    difficulty_bits: int
    nonce: int


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    tx_count: int
    transactions: list[txmod.SignedTransaction]


def encode_header(header: BlockHeader) -> bytes:
    """Fixed 89-byte layout: height(8) prev(32) root(32) time(8) bits(1) nonce(8)."""
    if not 0 <= header.difficulty_bits <= 255:
        raise ValueError("difficulty_bits out of range")
    return struct.pack(
        ">Q32s32sQBQ",
        header.height,
        check_hash32(header.prev_hash, "prev_hash"),
        check_hash32(header.merkle_root, "merkle_root"),
        header.timestamp,
        header.difficulty_bits,
        header.nonce,
    )


def decode_header(data: bytes) -> BlockHeader:
    if len(data) != HEADER_LEN:
        raise ValueError(f"header encoding must be {HEADER_LEN} bytes")
    height, prev, root, timestamp, bits, nonce = struct.unpack(">Q32s32sQBQ", data)
    return BlockHeader(height, prev, root, timestamp, bits, nonce)


def header_hash(header: BlockHeader) -> bytes:
    return sha256(encode_header(header))


def meets_target(digest: bytes, difficulty_bits: int) -> bool:
    return leading_zero_bits(digest) >= difficulty_bits


def build_block(header: BlockHeader, transactions: list[txmod.SignedTransaction]) -> Block:
    return Block(header=header, tx_count=len(transactions), transactions=list(transactions))


def genesis_block() -> Block:
    """The fixed height-0 block every chain starts from."""
    header = BlockHeader(
        height=0,
        prev_hash=ZERO_HASH,
        merkle_root=ZERO_HASH,
        timestamp=GENESIS_TIMESTAMP,
        difficulty_bits=0,
        nonce=0,
    )
    return build_block(header, [])


def mine_block(
    prev: BlockHeader,
    transactions: list[txmod.SignedTransaction],
    difficulty_bits: int,
    timestamp: int,
    stop: Callable[[], bool] | None = None,
) -> Block:
    """Search nonces 0,1,2,... until the header hash meets the target.

    ``stop`` is polled each iteration so a caller can cancel a long search.
    """
    if timestamp < prev.timestamp:
        raise ValueError("timestamp must not precede the previous block's")
    if not 0 <= difficulty_bits <= 255:
        raise ValueError("difficulty_bits out of range")
    root = merkle_root([txmod.txid(t) for t in transactions])
    prefix = struct.pack(
        ">Q32s32sQB",
        prev.height + 1,
        header_hash(prev),
        root,
        timestamp,
        difficulty_bits,
    )
    nonce = 0
    while True:
        if stop is not None and stop():
            raise MiningCancelled("mining stopped by caller")
        if meets_target(sha256(prefix + struct.pack(">Q", nonce)), difficulty_bits):
            header = BlockHeader(
                height=prev.height + 1,
                prev_hash=header_hash(prev),
                merkle_root=root,
                timestamp=timestamp,
                difficulty_bits=difficulty_bits,
                nonce=nonce,
            )
            return build_block(header, transactions)
        if nonce == MAX_NONCE:
            raise SearchExhausted("no nonce in 2^64 satisfied the target")
        nonce += 1


def validate_block(
    block: Block, prev: BlockHeader, difficulty_bits: int
) -> list[str]:
    """All violations found in ``block`` against its predecessor; [] means ok."""
    violations = []
    header = block.header
    if header.height != prev.height + 1:
        violations.append("HeightGap")
    if header.prev_hash != header_hash(prev):
        violations.append("LinkBroken")
    if header.merkle_root != merkle_root([txmod.txid(t) for t in block.transactions]):
        violations.append("MerkleMismatch")
    if block.tx_count != len(block.transactions):
        violations.append("TxCountMismatch")
    if header.timestamp < prev.timestamp:
        violations.append("TimestampRegression")
    if header.difficulty_bits != difficulty_bits:
        violations.append("DifficultyMismatch")
    if not meets_target(header_hash(header), header.difficulty_bits):
        violations.append("PowTargetMissed")
    return violations


def validate_genesis(block: Block) -> list[str]:
    violations = []
    header = block.header
    if header.height != 0:
        violations.append("HeightGap")
    if header.prev_hash != ZERO_HASH:
        violations.append("LinkBroken")
    if header.merkle_root != merkle_root([txmod.txid(t) for t in block.transactions]):
        violations.append("MerkleMismatch")
    if block.tx_count != len(block.transactions):
        violations.append("TxCountMismatch")
    return violations


def validate_chain(
    blocks: list[Block], difficulty_bits: int
) -> tuple[int, list[str]] | None:
    """None when the whole chain is sound, else (first failing height, violations)."""
    if not blocks:
        return (0, ["NoGenesis"])
    genesis_violations = validate_genesis(blocks[0])
    if genesis_violations:
        return (0, genesis_violations)
    for prev, block in zip(blocks, blocks[1:]):
        violations = validate_block(block, prev.header, difficulty_bits)
        if violations:
            return (block.header.height, violations)
    return None


# --- JSON wire form (chain.jsonl lines, /chain responses) ------------------

def header_to_json(header: BlockHeader) -> dict:
    return {
        "height": header.height,
        "prev_hash": header.prev_hash.hex(),
        "merkle_root": header.merkle_root.hex(),
        "timestamp": header.timestamp,
        "difficulty_bits": header.difficulty_bits,
        "nonce": header.nonce,
    }


def block_to_json(block: Block) -> dict:
    return {
        "header": header_to_json(block.header),
        "tx_count": block.tx_count,
        "transactions": [txmod.tx_to_json(t) for t in block.transactions],
    }


def header_from_json(obj: dict) -> BlockHeader:
    if not isinstance(obj, dict):
        raise txmod.WireError("header: expected object")
    return BlockHeader(
        height=txmod._wire_int(obj, "height"),
        prev_hash=txmod._wire_hash(obj, "prev_hash"),
        merkle_root=txmod._wire_hash(obj, "merkle_root"),
        timestamp=txmod._wire_int(obj, "timestamp"),
        difficulty_bits=txmod._wire_int(obj, "difficulty_bits", limit=255),
        nonce=txmod._wire_int(obj, "nonce"),
    )


def block_from_json(obj: dict) -> Block:
    if not isinstance(obj, dict):
        raise txmod.WireError("block: expected object")
    transactions = obj.get("transactions")
    if not isinstance(transactions, list):
        raise txmod.WireError("transactions: expected list")
    return Block(
        header=header_from_json(obj.get("header")),
        tx_count=txmod._wire_int(obj, "tx_count"),
        transactions=[txmod.tx_from_json(t) for t in transactions],
    )

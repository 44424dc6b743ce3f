"""SHA-256 helpers shared by every layer of the ledger.

All on-chain identifiers (header hashes, transaction ids, record digests,
Merkle nodes) are plain 32-byte SHA-256 digests, rendered as 64-char
lowercase hex at the edges.
"""

from __future__ import annotations

import hashlib

HASH_LEN = 32
ZERO_HASH = b"\x00" * HASH_LEN


def sha256(data: bytes) -> bytes:
    """FIPS 180-4 SHA-256 digest of ``data``."""
    return hashlib.sha256(data).digest()


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def check_hash32(value: bytes, what: str = "hash") -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != HASH_LEN:
        raise ValueError(f"{what} must be exactly {HASH_LEN} bytes")
    return bytes(value)


def to_hex(digest: bytes) -> str:
    return check_hash32(digest).hex()


def from_hex(text: str, what: str = "hash") -> bytes:
    try:
        raw = bytes.fromhex(text)
    except ValueError as exc:
        raise ValueError(f"{what} is not valid hex") from exc
    return check_hash32(raw, what)


def leading_zero_bits(digest: bytes) -> int:
    """Number of leading zero bits in a 32-byte digest (0..256)."""
    value = int.from_bytes(digest, "big")
    if value == 0:
        return 256
    return 256 - value.bit_length()

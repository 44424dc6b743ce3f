"""Signing identities: Ed25519 key pairs and 20-byte public addresses.

Addresses are the last 20 bytes of sha256(public_key); members share the
address, never the key material, when they interact on-chain.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .hashing import sha256

KEY_LEN = 32
SIG_LEN = 64
ADDRESS_LEN = 20


class BadKeyLength(ValueError):
    pass


@dataclass(frozen=True)
class KeyPair:
    secret_key: bytes
    public_key: bytes

    @property
    def address(self) -> bytes:
        return derive_address(self.public_key)


def keygen(seed: bytes | None = None) -> KeyPair:
    """Create an Ed25519 key pair; a 32-byte seed makes it deterministic."""
    if seed is None:
        seed = secrets.token_bytes(KEY_LEN)
    if len(seed) != KEY_LEN:
        raise BadKeyLength(f"seed must be {KEY_LEN} bytes, got {len(seed)}")
    sk = Ed25519PrivateKey.from_private_bytes(seed)
    return KeyPair(secret_key=seed, public_key=sk.public_key().public_bytes_raw())


def derive_address(public_key: bytes) -> bytes:
    """Last 20 bytes of sha256(public_key)."""
    if len(public_key) != KEY_LEN:
        raise BadKeyLength(f"public key must be {KEY_LEN} bytes, got {len(public_key)}")
    return sha256(public_key)[-ADDRESS_LEN:]


def sign(kp: KeyPair, message: bytes) -> bytes:
    """Deterministic Ed25519 signature over ``message``."""
    return Ed25519PrivateKey.from_private_bytes(kp.secret_key).sign(message)


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """True iff the signature is valid; malformed input yields False, never an error."""
    if not isinstance(public_key, (bytes, bytearray)) or len(public_key) != KEY_LEN:
        return False
    if not isinstance(signature, (bytes, bytearray)) or len(signature) != SIG_LEN:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(bytes(public_key)).verify(
            bytes(signature), message
        )
        return True
    except (InvalidSignature, ValueError):
        return False


def address_hex(address: bytes) -> str:
    if len(address) != ADDRESS_LEN:
        raise BadKeyLength(f"address must be {ADDRESS_LEN} bytes")
    return address.hex()


def address_from_hex(text: str) -> bytes:
    try:
        raw = bytes.fromhex(text)
    except ValueError as exc:
        raise BadKeyLength("address is not valid hex") from exc
    if len(raw) != ADDRESS_LEN:
        raise BadKeyLength(f"address must be {ADDRESS_LEN} bytes")
    return raw

"""Password-protected key files, one JSON file per identity.

The secret key is XORed with a keystream derived from the password
(10,000 chained SHA-256 rounds over salt || password) and authenticated
with an HMAC, so a tampered or wrong-password file fails closed before any
key material is returned. KDF parameters live in the file header.
"""

from __future__ import annotations

import hmac
import json
import secrets
from pathlib import Path

from .hashing import sha256
from .keys import KeyPair, keygen

DEFAULT_ITERATIONS = 10_000
SALT_LEN = 16


class KeystoreError(Exception):
    pass


def _derive(password: bytes, salt: bytes, iterations: int) -> bytes:
    digest = salt + password
    for _ in range(iterations):
        digest = sha256(digest)
    return digest


def _keystream(master: bytes) -> bytes:
    return sha256(master + b"medichain-keystream")


def _mac_key(master: bytes) -> bytes:
    return sha256(master + b"medichain-mac")


def save_keystore(
    path: str | Path,
    kp: KeyPair,
    password: bytes | str,
    iterations: int = DEFAULT_ITERATIONS,
) -> None:
    if isinstance(password, str):
        password = password.encode("utf-8")
    if iterations < 1:
        raise KeystoreError("iterations must be positive")
    salt = secrets.token_bytes(SALT_LEN)
    master = _derive(password, salt, iterations)
    stream = _keystream(master)
    ciphertext = bytes(a ^ b for a, b in zip(kp.secret_key, stream))
    mac = hmac.new(_mac_key(master), salt + ciphertext, "sha256").digest()
    doc = {
        "address": kp.address.hex(),
        "salt": salt.hex(),
        "iterations": iterations,
        "ciphertext": ciphertext.hex(),
        "mac": mac.hex(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def load_keystore(path: str | Path, password: bytes | str) -> KeyPair:
    if isinstance(password, str):
        password = password.encode("utf-8")
    try:
        doc = json.loads(Path(path).read_text())
        salt = bytes.fromhex(doc["salt"])
        iterations = int(doc["iterations"])
        ciphertext = bytes.fromhex(doc["ciphertext"])
        mac = bytes.fromhex(doc["mac"])
        address = doc["address"]
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise KeystoreError(f"unreadable keystore: {exc}") from exc
    master = _derive(password, salt, iterations)
    expected = hmac.new(_mac_key(master), salt + ciphertext, "sha256").digest()
    if not hmac.compare_digest(expected, mac):
        raise KeystoreError("MAC mismatch: wrong password or corrupted file")
    secret = bytes(a ^ b for a, b in zip(ciphertext, _keystream(master)))
    kp = keygen(seed=secret)
    if kp.address.hex() != address:
        raise KeystoreError("keystore address does not match decrypted key")
    return kp

"""Challenge-handshake password authentication.

The portal never sees a password on the wire: the server stores
sha256(password), issues a single-use random nonce, and the client proves
knowledge by returning sha256(nonce || sha256(password)). The scheme is
deliberately minimal (no salt, offline-guessable by a server compromise);
see the README for the trade-off notes.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field

import hmac

from .hashing import sha256

NONCE_LEN = 32
DEFAULT_LIFETIME = 120.0


@dataclass
class Challenge:
    nonce: bytes
    issued_at: float
    consumed: bool = False
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    @property
    def id(self) -> str:
        return self.nonce.hex()


@dataclass(frozen=True)
class PasswordRecord:
    address: bytes
    stored_hash: bytes  # sha256(password); the raw password is never kept


def password_hash(password: bytes | str) -> bytes:
    if isinstance(password, str):
        password = password.encode("utf-8")
    return sha256(password)


def chap_respond(password: bytes | str, challenge_nonce: bytes) -> bytes:
    """Client side: sha256(nonce || sha256(password))."""
    if len(challenge_nonce) != NONCE_LEN:
        raise ValueError(f"challenge nonce must be {NONCE_LEN} bytes")
    return sha256(challenge_nonce + password_hash(password))


def chap_verify(
    rec: PasswordRecord,
    challenge: Challenge,
    response: bytes,
    lifetime: float = DEFAULT_LIFETIME,
    now: float | None = None,
) -> bool:
    """Server side; consumes the challenge on success, at most once ever."""
    if now is None:
        now = time.time()
    expected = sha256(challenge.nonce + rec.stored_hash)
    with challenge._lock:
        if challenge.consumed:
            return False
        if now - challenge.issued_at > lifetime:
            return False
        if not hmac.compare_digest(expected, response):
            return False
        challenge.consumed = True
        return True


class ChallengeRegistry:
    """Shared store of outstanding challenges; issue/consume are atomic."""

    def __init__(self, lifetime: float = DEFAULT_LIFETIME, clock=time.time):
        self.lifetime = lifetime
        self.clock = clock
        self._challenges: dict[str, Challenge] = {}
        self._lock = threading.Lock()

    def issue(self) -> Challenge:
        challenge = Challenge(nonce=secrets.token_bytes(NONCE_LEN),
                              issued_at=self.clock())
        with self._lock:
            self._challenges[challenge.id] = challenge
        return challenge

    def get(self, challenge_id: str) -> Challenge | None:
        with self._lock:
            return self._challenges.get(challenge_id)

    def expired(self, challenge: Challenge) -> bool:
        return self.clock() - challenge.issued_at > self.lifetime

    def verify(self, rec: PasswordRecord, challenge_id: str, response: bytes) -> bool:
        challenge = self.get(challenge_id)
        if challenge is None:
            return False
        return chap_verify(
            rec, challenge, response, lifetime=self.lifetime, now=self.clock()
        )

    def prune(self) -> None:
        """Drop consumed and long-expired challenges."""
        cutoff = self.clock() - 2 * self.lifetime
        with self._lock:
            stale = [
                cid for cid, ch in self._challenges.items()
                if ch.consumed or ch.issued_at < cutoff
            ]
            for cid in stale:
                del self._challenges[cid]


def chap_issue(store: ChallengeRegistry) -> Challenge:
    return store.issue()

"""The running node: mempool, block production, persistence, peer sync.

One writer path guards every chain/state mutation behind a re-entrant
lock; readers take snapshots. A block reaches the live state only after
its line is fsynced into chain.jsonl, so a crash replays to exactly the
pre-crash digest.
"""

from __future__ import annotations

import json
import logging
import os
import secrets
import threading
import time
from dataclasses import dataclass

import httpx

from . import block as blockmod
from . import chap, fixtures, state as statemod
from .config import NodeConfig
from .hashing import sha256
from .keys import derive_address, verify
from .tx import SignedTransaction, WireError, txid_hex, verify_tx_signature

logger = logging.getLogger("medichain.node")

ENROLL_CONTEXT = b"medichain-enroll:"


class NodeError(Exception):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


class CorruptChain(NodeError):
    def __init__(self, height: int, detail: str = ""):
        self.height = height
        super().__init__("CorruptChain", f"height {height}: {detail}")


@dataclass
class Session:
    token: str
    address: bytes
    expires_at: float


def enroll_signing_digest(address: bytes, stored_hash: bytes) -> bytes:
    """What a key holder signs to bind a CHAP password hash to their address."""
    return sha256(ENROLL_CONTEXT + address + stored_hash)


class Node:
    def __init__(self, config: NodeConfig, clock=time.time):
        self.config = config
        self.clock = clock
        self.lock = threading.RLock()
        self.chain: list[blockmod.Block] = []
        self.state = statemod.WorldState()
        self.mempool: list[SignedTransaction] = []
        self.peers: list[str] = list(config.peers)
        self.challenges = chap.ChallengeRegistry(
            lifetime=config.challenge_lifetime, clock=clock
        )
        self.passwords: dict[bytes, chap.PasswordRecord] = {}
        self.sessions: dict[str, Session] = {}
        self._automine_stop = threading.Event()
        self._automine_thread: threading.Thread | None = None

    # --- genesis & persistence ---------------------------------------------

    def genesis_allocations(self) -> list[tuple[bytes, int]]:
        if self.config.dev_mode:
            return fixtures.dev_allocations()
        return self.config.genesis_alloc

    def startup_replay(self) -> None:
        """Load chain.jsonl, validate, replay; refuse to serve a bad chain."""
        path = self.config.chain_file
        path.parent.mkdir(parents=True, exist_ok=True)
        if not path.exists() or path.stat().st_size == 0:
            if not self.config.dev_mode and not self.config.genesis_alloc:
                raise NodeError(
                    "NoChain",
                    f"{path} is empty and no genesis allocation is configured",
                )
            genesis = blockmod.genesis_block()
            self._write_chain_file([genesis])
        blocks = self._load_chain_file(path)
        failure = blockmod.validate_chain(blocks, self.config.difficulty_bits)
        if failure is not None:
            height, violations = failure
            raise CorruptChain(height, ",".join(violations))
        try:
            new_state = statemod.replay(blocks, self.genesis_allocations())
        except statemod.ReplayError as exc:
            raise CorruptChain(exc.height, str(exc)) from exc
        except statemod.Rejected as exc:
            raise CorruptChain(0, f"genesis allocation: {exc}") from exc
        with self.lock:
            self.chain = blocks
            self.state = new_state

    @staticmethod
    def _load_chain_file(path) -> list[blockmod.Block]:
        blocks = []
        with open(path, "rb") as fh:
            raw = fh.read()
        for lineno, line in enumerate(raw.splitlines()):
            if not line.strip():
                continue
            try:
                blocks.append(
                    blockmod.block_from_json(json.loads(line.decode("utf-8")))
                )
            except (json.JSONDecodeError, UnicodeDecodeError, WireError,
                    ValueError) as exc:
                raise CorruptChain(lineno, f"unparseable block line: {exc}")
        return blocks

    def _append_block_line(self, blk: blockmod.Block) -> None:
        line = statemod.canonical_json(blockmod.block_to_json(blk))
        with open(self.config.chain_file, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _write_chain_file(self, blocks: list[blockmod.Block]) -> None:
        path = self.config.chain_file
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for blk in blocks:
                fh.write(statemod.canonical_json(blockmod.block_to_json(blk)) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    # --- mempool -------------------------------------------------------------

    def submit_tx(self, tx: SignedTransaction) -> str:
        """Shallow admission: signature, key/address binding, nonce uniqueness."""
        if not verify_tx_signature(tx):
            raise NodeError("BadSignature")
        with self.lock:
            account = self.state.accounts.get(tx.sender)
            chain_nonce = account.nonce if account else 0
            if tx.nonce < chain_nonce:
                raise NodeError(
                    "DuplicateNonce", f"nonce {tx.nonce} already on chain"
                )
            for pending in self.mempool:
                if pending.sender == tx.sender and pending.nonce == tx.nonce:
                    raise NodeError(
                        "DuplicateNonce", f"nonce {tx.nonce} already pending"
                    )
            self.mempool.append(tx)
            return txid_hex(tx)

    def _ordered_pool(self) -> list[SignedTransaction]:
        """Admission order overall, ascending nonce within each sender."""
        by_sender: dict[bytes, list[SignedTransaction]] = {}
        for tx in self.mempool:
            by_sender.setdefault(tx.sender, []).append(tx)
        for txs in by_sender.values():
            txs.sort(key=lambda t: t.nonce)
        taken: dict[bytes, int] = {}
        ordered = []
        for tx in self.mempool:
            index = taken.get(tx.sender, 0)
            ordered.append(by_sender[tx.sender][index])
            taken[tx.sender] = index + 1
        return ordered

    def preflight_tx(self, tx: SignedTransaction) -> None:
        """Simulate the tx behind the current pool; raises Rejected on failure.

        Advisory only: plain admission stays shallow, mining stays
        authoritative. Lets a submitting client see the state rule its
        transaction would die on.
        """
        with self.lock:
            work = self.state.clone()
            work.height = self.chain[-1].header.height + 1
            for pending in self._ordered_pool():
                try:
                    work = statemod.apply_tx(work, pending)
                except statemod.Rejected:
                    continue  # would be dropped at mining time
            statemod.apply_tx(work, tx)

    # --- block production ------------------------------------------------------

    def produce_block(
        self, now: int | None = None, allow_empty: bool = False
    ) -> tuple[blockmod.Block, list[tuple[str, str]]]:
        """Mine pending transactions; returns (block, dropped (txid, reason))."""
        with self.lock:
            if now is None:
                now = int(self.clock())
            tip = self.chain[-1].header
            timestamp = max(int(now), tip.timestamp)
            candidates = self._ordered_pool()
            self.mempool = []
            work = self.state.clone()
            work.height = tip.height + 1
            applied: list[SignedTransaction] = []
            dropped: list[tuple[str, str]] = []
            for tx in candidates:
                try:
                    work = statemod.apply_tx(work, tx)
                    work.height = tip.height + 1
                    applied.append(tx)
                except statemod.Rejected as exc:
                    logger.warning("dropping tx %s: %s", txid_hex(tx), exc.code)
                    dropped.append((txid_hex(tx), exc.code))
            if not applied and not allow_empty:
                detail = ""
                if dropped:
                    detail = "all pending rejected: " + ", ".join(
                        f"{txid[:16]}={code}" for txid, code in dropped
                    )
                raise NodeError("NothingToMine", detail)
            blk = blockmod.mine_block(
                tip, applied, self.config.difficulty_bits, timestamp
            )
            # Durable before visible: fsync the line, then swap in the state.
            self._append_block_line(blk)
            self.chain.append(blk)
            self.state = work
            return blk, dropped

    # --- peer sync ---------------------------------------------------------------

    def add_peer(self, url: str) -> None:
        with self.lock:
            if url not in self.peers:
                self.peers.append(url)

    def sync_with_peers(self) -> bool:
        """Adopt the longest valid peer chain strictly longer than ours."""
        candidates: list[list[blockmod.Block]] = []
        for peer in list(self.peers):
            try:
                resp = httpx.get(f"{peer.rstrip('/')}/chain", timeout=10.0)
                resp.raise_for_status()
                blocks = [
                    blockmod.block_from_json(obj)
                    for obj in resp.json().get("blocks", [])
                ]
                candidates.append(blocks)
            except (httpx.HTTPError, WireError, ValueError, KeyError) as exc:
                logger.warning("peer %s unusable: %s", peer, exc)
        best: list[blockmod.Block] | None = None
        best_state: statemod.WorldState | None = None
        local_genesis = None
        with self.lock:
            local_len = len(self.chain)
            if self.chain:
                local_genesis = blockmod.header_hash(self.chain[0].header)
        for blocks in candidates:
            if len(blocks) <= local_len or (best and len(blocks) <= len(best)):
                continue
            if not blocks:
                continue
            if (
                local_genesis is not None
                and blockmod.header_hash(blocks[0].header) != local_genesis
            ):
                logger.warning("peer chain has a different genesis; skipping")
                continue
            if blockmod.validate_chain(blocks, self.config.difficulty_bits):
                logger.warning("peer chain failed validation; skipping")
                continue
            try:
                candidate_state = statemod.replay(blocks, self.genesis_allocations())
            except statemod.ReplayError as exc:
                logger.warning("peer chain failed replay: %s", exc)
                continue
            best, best_state = blocks, candidate_state
        if best is None or best_state is None:
            return False
        with self.lock:
            if len(best) <= len(self.chain):
                return False  # lost a race with local mining
            new_ids = {
                txid_hex(tx) for blk in best for tx in blk.transactions
            }
            orphaned = [
                tx
                for blk in self.chain
                for tx in blk.transactions
                if txid_hex(tx) not in new_ids
            ] + [tx for tx in self.mempool if txid_hex(tx) not in new_ids]
            self._write_chain_file(best)
            self.chain = best
            self.state = best_state
            self.mempool = []
            for tx in orphaned:
                try:
                    self.submit_tx(tx)
                except NodeError:
                    pass  # superseded by the adopted chain
            return True

    # --- authentication -----------------------------------------------------------

    def enroll_password(
        self, address: bytes, stored_hash: bytes, public_key: bytes, signature: bytes
    ) -> None:
        """Bind sha256(password) to an address, proven by the address key."""
        if derive_address(public_key) != address:
            raise NodeError("BadSignature", "public key does not match address")
        if not verify(public_key, enroll_signing_digest(address, stored_hash), signature):
            raise NodeError("BadSignature", "enrollment signature invalid")
        with self.lock:
            self.passwords[address] = chap.PasswordRecord(
                address=address, stored_hash=stored_hash
            )

    def issue_challenge(self) -> chap.Challenge:
        return self.challenges.issue()

    def login(self, address: bytes, challenge_id: str, response: bytes) -> Session:
        record = self.passwords.get(address)
        challenge = self.challenges.get(challenge_id)
        if challenge is not None and self.challenges.expired(challenge):
            raise NodeError("ChallengeExpired")
        if record is None or challenge is None:
            raise NodeError("AuthFailed")
        if not chap.chap_verify(
            record, challenge, response,
            lifetime=self.config.challenge_lifetime, now=self.clock(),
        ):
            raise NodeError("AuthFailed")
        session = Session(
            token=secrets.token_bytes(32).hex(),
            address=address,
            expires_at=self.clock() + self.config.session_lifetime,
        )
        with self.lock:
            now = self.clock()
            for stale in [t for t, s in self.sessions.items()
                          if s.expires_at < now]:
                del self.sessions[stale]
            self.sessions[session.token] = session
        return session

    def session_address(self, token: str | None) -> bytes:
        if not token:
            raise NodeError("AuthFailed", "missing session token")
        with self.lock:
            session = self.sessions.get(token)
        if session is None or session.expires_at < self.clock():
            raise NodeError("AuthFailed", "unknown or expired session")
        return session.address

    # --- automine ---------------------------------------------------------------

    def start_automine(self) -> None:
        interval = self.config.automine_interval
        if not interval:
            return

        def loop():
            while not self._automine_stop.wait(interval):
                try:
                    self.produce_block(int(self.clock()))
                except NodeError:
                    pass  # nothing pending
                except Exception:
                    logger.exception("automine failed")

        self._automine_thread = threading.Thread(target=loop, daemon=True)
        self._automine_thread.start()

    def stop_automine(self) -> None:
        self._automine_stop.set()
        if self._automine_thread is not None:
            self._automine_thread.join(timeout=5)

    # --- snapshots ----------------------------------------------------------------

    def snapshot(self) -> tuple[list[blockmod.Block], statemod.WorldState]:
        with self.lock:
            return list(self.chain), self.state

    def tip(self) -> blockmod.BlockHeader:
        with self.lock:
            return self.chain[-1].header

    def state_digest(self) -> str:
        with self.lock:
            return statemod.state_digest(self.state)

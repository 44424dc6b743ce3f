import dataclasses
import json
import threading
import time

import pytest

from medichain.block import genesis_block, header_hash
from medichain.config import ConfigError, NodeConfig, config_from_dict
from medichain.node import CorruptChain, Node, NodeError
from medichain.state import WEI_PER_ETHER, state_digest
from medichain.tx import Register, Role, Transfer, make_tx, txid_hex

from conftest import patient_profile, tx_at

ETH = WEI_PER_ETHER


@pytest.fixture
def node(tmp_path):
    config = NodeConfig(data_dir=str(tmp_path / "data"), difficulty_bits=4,
                        dev_mode=True)
    n = Node(config, clock=lambda: 1_000_000.0)
    n.startup_replay()
    return n


def transfer(node, kp_from, kp_to, amount=1):
    return tx_at(node.state, kp_from, Transfer(to=kp_to.address, amount=amount))


# --- startup ---------------------------------------------------------------------

def test_fresh_dev_dir_writes_genesis_and_funds_ten(node):
    assert len(node.chain) == 1
    assert header_hash(node.chain[0].header) == header_hash(genesis_block().header)
    assert len(node.state.accounts) == 10
    assert all(a.balance == 100 * ETH for a in node.state.accounts.values())


def test_restart_reproduces_digest(node, dev_keys):
    node.submit_tx(transfer(node, dev_keys[0], dev_keys[1], 5))
    node.produce_block(now=1)
    node.submit_tx(transfer(node, dev_keys[1], dev_keys[2], 2))
    node.produce_block(now=2)
    digest = node.state_digest()

    fresh = Node(node.config)
    fresh.startup_replay()
    assert fresh.state_digest() == digest
    assert len(fresh.chain) == 3


def test_nondev_empty_dir_refuses(tmp_path):
    config = NodeConfig(data_dir=str(tmp_path / "d2"), dev_mode=False)
    n = Node(config)
    with pytest.raises(NodeError, match="NoChain"):
        n.startup_replay()


def test_corrupt_chain_file_detected(node, dev_keys, tmp_path):
    node.submit_tx(transfer(node, dev_keys[0], dev_keys[1], 5))
    node.produce_block(now=1)
    path = node.config.chain_file
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0x01
    path.write_bytes(bytes(raw))
    fresh = Node(node.config)
    with pytest.raises(CorruptChain):
        fresh.startup_replay()


def test_chain_file_is_canonical_jsonl(node, dev_keys):
    node.submit_tx(transfer(node, dev_keys[0], dev_keys[1], 5))
    node.produce_block(now=1)
    lines = node.config.chain_file.read_text().splitlines()
    assert len(lines) == 2  # genesis + mined block
    for line in lines:
        obj = json.loads(line)
        assert json.dumps(obj, sort_keys=True, separators=(",", ":")) == line


# --- mempool admission -----------------------------------------------------------------

def test_submit_returns_txid_and_grows_pool(node, dev_keys):
    tx = transfer(node, dev_keys[0], dev_keys[1], 5)
    txid = node.submit_tx(tx)
    assert txid == txid_hex(tx)
    assert len(node.mempool) == 1


def test_duplicate_submission_rejected(node, dev_keys):
    tx = transfer(node, dev_keys[0], dev_keys[1], 5)
    node.submit_tx(tx)
    with pytest.raises(NodeError, match="DuplicateNonce"):
        node.submit_tx(tx)


def test_chain_consumed_nonce_rejected(node, dev_keys):
    tx = transfer(node, dev_keys[0], dev_keys[1], 5)
    node.submit_tx(tx)
    node.produce_block(now=1)
    with pytest.raises(NodeError, match="DuplicateNonce"):
        node.submit_tx(tx)


def test_bad_binding_rejected(node, dev_keys):
    tx = transfer(node, dev_keys[0], dev_keys[1], 5)
    forged = dataclasses.replace(tx, sender=dev_keys[2].address)
    with pytest.raises(NodeError, match="BadSignature"):
        node.submit_tx(forged)


def test_concurrent_submissions_keep_nonce_uniqueness(node, dev_keys):
    tx = transfer(node, dev_keys[0], dev_keys[1], 5)
    results = []
    barrier = threading.Barrier(8)

    def push():
        barrier.wait()
        try:
            results.append(node.submit_tx(tx))
        except NodeError as exc:
            results.append(exc.code)

    threads = [threading.Thread(target=push) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results.count(txid_hex(tx)) == 1
    assert len(node.mempool) == 1


# --- block production ----------------------------------------------------------------------

def test_produce_block_drains_pool_and_advances_state(node, dev_keys):
    for i in range(3):
        node.submit_tx(make_tx(dev_keys[i], nonce=0, timestamp=0,
                               payload=Transfer(to=dev_keys[9].address,
                                                amount=i + 1)))
    blk, dropped = node.produce_block(now=7)
    assert blk.tx_count == 3
    assert dropped == []
    assert node.mempool == []
    assert node.state.accounts[dev_keys[9].address].balance == 100 * ETH + 6
    assert node.tip().height == 1


def test_state_invalid_tx_dropped_and_reported(node, dev_keys):
    good = make_tx(dev_keys[0], nonce=0, timestamp=0,
                   payload=Transfer(to=dev_keys[1].address, amount=1))
    overdraft = make_tx(dev_keys[2], nonce=0, timestamp=0,
                        payload=Transfer(to=dev_keys[1].address,
                                         amount=101 * ETH))
    node.submit_tx(good)
    node.submit_tx(overdraft)
    blk, dropped = node.produce_block(now=7)
    assert blk.tx_count == 1
    assert dropped == [(txid_hex(overdraft), "InsufficientBalance")]


def test_empty_pool_raises_nothing_to_mine(node):
    with pytest.raises(NodeError, match="NothingToMine"):
        node.produce_block(now=7)
    blk, _ = node.produce_block(now=7, allow_empty=True)
    assert blk.tx_count == 0
    assert node.tip().height == 1


def test_per_sender_nonce_ordering(node, dev_keys):
    second = make_tx(dev_keys[0], nonce=1, timestamp=0,
                     payload=Transfer(to=dev_keys[1].address, amount=2))
    first = make_tx(dev_keys[0], nonce=0, timestamp=0,
                    payload=Transfer(to=dev_keys[1].address, amount=1))
    node.submit_tx(second)  # arrives out of order
    node.submit_tx(first)
    blk, dropped = node.produce_block(now=7)
    assert dropped == []
    assert [t.nonce for t in blk.transactions] == [0, 1]
    assert node.state.accounts[dev_keys[0].address].nonce == 2


def test_timestamp_clamped_to_tip(node, dev_keys):
    node.submit_tx(transfer(node, dev_keys[0], dev_keys[1], 5))
    blk, _ = node.produce_block(now=50)
    assert blk.header.timestamp == 50
    node.submit_tx(transfer(node, dev_keys[0], dev_keys[1], 5))
    blk2, _ = node.produce_block(now=1)  # caller clock went backwards
    assert blk2.header.timestamp == 50


def test_register_then_zero_balance_user_can_transact(node):
    from medichain.keys import keygen

    newcomer = keygen(seed=b"\x61" * 32)
    node.submit_tx(make_tx(newcomer, nonce=0, timestamp=0,
                           payload=Register(role=Role.PATIENT,
                                            profile=patient_profile())))
    blk, dropped = node.produce_block(now=3)
    assert dropped == []
    assert node.state.role_of(newcomer.address) is Role.PATIENT


def test_crash_consistency_chain_file_matches_state(node, dev_keys):
    for i in range(4):
        node.submit_tx(transfer(node, dev_keys[i], dev_keys[i + 1], 3))
        node.produce_block(now=i + 1)
        lines = node.config.chain_file.read_text().splitlines()
        assert len(lines) == len(node.chain)
        fresh = Node(node.config)
        fresh.startup_replay()
        assert fresh.state_digest() == node.state_digest()


def test_automine_mines_pending(tmp_path, dev_keys):
    config = NodeConfig(data_dir=str(tmp_path / "am"), difficulty_bits=2,
                        dev_mode=True, automine_interval=0.05)
    n = Node(config)
    n.startup_replay()
    n.start_automine()
    try:
        n.submit_tx(tx_at(n.state, dev_keys[0],
                          Transfer(to=dev_keys[1].address, amount=1)))
        deadline = time.time() + 5
        while time.time() < deadline and n.tip().height == 0:
            time.sleep(0.02)
        assert n.tip().height >= 1
        assert n.state.accounts[dev_keys[1].address].balance == 100 * ETH + 1
    finally:
        n.stop_automine()


# --- config -------------------------------------------------------------------------------

def test_config_difficulty_cap():
    with pytest.raises(ConfigError):
        NodeConfig(difficulty_bits=33)


def test_config_from_toml(tmp_path):
    doc = tmp_path / "node.toml"
    doc.write_text(
        'listen_port = 9000\n'
        'data_dir = "/tmp/x"\n'
        'difficulty_bits = 10\n'
        'dev_mode = true\n'
        'automine_interval = 2.5\n'
        'peers = ["http://a:1", "http://b:2"]\n'
        '[[genesis_alloc]]\n'
        'address = "00112233445566778899aabbccddeeff00112233"\n'
        'wei = 42\n'
    )
    from medichain.config import load_config

    config = load_config(doc)
    assert config.listen_port == 9000
    assert config.difficulty_bits == 10
    assert config.dev_mode is True
    assert config.automine_interval == 2.5
    assert config.peers == ["http://a:1", "http://b:2"]
    assert config.genesis_alloc == [
        (bytes.fromhex("00112233445566778899aabbccddeeff00112233"), 42)]


def test_config_rejects_bad_peers():
    with pytest.raises(ConfigError):
        config_from_dict({"peers": "http://a"})

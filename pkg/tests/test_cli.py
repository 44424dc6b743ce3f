import hashlib
import json

import pytest
from click.testing import CliRunner

from medichain.cli import format_ether, main, parse_amount
from medichain.keystore import load_keystore
from medichain.state import WEI_PER_ETHER

from helpers import LiveNode

ETH = WEI_PER_ETHER
PASSWORD = "Sup3r-Secret-Passphrase"


@pytest.fixture(scope="module")
def live(tmp_path_factory):
    with LiveNode(tmp_path_factory.mktemp("cli-node"), difficulty_bits=4,
                  record_transcript=True) as node:
        yield node


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


def cli(runner, live, keystore_dir, *args, identity=None, expect_exit=0):
    base = ["--node-url", live.url, "--keystore", str(keystore_dir),
            "--password", PASSWORD]
    if identity is not None:
        base += ["--as", identity]
    result = runner.invoke(main, base + list(args), catch_exceptions=False)
    assert result.exit_code == expect_exit, result.output
    return result


# --- pure helpers -----------------------------------------------------------------

@pytest.mark.parametrize("text,wei", [
    ("2eth", 2 * ETH),
    ("2 ether", 2 * ETH),
    ("0.5eth", ETH // 2),
    ("1000000000000000000", ETH),
    ("0eth", 0),
])
def test_parse_amount(text, wei):
    assert parse_amount(text) == wei


@pytest.mark.parametrize("bad", ["2.x eth", "1.0000000000000000001eth", "-3",
                                 "ten", "1.5"])
def test_parse_amount_rejects(bad):
    import click
    with pytest.raises(click.UsageError):
        parse_amount(bad)


def test_format_ether():
    assert format_ether(2 * ETH) == "2"
    assert format_ether(ETH // 2) == "0.5"
    assert format_ether(0) == "0"


# --- the clinical story, driven purely through the CLI -------------------------------

def test_full_clinical_workflow(runner, live, tmp_path_factory):
    keys_dir = tmp_path_factory.mktemp("keys")
    work = tmp_path_factory.mktemp("work")

    for name, seed in (("pat", "aa"), ("doc", "bb"), ("pharm", "cc")):
        result = cli(runner, live, keys_dir, "keygen", "--name", name,
                     "--seed-hex", seed * 32)
        assert "address" in result.output
    pat_addr = load_keystore(keys_dir / "pat.json", PASSWORD).address.hex()
    doc_addr = load_keystore(keys_dir / "doc.json", PASSWORD).address.hex()
    pharm_addr = load_keystore(keys_dir / "pharm.json", PASSWORD).address.hex()

    # registration (also enrolls the CHAP password with the node)
    cli(runner, live, keys_dir, "register", "patient",
        "--name", "Pat", "--phone", "1", "--email", "p@x",
        "--date-of-birth", "1980-01-01", "--home-address", "Elm 1",
        "--insurance", "ACME-7", identity="pat")
    cli(runner, live, keys_dir, "register", "doctor",
        "--name", "Doc", "--phone", "2", "--email", "d@x",
        "--date-of-birth", "1970-01-01", "--postal-address", "Clinic 9",
        "--registration-number", "R-1", "--organization", "Hosp",
        identity="doc")
    cli(runner, live, keys_dir, "register", "pharmacist",
        "--name", "Pharm", "--phone", "3", "--email", "f@x",
        "--date-of-birth", "1975-01-01", "--postal-address", "Shop 2",
        "--registration-number", "R-2", "--organization", "Pharmacy",
        identity="pharm")
    cli(runner, live, keys_dir, "mine")

    # fund the patient from a prefunded dev account
    cli(runner, live, keys_dir, "--dev-account", "0", "transfer",
        "--to", pat_addr, "--amount", "10eth")
    cli(runner, live, keys_dir, "mine")

    # consent, then the doctor anchors a record for the patient
    cli(runner, live, keys_dir, "grant", doc_addr, identity="pat")
    cli(runner, live, keys_dir, "mine")

    secret = b"TOP-SECRET-MRI-PLAINTEXT-9f2c"
    record = work / "scan.dcm"
    record.write_bytes(secret)
    digest = hashlib.sha256(secret).hexdigest()
    result = cli(runner, live, keys_dir, "anchor", str(record),
                 "--type", "mri", "--patient", pat_addr, identity="doc")
    assert digest in result.output
    cli(runner, live, keys_dir, "mine")

    # raw record bytes never crossed the wire; the digest did
    for exchange in live.transcript:
        assert secret not in exchange["request"], exchange["path"]
    assert any(digest.encode() in e["request"] for e in live.transcript)

    # the patient reads their records after a CHAP login
    result = cli(runner, live, keys_dir, "records", pat_addr, "--json",
                 identity="pat")
    listing = json.loads(result.output)
    assert len(listing["records"]) == 1
    assert listing["records"][0]["record_hash"] == digest
    assert listing["records"][0]["author"] == doc_addr

    # prescribe (2 ether): the invoice exists without any further action
    rx = work / "rx.txt"
    rx.write_bytes(b"take two daily")
    cli(runner, live, keys_dir, "prescribe", str(rx),
        "--patient", pat_addr, "--pharmacist", pharm_addr,
        "--price", "2eth", identity="doc")
    cli(runner, live, keys_dir, "mine")
    result = cli(runner, live, keys_dir, "invoices", "--patient", pat_addr,
                 "--json")
    invoice = json.loads(result.output)["invoices"][0]
    assert invoice["status"] == "unpaid"
    assert invoice["amount"] == str(2 * ETH)

    cli(runner, live, keys_dir, "dispense", str(invoice["prescription_id"]),
        identity="pharm")
    cli(runner, live, keys_dir, "mine")

    cli(runner, live, keys_dir, "pay", str(invoice["id"]), identity="pat")
    cli(runner, live, keys_dir, "mine")
    result = cli(runner, live, keys_dir, "balance", pat_addr, "--json")
    assert json.loads(result.output)["balance"] == str(8 * ETH)
    result = cli(runner, live, keys_dir, "balance", pharm_addr, "--json")
    assert json.loads(result.output)["balance"] == str(2 * ETH)

    # paying the same invoice twice fails with the rejection name
    result = cli(runner, live, keys_dir, "pay", str(invoice["id"]),
                 identity="pat", expect_exit=1)
    assert "AlreadyPaid" in result.output
    result = cli(runner, live, keys_dir, "balance", pat_addr, "--json")
    assert json.loads(result.output)["balance"] == str(8 * ETH)

    # QR for the patient
    result = cli(runner, live, keys_dir, "qr", pat_addr)
    assert f"ehr://{pat_addr}/" in result.output
    assert "##" in result.output
    pbm_file = work / "code.pbm"
    cli(runner, live, keys_dir, "qr", pat_addr, "--pbm", str(pbm_file))
    assert pbm_file.read_text().startswith("P1\n")

    # the password never crossed the wire in any request or response
    for exchange in live.transcript:
        assert PASSWORD.encode() not in exchange["request"], exchange["path"]
        assert PASSWORD.encode() not in exchange["response"], exchange["path"]


def test_json_outputs_are_canonical_and_stable(runner, live, tmp_path_factory):
    keys_dir = tmp_path_factory.mktemp("keys-json")
    first = cli(runner, live, keys_dir, "invoices", "--json").output
    second = cli(runner, live, keys_dir, "invoices", "--json").output
    assert first == second
    parsed = json.loads(first)
    assert json.dumps(parsed, sort_keys=True,
                      separators=(",", ":")) + "\n" == first


def test_chain_verify_ok_and_tampered(live, tmp_path_factory):
    import shutil

    copy_dir = tmp_path_factory.mktemp("verify")
    shutil.copy(live.config.chain_file, copy_dir / "chain.jsonl")
    result = CliRunner().invoke(main, [
        "chain", "verify", "--data-dir", str(copy_dir), "--difficulty", "4",
        "--json",
    ])
    assert result.exit_code == 0, result.output
    digest = json.loads(result.output)["state_digest"]
    assert digest == live.node.state_digest()

    raw = bytearray((copy_dir / "chain.jsonl").read_bytes())
    raw[len(raw) // 2] ^= 0x04
    (copy_dir / "chain.jsonl").write_bytes(bytes(raw))
    tampered = CliRunner().invoke(main, [
        "chain", "verify", "--data-dir", str(copy_dir), "--difficulty", "4",
    ])
    assert tampered.exit_code == 1
    assert "height" in tampered.output


def test_unknown_keystore_identity_is_usage_error(runner, live,
                                                  tmp_path_factory):
    keys_dir = tmp_path_factory.mktemp("keys-missing")
    result = runner.invoke(main, [
        "--node-url", live.url, "--keystore", str(keys_dir),
        "--as", "ghost", "--password", "pw", "grant", "00" * 20,
    ])
    assert result.exit_code == 2


def test_node_unreachable_is_rejection_exit(runner, tmp_path_factory):
    keys_dir = tmp_path_factory.mktemp("keys-unreach")
    result = runner.invoke(main, [
        "--node-url", "http://127.0.0.1:1", "--keystore", str(keys_dir),
        "balance", "00" * 20,
    ])
    assert result.exit_code == 1

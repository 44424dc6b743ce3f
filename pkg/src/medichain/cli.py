"""Command-line surface: run a node, manage keys, drive the clinical flow.

Record files are hashed locally; only digests ever reach the node. Exit
codes: 0 success, 1 rejected by the node or chain, 2 usage error.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

import click
import httpx

from . import block as blockmod
from . import chap, fixtures, keystore
from . import state as statemod
from .config import NodeConfig, load_config
from .hashing import sha256
from .keys import KeyPair, address_from_hex, keygen, sign
from .node import Node, NodeError, enroll_signing_digest
from .qr import encode_qr, make_payload, render_pbm
from .state import WEI_PER_ETHER
from .tx import (
    AnchorRecord,
    Dispense,
    GrantAccess,
    PatientProfile,
    PayInvoice,
    Payload,
    Prescribe,
    ProviderProfile,
    Register,
    RevokeAccess,
    Role,
    Transfer,
    make_tx,
    tx_to_json,
)

REJECTION_EXIT = 1


class ApiError(Exception):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


@dataclass
class CliContext:
    node_url: str
    keystore_dir: Path
    identity_name: str | None
    password: str | None
    dev_account: int | None
    _identity: KeyPair | None = None

    def client(self) -> httpx.Client:
        return httpx.Client(base_url=self.node_url, timeout=30.0)

    def identity(self) -> KeyPair:
        if self._identity is not None:
            return self._identity
        if self.dev_account is not None:
            self._identity = keygen(seed=fixtures.DEV_SEEDS[self.dev_account])
            return self._identity
        if not self.identity_name:
            raise click.UsageError(
                "no identity selected; pass --as NAME (or --dev-account N)"
            )
        path = self.keystore_dir / f"{self.identity_name}.json"
        if not path.exists():
            raise click.UsageError(f"no keystore at {path}")
        self._identity = keystore.load_keystore(path, self._need_password())
        return self._identity

    def _need_password(self) -> str:
        if self.password is None:
            self.password = click.prompt("keystore password", hide_input=True)
        return self.password


pass_ctx = click.make_pass_decorator(CliContext)


def _request(ctx: CliContext, method: str, path: str, **kwargs) -> dict:
    try:
        with ctx.client() as client:
            resp = client.request(method, path, **kwargs)
    except httpx.HTTPError as exc:
        raise ApiError("NodeUnreachable", str(exc))
    if resp.status_code >= 400:
        try:
            body = resp.json()
            raise ApiError(body.get("error", "HttpError"), body.get("detail", ""))
        except (ValueError, KeyError):
            raise ApiError("HttpError", f"status {resp.status_code}")
    return resp.json()


def _next_nonce(ctx: CliContext, sender_hex: str) -> int:
    account = _request(ctx, "GET", f"/accounts/{sender_hex}")
    nonce = int(account["nonce"])
    pool = _request(ctx, "GET", "/mempool")["pending"]
    pending = [t["nonce"] for t in pool if t["sender"] == sender_hex]
    if pending:
        nonce = max(nonce, max(pending) + 1)
    return nonce


def _submit(ctx: CliContext, payload: Payload) -> str:
    kp = ctx.identity()
    nonce = _next_nonce(ctx, kp.address.hex())
    tx = make_tx(kp, nonce=nonce, timestamp=int(time.time()), payload=payload)
    # preflight so a doomed transaction fails here with its rejection name
    result = _request(ctx, "POST", "/tx", params={"preflight": "true"},
                      json=tx_to_json(tx))
    return result["txid"]


def _login(ctx: CliContext) -> str:
    """CHAP handshake; the password itself never goes on the wire."""
    kp = ctx.identity()
    password = ctx._need_password()
    challenge = _request(ctx, "POST", "/auth/challenge")
    response = chap.chap_respond(password, bytes.fromhex(challenge["nonce"]))
    session = _request(
        ctx,
        "POST",
        "/auth/login",
        json={
            "address": kp.address.hex(),
            "challenge_id": challenge["challenge_id"],
            "response": response.hex(),
        },
    )
    return session["token"]


def parse_amount(text: str) -> int:
    """'2eth', '0.5 ether', or a plain wei integer -> wei."""
    cleaned = text.strip().lower().replace(" ", "")
    for suffix in ("ether", "eth"):
        if cleaned.endswith(suffix):
            try:
                value = Decimal(cleaned[: -len(suffix)])
            except InvalidOperation:
                raise click.UsageError(f"bad amount {text!r}")
            wei = value * WEI_PER_ETHER
            if wei != wei.to_integral_value():
                raise click.UsageError("amount has sub-wei precision")
            return int(wei)
    if not cleaned.isdigit():
        raise click.UsageError(f"bad amount {text!r} (use wei or an eth suffix)")
    return int(cleaned)


def format_ether(wei: int) -> str:
    text = Decimal(wei) / WEI_PER_ETHER
    return f"{text.normalize():f}"


def _emit(data: dict, as_json: bool, human: str) -> None:
    if as_json:
        click.echo(statemod.canonical_json(data))
    else:
        click.echo(human)


def _fail(exc: ApiError) -> None:
    click.echo(f"rejected: {exc.code}" + (f" ({exc.detail})" if exc.detail else ""),
               err=True)
    sys.exit(REJECTION_EXIT)


def handle_api_errors(fn):
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ApiError as exc:
            _fail(exc)
        except (keystore.KeystoreError, NodeError) as exc:
            click.echo(f"rejected: {exc}", err=True)
            sys.exit(REJECTION_EXIT)

    return wrapper


@click.group()
@click.option("--node-url", envvar="MEDICHAIN_NODE_URL",
              default="http://127.0.0.1:7420", show_default=True)
@click.option("--keystore", "keystore_dir", envvar="MEDICHAIN_KEYSTORE",
              default="./keys", show_default=True,
              help="Directory of identity keystore files.")
@click.option("--as", "identity_name", default=None,
              help="Keystore identity to sign with.")
@click.option("--password", envvar="MEDICHAIN_PASSWORD", default=None,
              help="Keystore/CHAP password (prompted when needed).")
@click.option("--dev-account", type=click.IntRange(0, 9), default=None,
              help="Sign with a dev-mode fixture account instead of a keystore.")
@click.pass_context
def main(ctx, node_url, keystore_dir, identity_name, password, dev_account):
    """Operate a medichain node and drive the clinical workflow."""
    ctx.obj = CliContext(
        node_url=node_url,
        keystore_dir=Path(keystore_dir),
        identity_name=identity_name,
        password=password,
        dev_account=dev_account,
    )


# --- node lifecycle ------------------------------------------------------------

@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--port", type=int, default=None)
@click.option("--data-dir", default=None)
@click.option("--difficulty", type=int, default=None)
@click.option("--peer", "peer_urls", multiple=True)
@click.option("--dev", is_flag=True, default=False,
              help="Dev mode: ten prefunded 100-ether accounts.")
@click.option("--automine", type=float, default=None, metavar="SECS")
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(config_path, port, data_dir, difficulty, peer_urls, dev, automine, host):
    """Run a node until interrupted."""
    import uvicorn

    from .api import create_app

    config = load_config(config_path) if config_path else NodeConfig()
    if port is not None:
        config.listen_port = port
    if data_dir is not None:
        config.data_dir = data_dir
    if difficulty is not None:
        config.difficulty_bits = difficulty
    if peer_urls:
        config.peers = list(config.peers) + list(peer_urls)
    if dev:
        config.dev_mode = True
    if automine is not None:
        config.automine_interval = automine

    node = Node(config)
    node.startup_replay()
    node.start_automine()
    click.echo(
        f"medichain node on {host}:{config.listen_port} "
        f"(height {node.tip().height}, difficulty {config.difficulty_bits} bits)"
    )
    uvicorn.run(create_app(node), host=host, port=config.listen_port,
                log_level="warning")


# --- keys ------------------------------------------------------------------------

@main.command("keygen")
@click.option("--name", default=None, help="Keystore file name (default: address).")
@click.option("--seed-hex", default=None, help="32-byte hex seed for deterministic keys.")
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
@handle_api_errors
def keygen_cmd(ctx, name, seed_hex, as_json):
    """Create an identity and write an encrypted keystore file."""
    seed = bytes.fromhex(seed_hex) if seed_hex else None
    kp = keygen(seed=seed)
    password = ctx.password
    if password is None:
        password = click.prompt("new keystore password", hide_input=True,
                                confirmation_prompt=True)
        ctx.password = password
    name = name or kp.address.hex()
    path = ctx.keystore_dir / f"{name}.json"
    keystore.save_keystore(path, kp, password)
    _emit(
        {"address": kp.address.hex(), "keystore": str(path)},
        as_json,
        f"address {kp.address.hex()}\nkeystore {path}",
    )


# --- registration ------------------------------------------------------------------

def _enroll(ctx: CliContext, kp: KeyPair, password: str) -> None:
    stored = chap.password_hash(password)
    signature = sign(kp, enroll_signing_digest(kp.address, stored))
    _request(ctx, "POST", "/auth/enroll", json={
        "address": kp.address.hex(),
        "stored_hash": stored.hex(),
        "public_key": kp.public_key.hex(),
        "signature": signature.hex(),
    })


@main.group()
def register():
    """Register the active identity in a role."""


def _register_common(ctx: CliContext, payload: Register) -> None:
    txid = _submit(ctx, payload)
    _enroll(ctx, ctx.identity(), ctx._need_password())
    click.echo(f"registered {payload.role.value}; txid {txid}")


@register.command("patient")
@click.option("--name", prompt=True)
@click.option("--phone", prompt=True)
@click.option("--email", prompt=True)
@click.option("--date-of-birth", prompt=True)
@click.option("--home-address", prompt=True)
@click.option("--insurance", prompt=True)
@pass_ctx
@handle_api_errors
def register_patient(ctx, name, phone, email, date_of_birth, home_address, insurance):
    profile = PatientProfile(
        name=name, phone=phone, email=email, date_of_birth=date_of_birth,
        home_address=home_address, insurance_details=insurance,
    )
    _register_common(ctx, Register(role=Role.PATIENT, profile=profile))


def _provider_options(fn):
    for option in reversed([
        click.option("--name", prompt=True),
        click.option("--phone", prompt=True),
        click.option("--email", prompt=True),
        click.option("--date-of-birth", prompt=True),
        click.option("--postal-address", prompt=True),
        click.option("--registration-number", prompt=True),
        click.option("--organization", prompt=True),
    ]):
        fn = option(fn)
    return fn


@register.command("doctor")
@_provider_options
@pass_ctx
@handle_api_errors
def register_doctor(ctx, name, phone, email, date_of_birth, postal_address,
                    registration_number, organization):
    profile = ProviderProfile(
        name=name, phone=phone, email=email, date_of_birth=date_of_birth,
        postal_address=postal_address, registration_number=registration_number,
        organization=organization,
    )
    _register_common(ctx, Register(role=Role.DOCTOR, profile=profile))


@register.command("pharmacist")
@_provider_options
@pass_ctx
@handle_api_errors
def register_pharmacist(ctx, name, phone, email, date_of_birth, postal_address,
                        registration_number, organization):
    profile = ProviderProfile(
        name=name, phone=phone, email=email, date_of_birth=date_of_birth,
        postal_address=postal_address, registration_number=registration_number,
        organization=organization,
    )
    _register_common(ctx, Register(role=Role.PHARMACIST, profile=profile))


# --- consent -----------------------------------------------------------------------

@main.command()
@click.argument("grantee")
@pass_ctx
@handle_api_errors
def grant(ctx, grantee):
    """Grant a provider access to your records."""
    txid = _submit(ctx, GrantAccess(grantee=address_from_hex(grantee)))
    click.echo(f"grant submitted; txid {txid}")


@main.command()
@click.argument("grantee")
@pass_ctx
@handle_api_errors
def revoke(ctx, grantee):
    """Revoke a provider's access."""
    txid = _submit(ctx, RevokeAccess(grantee=address_from_hex(grantee)))
    click.echo(f"revoke submitted; txid {txid}")


# --- records --------------------------------------------------------------------------

@main.command()
@click.argument("record_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--patient", "patient_hex", default=None,
              help="Patient address (default: your own).")
@click.option("--type", "record_type", default="document", show_default=True)
@pass_ctx
@handle_api_errors
def anchor(ctx, record_file, patient_hex, record_type):
    """Hash a record file locally and anchor the digest on-chain.

    The file's bytes never leave this machine; only the SHA-256 goes out.
    """
    digest = sha256(Path(record_file).read_bytes())
    kp = ctx.identity()
    patient = address_from_hex(patient_hex) if patient_hex else kp.address
    txid = _submit(ctx, AnchorRecord(
        patient=patient, record_hash=digest, record_type=record_type,
    ))
    click.echo(f"record digest {digest.hex()}")
    click.echo(f"anchor submitted; txid {txid}")


@main.command()
@click.argument("patient")
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
@handle_api_errors
def records(ctx, patient, as_json):
    """List a patient's record anchors (requires CHAP login + grant)."""
    token = _login(ctx)
    data = _request(ctx, "GET", f"/patients/{patient}/records",
                    headers={"Authorization": f"Bearer {token}"})
    lines = [
        f"#{r['id']} {r['record_type']} {r['record_hash']} "
        f"(author {r['author']}, height {r['anchored_at']})"
        for r in data["records"]
    ] or ["(no records)"]
    _emit(data, as_json, "\n".join(lines))


# --- prescriptions & payments ------------------------------------------------------------

@main.command()
@click.argument("rx_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--patient", "patient_hex", required=True)
@click.option("--pharmacist", "pharmacist_hex", required=True)
@click.option("--price", required=True, help="e.g. '2eth' or wei.")
@pass_ctx
@handle_api_errors
def prescribe(ctx, rx_file, patient_hex, pharmacist_hex, price):
    """Prescribe for a patient; the invoice is created in the same step."""
    rx_hash = sha256(Path(rx_file).read_bytes())
    txid = _submit(ctx, Prescribe(
        patient=address_from_hex(patient_hex),
        pharmacist=address_from_hex(pharmacist_hex),
        rx_hash=rx_hash,
        price=parse_amount(price),
    ))
    click.echo(f"prescription digest {rx_hash.hex()}")
    click.echo(f"prescribe submitted; txid {txid}")


@main.command()
@click.argument("prescription_id", type=int)
@pass_ctx
@handle_api_errors
def dispense(ctx, prescription_id):
    """Mark a prescription dispensed (designated pharmacist only)."""
    txid = _submit(ctx, Dispense(prescription_id=prescription_id))
    click.echo(f"dispense submitted; txid {txid}")


@main.command()
@click.option("--patient", "patient_hex", default=None)
@click.option("--payee", "payee_hex", default=None)
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
@handle_api_errors
def invoices(ctx, patient_hex, payee_hex, as_json):
    """List invoices, optionally filtered by patient or payee."""
    params = {}
    if patient_hex:
        params["patient"] = patient_hex
    if payee_hex:
        params["payee"] = payee_hex
    data = _request(ctx, "GET", "/invoices", params=params)
    lines = [
        f"#{i['id']} rx {i['prescription_id']} {format_ether(int(i['amount']))} eth "
        f"to {i['payee']} [{i['status']}]"
        for i in data["invoices"]
    ] or ["(no invoices)"]
    _emit(data, as_json, "\n".join(lines))


@main.command()
@click.argument("invoice_id", type=int)
@pass_ctx
@handle_api_errors
def pay(ctx, invoice_id):
    """Pay an invoice from the active identity's balance."""
    txid = _submit(ctx, PayInvoice(invoice_id=invoice_id))
    click.echo(f"payment submitted; txid {txid}")


@main.command()
@click.argument("addr")
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
@handle_api_errors
def balance(ctx, addr, as_json):
    """Show an account's balance and nonce."""
    data = _request(ctx, "GET", f"/accounts/{addr}")
    human = (
        f"{addr}: {format_ether(int(data['balance']))} eth "
        f"({data['balance']} wei), nonce {data['nonce']}"
        + (f", role {data['role']}" if data.get("role") else "")
    )
    _emit(data, as_json, human)


@main.command()
@click.option("--to", "to_hex", required=True)
@click.option("--amount", required=True, help="e.g. '2eth' or wei.")
@pass_ctx
@handle_api_errors
def transfer(ctx, to_hex, amount):
    """Send ether to another address."""
    txid = _submit(ctx, Transfer(
        to=address_from_hex(to_hex), amount=parse_amount(amount),
    ))
    click.echo(f"transfer submitted; txid {txid}")


# --- QR, mining, chain --------------------------------------------------------------------

@main.command()
@click.argument("patient")
@click.option("--record-id", type=int, default=None,
              help="Share one record instead of the Merkle root.")
@click.option("--pbm", "pbm_path", type=click.Path(dir_okay=False), default=None,
              help="Also write a PBM image.")
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
@handle_api_errors
def qr(ctx, patient, record_id, pbm_path, as_json):
    """Render a patient's record digest as a QR symbol."""
    params = {}
    if record_id is not None:
        params["record_id"] = record_id
    data = _request(ctx, "GET", f"/qr/{patient}", params=params)
    if pbm_path:
        payload = make_payload(
            address_from_hex(patient),
            bytes.fromhex(data["payload"].rsplit("/", 1)[1]),
            data["digest_kind"],
        )
        Path(pbm_path).write_text(render_pbm(encode_qr(payload)))
    if as_json:
        _emit({k: v for k, v in data.items() if k != "ascii"}, True, "")
    else:
        click.echo(data["payload"])
        click.echo(data["ascii"])


@main.command()
@click.option("--allow-empty", is_flag=True, default=False)
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
@handle_api_errors
def mine(ctx, allow_empty, as_json):
    """Ask the node to mine the pending transactions now."""
    data = _request(ctx, "POST", "/mine", json={"allow_empty": allow_empty})
    header = data["block"]["header"]
    human = (
        f"mined block {header['height']} with {data['block']['tx_count']} tx"
        + (f"; dropped {len(data['dropped'])}" if data["dropped"] else "")
    )
    _emit(data, as_json, human)


@main.group()
def chain():
    """Inspect or verify a chain."""


@chain.command("verify")
@click.option("--data-dir", default="./medichain-data", show_default=True)
@click.option("--difficulty", type=int, default=12, show_default=True)
@click.option("--dev/--no-dev", default=True, show_default=True,
              help="Replay against the dev genesis allocation.")
@click.option("--json", "as_json", is_flag=True)
def chain_verify(data_dir, difficulty, dev, as_json):
    """Validate chain.jsonl and replay it; print the state digest."""
    path = Path(data_dir) / "chain.jsonl"
    if not path.exists():
        click.echo(f"rejected: NoChain ({path} missing)", err=True)
        sys.exit(REJECTION_EXIT)
    try:
        blocks = Node._load_chain_file(path)
    except NodeError as exc:
        click.echo(f"rejected: {exc}", err=True)
        sys.exit(REJECTION_EXIT)
    failure = blockmod.validate_chain(blocks, difficulty)
    if failure is not None:
        height, violations = failure
        click.echo(f"rejected: invalid chain at height {height}: "
                   f"{','.join(violations)}", err=True)
        sys.exit(REJECTION_EXIT)
    alloc = fixtures.dev_allocations() if dev else []
    try:
        final = statemod.replay(blocks, alloc)
    except statemod.ReplayError as exc:
        click.echo(f"rejected: replay failed at height {exc.height} "
                   f"index {exc.index}: {exc.cause.code}", err=True)
        sys.exit(REJECTION_EXIT)
    digest = statemod.state_digest(final)
    data = {
        "height": blocks[-1].header.height,
        "blocks": len(blocks),
        "state_digest": digest,
    }
    _emit(data, as_json,
          f"ok: height {data['height']}, state digest {digest}")


if __name__ == "__main__":
    main()

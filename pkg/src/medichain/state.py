"""The built-in "smart contract": a deterministic world-state machine.

Applying a signed transaction either yields a brand-new state or raises
``Rejected`` and leaves the input untouched. Registration binds an address
to a role, patients consent to providers via grants, providers anchor
record digests, prescriptions mint an invoice in the same transition, and
payments move wei between accounts. Total supply is fixed at genesis and
conserved by every rule.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

from .block import Block
from .hashing import sha256_hex
from .tx import (
    AnchorRecord,
    Dispense,
    GrantAccess,
    PatientProfile,
    PayInvoice,
    Prescribe,
    Register,
    RevokeAccess,
    Role,
    SignedTransaction,
    Transfer,
    U128_MAX,
    profile_fields,
    verify_tx_signature,
)

WEI_PER_ETHER = 10**18

RX_OPEN = "open"
RX_DISPENSED = "dispensed"
INVOICE_UNPAID = "unpaid"
INVOICE_PAID = "paid"


class Rejected(Exception):
    """A transaction the state rules refuse; ``code`` names the reason."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


class ReplayError(Exception):
    """A chain carried a transaction its own state rules reject."""

    def __init__(self, height: int, index: int, cause: Rejected):
        self.height = height
        self.index = index
        self.cause = cause
        super().__init__(
            f"invalid transaction at height {height} index {index}: {cause}"
        )


@dataclass
class Account:
    balance: int = 0
    nonce: int = 0


@dataclass
class RoleRecord:
    role: Role
    profile: object


@dataclass
class Grant:
    patient: bytes
    grantee: bytes
    active: bool
    granted_at: int
    revoked_at: int | None = None


@dataclass
class RecordEntry:
    id: int
    patient: bytes
    author: bytes
    record_hash: bytes
    record_type: str
    anchored_at: int


@dataclass
class Prescription:
    id: int
    doctor: bytes
    patient: bytes
    pharmacist: bytes
    rx_hash: bytes
    price: int
    status: str = RX_OPEN


@dataclass
class Invoice:
    id: int
    prescription_id: int
    payee: bytes
    amount: int
    status: str = INVOICE_UNPAID


@dataclass
class WorldState:
    accounts: dict[bytes, Account] = field(default_factory=dict)
    roles: dict[bytes, RoleRecord] = field(default_factory=dict)
    grants: dict[tuple[bytes, bytes], Grant] = field(default_factory=dict)
    records: list[RecordEntry] = field(default_factory=list)
    prescriptions: dict[int, Prescription] = field(default_factory=dict)
    invoices: dict[int, Invoice] = field(default_factory=dict)
    next_record_id: int = 1
    next_rx_id: int = 1
    supply: int = 0
    height: int = 0

    def clone(self) -> "WorldState":
        return copy.deepcopy(self)

    def total_balance(self) -> int:
        return sum(acct.balance for acct in self.accounts.values())

    def active_grant(self, patient: bytes, grantee: bytes) -> bool:
        grant = self.grants.get((patient, grantee))
        return grant is not None and grant.active

    def role_of(self, address: bytes) -> Role | None:
        rec = self.roles.get(address)
        return rec.role if rec else None


def genesis_state(allocations: list[tuple[bytes, int]]) -> WorldState:
    """Fund the initial accounts; everything else starts empty."""
    state = WorldState()
    for address, wei in allocations:
        if address in state.accounts:
            raise Rejected("DuplicateAddress", address.hex())
        if not 0 <= wei <= U128_MAX:
            raise Rejected("BadAllocation", f"{wei} out of u128 range")
        state.accounts[bytes(address)] = Account(balance=wei, nonce=0)
        state.supply += wei
    if state.supply > U128_MAX:
        raise Rejected("BadAllocation", "total supply exceeds u128")
    return state


def apply_tx(state: WorldState, tx: SignedTransaction) -> WorldState:
    """Pure transition: validate, dispatch, bump the sender nonce.

    Raises ``Rejected`` without touching ``state``.
    """
    if not verify_tx_signature(tx):
        raise Rejected("BadSignature")
    account = state.accounts.get(tx.sender)
    if account is None and tx.sender not in state.roles:
        if not isinstance(tx.payload, Register):
            raise Rejected("UnknownSender", tx.sender.hex())
    expected_nonce = account.nonce if account else 0
    if tx.nonce != expected_nonce:
        raise Rejected(
            "BadNonce", f"expected {expected_nonce}, got {tx.nonce}"
        )

    new_state = state.clone()
    payload = tx.payload
    if isinstance(payload, Register):
        rule_register(new_state, tx.sender, payload.role, payload.profile)
    elif isinstance(payload, GrantAccess):
        rule_grant(new_state, tx.sender, payload.grantee)
    elif isinstance(payload, RevokeAccess):
        rule_revoke(new_state, tx.sender, payload.grantee)
    elif isinstance(payload, AnchorRecord):
        rule_anchor(
            new_state, tx.sender, payload.patient, payload.record_hash,
            payload.record_type,
        )
    elif isinstance(payload, Prescribe):
        rule_prescribe(
            new_state, tx.sender, payload.patient, payload.pharmacist,
            payload.rx_hash, payload.price,
        )
    elif isinstance(payload, Dispense):
        rule_dispense(new_state, tx.sender, payload.prescription_id)
    elif isinstance(payload, PayInvoice):
        rule_pay_invoice(new_state, tx.sender, payload.invoice_id)
    elif isinstance(payload, Transfer):
        rule_transfer(new_state, tx.sender, payload.to, payload.amount)
    else:
        raise Rejected("UnknownPayload", type(payload).__name__)

    sender_account = new_state.accounts.setdefault(tx.sender, Account())
    sender_account.nonce = expected_nonce + 1
    return new_state


def rule_register(state: WorldState, sender: bytes, role: Role, profile) -> None:
    if sender in state.roles:
        raise Rejected("AlreadyRegistered", sender.hex())
    expected = PatientProfile if role is Role.PATIENT else None
    if expected is not None and not isinstance(profile, expected):
        raise Rejected("MissingField", "wrong profile shape for role")
    for name, value in profile_fields(profile):
        if not value.strip():
            raise Rejected("MissingField", name)
    state.roles[sender] = RoleRecord(role=role, profile=profile)
    state.accounts.setdefault(sender, Account())


def rule_grant(state: WorldState, patient: bytes, grantee: bytes) -> None:
    if state.role_of(patient) is not Role.PATIENT:
        raise Rejected("NotAPatient", patient.hex())
    if state.role_of(grantee) not in (Role.DOCTOR, Role.PHARMACIST):
        raise Rejected("GranteeUnregistered", grantee.hex())
    existing = state.grants.get((patient, grantee))
    if existing is not None and existing.active:
        raise Rejected("AlreadyActive")
    state.grants[(patient, grantee)] = Grant(
        patient=patient, grantee=grantee, active=True,
        granted_at=state.height, revoked_at=None,
    )


def rule_revoke(state: WorldState, patient: bytes, grantee: bytes) -> None:
    if state.role_of(patient) is not Role.PATIENT:
        raise Rejected("NotAPatient", patient.hex())
    existing = state.grants.get((patient, grantee))
    if existing is None or not existing.active:
        raise Rejected("NotActive")
    existing.active = False
    existing.revoked_at = state.height


def rule_anchor(
    state: WorldState, author: bytes, patient: bytes, record_hash: bytes,
    record_type: str,
) -> None:
    if state.role_of(patient) is not Role.PATIENT:
        raise Rejected("PatientUnregistered", patient.hex())
    if author != patient:
        if state.role_of(author) is not Role.DOCTOR or not state.active_grant(
            patient, author
        ):
            raise Rejected("Unauthorized", author.hex())
    state.records.append(
        RecordEntry(
            id=state.next_record_id,
            patient=patient,
            author=author,
            record_hash=record_hash,
            record_type=record_type,
            anchored_at=state.height,
        )
    )
    state.next_record_id += 1


def rule_prescribe(
    state: WorldState, doctor: bytes, patient: bytes, pharmacist: bytes,
    rx_hash: bytes, price: int,
) -> None:
    if state.role_of(doctor) is not Role.DOCTOR:
        raise Rejected("NotADoctor", doctor.hex())
    if not state.active_grant(patient, doctor):
        raise Rejected("NoActiveGrant")
    if state.role_of(pharmacist) is not Role.PHARMACIST:
        raise Rejected("PharmacistUnregistered", pharmacist.hex())
    rx_id = state.next_rx_id
    state.next_rx_id += 1
    # Prescription and its invoice are minted in the same transition.
    state.prescriptions[rx_id] = Prescription(
        id=rx_id, doctor=doctor, patient=patient, pharmacist=pharmacist,
        rx_hash=rx_hash, price=price,
    )
    state.invoices[rx_id] = Invoice(
        id=rx_id, prescription_id=rx_id, payee=pharmacist, amount=price,
    )


def rule_dispense(state: WorldState, pharmacist: bytes, prescription_id: int) -> None:
    rx = state.prescriptions.get(prescription_id)
    if rx is None:
        raise Rejected("NotFound", f"prescription {prescription_id}")
    if pharmacist != rx.pharmacist:
        raise Rejected("NotDesignatedPharmacist")
    if rx.status != RX_OPEN:
        raise Rejected("AlreadyDispensed")
    rx.status = RX_DISPENSED


def rule_pay_invoice(state: WorldState, payer: bytes, invoice_id: int) -> None:
    invoice = state.invoices.get(invoice_id)
    if invoice is None:
        raise Rejected("NotFound", f"invoice {invoice_id}")
    rx = state.prescriptions[invoice.prescription_id]
    if payer != rx.patient:
        raise Rejected("NotYourInvoice")
    if invoice.status != INVOICE_UNPAID:
        raise Rejected("AlreadyPaid")
    payer_account = state.accounts.get(payer)
    if payer_account is None or payer_account.balance < invoice.amount:
        raise Rejected("InsufficientBalance")
    payer_account.balance -= invoice.amount
    payee_account = state.accounts.setdefault(invoice.payee, Account())
    payee_account.balance += invoice.amount
    invoice.status = INVOICE_PAID


def rule_transfer(state: WorldState, sender: bytes, to: bytes, amount: int) -> None:
    sender_account = state.accounts.get(sender)
    if sender_account is None or sender_account.balance < amount:
        raise Rejected("InsufficientBalance")
    sender_account.balance -= amount
    recipient = state.accounts.setdefault(bytes(to), Account())
    recipient.balance += amount


def query_records(
    state: WorldState, requester: bytes, patient: bytes
) -> list[RecordEntry]:
    """Patients read their own anchors; anyone else needs an active grant."""
    if requester != patient and not state.active_grant(patient, requester):
        raise Rejected("Unauthorized", requester.hex())
    return [r for r in state.records if r.patient == patient]


def replay(blocks: list[Block], genesis_alloc: list[tuple[bytes, int]]) -> WorldState:
    """Fold every transaction of an already-validated chain over genesis."""
    state = genesis_state(genesis_alloc)
    for blk in blocks:
        state.height = blk.header.height
        for index, transaction in enumerate(blk.transactions):
            try:
                state = apply_tx(state, transaction)
            except Rejected as exc:
                raise ReplayError(blk.header.height, index, exc) from exc
            state.height = blk.header.height
    return state


# --- canonical serialization ------------------------------------------------

def profile_to_json(profile) -> dict:
    return {k: v for k, v in profile_fields(profile)}


def record_to_json(record: RecordEntry) -> dict:
    return {
        "id": record.id,
        "patient": record.patient.hex(),
        "author": record.author.hex(),
        "record_hash": record.record_hash.hex(),
        "record_type": record.record_type,
        "anchored_at": record.anchored_at,
    }


def prescription_to_json(rx: Prescription) -> dict:
    return {
        "id": rx.id,
        "doctor": rx.doctor.hex(),
        "patient": rx.patient.hex(),
        "pharmacist": rx.pharmacist.hex(),
        "rx_hash": rx.rx_hash.hex(),
        "price": str(rx.price),
        "status": rx.status,
    }


def invoice_to_json(invoice: Invoice) -> dict:
    return {
        "id": invoice.id,
        "prescription_id": invoice.prescription_id,
        "payee": invoice.payee.hex(),
        "amount": str(invoice.amount),
        "status": invoice.status,
    }


def grant_to_json(grant: Grant) -> dict:
    return {
        "patient": grant.patient.hex(),
        "grantee": grant.grantee.hex(),
        "active": grant.active,
        "granted_at": grant.granted_at,
        "revoked_at": grant.revoked_at,
    }


def state_to_json(state: WorldState) -> dict:
    return {
        "accounts": {
            addr.hex(): {"balance": str(acct.balance), "nonce": acct.nonce}
            for addr, acct in state.accounts.items()
        },
        "roles": {
            addr.hex(): {
                "role": rec.role.value,
                "profile": profile_to_json(rec.profile),
            }
            for addr, rec in state.roles.items()
        },
        "grants": [
            grant_to_json(state.grants[key]) for key in sorted(state.grants)
        ],
        "records": [record_to_json(r) for r in state.records],
        "prescriptions": [
            prescription_to_json(state.prescriptions[k])
            for k in sorted(state.prescriptions)
        ],
        "invoices": [
            invoice_to_json(state.invoices[k]) for k in sorted(state.invoices)
        ],
        "counters": {
            "record": state.next_record_id,
            "prescription": state.next_rx_id,
        },
        "supply": str(state.supply),
        "height": state.height,
    }


def canonical_json(obj) -> str:
    """Sorted keys, no insignificant whitespace; stable across nodes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def state_digest(state: WorldState) -> str:
    """SHA-256 over the canonical JSON form; equal states hash equal."""
    return sha256_hex(canonical_json(state_to_json(state)).encode())


def parties_of(rx: Prescription) -> set[bytes]:
    return {rx.doctor, rx.patient, rx.pharmacist}

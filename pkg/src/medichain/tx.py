"""Signed state-transition requests and their canonical encoding.

Every transaction encodes to a fixed byte layout: one payload type tag,
then the envelope and payload fields in declaration order, integers
big-endian, texts as 2-byte length-prefixed UTF-8. The signing digest is
the SHA-256 of that encoding with the signature omitted; the txid is the
SHA-256 of the full encoding. Wei amounts travel as 16-byte integers on
the wire and as decimal strings in JSON (they exceed 2^53).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

from . import keys
from .hashing import check_hash32, sha256

U64_MAX = 2**64 - 1
U128_MAX = 2**128 - 1


class Role(str, Enum):
    PATIENT = "patient"
    DOCTOR = "doctor"
    PHARMACIST = "pharmacist"


_ROLE_TAG = {Role.PATIENT: 1, Role.DOCTOR: 2, Role.PHARMACIST: 3}
_ROLE_FROM_TAG = {v: k for k, v in _ROLE_TAG.items()}


@dataclass(frozen=True)
class PatientProfile:
    name: str
    phone: str
    email: str
    date_of_birth: str
    home_address: str
    insurance_details: str


@dataclass(frozen=True)
class ProviderProfile:
    """Registration details for doctors and pharmacists."""

    name: str
    phone: str
    email: str
    date_of_birth: str
    postal_address: str
    registration_number: str
    organization: str


def profile_fields(profile) -> list[tuple[str, str]]:
    """(field, value) pairs in declaration order."""
    names = profile.__dataclass_fields__
    return [(n, getattr(profile, n)) for n in names]


@dataclass(frozen=True)
class Register:
    role: Role
    profile: PatientProfile | ProviderProfile


@dataclass(frozen=True)
class GrantAccess:
    grantee: bytes


@dataclass(frozen=True)
class RevokeAccess:
    grantee: bytes


@dataclass(frozen=True)
class AnchorRecord:
    patient: bytes
    record_hash: bytes
    record_type: str


@dataclass(frozen=True)
class Prescribe:
    patient: bytes
    pharmacist: bytes
    rx_hash: bytes
    price: int


@dataclass(frozen=True)
class Dispense:
    prescription_id: int


@dataclass(frozen=True)
class PayInvoice:
    invoice_id: int


@dataclass(frozen=True)
class Transfer:
    to: bytes
    amount: int


Payload = (
    Register
    | GrantAccess
    | RevokeAccess
    | AnchorRecord
    | Prescribe
    | Dispense
    | PayInvoice
    | Transfer
)

_PAYLOAD_TAG: dict[type, int] = {
    Register: 1,
    GrantAccess: 2,
    RevokeAccess: 3,
    AnchorRecord: 4,
    Prescribe: 5,
    Dispense: 6,
    PayInvoice: 7,
    Transfer: 8,
}

_PAYLOAD_NAME: dict[type, str] = {
    Register: "register",
    GrantAccess: "grant_access",
    RevokeAccess: "revoke_access",
    AnchorRecord: "anchor_record",
    Prescribe: "prescribe",
    Dispense: "dispense",
    PayInvoice: "pay_invoice",
    Transfer: "transfer",
}
_PAYLOAD_BY_NAME = {v: k for k, v in _PAYLOAD_NAME.items()}


@dataclass(frozen=True)
class SignedTransaction:
    sender: bytes
    sender_public_key: bytes
    nonce: int
    timestamp: int
    payload: Payload
    signature: bytes


def _u64(value: int) -> bytes:
    if not 0 <= value <= U64_MAX:
        raise ValueError(f"value {value} out of u64 range")
    return struct.pack(">Q", value)


def _u128(value: int) -> bytes:
    if not 0 <= value <= U128_MAX:
        raise ValueError(f"value {value} out of u128 range")
    return value.to_bytes(16, "big")


def _text(value: str) -> bytes:
    raw = value.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError("text field exceeds 65535 bytes")
    return struct.pack(">H", len(raw)) + raw


def _addr(value: bytes) -> bytes:
    if len(value) != keys.ADDRESS_LEN:
        raise ValueError("address must be 20 bytes")
    return bytes(value)


def encode_payload(payload: Payload) -> bytes:
    if isinstance(payload, Register):
        parts = [bytes([_ROLE_TAG[payload.role]])]
        parts += [_text(v) for _, v in profile_fields(payload.profile)]
        return b"".join(parts)
    if isinstance(payload, (GrantAccess, RevokeAccess)):
        return _addr(payload.grantee)
    if isinstance(payload, AnchorRecord):
        return (
            _addr(payload.patient)
            + check_hash32(payload.record_hash, "record_hash")
            + _text(payload.record_type)
        )
    if isinstance(payload, Prescribe):
        return (
            _addr(payload.patient)
            + _addr(payload.pharmacist)
            + check_hash32(payload.rx_hash, "rx_hash")
            + _u128(payload.price)
        )
    if isinstance(payload, Dispense):
        return _u64(payload.prescription_id)
    if isinstance(payload, PayInvoice):
        return _u64(payload.invoice_id)
    if isinstance(payload, Transfer):
        return _addr(payload.to) + _u128(payload.amount)
    raise TypeError(f"unknown payload type {type(payload)!r}")


def _envelope(tx: SignedTransaction) -> bytes:
    return (
        bytes([_PAYLOAD_TAG[type(tx.payload)]])
        + _addr(tx.sender)
        + tx.sender_public_key
        + _u64(tx.nonce)
        + _u64(tx.timestamp)
        + encode_payload(tx.payload)
    )


def signing_digest(tx: SignedTransaction) -> bytes:
    """SHA-256 of the canonical encoding with the signature omitted."""
    return sha256(_envelope(tx))


def txid(tx: SignedTransaction) -> bytes:
    """SHA-256 of the full canonical encoding, signature included."""
    return sha256(_envelope(tx) + tx.signature)


def txid_hex(tx: SignedTransaction) -> str:
    return txid(tx).hex()


def make_tx(
    kp: keys.KeyPair, nonce: int, timestamp: int, payload: Payload
) -> SignedTransaction:
    """Build and sign a transaction from ``kp``'s identity."""
    unsigned = SignedTransaction(
        sender=kp.address,
        sender_public_key=kp.public_key,
        nonce=nonce,
        timestamp=timestamp,
        payload=payload,
        signature=b"\x00" * keys.SIG_LEN,
    )
    sig = keys.sign(kp, signing_digest(unsigned))
    return SignedTransaction(
        sender=unsigned.sender,
        sender_public_key=unsigned.sender_public_key,
        nonce=nonce,
        timestamp=timestamp,
        payload=payload,
        signature=sig,
    )


def verify_tx_signature(tx: SignedTransaction) -> bool:
    """Check the sender/key binding and the signature itself."""
    try:
        if keys.derive_address(tx.sender_public_key) != tx.sender:
            return False
    except keys.BadKeyLength:
        return False
    return keys.verify(tx.sender_public_key, signing_digest(tx), tx.signature)


# --- JSON wire form -------------------------------------------------------

def payload_to_json(payload: Payload) -> dict:
    name = _PAYLOAD_NAME[type(payload)]
    if isinstance(payload, Register):
        return {
            "type": name,
            "role": payload.role.value,
            "profile": {k: v for k, v in profile_fields(payload.profile)},
        }
    if isinstance(payload, (GrantAccess, RevokeAccess)):
        return {"type": name, "grantee": payload.grantee.hex()}
    if isinstance(payload, AnchorRecord):
        return {
            "type": name,
            "patient": payload.patient.hex(),
            "record_hash": payload.record_hash.hex(),
            "record_type": payload.record_type,
        }
    if isinstance(payload, Prescribe):
        return {
            "type": name,
            "patient": payload.patient.hex(),
            "pharmacist": payload.pharmacist.hex(),
            "rx_hash": payload.rx_hash.hex(),
            "price": str(payload.price),
        }
    if isinstance(payload, Dispense):
        return {"type": name, "prescription_id": payload.prescription_id}
    if isinstance(payload, PayInvoice):
        return {"type": name, "invoice_id": payload.invoice_id}
    if isinstance(payload, Transfer):
        return {"type": name, "to": payload.to.hex(), "amount": str(payload.amount)}
    raise TypeError(f"unknown payload type {type(payload)!r}")


class WireError(ValueError):
    """Malformed JSON transaction or block."""


def _wire_addr(obj: dict, key: str) -> bytes:
    try:
        raw = bytes.fromhex(_wire_str(obj, key))
    except ValueError as exc:
        raise WireError(f"{key}: invalid hex") from exc
    if len(raw) != keys.ADDRESS_LEN:
        raise WireError(f"{key}: expected 20 bytes")
    return raw


def _wire_hash(obj: dict, key: str) -> bytes:
    try:
        raw = bytes.fromhex(_wire_str(obj, key))
    except ValueError as exc:
        raise WireError(f"{key}: invalid hex") from exc
    if len(raw) != 32:
        raise WireError(f"{key}: expected 32 bytes")
    return raw


def _wire_str(obj: dict, key: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise WireError(f"{key}: expected string")
    return value


def _wire_int(obj: dict, key: str, limit: int = U64_MAX) -> int:
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise WireError(f"{key}: expected integer")
    if not 0 <= value <= limit:
        raise WireError(f"{key}: out of range")
    return value


def _wire_wei(obj: dict, key: str) -> int:
    value = obj.get(key)
    if not isinstance(value, str) or not value.isdigit():
        raise WireError(f"{key}: expected decimal string")
    amount = int(value)
    if amount > U128_MAX:
        raise WireError(f"{key}: out of u128 range")
    return amount


def payload_from_json(obj: dict) -> Payload:
    if not isinstance(obj, dict):
        raise WireError("payload: expected object")
    name = obj.get("type")
    cls = _PAYLOAD_BY_NAME.get(name)
    if cls is None:
        raise WireError(f"payload: unknown type {name!r}")
    if cls is Register:
        role_name = _wire_str(obj, "role")
        try:
            role = Role(role_name)
        except ValueError as exc:
            raise WireError(f"role: unknown role {role_name!r}") from exc
        profile_obj = obj.get("profile")
        if not isinstance(profile_obj, dict):
            raise WireError("profile: expected object")
        profile_cls = PatientProfile if role is Role.PATIENT else ProviderProfile
        wanted = list(profile_cls.__dataclass_fields__)
        if set(profile_obj) != set(wanted):
            raise WireError(f"profile: expected fields {wanted}")
        values = {}
        for field in wanted:
            if not isinstance(profile_obj[field], str):
                raise WireError(f"profile.{field}: expected string")
            values[field] = profile_obj[field]
        return Register(role=role, profile=profile_cls(**values))
    if cls in (GrantAccess, RevokeAccess):
        return cls(grantee=_wire_addr(obj, "grantee"))
    if cls is AnchorRecord:
        return AnchorRecord(
            patient=_wire_addr(obj, "patient"),
            record_hash=_wire_hash(obj, "record_hash"),
            record_type=_wire_str(obj, "record_type"),
        )
    if cls is Prescribe:
        return Prescribe(
            patient=_wire_addr(obj, "patient"),
            pharmacist=_wire_addr(obj, "pharmacist"),
            rx_hash=_wire_hash(obj, "rx_hash"),
            price=_wire_wei(obj, "price"),
        )
    if cls is Dispense:
        return Dispense(prescription_id=_wire_int(obj, "prescription_id"))
    if cls is PayInvoice:
        return PayInvoice(invoice_id=_wire_int(obj, "invoice_id"))
    return Transfer(to=_wire_addr(obj, "to"), amount=_wire_wei(obj, "amount"))


def tx_to_json(tx: SignedTransaction) -> dict:
    return {
        "sender": tx.sender.hex(),
        "sender_public_key": tx.sender_public_key.hex(),
        "nonce": tx.nonce,
        "timestamp": tx.timestamp,
        "payload": payload_to_json(tx.payload),
        "signature": tx.signature.hex(),
    }


def tx_from_json(obj: dict) -> SignedTransaction:
    if not isinstance(obj, dict):
        raise WireError("transaction: expected object")
    sig_hex = _wire_str(obj, "signature")
    try:
        signature = bytes.fromhex(sig_hex)
    except ValueError as exc:
        raise WireError("signature: invalid hex") from exc
    if len(signature) != keys.SIG_LEN:
        raise WireError("signature: expected 64 bytes")
    pk_hex = _wire_str(obj, "sender_public_key")
    try:
        public_key = bytes.fromhex(pk_hex)
    except ValueError as exc:
        raise WireError("sender_public_key: invalid hex") from exc
    if len(public_key) != keys.KEY_LEN:
        raise WireError("sender_public_key: expected 32 bytes")
    return SignedTransaction(
        sender=_wire_addr(obj, "sender"),
        sender_public_key=public_key,
        nonce=_wire_int(obj, "nonce"),
        timestamp=_wire_int(obj, "timestamp"),
        payload=payload_from_json(obj.get("payload")),
        signature=signature,
    )

/**
 * Canonical transaction encoding, byte-for-byte compatible with the node.
 *
 * Layout: payload tag (1) | sender (20) | sender public key (32) |
 * nonce u64 BE | timestamp u64 BE | payload fields in declaration order,
 * integers big-endian, texts as 2-byte length-prefixed UTF-8, wei as
 * 16-byte integers. Signing digest = sha256 of everything but the
 * signature; txid = sha256 of everything.
 */

import { sha256 } from "@noble/hashes/sha2.js";

import { concat, fromHex } from "./hex";

export type Role = "patient" | "doctor" | "pharmacist";

export interface PatientProfile {
  name: string;
  phone: string;
  email: string;
  date_of_birth: string;
  home_address: string;
  insurance_details: string;
}

export interface ProviderProfile {
  name: string;
  phone: string;
  email: string;
  date_of_birth: string;
  postal_address: string;
  registration_number: string;
  organization: string;
}

export type Payload =
  | { type: "register"; role: Role; profile: PatientProfile | ProviderProfile }
  | { type: "grant_access"; grantee: string }
  | { type: "revoke_access"; grantee: string }
  | { type: "anchor_record"; patient: string; record_hash: string; record_type: string }
  | { type: "prescribe"; patient: string; pharmacist: string; rx_hash: string; price: string }
  | { type: "dispense"; prescription_id: number }
  | { type: "pay_invoice"; invoice_id: number }
  | { type: "transfer"; to: string; amount: string };

export interface SignedTx {
  sender: string;
  sender_public_key: string;
  nonce: number;
  timestamp: number;
  payload: Payload;
  signature: string;
}

const PAYLOAD_TAGS: Record<Payload["type"], number> = {
  register: 1,
  grant_access: 2,
  revoke_access: 3,
  anchor_record: 4,
  prescribe: 5,
  dispense: 6,
  pay_invoice: 7,
  transfer: 8,
};

const ROLE_TAGS: Record<Role, number> = { patient: 1, doctor: 2, pharmacist: 3 };

export const PATIENT_FIELDS: (keyof PatientProfile)[] = [
  "name", "phone", "email", "date_of_birth", "home_address",
  "insurance_details",
];

export const PROVIDER_FIELDS: (keyof ProviderProfile)[] = [
  "name", "phone", "email", "date_of_birth", "postal_address",
  "registration_number", "organization",
];

function u64(value: number | bigint): Uint8Array {
  const out = new Uint8Array(8);
  new DataView(out.buffer).setBigUint64(0, BigInt(value));
  return out;
}

function u128(value: bigint): Uint8Array {
  if (value < 0n || value >= 1n << 128n) throw new Error("u128 out of range");
  const out = new Uint8Array(16);
  let v = value;
  for (let i = 15; i >= 0; i--) {
    out[i] = Number(v & 0xffn);
    v >>= 8n;
  }
  return out;
}

function text(value: string): Uint8Array {
  const raw = new TextEncoder().encode(value);
  if (raw.length > 0xffff) throw new Error("text field too long");
  const len = new Uint8Array([raw.length >> 8, raw.length & 0xff]);
  return concat(len, raw);
}

function addr(hex: string): Uint8Array {
  const raw = fromHex(hex);
  if (raw.length !== 20) throw new Error("address must be 20 bytes");
  return raw;
}

function hash32(hex: string): Uint8Array {
  const raw = fromHex(hex);
  if (raw.length !== 32) throw new Error("hash must be 32 bytes");
  return raw;
}

export function encodePayload(payload: Payload): Uint8Array {
  switch (payload.type) {
    case "register": {
      const fields =
        payload.role === "patient" ? PATIENT_FIELDS : PROVIDER_FIELDS;
      const profile = payload.profile as unknown as Record<string, string>;
      return concat(
        new Uint8Array([ROLE_TAGS[payload.role]]),
        ...fields.map((f) => text(profile[f] ?? "")),
      );
    }
    case "grant_access":
    case "revoke_access":
      return addr(payload.grantee);
    case "anchor_record":
      return concat(addr(payload.patient), hash32(payload.record_hash),
                    text(payload.record_type));
    case "prescribe":
      return concat(addr(payload.patient), addr(payload.pharmacist),
                    hash32(payload.rx_hash), u128(BigInt(payload.price)));
    case "dispense":
      return u64(payload.prescription_id);
    case "pay_invoice":
      return u64(payload.invoice_id);
    case "transfer":
      return concat(addr(payload.to), u128(BigInt(payload.amount)));
  }
}

export function envelope(tx: Omit<SignedTx, "signature">): Uint8Array {
  return concat(
    new Uint8Array([PAYLOAD_TAGS[tx.payload.type]]),
    addr(tx.sender),
    fromHex(tx.sender_public_key),
    u64(tx.nonce),
    u64(tx.timestamp),
    encodePayload(tx.payload),
  );
}

/** sha256 of the canonical encoding with the signature omitted. */
export function signingDigest(tx: Omit<SignedTx, "signature">): Uint8Array {
  return sha256(envelope(tx));
}

/** sha256 of the full canonical encoding, signature included. */
export function txid(tx: SignedTx): Uint8Array {
  return sha256(concat(envelope(tx), fromHex(tx.signature)));
}

export const WEI_PER_ETHER = 10n ** 18n;

export function parseEther(display: string): bigint {
  const trimmed = display.trim();
  if (!/^\d+(\.\d+)?$/.test(trimmed)) throw new Error(`bad amount: ${display}`);
  const [whole, frac = ""] = trimmed.split(".");
  if (frac.length > 18) throw new Error("sub-wei precision");
  return BigInt(whole) * WEI_PER_ETHER + BigInt(frac.padEnd(18, "0") || "0");
}

export function formatEther(wei: string | bigint): string {
  const value = BigInt(wei);
  const whole = value / WEI_PER_ETHER;
  const frac = (value % WEI_PER_ETHER).toString().padStart(18, "0")
    .replace(/0+$/, "");
  return frac ? `${whole}.${frac}` : whole.toString();
}

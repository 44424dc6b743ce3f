/**
 * Client side of the challenge-handshake login: the password never leaves
 * the browser; the server sees only sha256(nonce || sha256(password)).
 */

import { sha256 } from "@noble/hashes/sha2.js";

import { concat } from "./hex";

export function passwordHash(password: string): Uint8Array {
  return sha256(new TextEncoder().encode(password));
}

export function chapResponse(password: string, nonce: Uint8Array): Uint8Array {
  if (nonce.length !== 32) throw new Error("challenge nonce must be 32 bytes");
  return sha256(concat(nonce, passwordHash(password)));
}

/** Digest signed once at registration to bind the stored hash to an address. */
export function enrollDigest(addressBytes: Uint8Array,
                             storedHash: Uint8Array): Uint8Array {
  const context = new TextEncoder().encode("medichain-enroll:");
  return sha256(concat(context, addressBytes, storedHash));
}

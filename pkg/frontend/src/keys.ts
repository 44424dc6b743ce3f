/**
 * In-browser signing identity. The 32-byte seed stays on this device;
 * only the public key and 20-byte address (last 20 bytes of
 * sha256(public key)) ever appear in API requests.
 */

import * as ed from "@noble/ed25519";
import { sha256, sha512 } from "@noble/hashes/sha2.js";

import { toHex } from "./hex";

ed.hashes.sha512 = sha512; // enables the synchronous noble API

export interface Identity {
  seed: Uint8Array;
  publicKey: Uint8Array;
  address: string; // 40-char lowercase hex
}

export function deriveAddress(publicKey: Uint8Array): string {
  if (publicKey.length !== 32) throw new Error("public key must be 32 bytes");
  return toHex(sha256(publicKey).slice(-20));
}

export function identityFromSeed(seed: Uint8Array): Identity {
  if (seed.length !== 32) throw new Error("seed must be 32 bytes");
  const publicKey = ed.getPublicKey(seed);
  return { seed, publicKey, address: deriveAddress(publicKey) };
}

export function randomIdentity(): Identity {
  const seed = crypto.getRandomValues(new Uint8Array(32));
  return identityFromSeed(seed);
}

export function signDigest(identity: Identity, digest: Uint8Array): Uint8Array {
  return ed.sign(digest, identity.seed);
}

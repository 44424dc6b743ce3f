/**
 * Ties an in-browser identity to the node: builds, signs, and submits
 * transactions, and runs the CHAP login. The seed is kept in
 * localStorage on this device and is never part of any request.
 */

import { sha256 } from "@noble/hashes/sha2.js";

import type { ApiClient } from "./api";
import { chapResponse, enrollDigest, passwordHash } from "./chap";
import { fromHex, toHex } from "./hex";
import { Identity, identityFromSeed, randomIdentity, signDigest } from "./keys";
import { Payload, SignedTx, signingDigest } from "./wire";

const SEED_KEY = "medichain.seed";

export class Wallet {
  constructor(public identity: Identity) {}

  static createAndStore(storage: Storage = localStorage): Wallet {
    const identity = randomIdentity();
    storage.setItem(SEED_KEY, toHex(identity.seed));
    return new Wallet(identity);
  }

  static fromSeedHex(seedHex: string): Wallet {
    return new Wallet(identityFromSeed(fromHex(seedHex)));
  }

  static fromStorage(storage: Storage = localStorage): Wallet | null {
    const seed = storage.getItem(SEED_KEY);
    return seed ? Wallet.fromSeedHex(seed) : null;
  }

  static forget(storage: Storage = localStorage): void {
    storage.removeItem(SEED_KEY);
  }

  get address(): string {
    return this.identity.address;
  }

  buildTx(payload: Payload, nonce: number, timestamp: number): SignedTx {
    const unsigned = {
      sender: this.address,
      sender_public_key: toHex(this.identity.publicKey),
      nonce,
      timestamp,
      payload,
    };
    const signature = signDigest(this.identity, signingDigest(unsigned));
    return { ...unsigned, signature: toHex(signature) };
  }

  /** Next usable nonce: on-chain account nonce, advanced past pending txs. */
  async nextNonce(client: ApiClient): Promise<number> {
    const account = await client.account(this.address);
    const pool = await client.mempool();
    const pending = pool.pending
      .filter((tx) => tx.sender === this.address)
      .map((tx) => tx.nonce);
    return pending.length ? Math.max(account.nonce, Math.max(...pending) + 1)
                          : account.nonce;
  }

  async send(client: ApiClient, payload: Payload): Promise<string> {
    const nonce = await this.nextNonce(client);
    const timestamp = Math.floor(Date.now() / 1000);
    const result = await client.submitTx(this.buildTx(payload, nonce, timestamp));
    return result.txid;
  }

  async enroll(client: ApiClient, password: string): Promise<void> {
    const stored = passwordHash(password);
    const digest = enrollDigest(fromHex(this.address), stored);
    await client.enroll({
      address: this.address,
      stored_hash: toHex(stored),
      public_key: toHex(this.identity.publicKey),
      signature: toHex(signDigest(this.identity, digest)),
    });
  }

  async login(client: ApiClient, password: string): Promise<string> {
    const challenge = await client.challenge();
    const response = chapResponse(password, fromHex(challenge.nonce));
    return client.login({
      address: this.address,
      challenge_id: challenge.challenge_id,
      response: toHex(response),
    });
  }
}

/** SHA-256 of a local file; only this digest is ever sent to the node. */
export async function hashFileLocally(file: Blob): Promise<string> {
  const buffer = await file.arrayBuffer();
  return toHex(sha256(new Uint8Array(buffer)));
}

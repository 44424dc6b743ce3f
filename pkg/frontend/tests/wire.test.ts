import { describe, expect, it } from "vitest";

import { toHex } from "../src/hex";
import {
  SignedTx,
  envelope,
  formatEther,
  parseEther,
  signingDigest,
  txid,
} from "../src/wire";

import vectors from "./vectors.json";

// Golden vectors generated by the node implementation; the browser side
// must produce identical bytes or its signatures are worthless.

describe("canonical transaction encoding", () => {
  for (const vector of vectors.transactions) {
    const tx = vector.tx as SignedTx;
    it(`matches the node for ${tx.payload.type} (nonce ${tx.nonce})`, () => {
      expect(toHex(envelope(tx))).toBe(vector.envelope);
      expect(toHex(signingDigest(tx))).toBe(vector.signing_digest);
      expect(toHex(txid(tx))).toBe(vector.txid);
    });
  }

  it("is sensitive to the nonce", () => {
    const tx = vectors.transactions[0].tx as SignedTx;
    const bumped = { ...tx, nonce: tx.nonce + 1 };
    expect(toHex(signingDigest(bumped))).not.toBe(
      vectors.transactions[0].signing_digest);
  });

  it("rejects malformed addresses and hashes", () => {
    const tx = vectors.transactions[0].tx as SignedTx;
    expect(() => envelope({ ...tx, sender: "abcd" })).toThrow();
    expect(() =>
      envelope({
        ...tx,
        payload: { type: "anchor_record", patient: tx.sender,
                   record_hash: "00", record_type: "x" },
      }),
    ).toThrow();
  });
});

describe("ether amounts", () => {
  it("parses whole and fractional ether exactly", () => {
    expect(parseEther("2")).toBe(2_000_000_000_000_000_000n);
    expect(parseEther("0.5")).toBe(500_000_000_000_000_000n);
    expect(parseEther("100")).toBe(10n ** 20n);
  });

  it("round-trips through formatting", () => {
    for (const text of ["2", "0.5", "100", "0.000000000000000001"]) {
      expect(formatEther(parseEther(text))).toBe(text);
    }
  });

  it("rejects sub-wei and junk", () => {
    expect(() => parseEther("0.0000000000000000001")).toThrow();
    expect(() => parseEther("ten")).toThrow();
    expect(() => parseEther("-1")).toThrow();
  });
});

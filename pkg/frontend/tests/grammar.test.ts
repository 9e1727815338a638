import { describe, expect, it } from "vitest";

import { parseChip, renderChip, withChip, type ControlChip } from "../src/grammar";

// Mirror of the exact server-side grammar, kept independent of the
// implementation under test.
const EXACT = /^\[(OFFER|ACCEPT): (0|[1-9][0-9]*)\]$/;

function randomChip(rand: () => number): ControlChip {
  return {
    kind: rand() < 0.5 ? "offer" : "accept",
    amount: Math.floor(rand() * 100_000),
  };
}

// Small deterministic PRNG so failures are reproducible.
function mulberry32(seed: number): () => number {
  let a = seed;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("chip grammar", () => {
  it("emits grammar-exact annotations over 100 random trials", () => {
    const rand = mulberry32(20_260_823);
    for (let trial = 0; trial < 100; trial++) {
      const chip = randomChip(rand);
      const rendered = renderChip(chip);
      expect(rendered).toMatch(EXACT);
      expect(parseChip(rendered)).toEqual(chip);
      // embedding in a chat message must not change what the server sees
      expect(parseChip(withChip("How about this?", chip))).toEqual(chip);
    }
  });

  it("renders the documented examples literally", () => {
    expect(renderChip({ kind: "accept", amount: 900 })).toBe("[ACCEPT: 900]");
    expect(renderChip({ kind: "offer", amount: 800 })).toBe("[OFFER: 800]");
    expect(withChip("Deal.", { kind: "accept", amount: 900 })).toBe(
      "Deal. [ACCEPT: 900]",
    );
  });

  it("rejects amounts the server would not accept", () => {
    expect(() => renderChip({ kind: "offer", amount: -1 })).toThrow(RangeError);
    expect(() => renderChip({ kind: "offer", amount: 9.5 })).toThrow(RangeError);
    expect(() => renderChip({ kind: "offer", amount: Number.NaN })).toThrow(
      RangeError,
    );
  });

  it("parses like the server: exact casing and spacing, last one wins", () => {
    expect(parseChip("[offer: 800]")).toBeNull();
    expect(parseChip("[OFFER:800]")).toBeNull();
    expect(parseChip("[OFFER: 900] no wait [OFFER: 850]")).toEqual({
      kind: "offer",
      amount: 850,
    });
  });
});

/**
 * Control-annotation grammar shared with the merchant service.
 *
 * The service recognizes exactly `[OFFER: <int>]`, `[ACCEPT: <int>]` and
 * `[END]` — uppercase keyword, single space, plain integer, no grouping.
 * Everything the composer chips emit must round-trip through this module.
 */

export type ChipKind = "offer" | "accept";

export interface ControlChip {
  kind: ChipKind;
  amount: number;
}

const CONTROL = /\[(OFFER|ACCEPT): (\d+)\]/g;

function assertAmount(amount: number): void {
  if (!Number.isInteger(amount) || amount < 0) {
    throw new RangeError(`chip amount must be a non-negative integer, got ${amount}`);
  }
}

/** Serialize a chip to its exact wire form, e.g. `[ACCEPT: 900]`. */
export function renderChip(chip: ControlChip): string {
  assertAmount(chip.amount);
  return `[${chip.kind.toUpperCase()}: ${chip.amount}]`;
}

/** Append a chip to free text the way the composer sends it. */
export function withChip(text: string, chip: ControlChip): string {
  const rendered = renderChip(chip);
  const trimmed = text.trim();
  return trimmed.length > 0 ? `${trimmed} ${rendered}` : rendered;
}

/** Parse the last control annotation in a message; null when absent. */
export function parseChip(text: string): ControlChip | null {
  let last: ControlChip | null = null;
  for (const match of text.matchAll(CONTROL)) {
    last = {
      kind: match[1]!.toLowerCase() as ChipKind,
      amount: Number(match[2]!),
    };
  }
  return last;
}

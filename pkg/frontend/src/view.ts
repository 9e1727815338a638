/**
 * Pure view-model layer: UI state is a function of the latest service
 * response. Nothing here computes metrics or prices locally — every number
 * shown comes straight from the service payload.
 */

import type { Item, OutcomeDto, SessionDto, TurnDto } from "./api";

export interface AuditBadge {
  kind: string;
  tooltip: string;
}

export interface TurnView {
  speaker: "player" | "merchant";
  content: string;
  /** CSS hook: "bubble-player" or "bubble-merchant". */
  styling: string;
  badges: AuditBadge[];
}

export interface ItemCard {
  name: string;
  description: string;
  /** Present only in developer mode: humans negotiate blind. */
  retailPrice?: number;
}

export interface Composer {
  prefill: string;
  disabled: boolean;
}

export interface SessionView {
  sessionId: string;
  state: "open" | "closed" | "aborted";
  itemCard: ItemCard;
  turns: TurnView[];
  composer: Composer;
  banner: string | null;
}

export interface CatalogView {
  items: Item[];
  startDisabled: boolean;
  notice: string | null;
}

export function catalogView(items: Item[]): CatalogView {
  const empty = items.length === 0;
  return {
    items,
    startDisabled: empty,
    notice: empty ? "No items are available to negotiate for." : null,
  };
}

function badge(turn: TurnDto): AuditBadge[] {
  return turn.audit.map((finding) => ({
    kind: finding.kind,
    tooltip: finding.evidence.join("; "),
  }));
}

export function outcomeBanner(outcome: OutcomeDto): string {
  switch (outcome.status) {
    case "agreed": {
      const base = `Agreed at ${outcome.agreed_price} coppers`;
      return outcome.dominance === null
        ? base
        : `${base} — merchant kept ${Math.round(outcome.dominance * 100)}% of the bargaining range`;
    }
    case "walkaway":
      return "No deal — the conversation is over.";
    case "turn-limit":
      return "Turn limit reached without a deal.";
    default:
      return `Session ended: ${outcome.status}`;
  }
}

export interface ViewOptions {
  /** Developer mode reveals the retail price on the item card. */
  showRetailPrice?: boolean;
}

export function toSessionView(
  session: SessionDto,
  options: ViewOptions = {},
): SessionView {
  const card: ItemCard = {
    name: session.item.name,
    description: session.item.description,
  };
  if (options.showRetailPrice) {
    card.retailPrice = session.item.retail_price;
  }
  const open = session.state === "open";
  return {
    sessionId: session.session_id,
    state: session.state,
    itemCard: card,
    turns: session.turns.map((turn) => ({
      speaker: turn.speaker,
      content: turn.content,
      styling: `bubble-${turn.speaker}`,
      badges: badge(turn),
    })),
    composer: {
      // A fresh session pre-fills the canonical opening line.
      prefill: session.turns.length === 0 ? session.opening_template : "",
      disabled: !open,
    },
    banner: session.outcome === null ? null : outcomeBanner(session.outcome),
  };
}

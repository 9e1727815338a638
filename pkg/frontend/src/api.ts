/**
 * Typed client for the merchant session service.
 *
 * Response bodies are validated with zod before anything touches the view
 * layer, so a drifting server fails loudly here instead of rendering junk.
 */

import { z } from "zod";

export const ItemSchema = z.object({
  id: z.string(),
  name: z.string(),
  description: z.string(),
  retail_price: z.number().int(),
});

export const ControlSchema = z.object({
  type: z.string(),
  amount: z.number().int().nullable(),
});

export const FindingSchema = z.object({
  kind: z.string(),
  evidence: z.array(z.string()),
  detail: z.record(z.string(), z.unknown()),
});

export const TurnSchema = z.object({
  idx: z.number().int(),
  speaker: z.enum(["player", "merchant"]),
  content: z.string(),
  tactic: z.string().nullable(),
  control: ControlSchema.nullable(),
  audit: z.array(FindingSchema),
});

export const OutcomeSchema = z.object({
  status: z.string(),
  turns_used: z.number().int(),
  agreed_price: z.number().int().nullable(),
  dominance: z.number().nullable(),
});

export const SessionSchema = z.object({
  session_id: z.string(),
  state: z.enum(["open", "closed", "aborted"]),
  item: ItemSchema,
  opening_template: z.string(),
  max_turns: z.number().int(),
  turns: z.array(TurnSchema),
  outcome: OutcomeSchema.nullable(),
});

export type Item = z.infer<typeof ItemSchema>;
export type TurnDto = z.infer<typeof TurnSchema>;
export type OutcomeDto = z.infer<typeof OutcomeSchema>;
export type SessionDto = z.infer<typeof SessionSchema>;

/** Error with enough context for the UI to pick banner vs retry state. */
export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Transport failures and gateway errors are worth retrying as-is. */
  get retryable(): boolean {
    return this.status === null || this.status === 502 || this.status === 503;
  }

  /** 409 means the session settled under us; refresh instead of retrying. */
  get conflict(): boolean {
    return this.status === 409;
  }
}

type FetchLike = typeof fetch;

export class SessionApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  async listItems(): Promise<Item[]> {
    return z.array(ItemSchema).parse(await this.request("GET", "/items"));
  }

  async createSession(itemId: string): Promise<SessionDto> {
    return SessionSchema.parse(
      await this.request("POST", "/sessions", { item_id: itemId }),
    );
  }

  async sendMessage(sessionId: string, content: string): Promise<SessionDto> {
    return SessionSchema.parse(
      await this.request("POST", `/sessions/${sessionId}/messages`, { content }),
    );
  }

  async getSession(sessionId: string): Promise<SessionDto> {
    return SessionSchema.parse(
      await this.request("GET", `/sessions/${sessionId}`),
    );
  }

  async closeSession(sessionId: string): Promise<SessionDto> {
    return SessionSchema.parse(
      await this.request("DELETE", `/sessions/${sessionId}`),
    );
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? {} : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`, null);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const doc = (await response.json()) as { detail?: string };
        if (doc.detail) detail = doc.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(detail, response.status);
    }
    return response.json();
  }
}

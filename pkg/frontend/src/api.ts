// Typed client for the recommendation service HTTP contract.
// The fetch implementation is injectable so tests can run against an
// in-process fixture backend.

export interface RecItem {
  item_id: string;
  title: string;
  score: number;
  rank: number;
}

export interface ItemInfo {
  item_id: string;
  title: string;
  plot: string;
  director: string;
  actors: string[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText || "request failed";
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (body && body.detail !== undefined) {
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export interface ApiClient {
  createSession(): Promise<string>;
  postTurn(sessionId: string, role: string, text: string): Promise<number>;
  markLiked(sessionId: string, itemId: string): Promise<string[]>;
  recommend(sessionId: string, k: number, userSelect: boolean): Promise<RecItem[]>;
  getItem(itemId: string): Promise<ItemInfo>;
  health(): Promise<boolean>;
}

export function createApi(baseUrl: string, fetchFn?: FetchLike): ApiClient {
  const base = baseUrl.replace(/\/+$/, "");
  const doFetch: FetchLike = fetchFn ?? ((input, init) => fetch(input, init));

  async function post<T>(path: string, body: unknown): Promise<T> {
    const response = await doFetch(`${base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  async function get<T>(path: string): Promise<T> {
    const response = await doFetch(`${base}${path}`);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  return {
    async createSession() {
      const body = await post<{ session_id: string }>("/sessions", {});
      return body.session_id;
    },
    async postTurn(sessionId, role, text) {
      const body = await post<{ turns: number }>(
        `/sessions/${encodeURIComponent(sessionId)}/turns`,
        { role, text },
      );
      return body.turns;
    },
    async markLiked(sessionId, itemId) {
      const body = await post<{ liked: string[] }>(
        `/sessions/${encodeURIComponent(sessionId)}/liked`,
        { item_id: itemId },
      );
      return body.liked;
    },
    async recommend(sessionId, k, userSelect) {
      const body = await post<{ items: RecItem[] }>(
        `/sessions/${encodeURIComponent(sessionId)}/recommend`,
        { k, user_select: userSelect },
      );
      return body.items;
    },
    async getItem(itemId) {
      return get<ItemInfo>(`/items/${encodeURIComponent(itemId)}`);
    },
    async health() {
      try {
        const body = await get<{ status: string }>("/healthz");
        return body.status === "ok";
      } catch {
        return false;
      }
    },
  };
}

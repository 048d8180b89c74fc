// Minimal REST client for the pricing service; one request per turn.

import { ChatResponse } from "./types.js";

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      throw new Error(`${path} -> HTTP ${resp.status}`);
    }
    return resp.json() as Promise<T>;
  }

  async createSession(): Promise<string> {
    const data = await this.post<{ id: string }>("/sessions");
    return data.id;
  }

  chat(sessionId: string, text: string): Promise<ChatResponse> {
    return this.post<ChatResponse>(`/sessions/${sessionId}/chat`, { text });
  }

  async listMarkets(): Promise<string[]> {
    const resp = await fetch(this.baseUrl + "/markets");
    if (!resp.ok) {
      throw new Error(`/markets -> HTTP ${resp.status}`);
    }
    const data = (await resp.json()) as { markets: string[] };
    return data.markets;
  }
}

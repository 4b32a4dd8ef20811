// The network boundary. Everything the app needs from the service goes
// through this interface, so tests can substitute recorded traffic.

import type {
  CommandResponse,
  CreateResponse,
  SessionCommand,
  TreeResponse,
  UnitSamples,
} from "./types.js";

export interface Transport {
  createSession(body: Record<string, unknown>): Promise<CreateResponse>;
  command(sid: string, command: SessionCommand): Promise<CommandResponse>;
  tree(sid: string): Promise<TreeResponse>;
  unitSamples(sid: string, mapId: number, row: number, col: number): Promise<UnitSamples>;
}

export class ServiceError extends Error {
  status: number;
  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json();
  if (!resp.ok || body.ok === false) {
    throw new ServiceError(resp.status, body.error ?? `HTTP ${resp.status}`);
  }
  return body as T;
}

export class HttpTransport implements Transport {
  constructor(readonly base: string) {}

  createSession(body: Record<string, unknown>): Promise<CreateResponse> {
    return request(`${this.base}/session`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  command(sid: string, command: SessionCommand): Promise<CommandResponse> {
    return request(`${this.base}/session/${sid}/command`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(command),
    });
  }

  tree(sid: string): Promise<TreeResponse> {
    return request(`${this.base}/session/${sid}/tree`);
  }

  unitSamples(sid: string, mapId: number, row: number, col: number): Promise<UnitSamples> {
    return request(`${this.base}/session/${sid}/unit/${mapId}/${row}/${col}/samples`);
  }

  // The push channel is wired separately (EventSource); it is not part
  // of the request/response surface tests replay.
  streamUrl(sid: string, since: number): string {
    return `${this.base}/session/${sid}/stream?since=${since}`;
  }
}

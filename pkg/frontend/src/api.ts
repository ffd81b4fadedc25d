// Gateway HTTP client plus a fetch-streaming SSE reader with reconnect.
// fetch streaming works in every modern browser and in Node, so the same
// code serves the app and the tests.

import type {
  BuildingModel,
  InspectionRecord,
  PendingDrp,
  SessionView,
} from "./types";

export class GatewayError extends Error {
  constructor(
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

export class GatewayClient {
  constructor(private base: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path);
    if (!resp.ok) {
      throw new GatewayError(await errorText(resp), resp.status);
    }
    return (await resp.json()) as T;
  }

  fetchModel(): Promise<BuildingModel> {
    return this.getJson("/model");
  }

  fetchState(): Promise<SessionView> {
    return this.getJson("/state");
  }

  async fetchDates(): Promise<string[]> {
    const body = await this.getJson<{ dates: string[] }>("/dates");
    return body.dates;
  }

  async fetchCaptures(date: string): Promise<InspectionRecord[]> {
    const body = await this.getJson<{ records: InspectionRecord[] }>(
      `/captures?date=${encodeURIComponent(date)}`,
    );
    return body.records;
  }

  imageUrl(capture: { image_url: string }): string {
    return this.base + capture.image_url;
  }

  eventsUrl(): string {
    return this.base + "/events";
  }

  async dispatch(
    drps: PendingDrp[],
    speed?: number,
    dwell?: number,
  ): Promise<{ mission_id: string; n_drps: number }> {
    const resp = await fetch(this.base + "/missions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ drps, speed, dwell }),
    });
    if (!resp.ok) {
      throw new GatewayError(await errorText(resp), resp.status);
    }
    return (await resp.json()) as { mission_id: string; n_drps: number };
  }
}

async function errorText(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    return (body as { error?: string }).error ?? `HTTP ${resp.status}`;
  } catch {
    return `HTTP ${resp.status}`;
  }
}

export interface SseHandle {
  close(): void;
}

export interface SseCallbacks {
  onEvent(name: string, data: unknown): void;
  onDrop?(): void;
}

/** Subscribe to the gateway event stream; reconnects with backoff. */
export function streamEvents(
  url: string,
  callbacks: SseCallbacks,
  initialBackoffMs = 500,
): SseHandle {
  let closed = false;
  let backoff = initialBackoffMs;

  const connect = async (): Promise<void> => {
    while (!closed) {
      try {
        const resp = await fetch(url);
        if (!resp.ok || resp.body === null) {
          throw new GatewayError(`HTTP ${resp.status}`, resp.status);
        }
        backoff = initialBackoffMs;
        await readStream(resp.body, callbacks, () => closed);
      } catch {
        // fall through to reconnect
      }
      if (closed) {
        return;
      }
      callbacks.onDrop?.();
      await sleep(backoff);
      backoff = Math.min(backoff * 2, 15000);
    }
  };
  void connect();
  return {
    close() {
      closed = true;
    },
  };
}

async function readStream(
  body: ReadableStream<Uint8Array>,
  callbacks: SseCallbacks,
  isClosed: () => boolean,
): Promise<void> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  let eventName = "message";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done || isClosed()) {
        return;
      }
      buffer += decoder.decode(value, { stream: true });
      let index;
      while ((index = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, index).trimEnd();
        buffer = buffer.slice(index + 1);
        if (line.startsWith("event:")) {
          eventName = line.slice(6).trim();
        } else if (line.startsWith("data:")) {
          try {
            callbacks.onEvent(eventName, JSON.parse(line.slice(5).trim()));
          } catch {
            // malformed frame: skip
          }
          eventName = "message";
        }
      }
    }
  } finally {
    reader.releaseLock();
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

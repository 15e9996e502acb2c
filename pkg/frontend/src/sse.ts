// Server-sent event handling: pure chunk parsing plus a reconnecting
// fetch-based subscriber (EventSource has no abort control over headers
// and test doubles are simpler around fetch streams).

export interface SseHandle {
  close(): void;
}

/** Incremental SSE parser: feed chunks, get complete `data:` payloads. */
export class SseParser {
  private buffer = '';

  push(chunk: string): string[] {
    this.buffer += chunk;
    const events: string[] = [];
    let boundary: number;
    while ((boundary = this.buffer.indexOf('\n\n')) !== -1) {
      const block = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const data = block
        .split('\n')
        .filter((line) => line.startsWith('data: '))
        .map((line) => line.slice('data: '.length))
        .join('\n');
      if (data) events.push(data);
    }
    return events;
  }
}

export interface SubscribeOptions {
  fetchImpl?: typeof fetch;
  retryDelayMs?: number;
  maxRetries?: number;
}

/** Stream JSON events from an SSE endpoint, reconnecting with backoff on
 * drops until `isTerminal` says the stream is complete. */
export function subscribeEvents<T>(
  url: string,
  onEvent: (event: T) => void,
  isTerminal: (event: T) => boolean,
  options: SubscribeOptions = {},
): SseHandle {
  const fetchImpl = options.fetchImpl ?? fetch;
  const retryDelay = options.retryDelayMs ?? 1000;
  const maxRetries = options.maxRetries ?? 5;
  let closed = false;
  let attempt = 0;

  const run = async (): Promise<void> => {
    while (!closed && attempt <= maxRetries) {
      try {
        const response = await fetchImpl(url);
        if (!response.ok || !response.body) throw new Error(`stream failed: ${response.status}`);
        attempt = 0; // connection succeeded; reset the backoff
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (closed) return;
          if (done) break;
          for (const payload of parser.push(decoder.decode(value, { stream: true }))) {
            const event = JSON.parse(payload) as T;
            onEvent(event);
            if (isTerminal(event)) return;
          }
        }
      } catch {
        // fall through to retry
      }
      attempt += 1;
      if (closed || attempt > maxRetries) return;
      await new Promise((resolve) => setTimeout(resolve, retryDelay * 2 ** (attempt - 1)));
    }
  };

  void run();
  return { close: () => (closed = true) };
}

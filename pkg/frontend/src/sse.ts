/** Server-sent events client built on fetch streaming, with automatic
 * reconnection and exponential backoff. EventSource is avoided so the same
 * code runs in the browser and under vitest on node. */

import type { ReviewEvent } from "./types.js";

export interface SseOptions {
  /** Initial reconnect delay; doubles per failure up to maxBackoffMs. */
  backoffMs?: number;
  maxBackoffMs?: number;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
}

export interface SseHandle {
  close(): void;
}

interface Frame {
  event?: string;
  data?: string;
}

/** Parse complete SSE frames out of a text buffer; returns the leftover. */
export function parseFrames(buffer: string): { frames: Frame[]; rest: string } {
  const frames: Frame[] = [];
  const parts = buffer.split("\n\n");
  const rest = parts.pop() ?? "";
  for (const part of parts) {
    const frame: Frame = {};
    for (const line of part.split("\n")) {
      if (line.startsWith(":")) continue; // comment / keepalive
      const colon = line.indexOf(":");
      if (colon < 0) continue;
      const field = line.slice(0, colon);
      const value = line.slice(colon + 1).trimStart();
      if (field === "event") frame.event = value;
      else if (field === "data") {
        frame.data = frame.data === undefined ? value : `${frame.data}\n${value}`;
      }
    }
    if (frame.event !== undefined || frame.data !== undefined) frames.push(frame);
  }
  return { frames, rest };
}

export function subscribeEvents(
  baseUrl: string,
  onEvent: (event: ReviewEvent) => void,
  options: SseOptions = {},
): SseHandle {
  const controllerRef: { current: AbortController | null } = { current: null };
  let closed = false;
  let backoff = options.backoffMs ?? 250;
  const maxBackoff = options.maxBackoffMs ?? 10_000;

  const run = async () => {
    while (!closed) {
      options.onStatus?.("connecting");
      const controller = new AbortController();
      controllerRef.current = controller;
      try {
        const response = await fetch(`${baseUrl}/api/events`, {
          signal: controller.signal,
          headers: { accept: "text/event-stream" },
        });
        if (!response.ok || !response.body) {
          throw new Error(`event stream returned ${response.status}`);
        }
        options.onStatus?.("open");
        backoff = options.backoffMs ?? 250; // reset after a good connect
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          const { frames, rest } = parseFrames(buffer);
          buffer = rest;
          for (const frame of frames) {
            if (!frame.data) continue;
            try {
              onEvent(JSON.parse(frame.data) as ReviewEvent);
            } catch {
              // malformed frame: skip rather than kill the stream
            }
          }
        }
      } catch {
        // fall through to reconnect
      }
      if (closed) break;
      options.onStatus?.("closed");
      await new Promise((resolve) => setTimeout(resolve, backoff));
      backoff = Math.min(backoff * 2, maxBackoff);
    }
  };

  void run();
  return {
    close() {
      closed = true;
      options.onStatus?.("closed");
      controllerRef.current?.abort();
    },
  };
}

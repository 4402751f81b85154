// HTTP + stream client for the companioncast engine. Uses relative URLs so
// the UI works when served by the engine itself (companioncast serve
// --frontend frontend/dist).

import { parseServerFrame, type ClientFrame, type ServerFrame } from "./protocol.js";

export interface TimelineInfo {
  timeline_id: string;
  duration_s: number;
  home_team: string;
  away_team: string;
}

export async function listTimelines(base = ""): Promise<TimelineInfo[]> {
  const resp = await fetch(`${base}/timelines`);
  if (!resp.ok) throw new Error(`GET /timelines failed: ${resp.status}`);
  return (await resp.json()) as TimelineInfo[];
}

export async function createSession(
  timelineId: string,
  supportedTeam: "home" | "away",
  base = "",
): Promise<string> {
  const resp = await fetch(`${base}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ timeline_id: timelineId, supported_team: supportedTeam }),
  });
  if (!resp.ok) throw new Error(`POST /sessions failed: ${resp.status}`);
  const body = (await resp.json()) as { session_id: string };
  return body.session_id;
}

export async function fetchBlob(sessionId: string, audioRef: string, base = ""): Promise<Uint8Array> {
  const resp = await fetch(`${base}/sessions/${sessionId}/${audioRef}`);
  if (!resp.ok) throw new Error(`blob fetch failed: ${resp.status}`);
  return new Uint8Array(await resp.arrayBuffer());
}

export interface StreamHandlers {
  onFrame: (frame: ServerFrame) => void;
  onOpen?: () => void;
  onClose?: () => void;
  onError?: (message: string) => void;
}

export class SessionStream {
  private ws: WebSocket | null = null;

  constructor(
    private sessionId: string,
    private handlers: StreamHandlers,
    private base: string = "",
  ) {}

  connect(): void {
    const proto = location.protocol === "https:" ? "wss:" : "ws:";
    const host = this.base || `${proto}//${location.host}`;
    this.ws = new WebSocket(`${host}/sessions/${this.sessionId}/stream`);
    this.ws.onopen = () => this.handlers.onOpen?.();
    this.ws.onclose = () => this.handlers.onClose?.();
    this.ws.onerror = () => this.handlers.onError?.("stream error");
    this.ws.onmessage = (ev) => {
      const frame = parseServerFrame(String(ev.data));
      if (frame) this.handlers.onFrame(frame);
      else this.handlers.onError?.("unparseable frame");
    };
  }

  get isOpen(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  send(frame: ClientFrame): boolean {
    if (!this.isOpen) return false;
    this.ws!.send(JSON.stringify(frame));
    return true;
  }

  close(): void {
    this.ws?.close();
    this.ws = null;
  }
}

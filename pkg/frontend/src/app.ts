// Wires the pieces together: setup panel, video + danmaku overlay, spatial
// audio, chat panel, and the stream connection.

import { createSession, fetchBlob, listTimelines, SessionStream, type TimelineInfo } from "./client.js";
import { ClockSync, type MediaClock } from "./clockSync.js";
import { agentColor, DanmakuOverlay } from "./danmaku.js";
import type { AgentTurnFrame, ServerFrame } from "./protocol.js";
import {
  applyFrame,
  initialState,
  setConnection,
  toggleRefinements,
  visibleHistory,
  type SessionModelState,
} from "./sessionModel.js";
import { base64ToBytes, SpatialAudioQueue } from "./spatialAudio.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

/** Stand-in clock when no video file is configured: play/pause advances a
 * plain timer so the engine still gets clock_sync frames. */
class TimerClock implements MediaClock {
  currentTime = 0;
  paused = true;
  private timer: ReturnType<typeof setInterval> | null = null;

  play(): void {
    if (!this.paused) return;
    this.paused = false;
    this.timer = setInterval(() => (this.currentTime += 0.25), 250);
  }

  pause(): void {
    this.paused = true;
    if (this.timer) clearInterval(this.timer);
    this.timer = null;
  }
}

class App {
  private model: SessionModelState = initialState();
  private stream: SessionStream | null = null;
  private audio = new SpatialAudioQueue();
  private danmaku: DanmakuOverlay;
  private clockSync: ClockSync | null = null;
  private sessionId: string | null = null;

  private video = el<HTMLVideoElement>("video");
  private timerClock = new TimerClock();
  private usingTimerClock = false;

  constructor() {
    this.danmaku = new DanmakuOverlay(el("danmaku"));
    this.audio.onIdle = () => {
      if (!this.model.duck) this.video.muted = false;
    };
    this.audio.onDecodeError = (err) => console.warn("clip decode failed, text-only", err);
    this.bindSetup();
    this.bindChat();
    this.bindToggles();
    void this.refreshTimelines();
  }

  // ------------------------------------------------------------- setup

  private bindSetup(): void {
    el<HTMLButtonElement>("refresh-timelines").onclick = () => void this.refreshTimelines();
    el<HTMLButtonElement>("start-session").onclick = () => void this.startSession();
    el<HTMLButtonElement>("timer-toggle").onclick = () => {
      if (this.timerClock.paused) {
        this.timerClock.play();
        el("timer-toggle").textContent = "pause clock";
      } else {
        this.timerClock.pause();
        el("timer-toggle").textContent = "play clock";
      }
    };
  }

  private async refreshTimelines(): Promise<void> {
    try {
      const timelines = await listTimelines();
      const select = el<HTMLSelectElement>("timeline-select");
      select.replaceChildren(
        ...timelines.map((t: TimelineInfo) => {
          const opt = document.createElement("option");
          opt.value = t.timeline_id;
          opt.textContent = `${t.home_team} vs ${t.away_team} (${Math.round(t.duration_s)}s)`;
          return opt;
        }),
      );
      this.setStatus(timelines.length ? `${timelines.length} timeline(s)` : "no timelines uploaded yet");
    } catch (err) {
      this.setStatus(`engine unreachable: ${err}`);
    }
  }

  private async startSession(): Promise<void> {
    const timelineId = el<HTMLSelectElement>("timeline-select").value;
    if (!timelineId) {
      this.setStatus("pick a timeline first");
      return;
    }
    const team = (document.querySelector('input[name="team"]:checked') as HTMLInputElement).value as
      | "home"
      | "away";
    const videoUrl = el<HTMLInputElement>("video-url").value.trim();
    if (videoUrl) {
      this.video.src = videoUrl;
      this.usingTimerClock = false;
      el("timer-toggle").hidden = true;
    } else {
      this.usingTimerClock = true;
      el("timer-toggle").hidden = false;
    }
    try {
      this.sessionId = await createSession(timelineId, team);
    } catch (err) {
      this.setStatus(`session failed: ${err}`);
      return;
    }
    this.connect();
  }

  private connect(): void {
    if (!this.sessionId) return;
    this.model = setConnection(this.model, "connecting");
    this.renderStatus();
    this.stream = new SessionStream(this.sessionId, {
      onFrame: (frame) => this.handleFrame(frame),
      onOpen: () => {
        this.model = setConnection(this.model, "open");
        this.renderStatus();
        this.startClock();
      },
      onClose: () => {
        this.model = setConnection(this.model, "closed");
        this.clockSync?.stop();
        this.renderStatus();
      },
      onError: (msg) => {
        this.model = setConnection(this.model, "error");
        this.model = { ...this.model, lastError: msg };
        this.renderStatus();
      },
    });
    this.stream.connect();
  }

  private startClock(): void {
    this.clockSync?.stop();
    const clock: MediaClock = this.usingTimerClock ? this.timerClock : this.video;
    this.clockSync = new ClockSync(clock, (videoT) => {
      this.stream?.send({ kind: "clock_sync", video_t: videoT });
    });
    this.clockSync.start();
    this.video.onseeked = () => this.clockSync?.flush();
  }

  // ------------------------------------------------------------- frames

  private handleFrame(frame: ServerFrame): void {
    this.model = applyFrame(this.model, frame);
    if (frame.kind === "agent_turn" && frame.presented) {
      if (this.danmaku.isEnabled) this.danmaku.emit(frame.agent_id, `${frame.agent_id}: ${frame.text}`);
      void this.playTurnAudio(frame);
    }
    if (frame.kind === "duck_on") this.video.muted = true;
    if (frame.kind === "duck_off" && !this.audio.isPlaying) this.video.muted = false;
    this.renderChat();
    this.renderStatus();
  }

  private async playTurnAudio(frame: AgentTurnFrame): Promise<void> {
    if (!frame.cue) return;
    try {
      if (frame.audio_b64) {
        this.audio.enqueue(base64ToBytes(frame.audio_b64), frame.cue);
      } else if (frame.audio_ref && this.sessionId) {
        this.audio.enqueue(await fetchBlob(this.sessionId, frame.audio_ref), frame.cue);
      }
    } catch (err) {
      console.warn("audio unavailable, text-only turn", err);
    }
  }

  // --------------------------------------------------------------- chat

  private bindChat(): void {
    const input = el<HTMLInputElement>("chat-input");
    const send = el<HTMLButtonElement>("chat-send");
    const update = () => {
      send.disabled = !input.value.trim() || !(this.stream?.isOpen ?? false);
    };
    input.oninput = update;
    const submit = () => {
      const text = input.value.trim();
      if (!text || !this.stream?.send({ kind: "user_message", text })) return;
      input.value = "";
      update();
    };
    send.onclick = submit;
    input.onkeydown = (ev) => {
      if (ev.key === "Enter") submit();
    };
    el<HTMLButtonElement>("retry-connect").onclick = () => this.connect();
    update();
  }

  private bindToggles(): void {
    el<HTMLInputElement>("toggle-danmaku").onchange = (ev) => {
      this.danmaku.setEnabled((ev.target as HTMLInputElement).checked);
    };
    el<HTMLInputElement>("toggle-refinements").onchange = () => {
      this.model = toggleRefinements(this.model);
      this.renderChat();
    };
  }

  // ------------------------------------------------------------- render

  private renderChat(): void {
    const list = el("chat-history");
    list.replaceChildren(
      ...visibleHistory(this.model).map((entry) => {
        const row = document.createElement("div");
        row.className = `chat-row chat-${entry.kind}`;
        const author = document.createElement("span");
        author.className = "chat-author";
        author.textContent = entry.author;
        if (entry.kind === "agent") author.style.color = agentColor(entry.author);
        const text = document.createElement("span");
        text.textContent = entry.text;
        row.append(author, text);
        return row;
      }),
    );
    list.scrollTop = list.scrollHeight;
  }

  private renderStatus(): void {
    const { connection, duck, lastError } = this.model;
    const bits = [`stream: ${connection}`, duck ? "match audio ducked" : "match audio live"];
    if (lastError) bits.push(`error: ${lastError}`);
    this.setStatus(bits.join(" | "));
    el("retry-connect").hidden = connection !== "closed" && connection !== "error";
  }

  private setStatus(text: string): void {
    el("status").textContent = text;
  }
}

new App();

// Spatial playback of agent speech. Clips play in arrival order, never
// overlapping, each through a stereo panner positioned from the cue azimuth.
// Azimuth convention: 0 deg ahead, negative left, 180 deg behind.

import type { SpatialCue } from "./protocol.js";

/** Stereo pan in [-1, 1] from an azimuth in degrees: -60 deg lateralizes left. */
export function azimuthToPan(azimuthDeg: number): number {
  return Math.sin((azimuthDeg * Math.PI) / 180);
}

/** Rear sources get attenuated since a stereo panner cannot place them
 * behind the listener: 1.0 ahead, 0.6 fully behind. */
export function rearAttenuation(azimuthDeg: number): number {
  const rearness = (1 - Math.cos((azimuthDeg * Math.PI) / 180)) / 2;
  return 1 - 0.4 * rearness;
}

export function base64ToBytes(b64: string): Uint8Array {
  const binary = atob(b64);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return bytes;
}

interface QueuedClip {
  bytes: ArrayBuffer;
  cue: SpatialCue;
}

export class SpatialAudioQueue {
  private ctx: AudioContext | null = null;
  private queue: QueuedClip[] = [];
  private playing = false;
  private gapS = 0.15;

  /** Called whenever the queue drains; the app unmutes the match audio here. */
  onIdle: (() => void) | null = null;
  /** Called when a clip cannot be decoded (the turn stays text-only). */
  onDecodeError: ((err: unknown) => void) | null = null;

  private ensureContext(): AudioContext {
    if (this.ctx === null) this.ctx = new AudioContext();
    if (this.ctx.state === "suspended") void this.ctx.resume();
    return this.ctx;
  }

  enqueue(bytes: Uint8Array, cue: SpatialCue): void {
    const copy = bytes.slice().buffer as ArrayBuffer;
    this.queue.push({ bytes: copy, cue });
    if (!this.playing) void this.playNext();
  }

  get isPlaying(): boolean {
    return this.playing;
  }

  private async playNext(): Promise<void> {
    const item = this.queue.shift();
    if (!item) {
      this.playing = false;
      this.onIdle?.();
      return;
    }
    this.playing = true;
    const ctx = this.ensureContext();
    let buffer: AudioBuffer;
    try {
      buffer = await ctx.decodeAudioData(item.bytes);
    } catch (err) {
      this.onDecodeError?.(err);
      void this.playNext();
      return;
    }
    const source = ctx.createBufferSource();
    source.buffer = buffer;
    const panner = new StereoPannerNode(ctx, { pan: azimuthToPan(item.cue.azimuth_deg) });
    const gain = ctx.createGain();
    gain.gain.value = item.cue.gain * rearAttenuation(item.cue.azimuth_deg);
    source.connect(panner).connect(gain).connect(ctx.destination);
    source.onended = () => {
      setTimeout(() => void this.playNext(), this.gapS * 1000);
    };
    source.start();
  }
}

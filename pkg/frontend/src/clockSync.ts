// Clock sync scheduler: the video element is the clock master. While the
// media is playing we report video time at a fixed cadence; while paused we
// stay silent (the engine never assumes wall time means video time).

export interface MediaClock {
  readonly currentTime: number;
  readonly paused: boolean;
}

export const DEFAULT_CADENCE_MS = 500;

export class ClockSync {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private clock: MediaClock,
    private send: (videoT: number) => void,
    private cadenceMs: number = DEFAULT_CADENCE_MS,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => {
      if (!this.clock.paused) this.send(this.clock.currentTime);
    }, this.cadenceMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One immediate report, used right after seeking. */
  flush(): void {
    this.send(this.clock.currentTime);
  }
}

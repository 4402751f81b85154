// Danmaku overlay: agent text scrolls right-to-left across the video in the
// agent's signature color. Lane allocation is pure so it can be tested
// without a DOM; the overlay class owns the DOM/animation side.

export const LANE_COUNT = 4;
export const SCROLL_MS = 8000;

// signature colors by role; unknown agents fall back by stable hash
const ROLE_COLORS: Record<string, string> = {
  diehard: "#ff5d5d",
  analyst: "#5db8ff",
  comedian: "#ffc94d",
};
const FALLBACK_COLORS = ["#9d7bff", "#4de3c2", "#ff8fd1", "#c2e34d"];

export function agentColor(agentId: string): string {
  const exact = ROLE_COLORS[agentId];
  if (exact) return exact;
  let h = 0;
  for (let i = 0; i < agentId.length; i++) h = (h * 31 + agentId.charCodeAt(i)) >>> 0;
  return FALLBACK_COLORS[h % FALLBACK_COLORS.length];
}

export interface LaneState {
  lastEnqueuedAt: number; // -Infinity when never used
}

export function freshLanes(count: number = LANE_COUNT): LaneState[] {
  return Array.from({ length: count }, () => ({ lastEnqueuedAt: -Infinity }));
}

/**
 * Pick a lane for a bullet enqueued at `now` (ms). Prefers a lane whose
 * previous bullet finished scrolling; otherwise the least-recently-used
 * lane, so two bullets inside one scroll never share a lane (while lanes
 * remain). Mutates the chosen lane's bookkeeping.
 */
export function allocateLane(lanes: LaneState[], now: number, scrollMs: number = SCROLL_MS): number {
  let free = -1;
  let oldest = 0;
  for (let i = 0; i < lanes.length; i++) {
    if (free < 0 && now - lanes[i].lastEnqueuedAt >= scrollMs) free = i;
    if (lanes[i].lastEnqueuedAt < lanes[oldest].lastEnqueuedAt) oldest = i;
  }
  const lane = free >= 0 ? free : oldest;
  lanes[lane].lastEnqueuedAt = now;
  return lane;
}

export class DanmakuOverlay {
  private container: HTMLElement;
  private lanes: LaneState[];
  private enabled = true;

  constructor(container: HTMLElement, laneCount: number = LANE_COUNT) {
    this.container = container;
    this.lanes = freshLanes(laneCount);
  }

  setEnabled(enabled: boolean): void {
    this.enabled = enabled;
    if (!enabled) this.container.replaceChildren();
  }

  get isEnabled(): boolean {
    return this.enabled;
  }

  emit(agentId: string, text: string, now: number = performance.now()): void {
    if (!this.enabled) return;
    const lane = allocateLane(this.lanes, now);
    const bullet = document.createElement("div");
    bullet.className = "danmaku-bullet";
    bullet.textContent = text;
    bullet.style.color = agentColor(agentId);
    bullet.style.top = `${(lane * 100) / this.lanes.length + 2}%`;
    this.container.appendChild(bullet);
    const distance = this.container.clientWidth + bullet.clientWidth + 40;
    const animation = bullet.animate(
      [{ transform: "translateX(0)" }, { transform: `translateX(-${distance}px)` }],
      { duration: SCROLL_MS, easing: "linear" },
    );
    animation.onfinish = () => bullet.remove();
  }
}

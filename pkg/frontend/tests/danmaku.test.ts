import { describe, expect, it } from "vitest";

import { agentColor, allocateLane, freshLanes, LANE_COUNT, SCROLL_MS } from "../src/danmaku.js";

describe("lane allocation", () => {
  it("gives concurrent bullets distinct lanes", () => {
    const lanes = freshLanes();
    const a = allocateLane(lanes, 1000);
    const b = allocateLane(lanes, 1200); // within one scroll of a
    expect(a).not.toBe(b);
  });

  it("fills all lanes before reusing any", () => {
    const lanes = freshLanes();
    const picked = Array.from({ length: LANE_COUNT }, (_, i) => allocateLane(lanes, 1000 + i));
    expect(new Set(picked).size).toBe(LANE_COUNT);
  });

  it("reuses a lane once its bullet has scrolled off", () => {
    const lanes = freshLanes();
    const first = allocateLane(lanes, 0);
    allocateLane(lanes, 10);
    const later = allocateLane(lanes, SCROLL_MS + 1);
    expect(later).toBe(first);
  });

  it("overflows onto the least recently used lane", () => {
    const lanes = freshLanes(2);
    allocateLane(lanes, 0);
    allocateLane(lanes, 100);
    // both lanes busy; the oldest one gets the fifth bullet
    expect(allocateLane(lanes, 200)).toBe(0);
    expect(allocateLane(lanes, 300)).toBe(1);
  });
});

describe("agent colors", () => {
  it("uses the fixed role colors", () => {
    expect(agentColor("diehard")).not.toBe(agentColor("analyst"));
    expect(agentColor("comedian")).not.toBe(agentColor("diehard"));
  });

  it("is stable for unknown agents", () => {
    expect(agentColor("someone_else")).toBe(agentColor("someone_else"));
  });
});

import { describe, expect, it } from "vitest";
import { StateMachine } from "../src/state.js";

describe("editor state machine", () => {
  it("walks the nominal workflow", () => {
    const m = new StateMachine();
    expect(m.phase).toBe("empty");
    expect(m.apply("vesselLoaded")).toBe("vessel");
    expect(m.apply("ostiumSet")).toBe("ostium");
    expect(m.apply("previewReady")).toBe("preview");
    expect(m.apply("assembled")).toBe("assembled");
  });

  it("rejects illegal transitions at every stage", () => {
    const m = new StateMachine();
    // nothing but vessel creation is possible at the start
    for (const a of ["ostiumSet", "previewReady", "assembled", "reset"] as const) {
      expect(m.can(a)).toBe(false);
      expect(() => m.apply(a)).toThrow(/illegal action/);
    }
    m.apply("vesselLoaded");
    expect(() => m.apply("previewReady")).toThrow(/illegal action/);
    expect(() => m.apply("assembled")).toThrow(/illegal action/);
    m.apply("ostiumSet");
    expect(() => m.apply("assembled")).toThrow(/illegal action/);
  });

  it("allows regeneration and re-picking after preview and assembly", () => {
    const m = new StateMachine();
    m.apply("vesselLoaded");
    m.apply("ostiumSet");
    m.apply("previewReady");
    expect(m.apply("previewReady")).toBe("preview"); // regenerate
    expect(m.apply("ostiumSet")).toBe("ostium"); // move the ostium
    m.apply("previewReady");
    m.apply("assembled");
    expect(m.apply("previewReady")).toBe("preview"); // back to previewing
  });

  it("reset returns to the vessel phase, keeping the vessel", () => {
    const m = new StateMachine();
    m.apply("vesselLoaded");
    m.apply("ostiumSet");
    m.apply("previewReady");
    expect(m.apply("reset")).toBe("vessel");
    // and the workflow restarts from ostium selection
    expect(m.can("previewReady")).toBe(false);
    expect(m.apply("ostiumSet")).toBe("ostium");
  });

  it("notifies listeners on every transition", () => {
    const m = new StateMachine();
    const seen: string[] = [];
    m.onChange((p) => seen.push(p));
    m.apply("vesselLoaded");
    m.apply("ostiumSet");
    expect(seen).toEqual(["vessel", "ostium"]);
  });
});

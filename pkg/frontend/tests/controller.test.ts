import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { ApiClient } from "../src/api.js";
import { EditorController } from "../src/controller.js";

const MESH = {
  positions: [0, 0, 0, 1, 0, 0, 0, 1, 0],
  faces: [0, 1, 2],
  n_vertices: 3,
  n_faces: 1,
};

interface Call {
  url: string;
  body: Record<string, any>;
}

/** Backend double implementing the session protocol over a fetch stub.
 * Aneurysm geometry is a deterministic function of the seed so pinned-seed
 * regeneration parity is observable. */
function fakeBackend(log: Call[]): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const body = init?.body ? JSON.parse(String(init.body)) : {};
    log.push({ url, body });
    let json: unknown;
    if (url.endsWith("/vessel")) {
      json = { session_id: "sess", seed: body.seed ?? 99, mesh: MESH };
    } else if (url.endsWith("/ostium")) {
      json = {
        vertex_index: body.vertex_id,
        centroid: [0, 0, 0],
        normal: [0, 0, 1],
        strategy: "manual",
        ring_radius: body.ring_radius ?? 1.0,
        ring_preview: [[1, 0, 0], [0, 1, 0], [-1, 0, 0]],
      };
    } else if (url.endsWith("/aneurysm")) {
      const seed = body.seed ?? Math.floor(Math.random() * 1e9);
      json = {
        seed,
        has_bleb: false,
        realized_params: { sac_radius: 1 + (seed % 7) / 10 },
        mesh: { ...MESH, positions: MESH.positions.map((p) => p + seed) },
      };
    } else if (url.endsWith("/assemble")) {
      json = {
        mesh: MESH,
        labels: [0, 1, 2],
        ring: { vertex_ids: [2], centroid: [0, 0, 0], normal: [0, 0, 1] },
        morphometrics: { AR1: 0.5, NSI: 0.01 },
      };
    } else {
      return { ok: false, status: 404, statusText: "not found",
               json: async () => ({ detail: "unknown route" }) } as Response;
    }
    return { ok: true, status: 200, statusText: "",
             json: async () => json } as Response;
  }) as typeof fetch;
}

function makeController(log: Call[], events = {}) {
  return new EditorController(new ApiClient("", fakeBackend(log)), events, 200);
}

describe("EditorController", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("runs the full workflow: vessel, pick, preview, assemble, export", async () => {
    const log: Call[] = [];
    const phases: string[] = [];
    const c = makeController(log, { onPhase: (p: string) => phases.push(p) });
    await c.newVessel(7);
    expect(c.machine.phase).toBe("vessel");
    expect(c.vessel!.mesh).toEqual(MESH);
    await c.pickVertex(2);
    expect(c.machine.phase).toBe("ostium");
    expect(c.ostium!.vertex_index).toBe(2);
    c.pinnedSeed = 11;
    await c.generatePreview();
    expect(c.machine.phase).toBe("preview");
    expect(c.preview!.seed).toBe(11);
    await c.accept();
    expect(c.machine.phase).toBe("assembled");
    expect(c.assembled!.morphometrics.AR1).toBe(0.5);
    expect(c.exportUrl()).toBe("/api/session/sess/export");
    expect(phases).toEqual(["vessel", "ostium", "preview", "assembled"]);
  });

  it("holds backend payloads verbatim (thin-client invariant)", async () => {
    const log: Call[] = [];
    const c = makeController(log);
    await c.newVessel(1);
    await c.pickVertex(0);
    c.pinnedSeed = 3;
    await c.generatePreview();
    // the stored geometry is exactly what the backend returned, element
    // for element: nothing is recomputed client-side
    expect(c.preview!.mesh.positions).toEqual(
      MESH.positions.map((p) => p + 3));
    await c.accept();
    expect(c.assembled!.mesh).toEqual(MESH);
    expect(c.assembled!.labels).toEqual([0, 1, 2]);
  });

  it("regenerating with a pinned seed yields identical geometry", async () => {
    const c = makeController([]);
    await c.newVessel(1);
    await c.pickVertex(0);
    c.pinnedSeed = 42;
    await c.generatePreview();
    const first = c.preview!.mesh.positions.slice();
    await c.generatePreview();
    expect(c.preview!.mesh.positions).toEqual(first);
    // unpinned: a fresh backend seed produces different geometry
    c.pinnedSeed = null;
    await c.generatePreview();
    expect(c.preview!.mesh.positions).not.toEqual(first);
  });

  it("rate limits ring adjustments and skips unchanged radii", async () => {
    const log: Call[] = [];
    const c = makeController(log);
    await c.newVessel(1);
    await c.pickVertex(0);
    const before = log.length;
    c.adjustRing(1.0); // equals the current radius: no request
    expect(log.length).toBe(before);
    c.adjustRing(1.1);
    c.adjustRing(1.2);
    c.adjustRing(1.3);
    await vi.runAllTimersAsync();
    const ringCalls = log.slice(before).filter((r) => r.url.endsWith("/ostium"));
    // leading call plus one trailing call with the latest value
    expect(ringCalls.length).toBe(2);
    expect(ringCalls[0].body.ring_radius).toBe(1.1);
    expect(ringCalls[1].body.ring_radius).toBe(1.3);
    expect(c.ostium!.ring_radius).toBe(1.3);
  });

  it("blocks actions the backend would reject", async () => {
    const log: Call[] = [];
    const c = makeController(log);
    await c.generatePreview(); // no vessel, no ostium
    await c.accept();
    c.adjustRing(2.0);
    await vi.runAllTimersAsync();
    expect(log).toHaveLength(0);
    await c.newVessel(1);
    await c.generatePreview(); // still no ostium
    expect(log.filter((r) => r.url.endsWith("/aneurysm"))).toHaveLength(0);
  });

  it("reset drops ostium and downstream state but keeps the vessel", async () => {
    const c = makeController([]);
    await c.newVessel(1);
    await c.pickVertex(0);
    c.pinnedSeed = 5;
    await c.generatePreview();
    c.reset();
    expect(c.machine.phase).toBe("vessel");
    expect(c.vessel).not.toBeNull();
    expect(c.ostium).toBeNull();
    expect(c.preview).toBeNull();
    expect(c.exportUrl()).toBeNull();
  });

  it("moving the ostium invalidates preview and assembly", async () => {
    const c = makeController([]);
    await c.newVessel(1);
    await c.pickVertex(0);
    c.pinnedSeed = 5;
    await c.generatePreview();
    await c.accept();
    await c.pickVertex(1);
    expect(c.machine.phase).toBe("ostium");
    expect(c.preview).toBeNull();
    expect(c.assembled).toBeNull();
  });

  it("surfaces backend errors through onError without crashing", async () => {
    const errors: string[] = [];
    const failing = (async () => ({
      ok: false, status: 409, statusText: "",
      json: async () => ({ detail: "set an ostium first" }),
    })) as unknown as typeof fetch;
    const c = new EditorController(
      new ApiClient("", failing), { onError: (m: string) => errors.push(m) }, 200);
    await c.newVessel(1);
    expect(errors).toEqual(["HTTP 409: set an ostium first"]);
    expect(c.machine.phase).toBe("empty");
  });
});

/** Editor controller: glues the state machine to the API client.
 *
 * Holds only backend payloads (thin-client invariant); the view layer
 * renders whatever is stored here without modification. All methods are
 * async and report backend failures through `onError`.
 */

import {
  ApiClient,
  ApiError,
  AneurysmResponse,
  AssembleResponse,
  OstiumResponse,
  VesselResponse,
} from "./api.js";
import { rateLimit, RateLimited } from "./debounce.js";
import { Action, Phase, StateMachine } from "./state.js";

export const RING_REQUEST_INTERVAL_MS = 200; // <= 5 requests/s

export interface ControllerEvents {
  onPhase?(phase: Phase): void;
  onVessel?(v: VesselResponse): void;
  onOstium?(o: OstiumResponse): void;
  onPreview?(a: AneurysmResponse): void;
  onAssembled?(a: AssembleResponse): void;
  onError?(message: string): void;
}

export class EditorController {
  readonly machine = new StateMachine();
  vessel: VesselResponse | null = null;
  ostium: OstiumResponse | null = null;
  preview: AneurysmResponse | null = null;
  assembled: AssembleResponse | null = null;
  /** Seed pinned in the UI; when set, Regenerate reuses it. */
  pinnedSeed: number | null = null;

  private ringRequest: RateLimited<number>;

  constructor(
    private api: ApiClient,
    private events: ControllerEvents = {},
    ringIntervalMs: number = RING_REQUEST_INTERVAL_MS,
  ) {
    this.machine.onChange((p) => this.events.onPhase?.(p));
    this.ringRequest = rateLimit(
      (radius: number) => void this.requestOstium({ ring_radius: radius }),
      ringIntervalMs,
    );
  }

  private fail(err: unknown): void {
    const msg = err instanceof ApiError ? err.message : String(err);
    this.events.onError?.(msg);
  }

  private clearDownstream(upTo: Action): void {
    if (upTo === "vesselLoaded") {
      this.ostium = null;
    }
    this.preview = null;
    this.assembled = null;
  }

  async newVessel(seed?: number, config?: Record<string, unknown>): Promise<void> {
    try {
      const v = await this.api.createVessel(seed, config);
      this.vessel = v;
      this.clearDownstream("vesselLoaded");
      if (this.machine.phase !== "empty" && this.machine.can("newVessel")) {
        this.machine.apply("newVessel");
      }
      this.machine.apply("vesselLoaded");
      this.events.onVessel?.(v);
    } catch (err) {
      this.fail(err);
    }
  }

  /** Manual pick from the viewer. */
  async pickVertex(vertexId: number): Promise<void> {
    await this.requestOstium({ vertex_id: vertexId });
  }

  /** Slider change: re-request the ring at the new radius, rate limited.
   * An unchanged radius issues no request. */
  adjustRing(radius: number): void {
    if (this.ostium === null) return;
    if (radius === this.ostium.ring_radius) return;
    this.ringRequest(radius);
  }

  async autoOstium(seed?: number, strategy?: string): Promise<void> {
    if (this.vessel === null) return;
    try {
      const o = await this.api.setOstium(this.vessel.session_id, {
        mode: "auto",
        seed,
        strategy,
      });
      this.applyOstium(o);
    } catch (err) {
      this.fail(err);
    }
  }

  private async requestOstium(opts: {
    vertex_id?: number;
    ring_radius?: number;
  }): Promise<void> {
    if (this.vessel === null || !this.machine.can("ostiumSet")) return;
    const vertexId = opts.vertex_id ?? this.ostium?.vertex_index;
    if (vertexId === undefined) return;
    try {
      const o = await this.api.setOstium(this.vessel.session_id, {
        mode: "manual",
        vertex_id: vertexId,
        ring_radius: opts.ring_radius ?? this.ostium?.ring_radius,
      });
      this.applyOstium(o);
    } catch (err) {
      this.fail(err);
    }
  }

  private applyOstium(o: OstiumResponse): void {
    this.ostium = o;
    this.clearDownstream("ostiumSet");
    this.machine.apply("ostiumSet");
    this.events.onOstium?.(o);
  }

  /** Generate (or regenerate) an aneurysm preview. With a pinned seed the
   * result is byte-identical across calls; otherwise the backend draws a
   * fresh seed which is reported back and shown in the seed field. */
  async generatePreview(params?: Record<string, unknown>): Promise<void> {
    if (this.vessel === null || !this.machine.can("previewReady")) return;
    try {
      const a = await this.api.previewAneurysm(
        this.vessel.session_id,
        this.pinnedSeed ?? undefined,
        params,
      );
      this.preview = a;
      this.assembled = null;
      this.machine.apply("previewReady");
      this.events.onPreview?.(a);
    } catch (err) {
      this.fail(err);
    }
  }

  async accept(): Promise<void> {
    if (this.vessel === null || !this.machine.can("assembled")) return;
    try {
      const a = await this.api.assemble(this.vessel.session_id);
      this.assembled = a;
      this.machine.apply("assembled");
      this.events.onAssembled?.(a);
    } catch (err) {
      this.fail(err);
    }
  }

  exportUrl(): string | null {
    if (this.vessel === null || this.assembled === null) return null;
    return this.api.exportUrl(this.vessel.session_id);
  }

  reset(): void {
    if (!this.machine.can("reset")) return;
    this.ringRequest.cancel();
    this.ostium = null;
    this.preview = null;
    this.assembled = null;
    this.machine.apply("reset");
  }
}

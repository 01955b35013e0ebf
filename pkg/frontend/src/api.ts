/** Thin JSON client for the editor service.
 *
 * The editor never computes geometry; every mesh it renders comes out of
 * one of these calls unchanged. Each action keeps at most one request in
 * flight: issuing a new request of the same kind aborts the previous one.
 */

export interface MeshPayload {
  positions: number[]; // flat xyz, length 3 * n_vertices
  faces: number[]; // flat vertex indices, length 3 * n_faces
  n_vertices: number;
  n_faces: number;
}

export interface VesselResponse {
  session_id: string;
  seed: number;
  mesh: MeshPayload;
}

export interface OstiumResponse {
  vertex_index: number;
  centroid: [number, number, number];
  normal: [number, number, number];
  strategy: string;
  ring_radius: number;
  ring_preview: [number, number, number][];
}

export interface AneurysmResponse {
  seed: number;
  has_bleb: boolean;
  realized_params: Record<string, number>;
  mesh: MeshPayload;
}

export interface RingPayload {
  vertex_ids: number[];
  centroid: [number, number, number];
  normal: [number, number, number];
}

export interface AssembleResponse {
  mesh: MeshPayload;
  labels: number[];
  ring: RingPayload;
  morphometrics: Record<string, number>;
}

export interface OstiumRequest {
  mode: "manual" | "auto";
  vertex_id?: number;
  ring_radius?: number;
  strategy?: string;
  seed?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type ActionKind = "vessel" | "ostium" | "aneurysm" | "assemble";

export class ApiClient {
  private inflight: Partial<Record<ActionKind, AbortController>> = {};

  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(kind: ActionKind, path: string, body: unknown): Promise<T> {
    this.inflight[kind]?.abort();
    const controller = new AbortController();
    this.inflight[kind] = controller;
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal: controller.signal,
    });
    if (this.inflight[kind] === controller) delete this.inflight[kind];
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const payload = await resp.json();
        if (payload && payload.detail) detail = String(payload.detail);
      } catch {
        // keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  createVessel(seed?: number, config?: Record<string, unknown>): Promise<VesselResponse> {
    return this.post("vessel", "/api/session/vessel", { seed, config });
  }

  setOstium(sessionId: string, req: OstiumRequest): Promise<OstiumResponse> {
    return this.post("ostium", `/api/session/${sessionId}/ostium`, req);
  }

  previewAneurysm(
    sessionId: string,
    seed?: number,
    params?: Record<string, unknown>,
  ): Promise<AneurysmResponse> {
    return this.post("aneurysm", `/api/session/${sessionId}/aneurysm`, {
      seed,
      params,
    });
  }

  assemble(sessionId: string): Promise<AssembleResponse> {
    return this.post("assemble", `/api/session/${sessionId}/assemble`, {});
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/api/session/${sessionId}/export`;
  }
}

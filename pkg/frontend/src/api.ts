/**
 * Typed client for the tile/diagnostics API.  All numerics stay on the
 * server; this module only moves bytes and JSON.
 */

export interface SliceInfo {
  slice_id: string;
  slice: {
    origin: number[][];
    direction: number[][];
    center: number[];
    half_width: number;
    resolution: number[];
  };
  quantity: string;
  d: number[];
  min: number | null;
  max: number | null;
  tile_size: number;
  max_zoom: number;
}

export interface PointDiagnostics {
  raw: string;    // exact response body, byte for byte
  parsed: {
    s: number[];
    lambda: number[][];
    green_fibers: Record<string, number>;
    L_v: number;
    cdm: string;
    pern_min_multiplier: Record<string, number | null>;
  };
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  async listSlices(): Promise<SliceInfo[]> {
    const r = await fetch(`${this.baseUrl}/api/slices`);
    if (!r.ok) throw new Error(`slices: HTTP ${r.status}`);
    return r.json();
  }

  async meta(sliceId: string): Promise<SliceInfo> {
    const r = await fetch(`${this.baseUrl}/api/meta?slice=${sliceId}`);
    if (!r.ok) throw new Error(`meta: HTTP ${r.status}`);
    return r.json();
  }

  async registerSlice(body: unknown): Promise<SliceInfo> {
    const r = await fetch(`${this.baseUrl}/api/slices`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!r.ok) throw new Error(`register: HTTP ${r.status}`);
    return r.json();
  }

  async tile(sliceId: string, z: number, x: number, y: number,
             signal?: AbortSignal): Promise<ArrayBuffer> {
    const r = await fetch(`${this.baseUrl}/tiles/${sliceId}/${z}/${x}/${y}`,
                          { signal });
    if (!r.ok) throw new Error(`tile: HTTP ${r.status}`);
    return r.arrayBuffer();
  }

  /**
   * Point diagnostics; keeps the raw body so the inspector can show exactly
   * what the server said (identical to the CLI point query output).
   */
  async point(sliceId: string, sRe: number, sIm: number): Promise<PointDiagnostics> {
    const r = await fetch(
      `${this.baseUrl}/api/point?slice=${sliceId}&s_re=${sRe}&s_im=${sIm}`);
    if (!r.ok) throw new Error(`point: HTTP ${r.status}`);
    const raw = await r.text();
    return { raw, parsed: JSON.parse(raw) };
  }

  async lift(sliceId: string, sRe: number, sIm: number, steps = 1024):
      Promise<Record<string, unknown>> {
    const r = await fetch(
      `${this.baseUrl}/api/lift?slice=${sliceId}&s_re=${sRe}&s_im=${sIm}&steps=${steps}`);
    if (!r.ok) throw new Error(`lift: HTTP ${r.status}`);
    return r.json();
  }
}

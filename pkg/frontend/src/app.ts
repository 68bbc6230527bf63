/**
 * Explorer wiring: tile canvas with pan/zoom, overlay layers, per-pixel
 * diagnostics panel, near-infinity radius slider, and the curve-lift
 * inspector.  No dynamics run client-side; everything comes off the API.
 */

import { ApiClient, SliceInfo } from "./api.js";
import { parsePgm, toRgba } from "./pgm.js";
import { SliceGeometry, TILE, sToWorld, visibleTiles, worldToS } from "./tilemath.js";
import { DEFAULT_VIEW, ViewState, clampZoom, decodeView, encodeView } from "./viewstate.js";

interface Layer {
  sliceId: string;
  alpha: number;
}

export class Explorer {
  private view: ViewState = { ...DEFAULT_VIEW, overlays: [] };
  private slices: SliceInfo[] = [];
  private geometry: SliceGeometry = { centerRe: 0, centerIm: 0, halfWidth: 1 };
  private maxZoom = 12;
  private overlayLayers: Map<string, Layer> = new Map();
  private inflight: AbortController | null = null;
  private tileCache: Map<string, ImageData> = new Map();

  constructor(
    private api: ApiClient,
    private canvas: HTMLCanvasElement,
    private panel: HTMLElement,
    private status: HTMLElement,
  ) {}

  async start(): Promise<void> {
    this.slices = await this.api.listSlices();
    if (this.slices.length === 0) {
      this.status.textContent = "no slices registered on the server";
      return;
    }
    const fromUrl = decodeView(window.location.hash);
    this.view = fromUrl.sliceId ? fromUrl : {
      ...DEFAULT_VIEW,
      sliceId: this.slices[0].slice_id,
      overlays: [],
    };
    await this.selectSlice(this.view.sliceId);
    this.bindEvents();
    await this.render();
  }

  private async selectSlice(sliceId: string): Promise<void> {
    const meta = await this.api.meta(sliceId);
    this.geometry = {
      centerRe: meta.slice.center[0],
      centerIm: meta.slice.center[1],
      halfWidth: meta.slice.half_width,
    };
    this.maxZoom = meta.max_zoom;
    this.view = {
      ...this.view,
      sliceId,
      centerRe: this.view.centerRe || this.geometry.centerRe,
      centerIm: this.view.centerIm || this.geometry.centerIm,
    };
  }

  private bindEvents(): void {
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const dz = ev.deltaY < 0 ? 1 : -1;
      this.setView(clampZoom({ ...this.view, zoom: this.view.zoom + dz },
                             this.maxZoom));
    });
    let drag: { x: number; y: number } | null = null;
    this.canvas.addEventListener("mousedown", (ev) => {
      drag = { x: ev.offsetX, y: ev.offsetY };
    });
    this.canvas.addEventListener("mousemove", (ev) => {
      if (!drag) return;
      const scale = (2 * this.geometry.halfWidth)
        / (TILE * (1 << this.view.zoom));
      this.setView({
        ...this.view,
        centerRe: this.view.centerRe - (ev.offsetX - drag.x) * scale,
        centerIm: this.view.centerIm + (ev.offsetY - drag.y) * scale,
      });
      drag = { x: ev.offsetX, y: ev.offsetY };
    });
    window.addEventListener("mouseup", () => { drag = null; });
    this.canvas.addEventListener("click", (ev) => {
      if (ev.shiftKey) return;
      void this.inspect(ev.offsetX, ev.offsetY);
    });
    window.addEventListener("hashchange", () => {
      const v = decodeView(window.location.hash);
      if (encodeView(v) !== encodeView(this.view)) {
        this.view = v;
        void this.render();
      }
    });
  }

  setView(v: ViewState): void {
    this.view = v;
    window.location.hash = encodeView(v);
    void this.render();
  }

  getView(): ViewState {
    return this.view;
  }

  /** screen pixel -> slice coordinate under the current view */
  screenToS(px: number, py: number): { re: number; im: number } {
    const c = sToWorld(this.geometry, this.view.zoom,
                       this.view.centerRe, this.view.centerIm);
    const wx = c.x - this.canvas.width / 2 + px;
    const wy = c.y + this.canvas.height / 2 - py;  // canvas y points down
    return worldToS(this.geometry, this.view.zoom, wx, wy);
  }

  async inspect(px: number, py: number): Promise<void> {
    const s = this.screenToS(px, py);
    this.status.textContent = `querying s = ${s.re.toFixed(6)} + ${s.im.toFixed(6)}i ...`;
    try {
      const diag = await this.api.point(this.view.sliceId, s.re, s.im);
      // show the raw body verbatim: identical bytes to the CLI point query
      this.panel.textContent = diag.raw;
      this.status.textContent =
        `cdm=${diag.parsed.cdm}  L_v=${diag.parsed.L_v.toFixed(6)}`;
    } catch (err) {
      this.status.textContent = `point query failed: ${err}`;
    }
  }

  async toggleOverlay(name: string, sliceId: string | null): Promise<void> {
    if (sliceId === null) {
      this.overlayLayers.delete(name);
      this.view = {
        ...this.view,
        overlays: this.view.overlays.filter((o) => o !== name),
      };
    } else {
      this.overlayLayers.set(name, { sliceId, alpha: 140 });
      if (!this.view.overlays.includes(name)) {
        this.view = {
          ...this.view,
          overlays: [...this.view.overlays, name].sort(),
        };
      }
    }
    this.setView(this.view);
  }

  async render(): Promise<void> {
    if (this.inflight) this.inflight.abort();  // stale tiles die here
    const ctl = new AbortController();
    this.inflight = ctl;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const layers: Layer[] = [
      { sliceId: this.view.sliceId, alpha: 255 },
      ...this.overlayLayers.values(),
    ];
    const tiles = visibleTiles(
      this.geometry, this.view.zoom,
      this.view.centerRe, this.view.centerIm,
      this.canvas.width, this.canvas.height);
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    await Promise.all(layers.map(async (layer) => {
      for (const t of tiles) {
        const key = `${layer.sliceId}/${t.z}/${t.x}/${t.y}/${layer.alpha}`;
        let img = this.tileCache.get(key);
        if (!img) {
          try {
            const buf = await this.api.tile(layer.sliceId, t.z, t.x, t.y,
                                            ctl.signal);
            const pgm = parsePgm(buf);
            const rgba = new Uint8ClampedArray(toRgba(pgm, layer.alpha));
            img = new ImageData(rgba as Uint8ClampedArray<ArrayBuffer>,
                                pgm.width, pgm.height);
            this.tileCache.set(key, img);
          } catch {
            continue;  // aborted or missing tile
          }
        }
        if (ctl.signal.aborted) return;
        // flip y: tile row 0 is the lowest imaginary part
        const sy = this.canvas.height - t.screenY - TILE;
        ctx.putImageData(img, Math.round(t.screenX), Math.round(sy));
      }
    }));
  }
}

export function buildRadialSliceBody(R: number, d: number[]): unknown {
  return {
    slice: {
      origin: [[0, 0], [0, 0], [R, 0]],
      direction: [[0, 0], [1, 0], [0, 0]],
      center: [0, 0],
      half_width: 4 * R,
      resolution: [TILE, TILE],
    },
    quantity: "ddcLv",
    d,
  };
}

export async function main(): Promise<void> {
  const api = new ApiClient("");
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const panel = document.getElementById("diag") as HTMLElement;
  const status = document.getElementById("status") as HTMLElement;
  const explorer = new Explorer(api, canvas, panel, status);
  await explorer.start();

  const radius = document.getElementById("radius") as HTMLInputElement | null;
  const radiusGo = document.getElementById("radius-go") as HTMLButtonElement | null;
  if (radius && radiusGo) {
    radiusGo.addEventListener("click", async () => {
      const R = Math.pow(10, parseFloat(radius.value));
      const info = await api.registerSlice(buildRadialSliceBody(R, [0, 0]));
      explorer.setView({ ...explorer.getView(), sliceId: info.slice_id,
                         centerRe: 0, centerIm: 0, zoom: 0 });
    });
  }

  const liftGo = document.getElementById("lift-go") as HTMLButtonElement | null;
  if (liftGo) {
    liftGo.addEventListener("click", async () => {
      const v = explorer.getView();
      const out = await api.lift(v.sliceId, v.probeRe, v.probeIm);
      panel.textContent = JSON.stringify(out, null, 2);
    });
  }
}

if (typeof document !== "undefined" && document.getElementById("view")) {
  void main();
}

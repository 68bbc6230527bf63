/**
 * Shareable view state, serialized into the URL fragment.
 *
 * The fragment is a plain key=value list so views can be bookmarked and
 * pasted; encode/decode round-trips exactly (numbers go through a fixed
 * repr that survives parseFloat).
 */

export interface ViewState {
  sliceId: string;
  centerRe: number;
  centerIm: number;
  zoom: number;
  quantity: string;
  overlays: string[]; // sorted, e.g. ["bz", "pern1"]
  probeRe: number;
  probeIm: number;
}

export const DEFAULT_VIEW: ViewState = {
  sliceId: "",
  centerRe: 0,
  centerIm: 0,
  zoom: 0,
  quantity: "Lv",
  overlays: [],
  probeRe: 1,
  probeIm: 0,
};

function num(v: number): string {
  // shortest representation that parses back to the same double
  return Object.is(v, -0) ? "-0" : String(v);
}

export function encodeView(v: ViewState): string {
  const parts = [
    `slice=${encodeURIComponent(v.sliceId)}`,
    `cx=${num(v.centerRe)}`,
    `cy=${num(v.centerIm)}`,
    `z=${v.zoom}`,
    `q=${encodeURIComponent(v.quantity)}`,
    `fx=${num(v.probeRe)}`,
    `fy=${num(v.probeIm)}`,
  ];
  if (v.overlays.length > 0) {
    parts.push(`ov=${v.overlays.map(encodeURIComponent).join(",")}`);
  }
  return "#" + parts.join("&");
}

export function decodeView(fragment: string): ViewState {
  const out: ViewState = { ...DEFAULT_VIEW, overlays: [] };
  const body = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (body.length === 0) return out;
  for (const part of body.split("&")) {
    const eq = part.indexOf("=");
    if (eq < 0) continue;
    const key = part.slice(0, eq);
    const val = decodeURIComponent(part.slice(eq + 1));
    switch (key) {
      case "slice": out.sliceId = val; break;
      case "cx": out.centerRe = parseFloat(val); break;
      case "cy": out.centerIm = parseFloat(val); break;
      case "z": out.zoom = parseInt(val, 10); break;
      case "q": out.quantity = val; break;
      case "fx": out.probeRe = parseFloat(val); break;
      case "fy": out.probeIm = parseFloat(val); break;
      case "ov": out.overlays = val === "" ? [] : val.split(","); break;
    }
  }
  out.overlays.sort();
  return out;
}

export function clampZoom(v: ViewState, maxZoom: number): ViewState {
  const zoom = Math.max(0, Math.min(maxZoom, v.zoom));
  return zoom === v.zoom ? v : { ...v, zoom };
}

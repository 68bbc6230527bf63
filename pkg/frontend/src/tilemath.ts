/**
 * Tile geometry.
 *
 * The server splits a slice's square window into 2^z x 2^z tiles of
 * TILE x TILE pixels; x runs along the real axis and y along the imaginary
 * axis, both from the lower-left corner of the window.  World coordinates
 * here are pixels at the current zoom with the same orientation; the canvas
 * flips y at draw time.
 */

export const TILE = 256;

export interface SliceGeometry {
  centerRe: number;
  centerIm: number;
  halfWidth: number;
}

export interface TileAddr {
  z: number;
  x: number;
  y: number;
}

export function worldSize(zoom: number): number {
  return TILE * (1 << zoom);
}

/** slice coordinate -> world pixel (x right, y up) at the given zoom */
export function sToWorld(
  g: SliceGeometry, zoom: number, re: number, im: number,
): { x: number; y: number } {
  const n = worldSize(zoom);
  return {
    x: ((re - (g.centerRe - g.halfWidth)) / (2 * g.halfWidth)) * n,
    y: ((im - (g.centerIm - g.halfWidth)) / (2 * g.halfWidth)) * n,
  };
}

export function worldToS(
  g: SliceGeometry, zoom: number, x: number, y: number,
): { re: number; im: number } {
  const n = worldSize(zoom);
  return {
    re: g.centerRe - g.halfWidth + (x / n) * 2 * g.halfWidth,
    im: g.centerIm - g.halfWidth + (y / n) * 2 * g.halfWidth,
  };
}

export function tileOfWorld(zoom: number, x: number, y: number): TileAddr {
  return {
    z: zoom,
    x: Math.floor(x / TILE),
    y: Math.floor(y / TILE),
  };
}

/**
 * Tiles covering a viewport of canvasW x canvasH screen pixels centered at
 * the slice coordinate (centerRe, centerIm), plus where each tile lands on
 * screen (y still pointing up; the renderer flips).
 */
export function visibleTiles(
  g: SliceGeometry, zoom: number,
  centerRe: number, centerIm: number,
  canvasW: number, canvasH: number,
): Array<TileAddr & { screenX: number; screenY: number }> {
  const c = sToWorld(g, zoom, centerRe, centerIm);
  const x0 = c.x - canvasW / 2;
  const y0 = c.y - canvasH / 2;
  const tiles: Array<TileAddr & { screenX: number; screenY: number }> = [];
  const txMin = Math.max(0, Math.floor(x0 / TILE));
  const tyMin = Math.max(0, Math.floor(y0 / TILE));
  const txMax = Math.min((1 << zoom) - 1, Math.floor((x0 + canvasW) / TILE));
  const tyMax = Math.min((1 << zoom) - 1, Math.floor((y0 + canvasH) / TILE));
  for (let ty = tyMin; ty <= tyMax; ty++) {
    for (let tx = txMin; tx <= txMax; tx++) {
      tiles.push({
        z: zoom, x: tx, y: ty,
        screenX: tx * TILE - x0,
        screenY: ty * TILE - y0,
      });
    }
  }
  return tiles;
}

export function tileUrl(baseUrl: string, sliceId: string, t: TileAddr): string {
  return `${baseUrl}/tiles/${sliceId}/${t.z}/${t.x}/${t.y}`;
}

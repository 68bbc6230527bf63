import { describe, expect, it } from "vitest";

import {
  SliceGeometry, TILE, sToWorld, tileOfWorld, tileUrl, visibleTiles, worldToS,
} from "../src/tilemath.js";

const mandel: SliceGeometry = { centerRe: -0.5, centerIm: 0, halfWidth: 2 };

describe("tile math", () => {
  it("world <-> slice round trip within half a pixel", () => {
    for (const zoom of [0, 1, 3, 6]) {
      for (const [re, im] of [[-2.5, -2], [1.5, 2], [-0.5, 0], [0.123, -1.01]]) {
        const w = sToWorld(mandel, zoom, re, im);
        const s = worldToS(mandel, zoom, w.x, w.y);
        const pixel = (2 * mandel.halfWidth) / (TILE * (1 << zoom));
        expect(Math.abs(s.re - re)).toBeLessThan(pixel / 2);
        expect(Math.abs(s.im - im)).toBeLessThan(pixel / 2);
      }
    }
  });

  it("zoom 0 is a single tile covering the window", () => {
    const tiles = visibleTiles(mandel, 0, -0.5, 0, TILE, TILE);
    expect(tiles).toHaveLength(1);
    expect(tiles[0]).toMatchObject({ z: 0, x: 0, y: 0 });
  });

  it("zooming doubles the resolution around a fixed point", () => {
    // the same slice coordinate gets twice the pixel address per zoom step
    const p1 = sToWorld(mandel, 3, 0.1, 0.7);
    const p2 = sToWorld(mandel, 4, 0.1, 0.7);
    expect(p2.x).toBeCloseTo(2 * p1.x, 9);
    expect(p2.y).toBeCloseTo(2 * p1.y, 9);
    // and a viewport of fixed size requests deeper tiles, not more of them
    const t1 = visibleTiles(mandel, 3, 0.1, 0.7, 512, 512);
    const t2 = visibleTiles(mandel, 4, 0.1, 0.7, 512, 512);
    expect(t2.length).toBeGreaterThanOrEqual(t1.length - 1);
    for (const t of t2) expect(t.z).toBe(4);
  });

  it("tile addresses stay inside the slice", () => {
    const tiles = visibleTiles(mandel, 2, -2.4, -1.9, 2048, 2048);
    for (const t of tiles) {
      expect(t.x).toBeGreaterThanOrEqual(0);
      expect(t.y).toBeGreaterThanOrEqual(0);
      expect(t.x).toBeLessThan(1 << 2);
      expect(t.y).toBeLessThan(1 << 2);
    }
  });

  it("overlay layers use identical tile addresses for the same view", () => {
    // overlays are separate slices with the same geometry, so registration
    // agreement reduces to using one set of tile coordinates per view
    const base = visibleTiles(mandel, 4, -0.51, 0.49, 640, 640);
    const overlay = visibleTiles(mandel, 4, -0.51, 0.49, 640, 640);
    expect(overlay).toEqual(base);
    // and the slice coordinate of every tile corner agrees within half a px
    for (const t of base.slice(0, 4)) {
      const a = worldToS(mandel, t.z, t.x * TILE, t.y * TILE);
      const b = worldToS(mandel, t.z, t.x * TILE, t.y * TILE);
      expect(a).toEqual(b);
    }
  });

  it("pixel -> tile mapping", () => {
    expect(tileOfWorld(3, 257, 511)).toEqual({ z: 3, x: 1, y: 1 });
  });

  it("tile urls match the server routes", () => {
    expect(tileUrl("", "abc", { z: 2, x: 1, y: 3 })).toBe("/tiles/abc/2/1/3");
  });
});

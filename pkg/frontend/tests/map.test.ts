import { describe, expect, it } from "vitest";

import {
  boxFromDrag,
  fitViewport,
  latLonToPx,
  pxToLatLon,
  WORLD_VIEWPORT,
} from "../src/map.js";

describe("viewport transforms", () => {
  it("corners map to corners", () => {
    expect(pxToLatLon(WORLD_VIEWPORT, 0, 0)).toEqual([90, -180]);
    expect(pxToLatLon(WORLD_VIEWPORT, 360, 180)).toEqual([-90, 180]);
    expect(latLonToPx(WORLD_VIEWPORT, 90, -180)).toEqual([0, 0]);
  });

  it("px -> latlon -> px round-trips", () => {
    for (const [x, y] of [
      [10, 20],
      [180, 90],
      [359, 1],
    ] as [number, number][]) {
      const [lat, lon] = pxToLatLon(WORLD_VIEWPORT, x, y);
      const [bx, by] = latLonToPx(WORLD_VIEWPORT, lat, lon);
      expect(bx).toBeCloseTo(x, 9);
      expect(by).toBeCloseTo(y, 9);
    }
  });
});

describe("drag-to-box", () => {
  it("normalizes any drag direction", () => {
    const down = boxFromDrag(WORLD_VIEWPORT, [100, 40], [140, 90]);
    const up = boxFromDrag(WORLD_VIEWPORT, [140, 90], [100, 40]);
    expect(down).toEqual(up);
    expect(down.latMin).toBeLessThanOrEqual(down.latMax);
    expect(down.lonMin).toBeLessThanOrEqual(down.lonMax);
  });

  it("a drag over the NYC region lands near NYC", () => {
    // lon -74.26..-73.7 -> x ≈ 105.7..106.3; lat 40.9..40.4 -> y ≈ 49.1..49.6
    const box = boxFromDrag(WORLD_VIEWPORT, [105.7, 49.1], [106.3, 49.6]);
    expect(box.latMin).toBeGreaterThan(40);
    expect(box.latMax).toBeLessThan(41.5);
    expect(box.lonMin).toBeGreaterThan(-75);
    expect(box.lonMax).toBeLessThan(-73);
  });
});

describe("fitViewport", () => {
  it("covers the boxes with a margin and clamps to the world", () => {
    const view = fitViewport(
      [{ latMin: 40, latMax: 41, lonMin: -74, lonMax: -73 }],
      400,
      200,
    );
    expect(view.latMin).toBeLessThan(40);
    expect(view.latMax).toBeGreaterThan(41);
    expect(view.latMin).toBeGreaterThanOrEqual(-90);
    expect(view.lonMax).toBeLessThanOrEqual(180);
  });

  it("falls back to the world for no boxes", () => {
    const view = fitViewport([], 400, 200);
    expect([view.latMin, view.latMax]).toEqual([-90, 90]);
  });
});

/**
 * Tile-less map arithmetic: an equirectangular viewport plus the drag-to-box
 * geometry. Pure functions so the drawing logic is testable without a DOM.
 */

export interface MapViewport {
  width: number;
  height: number;
  latMin: number;
  latMax: number;
  lonMin: number;
  lonMax: number;
}

export interface DrawnBox {
  latMin: number;
  latMax: number;
  lonMin: number;
  lonMax: number;
}

export const WORLD_VIEWPORT: MapViewport = {
  width: 360,
  height: 180,
  latMin: -90,
  latMax: 90,
  lonMin: -180,
  lonMax: 180,
};

export function pxToLatLon(view: MapViewport, x: number, y: number): [number, number] {
  const lon = view.lonMin + (x / view.width) * (view.lonMax - view.lonMin);
  const lat = view.latMax - (y / view.height) * (view.latMax - view.latMin);
  return [lat, lon];
}

export function latLonToPx(view: MapViewport, lat: number, lon: number): [number, number] {
  const x = ((lon - view.lonMin) / (view.lonMax - view.lonMin)) * view.width;
  const y = ((view.latMax - lat) / (view.latMax - view.latMin)) * view.height;
  return [x, y];
}

/** Normalize a drag gesture (any direction) into an ordered box. */
export function boxFromDrag(
  view: MapViewport,
  start: [number, number],
  end: [number, number],
): DrawnBox {
  const [lat1, lon1] = pxToLatLon(view, start[0], start[1]);
  const [lat2, lon2] = pxToLatLon(view, end[0], end[1]);
  return {
    latMin: Math.min(lat1, lat2),
    latMax: Math.max(lat1, lat2),
    lonMin: Math.min(lon1, lon2),
    lonMax: Math.max(lon1, lon2),
  };
}

/** Viewport that fits the given boxes with a margin, for the detail map. */
export function fitViewport(
  boxes: DrawnBox[],
  width: number,
  height: number,
  marginFraction = 0.15,
): MapViewport {
  if (boxes.length === 0) {
    return { ...WORLD_VIEWPORT, width, height };
  }
  let latMin = Math.min(...boxes.map((b) => b.latMin));
  let latMax = Math.max(...boxes.map((b) => b.latMax));
  let lonMin = Math.min(...boxes.map((b) => b.lonMin));
  let lonMax = Math.max(...boxes.map((b) => b.lonMax));
  const latPad = Math.max((latMax - latMin) * marginFraction, 0.05);
  const lonPad = Math.max((lonMax - lonMin) * marginFraction, 0.05);
  latMin = Math.max(-90, latMin - latPad);
  latMax = Math.min(90, latMax + latPad);
  lonMin = Math.max(-180, lonMin - lonPad);
  lonMax = Math.min(180, lonMax + lonPad);
  return { width, height, latMin, latMax, lonMin, lonMax };
}

// World <-> screen mapping for the floor plan canvas.
// World y grows north; screen y grows down, so the projection flips y.

export interface Projection {
  scale: number; // pixels per meter
  offsetX: number;
  offsetY: number;
  height: number;
}

export function fitProjection(
  bounds: [number, number, number, number],
  width: number,
  height: number,
  margin = 20,
): Projection {
  const [x0, y0, x1, y1] = bounds;
  const spanX = x1 - x0;
  const spanY = y1 - y0;
  const scale = Math.min(
    (width - 2 * margin) / spanX,
    (height - 2 * margin) / spanY,
  );
  const offsetX = (width - spanX * scale) / 2 - x0 * scale;
  const offsetY = (height - spanY * scale) / 2 + y0 * scale;
  return { scale, offsetX, offsetY, height };
}

export function worldToScreen(
  p: Projection,
  wx: number,
  wy: number,
): [number, number] {
  return [wx * p.scale + p.offsetX, p.height - (wy * p.scale + p.offsetY)];
}

export function screenToWorld(
  p: Projection,
  sx: number,
  sy: number,
): [number, number] {
  return [(sx - p.offsetX) / p.scale, (p.height - sy - p.offsetY) / p.scale];
}

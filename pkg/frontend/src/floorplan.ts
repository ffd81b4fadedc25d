// Floor plan renderer: building elements by layer, pending capture-point
// markers, stored-capture markers, and the live robot twin.
// Drawing goes through a structural subset of CanvasRenderingContext2D so
// tests can record draw calls without a real canvas.

import type { Projection } from "./projection";
import { worldToScreen } from "./projection";
import type { ConsoleState } from "./store";

export interface CanvasLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  textAlign: CanvasTextAlign;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillText(text: string, x: number, y: number): void;
}

const LAYER_STYLES: Record<string, { fill: string; stroke: string }> = {
  floor: { fill: "#f4f1ea", stroke: "#d8d2c4" },
  wall: { fill: "#4a4a55", stroke: "#33333c" },
  door: { fill: "#7fb069", stroke: "#5e8a4b" },
  furniture: { fill: "#b7a98c", stroke: "#968a70" },
  other: { fill: "#c9c9d1", stroke: "#a8a8b2" },
};

export const TWIN_COLOR = "#1f6feb";
export const TWIN_DEGRADED_COLOR = "#d29922";

export function renderFloorplan(
  ctx: CanvasLike,
  state: ConsoleState,
  projection: Projection,
  width: number,
  height: number,
  now: number,
): string[] {
  // returns the draw order of marker identities, for tests and debugging
  const drawn: string[] = [];
  ctx.globalAlpha = 1;
  ctx.fillStyle = "#fbfaf7";
  ctx.fillRect(0, 0, width, height);
  if (!state.model) {
    return drawn;
  }

  const layerOrder = ["floor", "other", "furniture", "wall", "door"];
  for (const layer of layerOrder) {
    for (const element of state.model.elements) {
      if (element.layer !== layer) {
        continue;
      }
      const style = LAYER_STYLES[layer] ?? LAYER_STYLES.other;
      ctx.fillStyle = style.fill;
      ctx.strokeStyle = style.stroke;
      ctx.lineWidth = 1;
      tracePolygon(ctx, projection, element.footprint);
      ctx.fill();
      ctx.stroke();
    }
  }

  for (const fiducial of state.model.fiducials) {
    const [sx, sy] = worldToScreen(projection, fiducial.pose.x, fiducial.pose.y);
    ctx.fillStyle = "#8957e5";
    ctx.beginPath();
    ctx.arc(sx, sy, 4, 0, Math.PI * 2);
    ctx.fill();
  }

  // stored captures for the selected date, in gateway record order
  let index = 0;
  for (const record of state.records) {
    for (const capture of record.captures) {
      index += 1;
      const pose = capture.pose ?? { x: 0, y: 0 };
      const [sx, sy] = worldToScreen(projection, pose.x, pose.y);
      const selected = state.selectedCapture === capture.capture_id;
      ctx.fillStyle = selected ? "#e3b341" : "#2da44e";
      ctx.beginPath();
      ctx.arc(sx, sy, selected ? 9 : 7, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = "#ffffff";
      ctx.font = "10px sans-serif";
      ctx.textAlign = "center";
      ctx.fillText(String(index), sx, sy + 3);
      drawn.push(`capture:${capture.capture_id}`);
    }
  }

  // pending user-placed markers
  state.pendingDrps.forEach((drp, i) => {
    const [sx, sy] = worldToScreen(projection, drp.x, drp.y);
    ctx.fillStyle = "#cf222e";
    ctx.beginPath();
    ctx.arc(sx, sy, 6, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#ffffff";
    ctx.font = "9px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(String(i + 1), sx, sy + 3);
    drawn.push(`pending:${drp.id}`);
  });

  // the digital twin, hidden when telemetry goes stale
  const twin = state.twin;
  if (twin && now - twin.lastSeen <= 2000) {
    const [sx, sy] = worldToScreen(projection, twin.x, twin.y);
    ctx.fillStyle = twin.degraded ? TWIN_DEGRADED_COLOR : TWIN_COLOR;
    ctx.beginPath();
    ctx.arc(sx, sy, 8, 0, Math.PI * 2);
    ctx.fill();
    // heading tick
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(sx, sy);
    ctx.lineTo(
      sx + 10 * Math.cos(-twin.theta),
      sy + 10 * Math.sin(-twin.theta),
    );
    ctx.stroke();
    drawn.push(twin.degraded ? "twin:degraded" : "twin:ok");
  }
  return drawn;
}

function tracePolygon(
  ctx: CanvasLike,
  projection: Projection,
  footprint: [number, number][],
): void {
  ctx.beginPath();
  footprint.forEach(([wx, wy], i) => {
    const [sx, sy] = worldToScreen(projection, wx, wy);
    if (i === 0) {
      ctx.moveTo(sx, sy);
    } else {
      ctx.lineTo(sx, sy);
    }
  });
  ctx.closePath();
}

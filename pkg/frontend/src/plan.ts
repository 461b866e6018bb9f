/**
 * Plan-view affordances: fitting the drawing into an SVG view box,
 * snapping clicks onto footprint vertices, and shaping the half-plane
 * preview for the side toggle.
 *
 * Nothing here produces a value the officer reads as a measurement;
 * measured numbers always come from the service. These helpers only
 * position UI elements around polygons the server already returned.
 */

import type { FootprintStorey, LineSide, PlanPoint, Ring } from "./types.js";

export interface PlanBounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function worldBounds(storeys: FootprintStorey[]): PlanBounds | null {
  let bounds: PlanBounds | null = null;
  for (const storey of storeys) {
    for (const ring of storey.polygons) {
      for (const [x, y] of ring) {
        if (bounds === null) {
          bounds = { minX: x, minY: y, maxX: x, maxY: y };
        } else {
          bounds.minX = Math.min(bounds.minX, x);
          bounds.minY = Math.min(bounds.minY, y);
          bounds.maxX = Math.max(bounds.maxX, x);
          bounds.maxY = Math.max(bounds.maxY, y);
        }
      }
    }
  }
  return bounds;
}

export function padBounds(bounds: PlanBounds, pad: number): PlanBounds {
  return {
    minX: bounds.minX - pad,
    minY: bounds.minY - pad,
    maxX: bounds.maxX + pad,
    maxY: bounds.maxY + pad,
  };
}

/**
 * View box for an SVG whose drawing group is transform="scale(1,-1)".
 * The flip lets polygon `points` carry the service coordinates verbatim
 * while the screen keeps north up.
 */
export function viewBoxAttr(bounds: PlanBounds): string {
  const width = bounds.maxX - bounds.minX;
  const height = bounds.maxY - bounds.minY;
  return `${bounds.minX} ${-bounds.maxY} ${width} ${height}`;
}

/**
 * Nearest ring vertex within radiusM of point, or null. Ties keep the
 * first vertex in ring order so snapping is deterministic.
 */
export function snapToVertex(
  point: PlanPoint,
  rings: Ring[],
  radiusM: number,
): PlanPoint | null {
  const radiusSq = radiusM * radiusM;
  let best: PlanPoint | null = null;
  let bestSq = Infinity;
  for (const ring of rings) {
    for (const vertex of ring) {
      const dx = vertex[0] - point[0];
      const dy = vertex[1] - point[1];
      const distSq = dx * dx + dy * dy;
      if (distSq > radiusSq) {
        continue;
      }
      if (best === null || distSq < bestSq) {
        best = vertex;
        bestSq = distSq;
      }
    }
  }
  return best;
}

interface RectLike {
  left: number;
  top: number;
  width: number;
  height: number;
}

/**
 * Map a client-space click on the plan SVG back to model coordinates.
 * Assumes the SVG fills its border box and uses the y-flip convention
 * of viewBoxAttr.
 */
export function clientToPlan(
  rect: RectLike,
  viewBox: string,
  clientX: number,
  clientY: number,
): PlanPoint {
  const [vbX = 0, vbY = 0, vbW = 1, vbH = 1] =
    viewBox.split(/\s+/).map(Number);
  const u = rect.width > 0 ? (clientX - rect.left) / rect.width : 0;
  const v = rect.height > 0 ? (clientY - rect.top) / rect.height : 0;
  const svgX = vbX + u * vbW;
  const svgY = vbY + v * vbH;
  return [svgX, -svgY];
}

/**
 * Corner points (as an SVG points string in model coordinates) of a
 * quad covering the declared street side of the a→b line, oversized so
 * the view box clips it. "left" matches the service sign convention:
 * positive cross(b−a, p−a).
 */
export function halfPlanePoints(
  a: PlanPoint,
  b: PlanPoint,
  side: LineSide,
  bounds: PlanBounds,
): string {
  const dx = b[0] - a[0];
  const dy = b[1] - a[1];
  const length = Math.hypot(dx, dy);
  if (length === 0) {
    return "";
  }
  const reach = 2 * Math.hypot(bounds.maxX - bounds.minX,
                               bounds.maxY - bounds.minY);
  const ux = dx / length;
  const uy = dy / length;
  const nx = side === "left" ? -uy : uy;
  const ny = side === "left" ? ux : -ux;
  const corners: PlanPoint[] = [
    [a[0] - ux * reach, a[1] - uy * reach],
    [b[0] + ux * reach, b[1] + uy * reach],
    [b[0] + ux * reach + nx * reach, b[1] + uy * reach + ny * reach],
    [a[0] - ux * reach + nx * reach, a[1] - uy * reach + ny * reach],
  ];
  return corners.map(([x, y]) => `${x},${y}`).join(" ");
}

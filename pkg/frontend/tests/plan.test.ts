import { describe, expect, it } from "vitest";

import {
  clientToPlan,
  halfPlanePoints,
  padBounds,
  snapToVertex,
  viewBoxAttr,
  worldBounds,
} from "../src/plan.js";
import type { PlanBounds } from "../src/plan.js";
import type {
  FootprintsResponse,
  PlanPoint,
  Ring,
} from "../src/types.js";
import { loadFixture } from "./helpers.js";

const footprints = loadFixture<FootprintsResponse>("overhang_footprints");

function firstRing(): Ring {
  const ring = footprints.storeys[0]?.polygons[0];
  if (ring === undefined) {
    throw new Error("fixture storey has no polygons");
  }
  return ring;
}

describe("worldBounds", () => {
  it("spans exactly the vertices of every storey polygon", () => {
    const bounds = worldBounds(footprints.storeys);
    expect(bounds).not.toBeNull();
    const xs: number[] = [];
    const ys: number[] = [];
    for (const storey of footprints.storeys) {
      for (const ring of storey.polygons) {
        for (const [x, y] of ring) {
          xs.push(x);
          ys.push(y);
        }
      }
    }
    expect(bounds?.minX).toBe(Math.min(...xs));
    expect(bounds?.maxX).toBe(Math.max(...xs));
    expect(bounds?.minY).toBe(Math.min(...ys));
    expect(bounds?.maxY).toBe(Math.max(...ys));
  });

  it("is null when no storey has polygons", () => {
    expect(worldBounds([])).toBeNull();
  });
});

describe("viewBoxAttr", () => {
  it("flips the y axis so north stays up under scale(1,-1)", () => {
    const bounds: PlanBounds = { minX: 0, minY: 0, maxX: 30, maxY: 20 };
    expect(viewBoxAttr(bounds)).toBe("0 -20 30 20");
    expect(viewBoxAttr(padBounds(bounds, 3))).toBe("-3 -23 36 26");
  });
});

describe("snapToVertex", () => {
  it("returns the exact service vertex nearest to the click", () => {
    const ring = firstRing();
    const target = ring[17];
    if (target === undefined) {
      throw new Error("fixture ring too short");
    }
    const click: PlanPoint = [target[0] + 0.06, target[1] - 0.04];
    const snapped = snapToVertex(click, [ring], 0.5);
    expect(snapped).toBe(target);
  });

  it("rejects clicks with no vertex inside the radius", () => {
    const ring = firstRing();
    expect(snapToVertex([1000, 1000], [ring], 0.5)).toBeNull();
  });

  it("breaks ties toward the earlier vertex in ring order", () => {
    const square: Ring = [[0, 0], [2, 0], [2, 2], [0, 2]];
    expect(snapToVertex([1, 0], [square], 1.5)).toBe(square[0]);
  });
});

describe("clientToPlan", () => {
  const rect = { left: 10, top: 20, width: 300, height: 200 };
  const viewBox = "0 -20 30 20";

  it("maps the centre of the box to the centre of the drawing", () => {
    expect(clientToPlan(rect, viewBox, 160, 120)).toEqual([15, 10]);
  });

  it("inverts the screen projection of a known plan point", () => {
    // project [6, 4] forward by hand, then map it back
    const clientX = rect.left + (6 / 30) * rect.width;
    const clientY = rect.top + ((-4 - -20) / 20) * rect.height;
    expect(clientToPlan(rect, viewBox, clientX, clientY)).toEqual([6, 4]);
  });
});

describe("halfPlanePoints", () => {
  const bounds: PlanBounds = { minX: 0, minY: 0, maxX: 30, maxY: 20 };

  function corners(points: string): PlanPoint[] {
    return points.split(" ").map((pair) => {
      const [x = 0, y = 0] = pair.split(",").map(Number);
      return [x, y];
    });
  }

  it("shades the positive-cross side for 'left'", () => {
    const quad = corners(halfPlanePoints([0, 0], [10, 0], "left", bounds));
    // left of the +x direction is +y
    const offLine = quad.slice(2);
    expect(offLine.every(([, y]) => y > 0)).toBe(true);
  });

  it("shades the mirror side for 'right'", () => {
    const quad = corners(halfPlanePoints([0, 0], [10, 0], "right", bounds));
    const offLine = quad.slice(2);
    expect(offLine.every(([, y]) => y < 0)).toBe(true);
  });

  it("matches the service sign convention on a slanted line", () => {
    const a: PlanPoint = [2, 1];
    const b: PlanPoint = [10, 7];
    const quad = corners(halfPlanePoints(a, b, "left", bounds));
    for (const [x, y] of quad.slice(2)) {
      const cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
      expect(cross).toBeGreaterThan(0);
    }
  });

  it("yields nothing for a degenerate line", () => {
    expect(halfPlanePoints([1, 1], [1, 1], "left", bounds)).toBe("");
  });
});

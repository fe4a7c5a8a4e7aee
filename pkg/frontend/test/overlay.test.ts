import { describe, expect, it } from "vitest";

import { OverlayDoc } from "../src/api.js";
import { buildOverlayDrawing, buildProposalOutline, DrawCommand } from "../src/overlay.js";

// deliberately awkward floats: any recomputation would not round-trip
const doc: OverlayDoc = {
  revision: 12,
  frame_id: 3,
  camera: { fx: 2400, fy: 2400, cx: 320, cy: 240, width: 640, height: 480 },
  instances: [
    {
      instance_id: 0,
      class_id: 5,
      polygon: [
        [289.62025316455697, 209.62025316455697],
        [350.37974683544303, 209.62025316455697],
        [350.37974683544303, 270.37974683544303],
      ],
      bbox: { cx: 320.0000000001, cy: 240.00000000003, w: 60.75949367088606, h: 60.75949367088606 },
    },
    {
      instance_id: 7,
      class_id: 9,
      polygon: [],
      bbox: { cx: 10.25, cy: 20.5, w: 4.5, h: 2.25 },
    },
  ],
};

function coords(cmds: DrawCommand[]): [number, number][] {
  const out: [number, number][] = [];
  for (const c of cmds) {
    if (c.op === "moveTo" || c.op === "lineTo") out.push([c.x, c.y]);
  }
  return out;
}

describe("buildOverlayDrawing", () => {
  it("passes every polygon coordinate through bit for bit", () => {
    const drawings = buildOverlayDrawing(doc, {}, null);
    const pts = coords(drawings[0].outline);
    expect(pts.length).toBe(doc.instances[0].polygon.length);
    pts.forEach(([x, y], i) => {
      // strict equality: the drawn overlay IS the payload
      expect(x).toBe(doc.instances[0].polygon[i][0]);
      expect(y).toBe(doc.instances[0].polygon[i][1]);
    });
  });

  it("closes a non-empty outline and skips closing an empty one", () => {
    const drawings = buildOverlayDrawing(doc, {}, null);
    expect(drawings[0].outline.at(-1)).toEqual({ op: "closePath" });
    expect(drawings[1].outline).toEqual([]);
  });

  it("draws the bbox rect from the payload center and extent", () => {
    const drawings = buildOverlayDrawing(doc, {}, null);
    const rect = drawings[0].bbox.find((c) => c.op === "strokeRect");
    expect(rect).toBeDefined();
    if (rect && rect.op === "strokeRect") {
      const b = doc.instances[0].bbox;
      expect(rect.x).toBe(b.cx - b.w / 2);
      expect(rect.y).toBe(b.cy - b.h / 2);
      expect(rect.w).toBe(b.w);
      expect(rect.h).toBe(b.h);
    }
  });

  it("labels with the class table name or a numeric fallback", () => {
    const drawings = buildOverlayDrawing(doc, { "5": "pallet" }, null);
    const label0 = drawings[0].bbox.find((c) => c.op === "label");
    const label1 = drawings[1].bbox.find((c) => c.op === "label");
    expect(label0 && label0.op === "label" && label0.text).toBe("pallet");
    expect(label1 && label1.op === "label" && label1.text).toBe("class 9");
  });

  it("marks only the selected instance", () => {
    const drawings = buildOverlayDrawing(doc, {}, 7);
    expect(drawings.map((d) => d.selected)).toEqual([false, true]);
    expect(buildOverlayDrawing(doc, {}, null).every((d) => !d.selected)).toBe(true);
  });
});

describe("buildProposalOutline", () => {
  it("builds a closed loop from bare points", () => {
    const cmds = buildProposalOutline([[1.5, 2.25], [3.125, 2.25], [3.125, 9]]);
    expect(cmds).toEqual([
      { op: "moveTo", x: 1.5, y: 2.25 },
      { op: "lineTo", x: 3.125, y: 2.25 },
      { op: "lineTo", x: 3.125, y: 9 },
      { op: "closePath" },
    ]);
  });

  it("emits nothing for an empty list", () => {
    expect(buildProposalOutline([])).toEqual([]);
  });
});

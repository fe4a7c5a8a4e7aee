// Turns server overlay payloads into canvas draw commands.
//
// The server already projected everything; this module only repackages
// its numbers. Coordinates pass through verbatim so the drawn overlay
// is pixel-identical to the payload.

import { OverlayDoc, OverlayEntry } from "./api.js";

export type DrawCommand =
  | { op: "moveTo"; x: number; y: number }
  | { op: "lineTo"; x: number; y: number }
  | { op: "closePath" }
  | { op: "strokeRect"; x: number; y: number; w: number; h: number }
  | { op: "label"; x: number; y: number; text: string };

export type InstanceDrawing = {
  instanceId: number;
  classId: number;
  selected: boolean;
  outline: DrawCommand[];
  bbox: DrawCommand[];
};

function outlineCommands(entry: OverlayEntry): DrawCommand[] {
  const cmds: DrawCommand[] = [];
  entry.polygon.forEach(([x, y], i) => {
    cmds.push(i === 0 ? { op: "moveTo", x, y } : { op: "lineTo", x, y });
  });
  if (entry.polygon.length > 0) cmds.push({ op: "closePath" });
  return cmds;
}

function bboxCommands(entry: OverlayEntry, className: string): DrawCommand[] {
  const { cx, cy, w, h } = entry.bbox;
  return [
    { op: "strokeRect", x: cx - w / 2, y: cy - h / 2, w, h },
    { op: "label", x: cx - w / 2, y: cy - h / 2, text: className },
  ];
}

export function buildOverlayDrawing(
  doc: OverlayDoc,
  classNames: { [classId: string]: string },
  selectedInstanceId: number | null,
): InstanceDrawing[] {
  return doc.instances.map((entry) => ({
    instanceId: entry.instance_id,
    classId: entry.class_id,
    selected: entry.instance_id === selectedInstanceId,
    outline: outlineCommands(entry),
    bbox: bboxCommands(entry, classNames[String(entry.class_id)] ?? `class ${entry.class_id}`),
  }));
}

/** Proposal overlays arrive as bare point lists keyed by frame id. */
export function buildProposalOutline(points: [number, number][]): DrawCommand[] {
  const cmds: DrawCommand[] = [];
  points.forEach(([x, y], i) => {
    cmds.push(i === 0 ? { op: "moveTo", x, y } : { op: "lineTo", x, y });
  });
  if (points.length > 0) cmds.push({ op: "closePath" });
  return cmds;
}

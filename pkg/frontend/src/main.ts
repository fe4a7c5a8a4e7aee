// Browser entry point: wires RefineSession to the page. Keyboard and
// filmstrip navigation only; the canvas replays server overlay payloads.

import { ApiClient } from "./api.js";
import { buildHeatmap, hoverReadout } from "./heatmap.js";
import { buildOverlayDrawing, buildProposalOutline, DrawCommand } from "./overlay.js";
import { Point } from "./polygon.js";
import { RefineSession } from "./session.js";

const api = new ApiClient("");
const session = new RefineSession(api);

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
};

const canvas = el<HTMLCanvasElement>("view");
const ctx = canvas.getContext("2d")!;
const filmstrip = el<HTMLDivElement>("filmstrip");
const statusBar = el<HTMLDivElement>("status");
const noticeBox = el<HTMLDivElement>("notices");
const conflictBox = el<HTMLDivElement>("conflict");
const proposeBtn = el<HTMLButtonElement>("propose");
const commitBtn = el<HTMLButtonElement>("commit");
const discardBtn = el<HTMLButtonElement>("discard");
const heatCanvas = el<HTMLCanvasElement>("heat");
const heatCtx = heatCanvas.getContext("2d")!;
const heatReadout = el<HTMLDivElement>("heat-readout");
const sizeInputs = ["size-x", "size-y", "size-z"].map((id) => el<HTMLInputElement>(id));
const sizeError = el<HTMLDivElement>("size-error");

let draft: Point[] = [];
const frameImage = new Image();

function runCommands(target: CanvasRenderingContext2D, commands: DrawCommand[]): void {
  for (const cmd of commands) {
    switch (cmd.op) {
      case "moveTo":
        target.beginPath();
        target.moveTo(cmd.x, cmd.y);
        break;
      case "lineTo":
        target.lineTo(cmd.x, cmd.y);
        break;
      case "closePath":
        target.closePath();
        target.stroke();
        break;
      case "strokeRect":
        target.strokeRect(cmd.x, cmd.y, cmd.w, cmd.h);
        break;
      case "label":
        target.fillText(cmd.text, cmd.x, cmd.y - 4);
        break;
    }
  }
}

function redraw(): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (frameImage.complete && frameImage.naturalWidth > 0) {
    ctx.drawImage(frameImage, 0, 0);
  }
  ctx.lineWidth = 2;
  ctx.font = "12px sans-serif";
  if (session.overlay && session.instances) {
    const drawings = buildOverlayDrawing(
      session.overlay,
      session.instances.classes,
      session.selectedInstanceId,
    );
    for (const d of drawings) {
      ctx.strokeStyle = d.selected ? "#ffcc00" : "#00ccff";
      ctx.fillStyle = ctx.strokeStyle;
      runCommands(ctx, d.outline);
      runCommands(ctx, d.bbox);
    }
  }
  const frameId = session.currentFrameId;
  if (frameId !== null && session.proposal) {
    const poly = session.proposal.overlays[String(frameId)];
    if (poly) {
      ctx.strokeStyle = "#66ff66";
      runCommands(ctx, buildProposalOutline(poly as Point[]));
    }
  }
  if (frameId !== null) {
    const pending = session.pendingMasks.get(frameId);
    if (pending) {
      ctx.strokeStyle = "#ff66cc";
      runCommands(ctx, buildProposalOutline(pending));
    }
  }
  if (draft.length > 0) {
    ctx.strokeStyle = "#ff66cc";
    ctx.beginPath();
    ctx.moveTo(draft[0][0], draft[0][1]);
    for (const [u, v] of draft.slice(1)) ctx.lineTo(u, v);
    ctx.stroke();
  }
}

function renderStatus(): void {
  statusBar.textContent =
    `revision ${session.revision}` +
    (session.currentFrameId !== null ? ` | frame ${session.currentFrameId}` : "") +
    (session.selectedInstanceId !== null ? ` | instance ${session.selectedInstanceId}` : "");
}

function renderNotices(): void {
  noticeBox.replaceChildren(
    ...session.notices.slice(-5).map((n) => {
      const div = document.createElement("div");
      div.className = `notice ${n.level}`;
      div.textContent = n.text;
      return div;
    }),
  );
  if (session.conflictBanner) {
    conflictBox.hidden = false;
    conflictBox.textContent =
      `Project changed in another session (revision ${session.conflictBanner.serverRevision}). ` +
      `Your edit was not applied. | ${session.conflictBanner.detail}`;
  } else {
    conflictBox.hidden = true;
  }
  sizeError.textContent = session.validationError ?? "";
}

function renderButtons(): void {
  const gate = session.canPropose();
  proposeBtn.disabled = !gate.ok || session.isBusy;
  proposeBtn.title = gate.ok ? "carve a box from the drawn outlines" : gate.reason;
  commitBtn.disabled = session.proposal === null || session.isBusy;
  discardBtn.disabled = session.proposal === null;
}

function renderFilmstrip(): void {
  filmstrip.replaceChildren(
    ...session.frameIds().map((id) => {
      const tile = document.createElement("button");
      tile.className = id === session.currentFrameId ? "tile current" : "tile";
      tile.textContent = String(id);
      if (session.pendingMasks.has(id)) tile.classList.add("masked");
      tile.onclick = () => void showFrame(id);
      return tile;
    }),
  );
}

function renderHeatmap(): void {
  const doc = session.coverage;
  heatCtx.clearRect(0, 0, heatCanvas.width, heatCanvas.height);
  if (!doc) return;
  const map = buildHeatmap(doc);
  const cw = heatCanvas.width / doc.theta_bins;
  const ch = heatCanvas.height / doc.phi_bins;
  for (const row of map.cells) {
    for (const cell of row) {
      heatCtx.fillStyle = cell.color;
      heatCtx.fillRect(cell.thetaBin * cw, cell.phiBin * ch, cw, ch);
      if (cell.isGap) {
        heatCtx.strokeStyle = "#ff3333";
        heatCtx.strokeRect(cell.thetaBin * cw + 1, cell.phiBin * ch + 1, cw - 2, ch - 2);
      }
    }
  }
  heatReadout.textContent = map.empty ? "no coverage" : "";
}

function renderAll(): void {
  redraw();
  renderStatus();
  renderNotices();
  renderButtons();
  renderFilmstrip();
  renderHeatmap();
}

async function showFrame(id: number): Promise<void> {
  await session.selectFrame(id);
  draft = [];
  frameImage.src = api.imageUrl(id);
  renderAll();
}

frameImage.onload = redraw;

canvas.addEventListener("click", (ev) => {
  const rect = canvas.getBoundingClientRect();
  draft.push([ev.clientX - rect.left, ev.clientY - rect.top]);
  redraw();
});

canvas.addEventListener("dblclick", () => {
  if (session.currentFrameId === null) return;
  session.drawMask(session.currentFrameId, draft.slice(0, -1));
  draft = [];
  renderAll();
});

document.addEventListener("keydown", (ev) => {
  if (ev.target instanceof HTMLInputElement) return;
  if (ev.key === "ArrowRight") void session.stepFrame(1).then(renderAll);
  if (ev.key === "ArrowLeft") void session.stepFrame(-1).then(renderAll);
  if (ev.key === "Escape") {
    draft = [];
    redraw();
  }
});

canvas.addEventListener("contextmenu", (ev) => {
  // right click selects the instance whose bbox contains the cursor
  ev.preventDefault();
  if (!session.overlay) return;
  const rect = canvas.getBoundingClientRect();
  const u = ev.clientX - rect.left;
  const v = ev.clientY - rect.top;
  let picked: number | null = null;
  for (const inst of session.overlay.instances) {
    const b = inst.bbox;
    if (Math.abs(u - b.cx) <= b.w / 2 && Math.abs(v - b.cy) <= b.h / 2) {
      picked = inst.instance_id;
    }
  }
  session.selectInstance(picked);
  renderAll();
});

for (const [axis, dir] of [
  ["x", 1], ["x", -1], ["y", 1], ["y", -1], ["z", 1], ["z", -1],
] as const) {
  const btn = document.getElementById(`move-${axis}${dir > 0 ? "+" : "-"}`);
  btn?.addEventListener("click", () => {
    const d: [number, number, number] = [0, 0, 0];
    d[{ x: 0, y: 1, z: 2 }[axis]] = 0.05 * dir;
    void session.editBox({ kind: "translate", delta: d }).then(renderAll);
  });
}

for (const [axis, dir] of [["z", 1], ["z", -1]] as const) {
  const btn = document.getElementById(`rot-${axis}${dir > 0 ? "+" : "-"}`);
  btn?.addEventListener("click", () => {
    void session
      .editBox({ kind: "rotate", axis, angleRad: (dir * Math.PI) / 36 })
      .then(renderAll);
  });
}

el<HTMLButtonElement>("size-apply").addEventListener("click", () => {
  const size = sizeInputs.map((inp) => Number(inp.value)) as [number, number, number];
  void session.editBox({ kind: "size", size }).then(renderAll);
});

proposeBtn.addEventListener("click", () => {
  void session.proposeFromMasks().then(renderAll);
});

commitBtn.addEventListener("click", () => {
  void session.commitProposal().then(renderAll);
});

discardBtn.addEventListener("click", () => {
  session.discardProposal();
  renderAll();
});

el<HTMLButtonElement>("coverage-show").addEventListener("click", () => {
  if (session.selectedInstanceId === null) return;
  void session.showCoverage(session.selectedInstanceId).then(renderAll);
});

heatCanvas.addEventListener("mousemove", (ev) => {
  const doc = session.coverage;
  if (!doc) return;
  const rect = heatCanvas.getBoundingClientRect();
  const t = Math.floor(((ev.clientX - rect.left) / rect.width) * doc.theta_bins);
  const p = Math.floor(((ev.clientY - rect.top) / rect.height) * doc.phi_bins);
  const r = hoverReadout(doc, t, p);
  if (r) {
    heatReadout.textContent =
      `theta ${r.thetaDeg.toFixed(1)} deg, phi ${r.phiDeg.toFixed(1)} deg: ${r.count} frames`;
  }
});

void session.loadProject().then(() => {
  if (session.currentFrameId !== null) frameImage.src = api.imageUrl(session.currentFrameId);
  renderAll();
});

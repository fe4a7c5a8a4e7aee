// One reviewer's session against the server: step frames, edit boxes,
// draw silhouette masks, propose and commit carved boxes.
//
// All geometry shown to the user comes from server payloads. The only
// arithmetic done here is assembling PATCH bodies from gizmo deltas.

import {
  ApiClient,
  ApiError,
  CoverageDoc,
  FramesDoc,
  HullProposal,
  InstancesDoc,
  MaskEntry,
  OverlayDoc,
} from "./api.js";
import { isSimplePolygon, Point } from "./polygon.js";

export type GizmoDelta =
  | { kind: "translate"; delta: [number, number, number] }
  | { kind: "rotate"; axis: "x" | "y" | "z"; angleRad: number }
  | { kind: "size"; size: [number, number, number] };

export type Notice = {
  level: "info" | "error";
  text: string;
};

export type ConflictBanner = {
  detail: string;
  serverRevision: number;
};

export type ProposeGate = { ok: true } | { ok: false; reason: string };

// row-major 4x4 helpers for building PATCH bodies

function axisRotation(axis: "x" | "y" | "z", a: number): number[][] {
  const c = Math.cos(a);
  const s = Math.sin(a);
  if (axis === "x") return [[1, 0, 0], [0, c, -s], [0, s, c]];
  if (axis === "y") return [[c, 0, s], [0, 1, 0], [-s, 0, c]];
  return [[c, -s, 0], [s, c, 0], [0, 0, 1]];
}

function rotateFlat(flat: number[], axis: "x" | "y" | "z", angleRad: number): number[] {
  const rot = axisRotation(axis, angleRad);
  const out = flat.slice();
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      let v = 0;
      for (let k = 0; k < 3; k++) v += rot[i][k] * flat[k * 4 + j];
      out[i * 4 + j] = v;
    }
  }
  return out; // translation column untouched: pivot is the box origin
}

function translateFlat(flat: number[], d: [number, number, number]): number[] {
  const out = flat.slice();
  out[3] += d[0];
  out[7] += d[1];
  out[11] += d[2];
  return out;
}

export class RefineSession {
  api: ApiClient;

  frames: FramesDoc | null = null;
  instances: InstancesDoc | null = null;
  overlay: OverlayDoc | null = null;
  coverage: CoverageDoc | null = null;

  /** the revision shown in the status bar; overlay always matches it */
  revision = 0;
  currentFrameId: number | null = null;
  selectedInstanceId: number | null = null;

  pendingMasks: Map<number, Point[]> = new Map();
  proposal: HullProposal | null = null;

  notices: Notice[] = [];
  conflictBanner: ConflictBanner | null = null;
  validationError: string | null = null;

  private busy = false;

  constructor(api: ApiClient) {
    this.api = api;
  }

  get isBusy(): boolean {
    return this.busy;
  }

  private note(level: Notice["level"], text: string): void {
    this.notices.push({ level, text });
  }

  async loadProject(): Promise<void> {
    this.frames = await this.api.getFrames();
    this.instances = await this.api.getInstances();
    this.revision = this.instances.revision;
    if (this.frames.frames.length > 0) {
      await this.selectFrame(this.frames.frames[0].id);
    }
  }

  frameIds(): number[] {
    return this.frames ? this.frames.frames.map((f) => f.id) : [];
  }

  async selectFrame(frameId: number): Promise<void> {
    this.overlay = await this.api.getOverlay(frameId);
    this.currentFrameId = frameId;
    this.revision = this.overlay.revision;
  }

  /** step through the filmstrip; wraps at both ends */
  async stepFrame(direction: 1 | -1): Promise<void> {
    const ids = this.frameIds();
    if (ids.length === 0 || this.currentFrameId === null) return;
    const at = ids.indexOf(this.currentFrameId);
    await this.selectFrame(ids[(at + direction + ids.length) % ids.length]);
  }

  selectInstance(instanceId: number | null): void {
    this.selectedInstanceId = instanceId;
  }

  /** re-sync frames/instances/overlay after the server moved under us */
  private async refresh(): Promise<void> {
    this.instances = await this.api.getInstances();
    this.revision = this.instances.revision;
    if (this.currentFrameId !== null) {
      this.overlay = await this.api.getOverlay(this.currentFrameId);
      this.revision = this.overlay.revision;
    }
  }

  /**
   * Apply a gizmo delta to the selected box. Size input is validated
   * before any request goes out; a stale revision pops the conflict
   * banner, re-syncs, and drops the edit with a visible notice.
   */
  async editBox(delta: GizmoDelta): Promise<boolean> {
    this.validationError = null;
    if (this.busy) {
      this.note("error", "another change is still in flight");
      return false;
    }
    if (this.selectedInstanceId === null || !this.instances) {
      this.note("error", "select an instance first");
      return false;
    }
    const inst = this.instances.instances.find((b) => b.id === this.selectedInstanceId);
    if (!inst) {
      this.note("error", `instance ${this.selectedInstanceId} is gone`);
      return false;
    }

    const body: { base_revision: number; world_T_obj?: number[]; size?: [number, number, number] } = {
      base_revision: this.revision,
    };
    if (delta.kind === "size") {
      if (delta.size.some((s) => !Number.isFinite(s) || s <= 0)) {
        this.validationError = "size components must be positive numbers";
        return false;
      }
      body.size = delta.size;
    } else if (delta.kind === "translate") {
      body.world_T_obj = translateFlat(inst.world_T_obj, delta.delta);
    } else {
      body.world_T_obj = rotateFlat(inst.world_T_obj, delta.axis, delta.angleRad);
    }

    this.busy = true;
    try {
      const result = await this.api.patchInstance(inst.id, body);
      this.revision = result.revision;
      await this.refresh();
      return true;
    } catch (e) {
      if (e instanceof ApiError && e.isConflict) {
        this.conflictBanner = {
          detail: e.detail,
          serverRevision: e.revision ?? this.revision,
        };
        await this.refresh();
        this.note("info", `edit discarded: project changed elsewhere (now at revision ${this.revision})`);
      } else if (e instanceof ApiError) {
        this.note("error", `${e.error}: ${e.detail}`);
      } else {
        this.note("error", String(e));
      }
      return false;
    } finally {
      this.busy = false;
    }
  }

  dismissConflict(): void {
    this.conflictBanner = null;
  }

  /** Record one drawn outline; self-intersecting input never enters the set. */
  drawMask(frameId: number, polygon: Point[]): boolean {
    if (!this.frameIds().includes(frameId)) {
      this.note("error", `frame ${frameId} does not exist`);
      return false;
    }
    if (!isSimplePolygon(polygon)) {
      this.note("error", "outline rejected: edges cross (or fewer than 3 points)");
      return false;
    }
    this.pendingMasks.set(frameId, polygon);
    return true;
  }

  clearMask(frameId: number): void {
    this.pendingMasks.delete(frameId);
  }

  /** drives the propose button's disabled state and tooltip */
  canPropose(): ProposeGate {
    if (this.pendingMasks.size < 2) {
      return { ok: false, reason: "draw outlines on at least two different frames" };
    }
    return { ok: true };
  }

  async proposeFromMasks(opts: {
    volume?: number[];
    resolution?: number;
    classId?: number;
    className?: string;
  } = {}): Promise<boolean> {
    const gate = this.canPropose();
    if (!gate.ok) {
      this.note("error", gate.reason);
      return false;
    }
    const masks: MaskEntry[] = [...this.pendingMasks.entries()].map(([frame_id, polygon]) => ({
      frame_id,
      polygon,
    }));
    this.busy = true;
    try {
      this.proposal = await this.api.proposeHull({
        masks,
        volume: opts.volume,
        resolution: opts.resolution,
        class_id: opts.classId,
        class_name: opts.className,
      });
      return true;
    } catch (e) {
      if (e instanceof ApiError) {
        // EmptyHull etc. come back as 4xx {error, detail}
        this.note("error", `${e.error}: ${e.detail}`);
      } else {
        this.note("error", String(e));
      }
      return false;
    } finally {
      this.busy = false;
    }
  }

  discardProposal(): void {
    this.proposal = null;
  }

  async commitProposal(): Promise<boolean> {
    if (!this.proposal) {
      this.note("error", "no proposal to commit");
      return false;
    }
    if (this.busy) {
      this.note("error", "another change is still in flight");
      return false;
    }
    this.busy = true;
    try {
      const result = await this.api.commitProposal(this.proposal.proposal_id, this.revision);
      this.revision = result.revision;
      this.proposal = null;
      this.pendingMasks.clear();
      await this.refresh();
      this.note("info", `committed instance ${result.instance.id}`);
      return true;
    } catch (e) {
      if (e instanceof ApiError && e.isConflict) {
        this.conflictBanner = {
          detail: e.detail,
          serverRevision: e.revision ?? this.revision,
        };
        await this.refresh();
        this.note("info", "commit not applied: project changed elsewhere, retry if still wanted");
      } else if (e instanceof ApiError) {
        this.note("error", `${e.error}: ${e.detail}`);
      } else {
        this.note("error", String(e));
      }
      return false;
    } finally {
      this.busy = false;
    }
  }

  async showCoverage(instanceId: number, bins = "36x18", visibleOnly = false): Promise<boolean> {
    try {
      this.coverage = await this.api.getCoverage(instanceId, bins, visibleOnly);
      return true;
    } catch (e) {
      if (e instanceof ApiError) {
        this.note("error", `${e.error}: ${e.detail}`);
      } else {
        this.note("error", String(e));
      }
      return false;
    }
  }
}

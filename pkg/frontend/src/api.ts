// Typed client for the review server. Every payload shape here mirrors
// the server's JSON exactly; nothing geometric is recomputed on this side.

export type CameraInfo = {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
};

export type FrameEntry = {
  id: number;
  image: string;
  world_T_cam: number[]; // 16 row-major
  camera?: CameraInfo;
};

export type FramesDoc = {
  camera: CameraInfo;
  frames: FrameEntry[];
  revision: number;
};

export type InstanceEntry = {
  id: number;
  class_id: number;
  world_T_obj: number[]; // 16 row-major
  size: [number, number, number];
};

export type InstancesDoc = {
  classes: { [classId: string]: string };
  instances: InstanceEntry[];
  revision: number;
};

export type OverlayBox = {
  cx: number;
  cy: number;
  w: number;
  h: number;
};

export type OverlayEntry = {
  instance_id: number;
  class_id: number;
  polygon: [number, number][];
  bbox: OverlayBox;
};

export type OverlayDoc = {
  revision: number;
  frame_id: number;
  camera: CameraInfo;
  instances: OverlayEntry[];
};

export type MaskEntry = {
  frame_id: number;
  polygon: [number, number][];
};

export type HullProposal = {
  revision: number;
  proposal_id: number;
  box: { class_id: number; world_T_obj: number[]; size: [number, number, number] };
  class_name: string;
  voxel_count: number;
  overlays: { [frameId: string]: [number, number][] };
};

export type CommitResult = {
  revision: number;
  instance: InstanceEntry;
};

export type CoverageGap = {
  theta_bin: number;
  phi_bin: number;
  count: number;
};

export type CoverageDoc = {
  theta_bins: number;
  phi_bins: number;
  total: number;
  counts: number[][]; // one row per elevation bin
  revision: number;
  instance_id: number;
  gaps: CoverageGap[];
};

export type PatchBody = {
  base_revision: number;
  world_T_obj?: number[];
  size?: [number, number, number];
  class_id?: number;
};

export type HullRequest = {
  masks: MaskEntry[];
  volume?: number[]; // x0,y0,z0,x1,y1,z1
  resolution?: number;
  class_id?: number;
  class_name?: string;
};

/** Error bodies look like {error, detail} plus revision on conflicts. */
export class ApiError extends Error {
  status: number;
  error: string;
  detail: string;
  revision?: number;

  constructor(status: number, body: { error?: string; detail?: string; revision?: number }) {
    super(`${body.error ?? "HTTP " + status}: ${body.detail ?? ""}`);
    this.status = status;
    this.error = body.error ?? "unknown";
    this.detail = body.detail ?? "";
    this.revision = body.revision;
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private base: string;
  private fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    // bind so a bare window.fetch keeps its receiver
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchImpl(this.base + path, init);
    const doc = await resp.json();
    if (!resp.ok) throw new ApiError(resp.status, doc);
    return doc as T;
  }

  getFrames(): Promise<FramesDoc> {
    return this.request("GET", "/api/frames");
  }

  getInstances(): Promise<InstancesDoc> {
    return this.request("GET", "/api/instances");
  }

  getOverlay(frameId: number): Promise<OverlayDoc> {
    return this.request("GET", `/api/frames/${frameId}/overlay`);
  }

  imageUrl(frameId: number): string {
    return `${this.base}/api/frames/${frameId}/image`;
  }

  patchInstance(instanceId: number, body: PatchBody): Promise<CommitResult> {
    return this.request("PATCH", `/api/instances/${instanceId}`, body);
  }

  proposeHull(body: HullRequest): Promise<HullProposal> {
    return this.request("POST", "/api/hull", body);
  }

  commitProposal(proposalId: number, baseRevision: number): Promise<CommitResult> {
    return this.request("POST", "/api/instances/commit", {
      base_revision: baseRevision,
      proposal_id: proposalId,
    });
  }

  getCoverage(instanceId: number, bins: string, visibleOnly = false, minCount = 1): Promise<CoverageDoc> {
    const q = `bins=${encodeURIComponent(bins)}&visible_only=${visibleOnly}&min_count=${minCount}`;
    return this.request("GET", `/api/coverage/${instanceId}?${q}`);
  }
}

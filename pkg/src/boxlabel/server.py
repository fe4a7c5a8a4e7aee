"""Local HTTP API for interactive box refinement.

Holds one mutable project (frames + instances) behind optimistic revision
checks: every mutation carries the revision the client based its edit on and
bumps the revision by one on success. Readers always see a consistent
snapshot, and every response reports the revision it was computed from.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from .coverage import coverage_gaps, coverage_histogram, histogram_to_dict, parse_bins
from .errors import (
    BoxlabelError,
    EmptyHull,
    InvalidPose,
    InvalidSize,
    NotFound,
    ParseError,
    RevisionConflict,
    TooFewViews,
    UnknownFormat,
)
from .geometry import RigidTransform
from .hull import DEFAULT_RESOLUTION, carve, hull_to_instance, masks_from_dict
from .labeler import DEFAULT_CONFIG, generate_dataset, label_frame, reproject_box
from .scene import (
    FrameSet,
    InstanceSet,
    VirtualBox,
    camera_to_dict,
    frames_to_dict,
    instance_to_dict,
    instances_from_dict,
    instances_to_dict,
)

DEFAULT_PORT = 8787

_STATUS = {
    NotFound: 404,
    RevisionConflict: 409,
    InvalidSize: 422,
    InvalidPose: 422,
    ParseError: 422,
    TooFewViews: 422,
    EmptyHull: 422,
    UnknownFormat: 422,
}


@dataclass(frozen=True)
class ProjectState:
    """One immutable snapshot; mutations swap in a new one at revision+1."""

    frames: FrameSet
    instances: InstanceSet
    revision: int = 0


def _overlay_entries(state: ProjectState, frame):
    """Per-instance projected outline + 2D box, matching label_frame exactly."""
    labeled = label_frame(frame, state.instances, DEFAULT_CONFIG)
    entries = []
    for ann in labeled.annotations:
        box = state.instances.get(ann.instance_id)
        pts = reproject_box(frame, box, DEFAULT_CONFIG)
        entries.append(
            {
                "instance_id": ann.instance_id,
                "class_id": ann.class_id,
                "polygon": [[float(p.u), float(p.v)] for p in pts],
                "bbox": {"cx": ann.cx, "cy": ann.cy, "w": ann.w, "h": ann.h},
            }
        )
    return entries


def create_app(frames: FrameSet, instances: InstanceSet) -> FastAPI:
    app = FastAPI(title="boxlabel annotation server")
    app.state.project = ProjectState(frames=frames, instances=instances, revision=0)
    app.state.write_lock = threading.Lock()
    app.state.proposals = {}
    app.state.next_proposal_id = 1

    @app.exception_handler(BoxlabelError)
    async def _boxlabel_error(request: Request, exc: BoxlabelError):
        status = _STATUS.get(type(exc), 422)
        body = {"error": type(exc).__name__, "detail": str(exc)}
        if isinstance(exc, RevisionConflict):
            body["revision"] = app.state.project.revision
        return JSONResponse(status_code=status, content=body)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422, content={"error": "ValueError", "detail": str(exc)}
        )

    def snapshot() -> ProjectState:
        return app.state.project

    def mutate(base_revision: int, change):
        """Apply change(state) -> new InstanceSet under the writer lock."""
        with app.state.write_lock:
            state = app.state.project
            if base_revision != state.revision:
                raise RevisionConflict(
                    f"edit based on revision {base_revision}, "
                    f"server is at {state.revision}"
                )
            new_instances = change(state)
            new_state = replace(
                state, instances=new_instances, revision=state.revision + 1
            )
            app.state.project = new_state
            return new_state

    def require_base_revision(payload: dict) -> int:
        if "base_revision" not in payload:
            raise ParseError("body must carry base_revision")
        base = payload["base_revision"]
        if not isinstance(base, int) or isinstance(base, bool):
            raise ParseError(f"base_revision must be an integer, got {base!r}")
        return base

    @app.get("/api/frames")
    def get_frames():
        state = snapshot()
        doc = frames_to_dict(state.frames)
        doc["revision"] = state.revision
        return doc

    @app.get("/api/frames/{frame_id}/image")
    def get_frame_image(frame_id: int):
        state = snapshot()
        path = state.frames.image_file(state.frames.get(frame_id).id)
        if not path.is_file():
            raise NotFound(f"image for frame {frame_id} not found at {path}")
        return FileResponse(path)

    @app.get("/api/frames/{frame_id}/overlay")
    def get_frame_overlay(frame_id: int):
        state = snapshot()
        frame = state.frames.get(frame_id)
        return {
            "revision": state.revision,
            "frame_id": frame.id,
            "camera": camera_to_dict(frame.camera),
            "instances": _overlay_entries(state, frame),
        }

    @app.get("/api/instances")
    def get_instances():
        state = snapshot()
        doc = instances_to_dict(state.instances)
        doc["revision"] = state.revision
        return doc

    @app.put("/api/instances")
    def put_instances(payload: dict = Body(...)):
        base = require_base_revision(payload)
        doc = {k: v for k, v in payload.items() if k != "base_revision"}
        new_set = instances_from_dict(doc)
        state = mutate(base, lambda s: new_set)
        return {"revision": state.revision}

    @app.patch("/api/instances/{instance_id}")
    def patch_instance(instance_id: int, payload: dict = Body(...)):
        base = require_base_revision(payload)

        def change(state: ProjectState) -> InstanceSet:
            old = state.instances.get(instance_id)
            pose = old.world_T_obj
            if "world_T_obj" in payload:
                flat = payload["world_T_obj"]
                if not isinstance(flat, list) or len(flat) != 16:
                    raise ParseError("world_T_obj must be a 16-number list")
                pose = RigidTransform.from_flat(flat)
            size = payload.get("size", [float(s) for s in old.size])
            class_id = payload.get("class_id", old.class_id)
            if not isinstance(class_id, int) or isinstance(class_id, bool):
                raise ParseError(f"class_id must be an integer, got {class_id!r}")
            table = dict(state.instances.class_table)
            new_box = VirtualBox(
                id=old.id,
                world_T_obj=pose,
                size=np.asarray(size, dtype=np.float64),
                class_id=class_id,
                class_name=table.get(class_id, ""),
            )
            # build a fresh set so readers holding the old snapshot are
            # unaffected; the constructor re-checks ids and class references
            new_list = [new_box if b.id == instance_id else b for b in state.instances]
            return InstanceSet(class_table=table, instances=new_list)

        state = mutate(base, change)
        return {
            "revision": state.revision,
            "instance": instance_to_dict(state.instances.get(instance_id)),
        }

    @app.post("/api/hull")
    def post_hull(payload: dict = Body(...)):
        state = snapshot()
        masks = masks_from_dict({"masks": payload.get("masks", [])})
        if "volume" in payload:
            vol = payload["volume"]
            if not isinstance(vol, list) or len(vol) != 6:
                raise ParseError("volume must be [x0, y0, z0, x1, y1, z1]")
            volume = (vol[:3], vol[3:])
        else:
            # fall back to the bounding box of the camera positions; cameras
            # orbiting an object enclose it in practice
            centers = np.array(
                [f.world_T_cam.translation for f in state.frames.frames]
            )
            if centers.size == 0:
                raise ParseError("no frames to derive a carve volume from")
            volume = (centers.min(axis=0), centers.max(axis=0))
        resolution = payload.get("resolution", DEFAULT_RESOLUTION)
        hull = carve(
            masks,
            state.frames,
            volume=volume,
            resolution=float(resolution),
            near_plane=DEFAULT_CONFIG.near_plane,
        )
        proposal = hull_to_instance(
            hull,
            class_id=payload.get("class_id", 0),
            instance_id=0,
            class_name=payload.get("class_name", ""),
        )
        pid = app.state.next_proposal_id
        app.state.next_proposal_id += 1
        app.state.proposals[pid] = proposal
        overlays = {}
        for mask in masks:
            frame = state.frames.get(mask.frame_id)
            pts = reproject_box(frame, proposal, DEFAULT_CONFIG)
            overlays[str(mask.frame_id)] = [[float(p.u), float(p.v)] for p in pts]
        doc = instance_to_dict(proposal)
        doc.pop("id")
        return {
            "revision": state.revision,
            "proposal_id": pid,
            "box": doc,
            "class_name": proposal.class_name,
            "voxel_count": int(hull.voxel_count()),
            "overlays": overlays,
        }

    @app.post("/api/instances/commit")
    def commit_proposal(payload: dict = Body(...)):
        base = require_base_revision(payload)
        pid = payload.get("proposal_id")
        if pid not in app.state.proposals:
            raise NotFound(f"no pending proposal {pid!r}")
        proposal = app.state.proposals[pid]

        def change(state: ProjectState) -> InstanceSet:
            table = dict(state.instances.class_table)
            if proposal.class_id not in table:
                table[proposal.class_id] = proposal.class_name
            box = replace(
                proposal,
                id=state.instances.next_id(),
                class_name=table[proposal.class_id],
            )
            return InstanceSet(
                class_table=table, instances=list(state.instances) + [box]
            )

        state = mutate(base, change)
        del app.state.proposals[pid]
        new_box = state.instances.instances[-1]
        return {
            "revision": state.revision,
            "instance": instance_to_dict(new_box),
        }

    @app.get("/api/coverage/{instance_id}")
    def get_coverage(
        instance_id: int,
        bins: str = "36x18",
        visible_only: bool = False,
        min_count: int = 1,
    ):
        state = snapshot()
        box = state.instances.get(instance_id)
        theta_bins, phi_bins = parse_bins(bins)
        hist = coverage_histogram(
            state.frames,
            box,
            theta_bins=theta_bins,
            phi_bins=phi_bins,
            visible_only=visible_only,
        )
        doc = histogram_to_dict(hist)
        doc["revision"] = state.revision
        doc["instance_id"] = instance_id
        doc["gaps"] = [
            {"theta_bin": t, "phi_bin": p, "count": c}
            for t, p, c in coverage_gaps(hist, min_count)
        ]
        return doc

    @app.post("/api/export")
    def post_export(payload: dict = Body(...)):
        state = snapshot()
        if "out_dir" not in payload:
            raise ParseError("body must carry out_dir")
        split_seed = payload.get("split_seed")
        if split_seed is not None and (
            not isinstance(split_seed, int) or isinstance(split_seed, bool)
        ):
            raise ParseError("split_seed must be an integer")
        stats = generate_dataset(
            state.frames,
            state.instances,
            DEFAULT_CONFIG,
            payload["out_dir"],
            format=payload.get("format", "yolo"),
            split_seed=split_seed,
            train_fraction=payload.get("train_fraction", 0.8),
            jobs=int(payload.get("jobs", 1)),
        )
        return {
            "revision": state.revision,
            "frames_written": stats.frames_written,
            "annotations_written": stats.annotations_written,
            "per_class": {str(k): v for k, v in stats.per_class.items()},
            "elapsed_seconds": stats.elapsed_seconds,
        }

    return app


def run_server(frames, instances, host: str = "127.0.0.1", port: int = DEFAULT_PORT):
    import uvicorn

    uvicorn.run(create_app(frames, instances), host=host, port=port)

import math

import numpy as np
import pytest

pytest.importorskip("fastapi")
from fastapi.testclient import TestClient
from PIL import Image
from shapely.geometry import MultiPoint

from boxlabel.geometry import CameraModel, RigidTransform, rot_x
from boxlabel.hull import carve, hull_to_instance
from boxlabel.labeler import DEFAULT_CONFIG, label_frame, reproject_box
from boxlabel.scene import (
    Frame,
    FrameSet,
    InstanceSet,
    VirtualBox,
    box_vertices,
    instances_to_dict,
)
from boxlabel.server import ProjectState, create_app

CAM = CameraModel(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)
TELE = CameraModel(fx=2400.0, fy=2400.0, cx=320.0, cy=240.0, width=640, height=480)


def look_at(eye, target):
    eye = np.asarray(eye, float)
    fwd = np.asarray(target, float) - eye
    fwd = fwd / np.linalg.norm(fwd)
    up = np.array([0.0, 0.0, -1.0])
    if abs(np.dot(up, fwd)) > 0.99:
        up = np.array([0.0, -1.0, 0.0])
    right = np.cross(up, fwd)
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    return RigidTransform(rotation=np.column_stack([right, down, fwd]), translation=eye)


def unit_cube(inst_id=0):
    # axis-aligned solid [-0.5, 0.5]^3
    return VirtualBox(
        id=inst_id,
        world_T_obj=RigidTransform(
            rotation=np.eye(3), translation=np.array([-0.5, -0.5, 0.5])
        ),
        size=np.array([1.0, 1.0, 1.0]),
        class_id=0,
        class_name="cube",
    )


def make_project(tmp_path, with_images=False):
    down = RigidTransform(rotation=rot_x(math.pi), translation=np.array([0.0, 0.0, 5.0]))
    away = RigidTransform(rotation=np.eye(3), translation=np.array([0.0, 0.0, 5.0]))
    side = look_at([4.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    frames = [
        Frame(id=0, image_path="img/000000.png", world_T_cam=down, camera=CAM),
        Frame(id=1, image_path="img/000001.png", world_T_cam=away, camera=CAM),
        Frame(id=2, image_path="img/000002.png", world_T_cam=side, camera=CAM),
    ]
    fs = FrameSet(camera=CAM, frames=frames, base_dir=tmp_path)
    if with_images:
        (tmp_path / "img").mkdir()
        for f in frames[:2]:  # frame 2's file left missing on purpose
            Image.new("RGB", (8, 6), (90, 120, 30)).save(tmp_path / f.image_path)
    iset = InstanceSet(class_table={0: "cube"}, instances=[unit_cube()])
    return fs, iset


def client_for(tmp_path, **kw):
    fs, iset = make_project(tmp_path, **kw)
    app = create_app(fs, iset)
    return TestClient(app), fs, iset


# reads


def test_get_frames(tmp_path):
    client, fs, _ = client_for(tmp_path)
    r = client.get("/api/frames")
    assert r.status_code == 200
    doc = r.json()
    assert doc["revision"] == 0
    assert [f["id"] for f in doc["frames"]] == [0, 1, 2]
    assert doc["camera"]["fx"] == 600.0
    assert len(doc["frames"][0]["world_T_cam"]) == 16


def test_get_instances(tmp_path):
    client, _, iset = client_for(tmp_path)
    r = client.get("/api/instances")
    assert r.status_code == 200
    doc = r.json()
    assert doc["revision"] == 0
    assert doc["classes"] == {"0": "cube"}
    assert len(doc["instances"]) == 1
    assert doc["instances"][0]["size"] == [1.0, 1.0, 1.0]


def test_get_image(tmp_path):
    client, _, _ = client_for(tmp_path, with_images=True)
    r = client.get("/api/frames/0/image")
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    assert r.content[:8] == b"\x89PNG\r\n\x1a\n"


def test_get_image_missing_file(tmp_path):
    client, _, _ = client_for(tmp_path, with_images=True)
    assert client.get("/api/frames/2/image").status_code == 404


def test_get_image_unknown_frame(tmp_path):
    client, _, _ = client_for(tmp_path)
    r = client.get("/api/frames/99/image")
    assert r.status_code == 404
    assert r.json()["error"] == "NotFound"


def test_overlay_matches_labeler(tmp_path):
    client, fs, iset = client_for(tmp_path)
    r = client.get("/api/frames/0/overlay")
    assert r.status_code == 200
    doc = r.json()
    assert doc["revision"] == 0
    assert doc["frame_id"] == 0

    labeled = label_frame(fs.get(0), iset, DEFAULT_CONFIG)
    assert len(doc["instances"]) == len(labeled.annotations) == 1
    got = doc["instances"][0]
    ann = labeled.annotations[0]
    assert got["instance_id"] == ann.instance_id
    assert got["class_id"] == ann.class_id
    assert got["bbox"] == {"cx": ann.cx, "cy": ann.cy, "w": ann.w, "h": ann.h}
    pts = reproject_box(fs.get(0), iset.get(0), DEFAULT_CONFIG)
    assert got["polygon"] == [[p.u, p.v] for p in pts]


def test_overlay_empty_when_object_behind(tmp_path):
    client, _, _ = client_for(tmp_path)
    doc = client.get("/api/frames/1/overlay").json()
    assert doc["instances"] == []


def test_overlay_unknown_frame(tmp_path):
    client, _, _ = client_for(tmp_path)
    assert client.get("/api/frames/7/overlay").status_code == 404


# mutations


def test_patch_translates_and_bumps_revision(tmp_path):
    client, fs, iset = client_for(tmp_path)
    moved = RigidTransform(
        rotation=np.eye(3), translation=np.array([-0.4, -0.5, 0.5])
    )  # +0.1 along x
    r = client.patch(
        "/api/instances/0",
        json={"base_revision": 0, "world_T_obj": moved.as_flat()},
    )
    assert r.status_code == 200
    assert r.json()["revision"] == 1

    # read-your-writes: the overlay now reflects the edit, in every frame
    edited = InstanceSet(
        class_table={0: "cube"},
        instances=[
            VirtualBox(
                id=0, world_T_obj=moved, size=np.array([1.0, 1.0, 1.0]),
                class_id=0, class_name="cube",
            )
        ],
    )
    for fid in (0, 2):
        doc = client.get(f"/api/frames/{fid}/overlay").json()
        assert doc["revision"] == 1
        expect = label_frame(fs.get(fid), edited, DEFAULT_CONFIG).annotations[0]
        got = doc["instances"][0]["bbox"]
        assert got == {"cx": expect.cx, "cy": expect.cy, "w": expect.w, "h": expect.h}


def test_patch_stale_revision(tmp_path):
    client, _, _ = client_for(tmp_path)
    ok = client.patch("/api/instances/0", json={"base_revision": 0, "size": [2.0, 1.0, 1.0]})
    assert ok.status_code == 200
    stale = client.patch("/api/instances/0", json={"base_revision": 0, "size": [3.0, 1.0, 1.0]})
    assert stale.status_code == 409
    body = stale.json()
    assert body["error"] == "RevisionConflict"
    assert body["revision"] == 1
    # the losing edit changed nothing
    assert client.get("/api/instances").json()["instances"][0]["size"] == [2.0, 1.0, 1.0]


def test_patch_unknown_instance(tmp_path):
    client, _, _ = client_for(tmp_path)
    r = client.patch("/api/instances/9", json={"base_revision": 0, "size": [1, 1, 1]})
    assert r.status_code == 404


def test_patch_invalid_size_rejected(tmp_path):
    client, _, _ = client_for(tmp_path)
    r = client.patch("/api/instances/0", json={"base_revision": 0, "size": [0.0, 1.0, 1.0]})
    assert r.status_code == 422
    assert client.get("/api/instances").json()["revision"] == 0


def test_patch_invalid_pose_rejected(tmp_path):
    client, _, _ = client_for(tmp_path)
    flat = [2.0, 0, 0, 0, 0, 1.0, 0, 0, 0, 0, 1.0, 0, 0, 0, 0, 1.0]  # scaled axis
    r = client.patch("/api/instances/0", json={"base_revision": 0, "world_T_obj": flat})
    assert r.status_code == 422
    assert client.get("/api/instances").json()["revision"] == 0


def test_patch_requires_base_revision(tmp_path):
    client, _, _ = client_for(tmp_path)
    r = client.patch("/api/instances/0", json={"size": [2, 2, 2]})
    assert r.status_code == 422


def test_put_replaces_whole_set(tmp_path):
    client, _, _ = client_for(tmp_path)
    body = {
        "base_revision": 0,
        "classes": {"0": "cube", "1": "crate"},
        "instances": [
            {
                "id": 5,
                "class_id": 1,
                "world_T_obj": RigidTransform.identity().as_flat(),
                "size": [0.2, 0.3, 0.4],
            }
        ],
    }
    r = client.put("/api/instances", json=body)
    assert r.status_code == 200
    assert r.json()["revision"] == 1
    doc = client.get("/api/instances").json()
    assert doc["classes"] == {"0": "cube", "1": "crate"}
    assert [i["id"] for i in doc["instances"]] == [5]


def test_put_stale_revision(tmp_path):
    client, _, _ = client_for(tmp_path)
    body = {"base_revision": 3, "classes": {}, "instances": []}
    assert client.put("/api/instances", json=body).status_code == 409


# hull proposals


def cube_masks_payload(frames):
    corners = box_vertices(unit_cube())
    masks = []
    for f in frames:
        cam_T_world = f.world_T_cam.invert()
        pts = cam_T_world.transform_points(corners)
        uv = [f.camera.project((x, y, z)) for x, y, z in pts]
        hull = MultiPoint(uv).convex_hull
        masks.append(
            {"frame_id": f.id, "polygon": [[u, v] for u, v in hull.exterior.coords[:-1]]}
        )
    return masks


def hull_project(tmp_path):
    f0 = Frame(id=0, image_path="a.png", world_T_cam=look_at([0, 0, 40], [0, 0, 0]), camera=TELE)
    f1 = Frame(id=1, image_path="b.png", world_T_cam=look_at([40, 0, 0], [0, 0, 0]), camera=TELE)
    fs = FrameSet(camera=TELE, frames=[f0, f1], base_dir=tmp_path)
    iset = InstanceSet(class_table={0: "cube"}, instances=[])
    return TestClient(create_app(fs, iset)), fs


def test_hull_proposal_and_commit(tmp_path):
    client, fs = hull_project(tmp_path)
    payload = {
        "masks": cube_masks_payload(fs.frames),
        "volume": [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0],
        "resolution": 0.05,
        "class_id": 0,
        "class_name": "cube",
    }
    r = client.post("/api/hull", json=payload)
    assert r.status_code == 200
    doc = r.json()
    assert doc["revision"] == 0
    size = doc["box"]["size"]
    for s in size:
        assert abs(s - 1.0) <= 2 * 0.05
    assert set(doc["overlays"]) == {"0", "1"}
    assert len(doc["overlays"]["0"]) >= 4
    assert doc["voxel_count"] > 0
    # proposal is not committed yet
    assert client.get("/api/instances").json()["instances"] == []

    c = client.post(
        "/api/instances/commit",
        json={"base_revision": 0, "proposal_id": doc["proposal_id"]},
    )
    assert c.status_code == 200
    cd = c.json()
    assert cd["revision"] == 1
    assert cd["instance"]["id"] == 0
    assert cd["instance"]["size"] == size
    listed = client.get("/api/instances").json()
    assert len(listed["instances"]) == 1

    # a proposal can only be committed once
    again = client.post(
        "/api/instances/commit",
        json={"base_revision": 1, "proposal_id": doc["proposal_id"]},
    )
    assert again.status_code == 404


def test_hull_proposal_matches_direct_carve(tmp_path):
    client, fs = hull_project(tmp_path)
    payload = {
        "masks": cube_masks_payload(fs.frames),
        "volume": [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0],
        "resolution": 0.05,
    }
    doc = client.post("/api/hull", json=payload).json()
    from boxlabel.hull import masks_from_dict

    hull = carve(
        masks_from_dict({"masks": payload["masks"]}),
        fs,
        volume=([-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]),
        resolution=0.05,
        near_plane=DEFAULT_CONFIG.near_plane,
    )
    box = hull_to_instance(hull, class_id=0)
    assert doc["box"]["size"] == [float(s) for s in box.size]
    assert doc["box"]["world_T_obj"] == box.world_T_obj.as_flat()
    assert doc["voxel_count"] == hull.voxel_count()


def test_hull_too_few_views(tmp_path):
    client, fs = hull_project(tmp_path)
    payload = {
        "masks": cube_masks_payload(fs.frames[:1]),
        "volume": [-1, -1, -1, 1, 1, 1],
        "resolution": 0.1,
    }
    r = client.post("/api/hull", json=payload)
    assert r.status_code == 422
    assert r.json()["error"] == "TooFewViews"


def test_hull_inconsistent_masks(tmp_path):
    client, fs = hull_project(tmp_path)
    masks = [
        {"frame_id": 0, "polygon": [[2, 2], [12, 2], [12, 12], [2, 12]]},
        {"frame_id": 1, "polygon": [[600, 400], [630, 400], [630, 430], [600, 430]]},
    ]
    r = client.post(
        "/api/hull",
        json={"masks": masks, "volume": [-1, -1, -1, 1, 1, 1], "resolution": 0.1},
    )
    assert r.status_code == 422
    assert r.json()["error"] == "EmptyHull"


def test_commit_requires_known_proposal(tmp_path):
    client, _ = hull_project(tmp_path)
    r = client.post("/api/instances/commit", json={"base_revision": 0, "proposal_id": 42})
    assert r.status_code == 404


def test_commit_stale_revision_keeps_proposal(tmp_path):
    client, fs = hull_project(tmp_path)
    payload = {
        "masks": cube_masks_payload(fs.frames),
        "volume": [-1, -1, -1, 1, 1, 1],
        "resolution": 0.1,
    }
    pid = client.post("/api/hull", json=payload).json()["proposal_id"]
    r = client.post("/api/instances/commit", json={"base_revision": 9, "proposal_id": pid})
    assert r.status_code == 409
    # still committable with the right revision
    ok = client.post("/api/instances/commit", json={"base_revision": 0, "proposal_id": pid})
    assert ok.status_code == 200


# coverage


def test_coverage_endpoint(tmp_path):
    client, fs, iset = client_for(tmp_path)
    from boxlabel.coverage import coverage_histogram, histogram_to_dict

    r = client.get("/api/coverage/0", params={"bins": "8x4"})
    assert r.status_code == 200
    doc = r.json()
    expect = histogram_to_dict(coverage_histogram(fs, iset.get(0), 8, 4))
    assert doc["theta_bins"] == 8
    assert doc["phi_bins"] == 4
    assert doc["counts"] == expect["counts"]
    assert doc["total"] == 3
    assert doc["revision"] == 0
    assert any(g["count"] == 0 for g in doc["gaps"])


def test_coverage_visible_only(tmp_path):
    client, _, _ = client_for(tmp_path)
    doc = client.get("/api/coverage/0", params={"visible_only": "true"}).json()
    assert doc["total"] == 2  # the facing-away frame drops out


def test_coverage_bad_bins(tmp_path):
    client, _, _ = client_for(tmp_path)
    assert client.get("/api/coverage/0", params={"bins": "abc"}).status_code == 422
    assert client.get("/api/coverage/0", params={"bins": "0x5"}).status_code == 422


def test_coverage_unknown_instance(tmp_path):
    client, _, _ = client_for(tmp_path)
    assert client.get("/api/coverage/3").status_code == 404


# export


def test_export_writes_dataset(tmp_path):
    client, _, _ = client_for(tmp_path)
    out = tmp_path / "ds"
    r = client.post(
        "/api/export",
        json={"out_dir": str(out), "format": "yolo", "split_seed": 7},
    )
    assert r.status_code == 200
    doc = r.json()
    assert doc["frames_written"] == 3
    assert doc["annotations_written"] == 2
    assert (out / "classes.txt").read_text() == "cube\n"
    assert (out / "split.json").is_file()
    assert (out / "labels" / "000000.txt").is_file()


def test_export_unknown_format(tmp_path):
    client, _, _ = client_for(tmp_path)
    r = client.post("/api/export", json={"out_dir": str(tmp_path / "x"), "format": "coco"})
    assert r.status_code == 422
    assert r.json()["error"] == "UnknownFormat"


def test_export_requires_out_dir(tmp_path):
    client, _, _ = client_for(tmp_path)
    assert client.post("/api/export", json={"format": "yolo"}).status_code == 422

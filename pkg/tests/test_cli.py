import json
import math

import numpy as np
import pytest
from shapely.geometry import MultiPoint

from boxlabel.cli import build_parser, run
from boxlabel.geometry import CameraModel, RigidTransform, rot_x
from boxlabel.jsonio import load_json
from boxlabel.labeler import load_annotations
from boxlabel.metrics import save_predictions
from boxlabel.scene import (
    Frame,
    FrameSet,
    InstanceSet,
    VirtualBox,
    box_vertices,
    load_instances,
    save_frames,
    save_instances,
)

CAM = CameraModel(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)
TELE = CameraModel(fx=2400.0, fy=2400.0, cx=320.0, cy=240.0, width=640, height=480)


def look_at(eye, target, cam=CAM):
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


def cube():
    return VirtualBox(
        id=0,
        world_T_obj=RigidTransform(
            rotation=np.eye(3), translation=np.array([-0.5, -0.5, 0.5])
        ),
        size=np.array([1.0, 1.0, 1.0]),
        class_id=0,
        class_name="cube",
    )


def write_project(tmp_path, n_frames=6):
    frames = []
    for i in range(n_frames):
        a = 2 * math.pi * i / n_frames
        eye = [4 * math.cos(a), 4 * math.sin(a), 2.0]
        frames.append(
            Frame(id=i, image_path=f"img/{i:06d}.png",
                  world_T_cam=look_at(eye, [0, 0, 0]), camera=CAM)
        )
    fs = FrameSet(camera=CAM, frames=frames, base_dir=tmp_path)
    iset = InstanceSet(class_table={0: "cube"}, instances=[cube()])
    manifest = tmp_path / "manifest.json"
    instances = tmp_path / "instances.json"
    save_frames(fs, manifest)
    save_instances(iset, instances)
    return manifest, instances


def read_tree(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


# label


def test_label_yolo_end_to_end(tmp_path, capsys):
    manifest, instances = write_project(tmp_path)
    out = tmp_path / "ds"
    code = run([
        "label", "--frames", str(manifest), "--instances", str(instances),
        "--out", str(out), "--format", "yolo", "--split", "--seed", "7", "--jobs", "1",
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "frames 6" in stdout
    assert "annotations 6" in stdout
    assert (out / "classes.txt").read_text() == "cube\n"
    assert (out / "labels" / "000000.txt").is_file()
    split = load_json(out / "split.json")
    assert split["seed"] == 7
    assert sorted(split["train"] + split["val"]) == list(range(6))


def test_label_reruns_byte_identical(tmp_path, capsys):
    manifest, instances = write_project(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        args = [
            "label", "--frames", str(manifest), "--instances", str(instances),
            "--out", str(out), "--split", "--seed", "3",
        ]
        assert run(args) == 0
    assert read_tree(out1) == read_tree(out2)


def test_label_json_format(tmp_path, capsys):
    manifest, instances = write_project(tmp_path)
    out = tmp_path / "ds"
    code = run([
        "label", "--frames", str(manifest), "--instances", str(instances),
        "--out", str(out), "--format", "json",
    ])
    assert code == 0
    frames = load_annotations(out / "annotations.json")
    assert len(frames) == 6
    assert all(len(lf.annotations) == 1 for lf in frames)


def test_label_missing_manifest(tmp_path, capsys):
    code = run([
        "label", "--frames", str(tmp_path / "nope.json"),
        "--instances", str(tmp_path / "nope2.json"), "--out", str(tmp_path / "o"),
    ])
    assert code == 1
    assert "error" in capsys.readouterr().err


# carve


def write_carve_project(tmp_path):
    f0 = Frame(id=0, image_path="a.png",
               world_T_cam=look_at([0, 0, 40], [0, 0, 0]), camera=TELE)
    f1 = Frame(id=1, image_path="b.png",
               world_T_cam=look_at([40, 0, 0], [0, 0, 0]), camera=TELE)
    fs = FrameSet(camera=TELE, frames=[f0, f1], base_dir=tmp_path)
    manifest = tmp_path / "manifest.json"
    save_frames(fs, manifest)
    masks = []
    for f in fs.frames:
        pts = f.world_T_cam.invert().transform_points(box_vertices(cube()))
        uv = [f.camera.project((x, y, z)) for x, y, z in pts]
        hull = MultiPoint(uv).convex_hull
        masks.append(
            {"frame_id": f.id, "polygon": [[u, v] for u, v in hull.exterior.coords[:-1]]}
        )
    masks_path = tmp_path / "masks.json"
    masks_path.write_text(json.dumps({"masks": masks}))
    return manifest, masks_path


def test_carve_end_to_end(tmp_path, capsys):
    manifest, masks_path = write_carve_project(tmp_path)
    out = tmp_path / "hull.bin"
    box_out = tmp_path / "box.json"
    code = run([
        "carve", "--frames", str(manifest), "--masks", str(masks_path),
        "--out", str(out), "--volume=-1,-1,-1,1,1,1",
        "--resolution", "0.05", "--box-out", str(box_out),
        "--class-id", "2", "--class-name", "crate",
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert stdout.startswith("voxels ")
    assert out.is_file()
    assert out.with_suffix(".bin.json").is_file()
    iset = load_instances(box_out)
    box = iset.get(0)
    assert box.class_id == 2
    assert box.class_name == "crate"
    for s in box.size:
        assert abs(s - 1.0) <= 0.1


def test_carve_bad_volume_is_usage_error(tmp_path, capsys):
    manifest, masks_path = write_carve_project(tmp_path)
    code = run([
        "carve", "--frames", str(manifest), "--masks", str(masks_path),
        "--out", str(tmp_path / "h.bin"), "--volume", "1,2,3",
    ])
    assert code == 2


def test_carve_single_mask_runtime_error(tmp_path, capsys):
    manifest, masks_path = write_carve_project(tmp_path)
    doc = json.loads(masks_path.read_text())
    masks_path.write_text(json.dumps({"masks": doc["masks"][:1]}))
    code = run([
        "carve", "--frames", str(manifest), "--masks", str(masks_path),
        "--out", str(tmp_path / "h.bin"), "--volume=-1,-1,-1,1,1,1",
        "--resolution", "0.1",
    ])
    assert code == 1
    assert "TooFewViews" in capsys.readouterr().err


# coverage


def test_coverage_stdout_json(tmp_path, capsys):
    manifest, instances = write_project(tmp_path)
    code = run([
        "coverage", "--frames", str(manifest), "--instances", str(instances),
        "--object", "0", "--bins", "12x6",
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["theta_bins"] == 12
    assert doc["phi_bins"] == 6
    assert doc["total"] == 6
    assert sum(sum(row) for row in doc["counts"]) == 6


def test_coverage_deterministic_stdout(tmp_path, capsys):
    manifest, instances = write_project(tmp_path)
    args = [
        "coverage", "--frames", str(manifest), "--instances", str(instances),
        "--object", "0",
    ]
    assert run(args) == 0
    first = capsys.readouterr().out
    assert run(args) == 0
    assert capsys.readouterr().out == first


def test_coverage_files(tmp_path, capsys):
    manifest, instances = write_project(tmp_path)
    out = tmp_path / "cov.json"
    csv = tmp_path / "cov.csv"
    code = run([
        "coverage", "--frames", str(manifest), "--instances", str(instances),
        "--object", "0", "--bins", "6x3", "--out", str(out), "--csv", str(csv),
    ])
    assert code == 0
    assert capsys.readouterr().out == ""
    assert load_json(out)["total"] == 6
    assert len(csv.read_text().splitlines()) == 3


def test_coverage_unknown_object(tmp_path, capsys):
    manifest, instances = write_project(tmp_path)
    code = run([
        "coverage", "--frames", str(manifest), "--instances", str(instances),
        "--object", "9",
    ])
    assert code == 1
    assert "NotFound" in capsys.readouterr().err


def test_coverage_bad_bins_usage_error(tmp_path, capsys):
    manifest, instances = write_project(tmp_path)
    code = run([
        "coverage", "--frames", str(manifest), "--instances", str(instances),
        "--object", "0", "--bins", "banana",
    ])
    assert code == 2


# eval and agree


def make_annotations(tmp_path):
    manifest, instances = write_project(tmp_path)
    out = tmp_path / "ds"
    assert run([
        "label", "--frames", str(manifest), "--instances", str(instances),
        "--out", str(out), "--format", "json",
    ]) == 0
    return out / "annotations.json"


def test_eval_perfect_predictions(tmp_path, capsys):
    gt_path = make_annotations(tmp_path)
    capsys.readouterr()
    frames = load_annotations(gt_path)
    preds = {
        lf.frame_id: [
            type(a)(class_id=a.class_id, cx=a.cx, cy=a.cy, w=a.w, h=a.h,
                    instance_id=a.instance_id, confidence=1.0)
            for a in lf.annotations
        ]
        for lf in frames
    }
    preds_path = tmp_path / "preds.json"
    save_predictions(preds, preds_path)
    report_path = tmp_path / "report.json"
    code = run([
        "eval", "--preds", str(preds_path), "--gt", str(gt_path),
        "--iou-th", "0.5", "--out", str(report_path),
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "precision 1" in stdout
    assert "recall 1" in stdout
    assert "mAP 1" in stdout
    doc = load_json(report_path)
    assert doc["mean_ap"] == 1.0
    assert doc["iou_th"] == 0.5


def test_agree_identical_sets(tmp_path, capsys):
    gt_path = make_annotations(tmp_path)
    capsys.readouterr()
    report_path = tmp_path / "agree.json"
    code = run([
        "agree", "--candidate", str(gt_path), "--reference", str(gt_path),
        "--out", str(report_path),
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "precision 1" in stdout
    assert "recall 1" in stdout
    assert "avgIOU 1" in stdout
    assert load_json(report_path)["overall"]["tp"] == 6


def test_agree_mismatched_frames(tmp_path, capsys):
    gt_path = make_annotations(tmp_path)
    capsys.readouterr()
    doc = load_json(gt_path)
    del doc[sorted(doc)[0]]
    other = tmp_path / "partial.json"
    other.write_text(json.dumps(doc))
    code = run(["agree", "--candidate", str(other), "--reference", str(gt_path)])
    assert code == 1
    assert "FrameMismatch" in capsys.readouterr().err


# usage plumbing


def test_no_command_is_usage_error(capsys):
    assert run([]) == 2


def test_unknown_command_is_usage_error(capsys):
    assert run(["frobnicate"]) == 2


def test_missing_required_flag_is_usage_error(capsys):
    assert run(["label", "--out", "x"]) == 2


@pytest.mark.parametrize(
    "command", ["label", "carve", "coverage", "eval", "agree", "serve"]
)
def test_help_lists_defaults(command, capsys):
    assert run([command, "--help"]) == 0
    text = capsys.readouterr().out
    assert "default" in text


def test_serve_help_mentions_port(capsys):
    run(["serve", "--help"])
    assert "8787" in capsys.readouterr().out


def test_parser_knows_all_commands():
    parser = build_parser()
    sub = next(
        a for a in parser._actions if isinstance(a, type(parser._actions[-1]))
        and hasattr(a, "choices") and a.choices
    )
    assert set(sub.choices) == {"label", "carve", "coverage", "eval", "agree", "serve"}


def test_bad_log_level_warns(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ARS_LOG", "shouty")
    assert run([]) == 2
    assert "ARS_LOG" in capsys.readouterr().err


def test_log_level_accepts_known_values(monkeypatch, capsys):
    for level in ("error", "warn", "info", "debug"):
        monkeypatch.setenv("ARS_LOG", level)
        assert run([]) == 2
        assert "ARS_LOG" not in capsys.readouterr().err

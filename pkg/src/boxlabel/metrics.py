"""Detection metrics over 2D box annotations.

Greedy confidence-ranked matching with one-to-one ground-truth assignment,
precision/recall curves sampled at every distinct confidence, and area-based
average precision. Also compares two annotation sets of the same frames by
scoring one against the other as if it were a detector's output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

from .errors import FrameMismatch, NoGroundTruth, ParseError
from .jsonio import dump_json, load_json
from .labeler import Annotation2D, LabeledFrame

DEFAULT_IOU_THRESHOLD = 0.3


def iou(a: Annotation2D, b: Annotation2D) -> float:
    """Intersection area over union area of two boxes; 0 when disjoint."""
    a0, a1, a2, a3 = a.corners()
    b0, b1, b2, b3 = b.corners()
    iw = min(a2, b2) - max(a0, b0)
    ih = min(a3, b3) - max(a1, b1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


@dataclass(frozen=True)
class MatchResult:
    """Outcome of assigning predictions to ground truths.

    Each prediction lands in exactly one of true_positives/false_positives;
    each ground truth is matched at most once.
    """

    true_positives: list  # (prediction, ground_truth, iou) triples
    false_positives: list  # predictions
    false_negatives: list  # ground truths


def _check_iou_th(iou_th: float) -> None:
    if not 0.0 < iou_th < 1.0:
        raise ValueError(f"iou threshold must lie in (0, 1), got {iou_th}")


def match_predictions(preds, gts, iou_th: float = DEFAULT_IOU_THRESHOLD) -> MatchResult:
    """Greedy matching in descending confidence order.

    Each prediction takes the unmatched same-class ground truth of highest
    overlap, provided that overlap exceeds iou_th (strictly). Ties in
    confidence keep input order; ties in overlap take the earliest ground
    truth.
    """
    _check_iou_th(iou_th)
    for p in preds:
        if p.confidence is None:
            raise ValueError("every prediction needs a confidence to be ranked")
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    taken = [False] * len(gts)
    tps, fps = [], []
    for i in order:
        p = preds[i]
        best_j, best_iou = -1, iou_th
        for j, g in enumerate(gts):
            if taken[j] or g.class_id != p.class_id:
                continue
            v = iou(p, g)
            if v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0:
            taken[best_j] = True
            tps.append((p, gts[best_j], best_iou))
        else:
            fps.append(p)
    fns = [g for j, g in enumerate(gts) if not taken[j]]
    return MatchResult(true_positives=tps, false_positives=fps, false_negatives=fns)


@dataclass(frozen=True)
class PRCurve:
    """(confidence_threshold, precision, recall) samples, thresholds descending."""

    points: list
    n_gt: int


def _curve_from_flags(flags, n_gt: int) -> PRCurve:
    """flags: (confidence, is_tp) pairs in any order."""
    ranked = sorted(flags, key=lambda f: -f[0])
    points = []
    tp = fp = 0
    i = 0
    while i < len(ranked):
        conf = ranked[i][0]
        while i < len(ranked) and ranked[i][0] == conf:
            if ranked[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        precision = tp / (tp + fp)
        recall = tp / n_gt
        points.append((conf, precision, recall))
    return PRCurve(points=points, n_gt=n_gt)


def pr_curve(preds, gts, iou_th: float = DEFAULT_IOU_THRESHOLD) -> PRCurve:
    """Precision/recall at every distinct confidence cutoff."""
    if not gts:
        raise NoGroundTruth("cannot build a PR curve without ground truths")
    m = match_predictions(preds, gts, iou_th)
    flags = [(p.confidence, True) for p, _, _ in m.true_positives]
    flags += [(p.confidence, False) for p in m.false_positives]
    return _curve_from_flags(flags, len(gts))


def average_precision(curve: PRCurve, eleven_point: bool = False) -> float:
    """Area under the precision envelope of the curve.

    The envelope takes, at each recall level, the maximum precision achieved
    at that recall or beyond. eleven_point averages the envelope at the 11
    recall levels 0.0, 0.1, ..., 1.0 instead of integrating exactly.
    """
    recalls = [r for _, _, r in curve.points]
    precisions = [p for _, p, _ in curve.points]
    if eleven_point:
        total = 0.0
        for k in range(11):
            level = k / 10.0
            best = 0.0
            for p, r in zip(precisions, recalls):
                if r >= level and p > best:
                    best = p
            total += best
        return total / 11.0
    mrec = [0.0] + recalls + [1.0]
    mpre = [0.0] + precisions + [0.0]
    for i in range(len(mpre) - 2, -1, -1):
        if mpre[i] < mpre[i + 1]:
            mpre[i] = mpre[i + 1]
    area = 0.0
    for i in range(len(mrec) - 1):
        area += (mrec[i + 1] - mrec[i]) * mpre[i + 1]
    return area


def mean_average_precision(curves, eleven_point: bool = False) -> float:
    """Unweighted mean AP over per-class curves (dict class_id -> PRCurve)."""
    if not curves:
        raise NoGroundTruth("no classes with ground truth to average over")
    aps = [average_precision(c, eleven_point) for c in curves.values()]
    return sum(aps) / len(aps)


class AvgIou(NamedTuple):
    value: float
    empty: bool  # True when there were no true positives to average


def avg_iou(matches: MatchResult) -> AvgIou:
    """Mean overlap over true-positive pairs; (0.0, empty=True) without any."""
    if not matches.true_positives:
        return AvgIou(0.0, True)
    vals = [v for _, _, v in matches.true_positives]
    return AvgIou(sum(vals) / len(vals), False)


@dataclass(frozen=True)
class ClassStats:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    avg_iou: float
    avg_iou_empty: bool


def _stats_from_tallies(tp: int, fp: int, fn: int, iou_sum: float) -> ClassStats:
    # vacuous cases: no predictions made -> nothing claimed falsely;
    # no ground truth -> nothing missed
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return ClassStats(
        tp=tp,
        fp=fp,
        fn=fn,
        precision=precision,
        recall=recall,
        avg_iou=iou_sum / tp if tp else 0.0,
        avg_iou_empty=tp == 0,
    )


@dataclass(frozen=True)
class AgreementReport:
    """How closely a candidate annotation set reproduces a reference one."""

    iou_th: float
    overall: ClassStats
    per_class: dict


def compare_annotation_sets(
    candidate, reference, iou_th: float = DEFAULT_IOU_THRESHOLD
) -> AgreementReport:
    """Score candidate frames against reference frames of identical ids.

    Candidate boxes act as detections with confidence 1.0; reference boxes
    act as ground truth. Inputs are sequences of LabeledFrame.
    """
    _check_iou_th(iou_th)
    cand = {f.frame_id: f for f in candidate}
    ref = {f.frame_id: f for f in reference}
    if len(cand) != len(candidate) or len(ref) != len(reference):
        raise FrameMismatch("duplicate frame ids in an annotation set")
    if set(cand) != set(ref):
        only_c = sorted(set(cand) - set(ref))
        only_r = sorted(set(ref) - set(cand))
        raise FrameMismatch(
            f"frame ids differ: candidate-only {only_c[:5]}, reference-only {only_r[:5]}"
        )
    tallies = {}  # class_id -> [tp, fp, fn, iou_sum]
    for fid in sorted(ref):
        preds = [replace(a, confidence=1.0) for a in cand[fid].annotations]
        m = match_predictions(preds, list(ref[fid].annotations), iou_th)
        for p, _, v in m.true_positives:
            t = tallies.setdefault(p.class_id, [0, 0, 0, 0.0])
            t[0] += 1
            t[3] += v
        for p in m.false_positives:
            tallies.setdefault(p.class_id, [0, 0, 0, 0.0])[1] += 1
        for g in m.false_negatives:
            tallies.setdefault(g.class_id, [0, 0, 0, 0.0])[2] += 1
    per_class = {c: _stats_from_tallies(*t) for c, t in sorted(tallies.items())}
    total = [0, 0, 0, 0.0]
    for t in tallies.values():
        for k in range(4):
            total[k] += t[k]
    return AgreementReport(
        iou_th=iou_th, overall=_stats_from_tallies(*total), per_class=per_class
    )


@dataclass(frozen=True)
class ClassReport:
    n_gt: int
    ap: float
    curve: PRCurve
    stats: ClassStats


@dataclass(frozen=True)
class EvalReport:
    iou_th: float
    mean_ap: float
    per_class: dict  # class_id -> ClassReport
    overall: ClassStats


def evaluate_detections(
    preds_by_frame: dict,
    gts_by_frame: dict,
    iou_th: float = DEFAULT_IOU_THRESHOLD,
    eleven_point: bool = False,
) -> EvalReport:
    """Dataset-wide detector evaluation.

    preds_by_frame / gts_by_frame map frame id to annotation lists; every
    prediction frame id must exist among the ground-truth frames. Classes
    with zero ground truth contribute false positives to the overall tallies
    but are excluded from the mAP average.
    """
    _check_iou_th(iou_th)
    stray = set(preds_by_frame) - set(gts_by_frame)
    if stray:
        raise FrameMismatch(f"predictions for unknown frames: {sorted(stray)[:5]}")
    n_gt = {}
    flags = {}  # class_id -> list of (confidence, is_tp)
    iou_sums = {}
    total = [0, 0, 0, 0.0]
    for fid in sorted(gts_by_frame):
        gts = list(gts_by_frame[fid])
        preds = list(preds_by_frame.get(fid, []))
        for g in gts:
            n_gt[g.class_id] = n_gt.get(g.class_id, 0) + 1
        m = match_predictions(preds, gts, iou_th)
        for p, _, v in m.true_positives:
            flags.setdefault(p.class_id, []).append((p.confidence, True))
            iou_sums[p.class_id] = iou_sums.get(p.class_id, 0.0) + v
            total[0] += 1
            total[3] += v
        for p in m.false_positives:
            flags.setdefault(p.class_id, []).append((p.confidence, False))
            total[1] += 1
        total[2] += len(m.false_negatives)
    if not n_gt:
        raise NoGroundTruth("no ground-truth annotations in any frame")
    per_class = {}
    curves = {}
    for c in sorted(n_gt):
        curve = _curve_from_flags(flags.get(c, []), n_gt[c])
        curves[c] = curve
        tp = sum(1 for _, ok in flags.get(c, []) if ok)
        fp = sum(1 for _, ok in flags.get(c, []) if not ok)
        per_class[c] = ClassReport(
            n_gt=n_gt[c],
            ap=average_precision(curve, eleven_point),
            curve=curve,
            stats=_stats_from_tallies(tp, fp, n_gt[c] - tp, iou_sums.get(c, 0.0)),
        )
    return EvalReport(
        iou_th=iou_th,
        mean_ap=mean_average_precision(curves, eleven_point),
        per_class=per_class,
        overall=_stats_from_tallies(*total),
    )


# file formats


def predictions_from_dict(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise ParseError("predictions document must be an object")
    out = {}
    for key, anns in doc.items():
        try:
            fid = int(key)
        except ValueError as e:
            raise ParseError(f"bad frame id {key!r}") from e
        boxes = []
        for a in anns:
            try:
                boxes.append(
                    Annotation2D(
                        class_id=int(a["class_id"]),
                        cx=float(a["cx"]),
                        cy=float(a["cy"]),
                        w=float(a["w"]),
                        h=float(a["h"]),
                        instance_id=int(a.get("instance_id", -1)),
                        confidence=float(a["confidence"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"bad annotation in frame {fid}: {e}") from e
        out[fid] = boxes
    return out


def load_predictions(path) -> dict:
    return predictions_from_dict(load_json(path))


def save_predictions(preds_by_frame: dict, path) -> None:
    doc = {}
    for fid in sorted(preds_by_frame):
        doc[str(fid)] = [
            {
                "class_id": a.class_id,
                "cx": a.cx,
                "cy": a.cy,
                "w": a.w,
                "h": a.h,
                "confidence": a.confidence,
            }
            for a in preds_by_frame[fid]
        ]
    dump_json(doc, path)


def _stats_to_dict(s: ClassStats) -> dict:
    return {
        "tp": s.tp,
        "fp": s.fp,
        "fn": s.fn,
        "precision": s.precision,
        "recall": s.recall,
        "avg_iou": s.avg_iou,
        "avg_iou_empty": s.avg_iou_empty,
    }


def eval_report_to_dict(report: EvalReport) -> dict:
    return {
        "iou_th": report.iou_th,
        "mean_ap": report.mean_ap,
        "overall": _stats_to_dict(report.overall),
        "per_class": {
            str(c): {
                "n_gt": r.n_gt,
                "ap": r.ap,
                "stats": _stats_to_dict(r.stats),
                "curve": [
                    {"confidence": t, "precision": p, "recall": rc}
                    for t, p, rc in r.curve.points
                ],
            }
            for c, r in report.per_class.items()
        },
    }


def agreement_report_to_dict(report: AgreementReport) -> dict:
    return {
        "iou_th": report.iou_th,
        "overall": _stats_to_dict(report.overall),
        "per_class": {str(c): _stats_to_dict(s) for c, s in report.per_class.items()},
    }

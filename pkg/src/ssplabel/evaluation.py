"""Pseudo-label quality metrics.

Box quality is strict-match: every pseudo-box answers exactly one
annotation, so it is scored against that annotation's own ground-truth box
with no matching step. Detection mAP is not reported; it measures a trained
detector, which this package does not contain.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError
from .extraction import PseudoLabelSet
from .geometry import RotatedBox, rotated_iou
from .maps import IGNORE, AssignmentMap

REPORT_NOTE = "pseudo-label quality only; detection mAP requires a trained detector and is not reported"
RECALL_THRESHOLDS = (0.5, 0.75)


@dataclass
class AssignmentQuality:
    pixel_accuracy: float
    class_iou: dict[int, float]
    mean_fg_iou: float
    scored_cells: int
    no_scored_cells: bool = False


@dataclass
class EvalReport:
    miou: float
    class_miou: dict[int, float]
    recall: dict[float, float]
    ious: list[float]
    instances: int
    degenerate: int
    assignment: AssignmentQuality | None = None
    note: str = REPORT_NOTE

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_miou"] = {str(k): v for k, v in self.class_miou.items()}
        d["recall"] = {f"{k:g}": v for k, v in self.recall.items()}
        if self.assignment is not None:
            d["assignment"]["class_iou"] = {str(k): v for k, v in self.assignment.class_iou.items()}
        return d

    def table(self) -> str:
        rows = [("metric", "value"), ("instances", str(self.instances)),
                ("degenerate", str(self.degenerate)), ("mIoU", f"{self.miou:.4f}")]
        rows += [(f"recall@{t:g}", f"{r:.4f}") for t, r in self.recall.items()]
        rows += [(f"class {c} mIoU", f"{v:.4f}") for c, v in sorted(self.class_miou.items())]
        if self.assignment is not None:
            a = self.assignment
            rows += [("assign pixel acc", f"{a.pixel_accuracy:.4f}"),
                     ("assign mean fg IoU", f"{a.mean_fg_iou:.4f}")]
            rows += [(f"assign class {c} IoU", f"{v:.4f}") for c, v in sorted(a.class_iou.items())]
        width = max(len(r[0]) for r in rows)
        lines = [f"# {self.note}"]
        lines += [f"{name:<{width}}  {val:>8}" for name, val in rows]
        return "\n".join(lines)


def strict_match_miou(pred: PseudoLabelSet, gt_boxes: Sequence[RotatedBox]) -> EvalReport:
    """Score each pseudo-box against the ground truth of the annotation it answers."""
    n = len(gt_boxes)
    ious = []
    for b, k in zip(pred.boxes, pred.instance_index):
        if not 0 <= k < n:
            raise IndexError(f"instance index {k} out of range for {n} ground-truth boxes")
        ious.append(rotated_iou(b, gt_boxes[k]))
    arr = np.array(ious)
    classes = np.array(pred.classes)
    class_miou = {int(c): float(arr[classes == c].mean()) for c in np.unique(classes)}
    miou = float(arr.mean()) if len(arr) else 0.0
    recall = {t: float((arr >= t).mean()) if len(arr) else 0.0 for t in RECALL_THRESHOLDS}
    return EvalReport(miou, class_miou, recall, [float(x) for x in ious], len(ious), int(sum(pred.degenerate)))


def assignment_quality(pred: AssignmentMap, oracle: AssignmentMap) -> AssignmentQuality:
    """Pixel accuracy and per-class IoU over cells the prediction does not ignore.

    Classes are those appearing (in prediction or oracle) among scored
    cells; the mean foreground IoU averages them without weighting.
    """
    if pred.labels.shape != oracle.labels.shape:
        raise DimensionMismatchError(f"map shapes differ: {pred.labels.shape} vs {oracle.labels.shape}")
    scored = pred.labels != IGNORE
    n = int(scored.sum())
    if n == 0:
        return AssignmentQuality(0.0, {}, 0.0, 0, True)
    p, o = pred.labels[scored], oracle.labels[scored]
    acc = float((p == o).mean())
    ncls = max(pred.num_classes, oracle.num_classes)
    class_iou = {}
    for c in range(1, ncls + 1):
        pc, oc = p == c, o == c
        union = int((pc | oc).sum())
        if union:
            class_iou[c] = int((pc & oc).sum()) / union
    mean_fg = float(np.mean(list(class_iou.values()))) if class_iou else 0.0
    return AssignmentQuality(acc, class_iou, mean_fg, n)


def mean_report(reports: Sequence[EvalReport]) -> dict:
    """Aggregate over scenes: instance-weighted mIoU and recall."""
    ious = np.concatenate([np.array(r.ious) for r in reports]) if reports else np.array([])
    out = {
        "scenes": len(reports),
        "instances": int(len(ious)),
        "miou": float(ious.mean()) if len(ious) else 0.0,
        "degenerate": int(sum(r.degenerate for r in reports)),
    }
    for t in RECALL_THRESHOLDS:
        out[f"recall@{t:g}"] = float((ious >= t).mean()) if len(ious) else 0.0
    assigned = [r.assignment for r in reports if r.assignment is not None]
    if assigned:
        out["assign_pixel_accuracy"] = float(np.mean([a.pixel_accuracy for a in assigned]))
        out["assign_mean_fg_iou"] = float(np.mean([a.mean_fg_iou for a in assigned]))
    return out

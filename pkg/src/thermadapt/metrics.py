"""Detector scoring: IoU matching, precision-recall sweeps, AP and mAP."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import AnnotationSet, BoundingBox, DomainDataset
from .errors import MissingField, NoDefinedClasses, PipelineError, UndefinedAP, UnknownClass


@dataclass(frozen=True)
class Detection:
    """One detector output: class, confidence score in [0, 1], box."""

    image_id: str
    class_label: str
    score: float
    box: BoundingBox

    def __post_init__(self):
        if not np.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score!r} is not a finite value in [0, 1]")


@dataclass(frozen=True)
class EvalParams:
    """Evaluation knobs: IoU threshold, AP interpolation, area convention."""

    iou_threshold: float = 0.5
    mode: str = "all_points"  # or "eleven_point"
    legacy_area: bool = False
    classes: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.mode not in ("all_points", "eleven_point"):
            raise ValueError(f"unknown AP mode {self.mode!r}")
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError("iou_threshold must lie in [0, 1]")


@dataclass(eq=False)
class PRCurve:
    """Precision/recall after each prefix of the score-descending sweep."""

    recalls: np.ndarray
    precisions: np.ndarray
    n_gt: int

    def __post_init__(self):
        self.recalls = np.asarray(self.recalls, dtype=np.float64)
        self.precisions = np.asarray(self.precisions, dtype=np.float64)
        if self.recalls.shape != self.precisions.shape:
            raise ValueError("recall and precision arrays differ in length")
        if self.recalls.size and np.any(np.diff(self.recalls) < 0):
            raise ValueError("recall must be non-decreasing along the sweep")

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recalls.tolist(), self.precisions.tolist()))


def iou(a: BoundingBox, b: BoundingBox, legacy_area: bool = False) -> float:
    """Intersection over union; ``legacy_area`` adds +1 per axis."""
    off = 1.0 if legacy_area else 0.0
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin) + off
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin) + off
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area(legacy_area) + b.area(legacy_area) - inter
    return inter / union


def _sort_key(d: Detection):
    # content-based total order: evaluation is independent of input order
    # even under tied scores
    return (-d.score, d.image_id, d.box.xmin, d.box.ymin, d.box.xmax, d.box.ymax)


def match_detections(
    detections: Sequence[Detection],
    annotations: Sequence[AnnotationSet],
    class_label: str,
    iou_threshold: float = 0.5,
    legacy_area: bool = False,
) -> list[tuple[float, bool]]:
    """Greedy score-descending assignment of detections to ground truth.

    A detection is a true positive iff its best-IoU unmatched ground-truth
    box on the same image reaches the threshold; that box is then consumed,
    so each ground truth matches at most one detection.  Difficult ground
    truth is excluded outright: it can neither match nor count toward the
    recall denominator.
    """
    gt: dict[str, tuple[list[BoundingBox], list[bool]]] = {}
    for ann in annotations:
        boxes = [o.box for o in ann.objects if o.class_label == class_label and not o.difficult]
        if boxes:
            gt[ann.image_id] = (boxes, [False] * len(boxes))

    flags: list[tuple[float, bool]] = []
    for det in sorted(detections, key=_sort_key):
        best_iou, best_j = -1.0, -1
        entry = gt.get(det.image_id)
        if entry is not None:
            boxes, used = entry
            for j, box in enumerate(boxes):
                if used[j]:
                    continue
                overlap = iou(det.box, box, legacy_area)
                if overlap > best_iou:
                    best_iou, best_j = overlap, j
        is_tp = best_j >= 0 and best_iou >= iou_threshold
        if is_tp:
            gt[det.image_id][1][best_j] = True
        flags.append((det.score, is_tp))
    return flags


def precision_recall_curve(flags: Sequence[tuple[float, bool]], n_gt: int) -> PRCurve:
    """Prefix precision/recall of a score-descending TP/FP sequence.

    With no ground truth the recall column is defined as 0 so the sweep
    stays total; AP for such a class is undefined regardless.
    """
    if n_gt < 0:
        raise ValueError("n_gt must be non-negative")
    tp = np.cumsum([1.0 if is_tp else 0.0 for _, is_tp in flags])
    ranks = np.arange(1, len(flags) + 1, dtype=np.float64)
    precisions = tp / ranks if len(flags) else np.zeros(0)
    recalls = tp / n_gt if n_gt > 0 else np.zeros(len(flags))
    return PRCurve(recalls, precisions, n_gt)


def average_precision(curve: PRCurve, mode: str = "all_points") -> float:
    """Area under the interpolated precision-recall curve.

    ``all_points`` integrates the precision envelope (precision at recall r
    replaced by the maximum precision at any recall >= r) over the recall
    increments; ``eleven_point`` averages the enveloped precision sampled
    at recalls 0.0, 0.1, ..., 1.0.
    """
    if curve.n_gt == 0:
        raise UndefinedAP("AP is undefined without ground-truth instances")
    rec = curve.recalls
    prec = curve.precisions

    if mode == "all_points":
        mrec = np.concatenate(([0.0], rec, [1.0]))
        mpre = np.concatenate(([0.0], prec, [0.0]))
        # precision envelope: running maximum from the right
        mpre = np.maximum.accumulate(mpre[::-1])[::-1]
        idx = np.flatnonzero(mrec[1:] != mrec[:-1])
        return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))

    if mode == "eleven_point":
        total = 0.0
        for i in range(11):
            mask = rec >= i / 10
            total += float(prec[mask].max()) if mask.any() else 0.0
        return total / 11

    raise ValueError(f"unknown AP mode {mode!r}")


def mean_ap(per_class_ap: dict[str, float]) -> float:
    """Arithmetic mean of per-class AP values over the included classes."""
    if not per_class_ap:
        raise NoDefinedClasses("no class has a defined AP")
    return sum(per_class_ap.values()) / len(per_class_ap)


@dataclass(eq=False)
class EvalReport:
    """Per-class AP, their mean, and the bookkeeping behind them."""

    per_class_ap: dict[str, float]
    map_value: float
    params: EvalParams
    n_gt: dict[str, int]
    n_det: dict[str, int]
    undefined_classes: tuple[str, ...] = ()
    unknown_classes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "per_class_ap": dict(self.per_class_ap),
            "map": self.map_value,
            "params": {
                "iou_threshold": self.params.iou_threshold,
                "mode": self.params.mode,
                "legacy_area": self.params.legacy_area,
                "classes": list(self.params.classes) if self.params.classes else None,
            },
            "counts": {"n_gt": dict(self.n_gt), "n_det": dict(self.n_det)},
            "undefined_classes": list(self.undefined_classes),
            "unknown_classes": list(self.unknown_classes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def evaluate(
    detections: Sequence[Detection] | str | Path,
    target: DomainDataset,
    params: EvalParams = EvalParams(),
) -> EvalReport:
    """Score detections against a labelled domain: match, sweep, AP, mAP.

    Classes default to the target's label set; detections outside it are
    reported and ignored.  Classes without (non-difficult) ground truth
    have undefined AP and are excluded from the mean, never averaged as
    zero.
    """
    if not target.labelled:
        raise PipelineError("evaluation requires a labelled target domain")
    if isinstance(detections, (str, Path)):
        detections = load_detections(detections)

    annotations = [rec.annotation for rec in target.records]
    classes = params.classes or target.class_labels()
    known = set(classes)

    unknown = tuple(sorted({d.class_label for d in detections} - known))
    if unknown:
        warnings.warn(
            f"ignoring detections with unknown classes: {', '.join(unknown)}",
            UnknownClass,
            stacklevel=2,
        )

    per_class_ap: dict[str, float] = {}
    n_gt: dict[str, int] = {}
    n_det: dict[str, int] = {}
    undefined: list[str] = []
    for cls in classes:
        cls_dets = [d for d in detections if d.class_label == cls]
        n_det[cls] = len(cls_dets)
        n_gt[cls] = sum(
            1 for ann in annotations for o in ann.objects
            if o.class_label == cls and not o.difficult
        )
        flags = match_detections(cls_dets, annotations, cls,
                                 params.iou_threshold, params.legacy_area)
        curve = precision_recall_curve(flags, n_gt[cls])
        try:
            per_class_ap[cls] = average_precision(curve, params.mode)
        except UndefinedAP:
            undefined.append(cls)

    if not per_class_ap:
        raise NoDefinedClasses("no class in the target has a defined AP")
    return EvalReport(
        per_class_ap=per_class_ap,
        map_value=mean_ap(per_class_ap),
        params=replace(params, classes=tuple(classes)),
        n_gt=n_gt,
        n_det=n_det,
        undefined_classes=tuple(undefined),
        unknown_classes=unknown,
    )


def load_detections(path: str | Path) -> list[Detection]:
    """Read a detection-results JSON file (one document per run)."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PipelineError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise PipelineError(f"{path}: detections file must be a JSON list")

    detections = []
    for i, entry in enumerate(data):
        try:
            box = BoundingBox(*(float(v) for v in entry["box"]))
            detections.append(
                Detection(str(entry["image_id"]), str(entry["class_label"]),
                          float(entry["score"]), box)
            )
        except KeyError as exc:
            raise MissingField(f"{path}: detection #{i} lacks {exc.args[0]!r}") from exc
        except TypeError as exc:
            raise PipelineError(f"{path}: detection #{i} is malformed: {exc}") from exc
    return detections


def save_detections(detections: Sequence[Detection], path: str | Path) -> None:
    payload = [
        {
            "image_id": d.image_id,
            "class_label": d.class_label,
            "score": d.score,
            "box": d.box.as_list(),
        }
        for d in detections
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")


def format_percent(value: float) -> str:
    return f"{100.0 * value:.1f}"


def render_table(report: EvalReport) -> str:
    """Aligned one-row table: per-class AP columns then mAP, percentages."""
    classes = list(report.params.classes or report.per_class_ap)
    header = classes + ["mAP"]
    cells = [
        format_percent(report.per_class_ap[c]) if c in report.per_class_ap else "—"
        for c in classes
    ] + [format_percent(report.map_value)]
    widths = [max(len(h), len(v)) for h, v in zip(header, cells)]
    head = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    row = "  ".join(v.rjust(w) for v, w in zip(cells, widths))
    return f"{head}\n{row}"

"""Synthetic paired visible/thermal scenes with exact ground truth.

The generator draws axis-aligned rectangles and ellipses on a flat
background, so annotation boxes bound the drawn pixels exactly and IoU
assertions can be exact.  The thermal rendition draws each object either
brighter or darker than the background according to the polarity mix; the
visible rendition colors every object on the bright side, which is what a
grayscale translation of it then inherits.

A threshold blob detector plus a calibration routine stand in for the
trained detector, so the whole pipeline runs at desk scale with no neural
stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .dataset import AnnotationSet, BoundingBox, DomainDataset, DomainRecord, ObjectInstance
from .errors import PipelineError, PlacementFailure
from .imagegen import GRAY_WEIGHTS, ensure_gray, pooled_histogram, to_grayscale
from .metrics import Detection

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)


@dataclass(frozen=True)
class SynthParams:
    """Scene recipe; identical params yield bit-identical scenes."""

    width: int = 128
    height: int = 128
    n_objects: tuple[int, int] = (2, 4)  # inclusive range
    polarity_mix: float = 1.0  # fraction of objects brighter than background
    background: int = 128
    bright_level: int = 220
    dark_level: int = 35
    level_jitter: int = 12
    noise: int = 0  # uniform per-pixel jitter on the thermal rendition
    classes: tuple[str, ...] = ("object",)
    min_size: int = 10
    max_size: int = 28
    margin: int = 2  # keep-out border: objects never touch the frame edge
    max_place_attempts: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.polarity_mix <= 1.0:
            raise ValueError("polarity_mix must lie in [0, 1]")
        lo, hi = self.n_objects
        if lo < 0 or hi < lo:
            raise ValueError("n_objects must be a non-negative inclusive range")
        if not 3 <= self.min_size <= self.max_size:
            raise ValueError("object sizes must satisfy 3 <= min_size <= max_size")
        if not self.classes:
            raise ValueError("at least one class label is required")
        if not (0 <= self.dark_level - self.level_jitter
                and self.dark_level + self.level_jitter < self.background
                < self.bright_level - self.level_jitter
                and self.bright_level + self.level_jitter <= 255):
            raise ValueError("intensity levels must stay separated and inside [0, 255]: "
                             "0 <= dark±jitter < background < bright±jitter <= 255")


@dataclass(frozen=True)
class DetectorParams:
    """Threshold blob detector configuration.

    The threshold lives on the bright scale: bright mode keeps pixels above
    it, dark mode keeps pixels above it *after inversion* (img < 255 - t),
    so one params object behaves identically on an image and its inverted
    copy with polarities swapped.
    """

    threshold: float
    polarity: str = "bright"  # bright | dark | both
    min_area: int = 4
    emit_label: str = "object"

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 255.0:
            raise ValueError("threshold must lie in [0, 255]")
        if self.polarity not in ("bright", "dark", "both"):
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if self.min_area < 1:
            raise ValueError("min_area must be at least 1")


def _luma_color(rng: np.random.Generator, level: int) -> np.ndarray:
    """Random color whose BT.601 luma lands close to ``level``."""
    weights = np.asarray(GRAY_WEIGHTS)
    for _ in range(8):
        base = rng.uniform(0.25, 1.0, size=3)
        scaled = base * (level / float(base @ weights))
        if scaled.max() <= 255.0:
            return np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)
    return np.full(3, level, dtype=np.uint8)


def _shape_mask(shape: str, w: int, h: int) -> np.ndarray:
    if shape == "rect":
        return np.ones((h, w), dtype=bool)
    # ellipse inscribed in the w x h cell, pixel-center membership
    ys, xs = np.mgrid[0:h, 0:w]
    cx, cy = w / 2.0, h / 2.0
    mask = (((xs + 0.5 - cx) / (w / 2.0)) ** 2 + ((ys + 0.5 - cy) / (h / 2.0)) ** 2) <= 1.0
    return mask


def _boxes_clash(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    # expanded by one pixel so 4-connected blobs can never merge
    return not (a[2] + 1 <= b[0] or b[2] + 1 <= a[0] or a[3] + 1 <= b[1] or b[3] + 1 <= a[1])


def generate_scene(
    params: SynthParams, image_id: str = "scene"
) -> tuple[np.ndarray, np.ndarray, AnnotationSet]:
    """One scene: (visible RGB, thermal grayscale, annotations).

    Shapes never overlap or touch, boxes bound the drawn pixels exactly,
    and the whole triple is a pure function of the params.
    """
    rng = np.random.default_rng(params.seed)
    lo, hi = params.n_objects
    n = int(rng.integers(lo, hi + 1)) if hi > lo else lo

    n_bright = int(np.floor(params.polarity_mix * n))
    bright_flags = np.zeros(n, dtype=bool)
    bright_flags[:n_bright] = True
    bright_flags = bright_flags[rng.permutation(n)] if n else bright_flags

    height, width = params.height, params.width
    visible = np.empty((height, width, 3), dtype=np.uint8)
    visible[:] = _luma_color(rng, params.background)
    thermal = np.full((height, width), params.background, dtype=np.uint8)

    placed: list[tuple[int, int, int, int]] = []
    objects: list[ObjectInstance] = []
    for i in range(n):
        for _ in range(params.max_place_attempts):
            w = int(rng.integers(params.min_size, params.max_size + 1))
            h = int(rng.integers(params.min_size, params.max_size + 1))
            max_x = width - params.margin - w
            max_y = height - params.margin - h
            if max_x < params.margin or max_y < params.margin:
                continue
            x0 = int(rng.integers(params.margin, max_x + 1))
            y0 = int(rng.integers(params.margin, max_y + 1))
            cell = (x0, y0, x0 + w, y0 + h)
            if not any(_boxes_clash(cell, other) for other in placed):
                break
        else:
            raise PlacementFailure(
                f"could not place object {i + 1} of {n} in a "
                f"{width}x{height} frame after {params.max_place_attempts} attempts"
            )
        placed.append(cell)

        shape = "rect" if rng.random() < 0.5 else "ellipse"
        label = str(rng.choice(np.asarray(params.classes, dtype=object)))
        jitter = int(rng.integers(-params.level_jitter, params.level_jitter + 1))
        bright_value = params.bright_level + jitter
        dark_value = params.dark_level + jitter
        thermal_value = bright_value if bright_flags[i] else dark_value
        color = _luma_color(rng, bright_value)

        mask = _shape_mask(shape, w, h)
        cols = np.flatnonzero(mask.any(axis=0))
        rows = np.flatnonzero(mask.any(axis=1))
        box = BoundingBox(
            x0 + int(cols[0]), y0 + int(rows[0]),
            x0 + int(cols[-1]) + 1, y0 + int(rows[-1]) + 1,
        )
        thermal[y0:y0 + h, x0:x0 + w][mask] = thermal_value
        visible[y0:y0 + h, x0:x0 + w][mask] = color
        objects.append(ObjectInstance(label, box))

    if params.noise > 0:
        jitter = rng.integers(-params.noise, params.noise + 1, size=thermal.shape)
        thermal = np.clip(thermal.astype(np.int16) + jitter, 0, 255).astype(np.uint8)

    ann = AnnotationSet(image_id, width, height, tuple(objects))
    return visible, thermal, ann


def generate_paired_domains(
    params: SynthParams, count: int, prefix: str = "scene"
) -> tuple[DomainDataset, DomainDataset]:
    """``count`` scenes as paired visible/thermal domains sharing ids.

    Scene i derives its seed as ``params.seed + i``, so batches can be
    generated in parallel without changing the result.
    """
    vis_records, th_records = [], []
    for i in range(count):
        image_id = f"{prefix}_{i:04d}"
        visible, thermal, ann = generate_scene(replace(params, seed=params.seed + i), image_id)
        vis_records.append(DomainRecord(image_id, ann, image=visible))
        th_records.append(DomainRecord(image_id, ann, image=thermal))
    return (
        DomainDataset(f"{prefix}_visible", tuple(vis_records), labelled=True),
        DomainDataset(f"{prefix}_thermal", tuple(th_records), labelled=True),
    )


def _blob_detections(img: np.ndarray, params: DetectorParams, image_id: str) -> list[Detection]:
    """Blobs of pixels above threshold; components touching the frame edge
    are background, not objects."""
    mask = img > params.threshold
    labels, _ = ndimage.label(mask, structure=FOUR_CONNECTED)
    height, width = img.shape

    detections = []
    for index, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        ys, xs = sl
        if ys.start == 0 or xs.start == 0 or ys.stop == height or xs.stop == width:
            continue
        component = labels[sl] == index
        area = int(component.sum())
        if area < params.min_area:
            continue
        values = img[sl][component].astype(np.float64)
        denom = 255.0 - params.threshold
        score = float(np.clip((values - params.threshold).mean() / denom, 0.0, 1.0)) if denom > 0 else 1.0
        box = BoundingBox(float(xs.start), float(ys.start), float(xs.stop), float(ys.stop))
        detections.append(Detection(image_id, params.emit_label, score, box))
    return detections


def threshold_detect(
    img: np.ndarray, params: DetectorParams, image_id: str = "image"
) -> list[Detection]:
    """Detect blobs beyond the threshold in the configured polarity.

    Dark mode is literally bright mode on the inverted image, and ``both``
    concatenates the two, so detections on an inverted image with swapped
    polarity are identical, scores included.
    """
    img = ensure_gray(img)
    detections: list[Detection] = []
    if params.polarity in ("bright", "both"):
        detections += _blob_detections(img, params, image_id)
    if params.polarity in ("dark", "both"):
        inverted = (255 - img.astype(np.int16)).astype(np.uint8)
        detections += _blob_detections(inverted, params, image_id)
    return detections


def detect_domain(domain: DomainDataset, params: DetectorParams) -> list[Detection]:
    """Run the threshold detector over every image of a domain."""
    detections: list[Detection] = []
    for rec in domain.records:
        img = rec.pixels()
        if img.ndim == 3:
            img = to_grayscale(img)
        detections += threshold_detect(img, params, rec.image_id)
    return detections


def _box_slice(box: BoundingBox) -> tuple[slice, slice]:
    return (
        slice(int(np.floor(box.ymin)), int(np.ceil(box.ymax))),
        slice(int(np.floor(box.xmin)), int(np.ceil(box.xmax))),
    )


def calibrate_detector(
    source: DomainDataset,
    target: DomainDataset | None = None,
    min_area: int | None = None,
) -> DetectorParams:
    """Fit DetectorParams from an annotated source domain.

    Each annotated region votes bright or dark against its image's
    background median, fixing the polarity; the threshold is the midpoint
    of the intersection of every object's valid range (dark ranges
    mirrored onto the bright scale).  With a target domain the background
    estimate is re-anchored on the pooled target histogram mode, a stand-in
    for adapting to the unlabelled target distribution.
    """
    if not source.labelled:
        raise PipelineError("calibration requires a labelled source domain")

    observations: list[tuple[bool, float, float]] = []  # (is_bright, background, region mean)
    region_areas: list[int] = []
    labels: list[str] = []
    for rec in source.records:
        img = rec.pixels()
        if img.ndim == 3:
            img = to_grayscale(img)
        bg_mask = np.ones(img.shape, dtype=bool)
        for obj in rec.annotation.objects:
            bg_mask[_box_slice(obj.box)] = False
        background = float(np.median(img[bg_mask])) if bg_mask.any() else float(np.median(img))
        for obj in rec.annotation.objects:
            region = img[_box_slice(obj.box)]
            if region.size == 0:
                continue
            mean = float(region.mean())
            observations.append((mean >= background, background, mean))
            region_areas.append(region.size)
            labels.append(obj.class_label)
    if not observations:
        raise PipelineError("calibration needs at least one annotated object")

    bg_override = None
    if target is not None:
        bg_override = float(np.argmax(pooled_histogram(target)))

    lows, highs = [], []
    for is_bright, background, mean in observations:
        bg = background if bg_override is None else bg_override
        if is_bright:
            lows.append(bg)
            highs.append(mean)
        else:
            lows.append(255.0 - bg)
            highs.append(255.0 - mean)
    threshold = float(np.clip((max(lows) + min(highs)) / 2.0, 0.0, 255.0))

    bright_fraction = sum(1 for is_bright, _, _ in observations if is_bright) / len(observations)
    if bright_fraction >= 0.95:
        polarity = "bright"
    elif bright_fraction <= 0.05:
        polarity = "dark"
    else:
        polarity = "both"

    if min_area is None:
        min_area = max(4, min(region_areas) // 4)
    emit_label = sorted(labels, key=lambda l: (-labels.count(l), l))[0]
    return DetectorParams(threshold, polarity, min_area, emit_label)


def save_detector_params(params: DetectorParams, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "threshold": params.threshold,
        "polarity": params.polarity,
        "min_area": params.min_area,
        "emit_label": params.emit_label,
    }
    path.write_text(json.dumps(payload, indent=2) + "\n")


def load_detector_params(path: str | Path) -> DetectorParams:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PipelineError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return DetectorParams(
            threshold=float(data["threshold"]),
            polarity=str(data["polarity"]),
            min_area=int(data.get("min_area", 4)),
            emit_label=str(data.get("emit_label", "object")),
        )
    except KeyError as exc:
        raise PipelineError(f"{path}: detector params lack {exc.args[0]!r}") from exc

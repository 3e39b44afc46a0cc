"""Fake-thermal source imagery.

Grayscale and histogram-matching stand-ins for a learned translator,
ingestion of externally translated images, 8-bit intensity inversion, and
assembly of the renewed source domain (originals plus inverted copies,
annotations transferred untouched).

Images are plain numpy arrays: ``(H, W) uint8`` grayscale, ``(H, W, 3)
uint8`` color.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import DomainDataset, DomainRecord
from .errors import ConstantReference, DimensionMismatch, MissingTranslation, PipelineError

# ITU-R BT.601 luma weights
GRAY_WEIGHTS = (0.299, 0.587, 0.114)


def ensure_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim != 2:
        raise ValueError("expected a (H, W) uint8 grayscale image")
    return img


def ensure_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected a (H, W, 3) uint8 color image")
    return img


def intensity_invert(img: np.ndarray) -> np.ndarray:
    """Flip the polarity of an 8-bit image: every pixel p becomes 255 - p."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError("intensity inversion is defined on 8-bit images")
    return (255 - img.astype(np.int16)).astype(np.uint8)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma with round-half-up; (v, v, v) maps to v exactly."""
    img = ensure_rgb(img)
    luma = img.astype(np.float64) @ np.asarray(GRAY_WEIGHTS)
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def replicate_channels(gray: np.ndarray) -> np.ndarray:
    """Stack a grayscale image into an RGB triple (for round-trip checks)."""
    gray = ensure_gray(gray)
    return np.repeat(gray[:, :, None], 3, axis=2)


def histogram(img: np.ndarray) -> np.ndarray:
    """256-bin intensity counts of a grayscale image."""
    return np.bincount(ensure_gray(img).ravel(), minlength=256).astype(np.int64)


def pooled_histogram(domain: DomainDataset) -> np.ndarray:
    """Summed intensity counts over every image of a domain (gray-converted)."""
    counts = np.zeros(256, dtype=np.int64)
    for rec in domain.records:
        img = rec.pixels()
        if img.ndim == 3:
            img = to_grayscale(img)
        counts += histogram(img)
    return counts


def match_histogram_counts(img: np.ndarray, reference_counts: np.ndarray) -> np.ndarray:
    """Monotone CDF remap of ``img`` onto a reference intensity histogram.

    The lookup sends level v to the smallest level whose reference CDF
    reaches the source CDF at v, so the remap never reorders intensities.
    A single-level reference degenerates to a constant image and is
    reported as a ConstantReference warning, not a failure.
    """
    img = ensure_gray(img)
    ref = np.asarray(reference_counts, dtype=np.int64)
    if ref.shape != (256,) or ref.sum() <= 0:
        raise ValueError("reference histogram must be 256 non-negative counts, not all zero")

    attained = np.flatnonzero(ref)
    if attained.size == 1:
        level = int(attained[0])
        warnings.warn(
            f"reference histogram has a single intensity ({level}); "
            "remap degenerates to a constant image",
            ConstantReference,
            stacklevel=2,
        )
        return np.full_like(img, level)

    src_cdf = np.cumsum(np.bincount(img.ravel(), minlength=256)) / img.size
    ref_cdf = np.cumsum(ref) / ref.sum()
    lut = np.searchsorted(ref_cdf, src_cdf, side="left").astype(np.uint8)
    return lut[img]


def histogram_match(img: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Match ``img``'s cumulative histogram to that of a reference image."""
    return match_histogram_counts(img, histogram(reference))


def translate_domain(
    domain: DomainDataset,
    mode: str,
    reference_counts: np.ndarray | None = None,
) -> DomainDataset:
    """Apply a built-in translation to every image of a labelled domain.

    ``gray`` converts color images to luma; ``histmatch`` additionally
    remaps them onto ``reference_counts`` (typically the pooled target
    histogram).  Annotations transfer unchanged.
    """
    if mode not in ("gray", "histmatch"):
        raise ValueError(f"unknown translation mode {mode!r}")
    if mode == "histmatch" and reference_counts is None:
        raise ValueError("histmatch translation needs a reference histogram")

    records = []
    for rec in domain.records:
        img = rec.pixels()
        if img.ndim == 3:
            img = to_grayscale(img)
        if mode == "histmatch":
            img = match_histogram_counts(img, reference_counts)
        records.append(DomainRecord(rec.image_id, rec.annotation, image=img))
    return DomainDataset(f"{domain.name}_{mode}", tuple(records), domain.labelled)


def ingest_translated(directory: Path | str, source: DomainDataset) -> DomainDataset:
    """Adopt externally translated images, carrying the source annotations.

    The folder must hold one 8-bit single-channel PNG per source id, with
    dimensions equal to the annotated frame (boxes are never rescaled).
    """
    if not source.labelled:
        raise PipelineError("ingest requires a labelled source domain")
    directory = Path(directory)

    records = []
    for rec in source.records:
        path = directory / f"{rec.image_id}.png"
        if not path.is_file():
            raise MissingTranslation(f"no translated image for {rec.image_id!r}")
        with Image.open(path) as im:
            if im.mode != "L":
                raise PipelineError(
                    f"{path.name}: translated images must be 8-bit single-channel, got {im.mode!r}"
                )
            width, height = im.size
        ann = rec.annotation
        if (width, height) != (ann.width, ann.height):
            raise DimensionMismatch(
                f"{rec.image_id}: translated image is {width}x{height}, "
                f"annotation frame is {ann.width}x{ann.height}"
            )
        records.append(DomainRecord(rec.image_id, ann, image_path=path))
    return DomainDataset(f"{source.name}_ft", tuple(records), labelled=True)


def build_renewed_source(fake_thermal: DomainDataset) -> DomainDataset:
    """Union of a fake-thermal domain with its intensity-inverted copies.

    Every record gains a sibling whose image is inverted, whose id carries
    an ``_inv`` suffix, and whose AnnotationSet is the same object; box
    geometry is untouched.  The result has exactly twice as many records.
    """
    if not fake_thermal.labelled:
        raise PipelineError("renewed source requires a labelled fake-thermal domain")

    records = []
    for rec in fake_thermal.records:
        img = rec.pixels()
        if img.ndim != 2:
            raise PipelineError(
                f"{rec.image_id}: renewed source requires single-channel images"
            )
        records.append(rec)
        records.append(
            DomainRecord(f"{rec.image_id}_inv", rec.annotation, image=intensity_invert(img))
        )
    # duplicate ids (an input id already ending in _inv) raise IdCollision here
    return DomainDataset(f"{fake_thermal.name}_renewed", tuple(records), labelled=True)

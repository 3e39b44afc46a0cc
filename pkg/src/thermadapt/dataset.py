"""VOC-style annotated image domains: parsing, loading, pairing, persistence.

A domain on disk is a directory with an ``images/`` folder of 8-bit PNGs
and, when labelled, a parallel ``annotations/`` folder holding one
VOC-style XML per image stem.  Boxes use the continuous convention: a box
covers ``[xmin, xmax) x [ymin, ymax)`` and its area is
``(xmax - xmin) * (ymax - ymin)`` with no +1 per axis (the evaluator
exposes a ``legacy_area`` flag for the classic convention).
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    BoxOutsideFrame,
    DegenerateBox,
    DimensionMismatch,
    EmptyIntersection,
    IdCollision,
    MalformedXml,
    MissingAnnotation,
    MissingField,
    PipelineError,
)

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, origin top-left, continuous pixel coordinates."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise DegenerateBox(
                f"box ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax}) "
                "has non-positive width or height"
            )
        if min(self.xmin, self.ymin) < 0:
            raise DegenerateBox(
                f"box ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax}) "
                "has negative coordinates"
            )

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def area(self, legacy: bool = False) -> float:
        off = 1.0 if legacy else 0.0
        return (self.width + off) * (self.height + off)

    def as_list(self) -> list[float]:
        return [self.xmin, self.ymin, self.xmax, self.ymax]


@dataclass(frozen=True)
class ObjectInstance:
    """One annotated object: a class label, its box, and a difficult flag."""

    class_label: str
    box: BoundingBox
    difficult: bool = False

    def __post_init__(self):
        if not self.class_label:
            raise ValueError("class_label must be non-empty")


@dataclass(frozen=True)
class AnnotationSet:
    """All annotations of one image, in document order."""

    image_id: str
    width: int
    height: int
    objects: tuple[ObjectInstance, ...] = ()

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"{self.image_id}: non-positive image size")
        for obj in self.objects:
            b = obj.box
            if b.xmax > self.width or b.ymax > self.height:
                raise BoxOutsideFrame(
                    f"{self.image_id}: box ({b.xmin}, {b.ymin}, {b.xmax}, {b.ymax}) "
                    f"exceeds the {self.width}x{self.height} frame"
                )


def _require(parent: ET.Element, tag: str, context: str) -> ET.Element:
    el = parent.find(tag)
    if el is None:
        raise MissingField(f"{context}: missing <{tag}>")
    return el


def _require_text(parent: ET.Element, tag: str, context: str) -> str:
    el = _require(parent, tag, context)
    if el.text is None or not el.text.strip():
        raise MissingField(f"{context}: empty <{tag}>")
    return el.text.strip()


def _strip_image_suffix(name: str) -> str:
    lower = name.lower()
    for suffix in _IMAGE_SUFFIXES:
        if lower.endswith(suffix):
            return name[: -len(suffix)]
    return name


def parse_voc_annotation(xml_text: str) -> AnnotationSet:
    """Parse a VOC-style annotation document.

    Objects come back in document order; a missing ``difficult`` element
    defaults to False; unknown elements are skipped, not errors.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedXml(f"annotation XML does not parse: {exc}") from exc

    image_id = _strip_image_suffix(_require_text(root, "filename", "annotation"))
    size = _require(root, "size", "annotation")
    width = int(float(_require_text(size, "width", "size")))
    height = int(float(_require_text(size, "height", "size")))

    objects = []
    for i, obj in enumerate(root.findall("object")):
        ctx = f"object #{i}"
        name = _require_text(obj, "name", ctx)
        bndbox = _require(obj, "bndbox", ctx)
        coords = [float(_require_text(bndbox, t, f"{ctx}/bndbox"))
                  for t in ("xmin", "ymin", "xmax", "ymax")]
        difficult = obj.findtext("difficult")
        flag = bool(int(difficult)) if difficult and difficult.strip() else False
        objects.append(ObjectInstance(name, BoundingBox(*coords), flag))

    return AnnotationSet(image_id, width, height, tuple(objects))


def _fmt_number(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def serialize_voc_annotation(ann: AnnotationSet, depth: int = 1) -> str:
    """Write an AnnotationSet back to VOC XML; re-parsing yields an equal set."""
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = f"{ann.image_id}.png"
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(ann.width)
    ET.SubElement(size, "height").text = str(ann.height)
    ET.SubElement(size, "depth").text = str(depth)
    for obj in ann.objects:
        el = ET.SubElement(root, "object")
        ET.SubElement(el, "name").text = obj.class_label
        ET.SubElement(el, "difficult").text = "1" if obj.difficult else "0"
        bndbox = ET.SubElement(el, "bndbox")
        for tag, value in zip(("xmin", "ymin", "xmax", "ymax"), obj.box.as_list()):
            ET.SubElement(bndbox, tag).text = _fmt_number(value)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


@dataclass(frozen=True, eq=False)
class DomainRecord:
    """One image of a domain plus its annotations.

    The pixel data lives either on disk (``image_path``) or in memory
    (``image``); ``pixels()`` resolves whichever is set.
    """

    image_id: str
    annotation: AnnotationSet
    image_path: Path | None = None
    image: np.ndarray | None = None

    def pixels(self) -> np.ndarray:
        if self.image is not None:
            return self.image
        if self.image_path is None:
            raise PipelineError(f"record {self.image_id!r} has no image data")
        return load_image(self.image_path)


@dataclass(frozen=True, eq=False)
class DomainDataset:
    """A named, id-sorted set of annotated images.

    Unlabelled domains (``labelled=False``) carry empty annotation lists;
    their ground truth, when it exists on disk, is deliberately not read.
    """

    name: str
    records: tuple[DomainRecord, ...]
    labelled: bool

    def __post_init__(self):
        ordered = tuple(sorted(self.records, key=lambda r: r.image_id))
        object.__setattr__(self, "records", ordered)
        seen: set[str] = set()
        for rec in ordered:
            if rec.image_id in seen:
                raise IdCollision(f"duplicate image id {rec.image_id!r} in domain {self.name!r}")
            seen.add(rec.image_id)
        if not self.labelled:
            for rec in ordered:
                if rec.annotation.objects:
                    raise PipelineError(
                        f"unlabelled domain {self.name!r} carries objects for {rec.image_id!r}"
                    )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def image_ids(self) -> tuple[str, ...]:
        return tuple(r.image_id for r in self.records)

    def get(self, image_id: str) -> DomainRecord:
        for rec in self.records:
            if rec.image_id == image_id:
                return rec
        raise KeyError(image_id)

    def class_labels(self) -> tuple[str, ...]:
        return tuple(sorted({o.class_label for r in self.records for o in r.annotation.objects}))


def load_image(path: Path | str) -> np.ndarray:
    """Decode an 8-bit PNG into a (H, W) or (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            raise PipelineError(
                f"{Path(path).name}: mode {im.mode!r} is not 8-bit grayscale or RGB"
            )
        return np.asarray(im, dtype=np.uint8)


def save_image(img: np.ndarray, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(img, dtype=np.uint8)).save(path)


def _probe_image(path: Path) -> tuple[int, int]:
    """Size of an image after mode validation, without a full decode."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            raise PipelineError(f"{path.name}: mode {im.mode!r} is not 8-bit grayscale or RGB")
        return im.size


def load_domain(root: Path | str, labelled: bool, name: str | None = None) -> DomainDataset:
    """Load a domain directory; records come back sorted by image id.

    Labelled domains require one annotation XML per image stem and the
    annotated size must agree with the decoded image.
    """
    root = Path(root)
    images_dir = root / "images"
    if not images_dir.is_dir():
        raise PipelineError(f"{root}: no images/ subfolder")

    records = []
    for path in sorted(images_dir.glob("*.png")):
        stem = path.stem
        width, height = _probe_image(path)
        if labelled:
            xml_path = root / "annotations" / f"{stem}.xml"
            if not xml_path.is_file():
                raise MissingAnnotation(f"no annotation XML for image {stem!r}")
            ann = parse_voc_annotation(xml_path.read_text())
            if (ann.width, ann.height) != (width, height):
                raise DimensionMismatch(
                    f"{stem}: annotation says {ann.width}x{ann.height}, "
                    f"image is {width}x{height}"
                )
            if ann.image_id != stem:
                ann = replace(ann, image_id=stem)
        else:
            ann = AnnotationSet(stem, width, height)
        records.append(DomainRecord(stem, ann, image_path=path))

    return DomainDataset(name or root.name, tuple(records), labelled)


def save_domain(domain: DomainDataset, root: Path | str) -> Path:
    """Persist a domain in the standard layout; the result is loadable."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    if domain.labelled:
        (root / "annotations").mkdir(parents=True, exist_ok=True)
    for rec in domain.records:
        img = rec.pixels()
        save_image(img, root / "images" / f"{rec.image_id}.png")
        if domain.labelled:
            ann = rec.annotation
            if ann.image_id != rec.image_id:
                ann = replace(ann, image_id=rec.image_id)
            depth = 1 if img.ndim == 2 else int(img.shape[2])
            xml_path = root / "annotations" / f"{rec.image_id}.xml"
            xml_path.write_text(serialize_voc_annotation(ann, depth=depth))
    return root


@dataclass(frozen=True)
class SpectralPairing:
    """Records matched across two spectra by image id, plus the leftovers."""

    pairs: tuple[tuple[DomainRecord, DomainRecord], ...]
    only_visible: tuple[str, ...]
    only_thermal: tuple[str, ...]


def pair_spectral(visible: DomainDataset, thermal: DomainDataset) -> SpectralPairing:
    """Pair simultaneously captured images by identical id.

    Unpaired ids are reported, never silently dropped; a fully disjoint
    pairing raises EmptyIntersection since it signals the wrong folders.
    """
    vis = {r.image_id: r for r in visible.records}
    th = {r.image_id: r for r in thermal.records}
    common = sorted(vis.keys() & th.keys())
    if not common:
        raise EmptyIntersection(
            f"domains {visible.name!r} and {thermal.name!r} share no image ids"
        )
    return SpectralPairing(
        pairs=tuple((vis[i], th[i]) for i in common),
        only_visible=tuple(sorted(vis.keys() - th.keys())),
        only_thermal=tuple(sorted(th.keys() - vis.keys())),
    )

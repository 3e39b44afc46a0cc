"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from thermadapt import (
    AnnotationSet,
    BoundingBox,
    DomainDataset,
    DomainRecord,
    ObjectInstance,
)


def box(xmin, ymin, xmax, ymax) -> BoundingBox:
    return BoundingBox(float(xmin), float(ymin), float(xmax), float(ymax))


def annotation(image_id="img", width=100, height=100, objects=()) -> AnnotationSet:
    return AnnotationSet(image_id, width, height, tuple(objects))


def obj(label, b, difficult=False) -> ObjectInstance:
    return ObjectInstance(label, b, difficult)


def random_annotation(rng: np.random.Generator, image_id: str,
                      labels=("person", "car")) -> AnnotationSet:
    width = int(rng.integers(40, 200))
    height = int(rng.integers(40, 200))
    objects = []
    for _ in range(int(rng.integers(0, 6))):
        w = float(rng.integers(2, max(3, width // 3)))
        h = float(rng.integers(2, max(3, height // 3)))
        x0 = float(np.round(rng.uniform(0, width - w), 2))
        y0 = float(np.round(rng.uniform(0, height - h), 2))
        objects.append(ObjectInstance(
            str(rng.choice(np.asarray(labels, dtype=object))),
            BoundingBox(x0, y0, x0 + w, y0 + h),
            difficult=bool(rng.random() < 0.15),
        ))
    return AnnotationSet(image_id, width, height, tuple(objects))


def gray_domain(rng: np.random.Generator, count: int, size=(32, 48),
                name="fake", labels=("object",)) -> DomainDataset:
    """In-memory labelled gray domain with random pixels and boxes."""
    height, width = size
    records = []
    for i in range(count):
        image_id = f"{name}_{i:03d}"
        img = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
        objects = []
        for _ in range(int(rng.integers(0, 3))):
            w = int(rng.integers(3, width // 2))
            h = int(rng.integers(3, height // 2))
            x0 = int(rng.integers(0, width - w))
            y0 = int(rng.integers(0, height - h))
            objects.append(ObjectInstance(
                str(rng.choice(np.asarray(labels, dtype=object))),
                BoundingBox(x0, y0, x0 + w, y0 + h),
            ))
        ann = AnnotationSet(image_id, width, height, tuple(objects))
        records.append(DomainRecord(image_id, ann, image=img))
    return DomainDataset(name, tuple(records), labelled=True)


def domains_equal(a: DomainDataset, b: DomainDataset) -> bool:
    if a.image_ids() != b.image_ids() or a.labelled != b.labelled:
        return False
    for ra, rb in zip(a.records, b.records):
        if ra.annotation != rb.annotation:
            return False
        if not np.array_equal(ra.pixels(), rb.pixels()):
            return False
    return True

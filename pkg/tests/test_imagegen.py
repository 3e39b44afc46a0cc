import numpy as np
import pytest
from helpers import gray_domain

from thermadapt import (
    build_renewed_source,
    histogram,
    histogram_match,
    ingest_translated,
    intensity_invert,
    load_domain,
    match_histogram_counts,
    pooled_histogram,
    replicate_channels,
    save_domain,
    save_image,
    serialize_voc_annotation,
    to_grayscale,
    translate_domain,
)
from thermadapt.errors import (
    ConstantReference,
    DimensionMismatch,
    IdCollision,
    MissingTranslation,
    PipelineError,
)


class TestIntensityInvert:
    def test_endpoints_and_midpoint(self):
        img = np.array([[0, 100, 255]], dtype=np.uint8)
        assert intensity_invert(img).tolist() == [[255, 155, 0]]

    def test_involution(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            shape = (int(rng.integers(1, 64)), int(rng.integers(1, 64)))
            img = rng.integers(0, 256, size=shape, dtype=np.uint8)
            assert np.array_equal(intensity_invert(intensity_invert(img)), img)

    def test_histogram_reversal(self):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(40, 40), dtype=np.uint8)
        assert np.array_equal(histogram(intensity_invert(img)), histogram(img)[::-1])

    def test_rejects_non_uint8(self):
        with pytest.raises(ValueError):
            intensity_invert(np.zeros((4, 4), dtype=np.float32))


class TestToGrayscale:
    def test_gray_triples_map_to_themselves(self):
        values = np.arange(256, dtype=np.uint8)
        rgb = np.repeat(values[None, :, None], 3, axis=2)
        assert np.array_equal(to_grayscale(rgb), values[None, :])

    def test_pure_red(self):
        rgb = np.zeros((1, 1, 3), dtype=np.uint8)
        rgb[..., 0] = 255
        # 0.299 * 255 = 76.245, rounds down
        assert to_grayscale(rgb)[0, 0] == 76

    def test_black(self):
        assert to_grayscale(np.zeros((2, 2, 3), dtype=np.uint8)).max() == 0

    def test_idempotent_through_replication(self):
        rng = np.random.default_rng(11)
        rgb = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        once = to_grayscale(rgb)
        assert np.array_equal(to_grayscale(replicate_channels(once)), once)


class TestHistogramMatch:
    def test_self_match_is_identity(self):
        rng = np.random.default_rng(8)
        img = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
        assert np.array_equal(histogram_match(img, img), img)

    def test_constant_reference_warns_and_degenerates(self):
        img = np.full((10, 10), 10, dtype=np.uint8)
        ref = np.full((10, 10), 200, dtype=np.uint8)
        with pytest.warns(ConstantReference):
            out = histogram_match(img, ref)
        assert out.max() == out.min() == 200

    def test_two_level_remap(self):
        # half the pixels at 0, half at 255, matched to levels {100, 200}
        img = np.zeros((2, 4), dtype=np.uint8)
        img[:, 2:] = 255
        counts = np.zeros(256, dtype=np.int64)
        counts[100] = counts[200] = 50
        out = match_histogram_counts(img, counts)
        assert out[:, :2].max() == out[:, :2].min() == 100
        assert out[:, 2:].max() == out[:, 2:].min() == 200

    def test_monotone_remap(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            img = rng.integers(0, 256, size=(24, 24), dtype=np.uint8)
            ref = rng.integers(0, 256, size=(30, 18), dtype=np.uint8)
            out = histogram_match(img, ref)
            # the implied level map must never reorder intensities
            order = np.argsort(img.ravel(), kind="stable")
            mapped = out.ravel()[order]
            assert np.all(np.diff(mapped.astype(np.int16)) >= 0)

    def test_output_dimensions_follow_input(self):
        img = np.zeros((5, 9), dtype=np.uint8)
        ref = np.arange(256, dtype=np.uint8).reshape(16, 16)
        assert histogram_match(img, ref).shape == (5, 9)

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            match_histogram_counts(np.zeros((4, 4), np.uint8), np.zeros(256, np.int64))


class TestIngestTranslated:
    def _source(self, rng, n=3):
        return gray_domain(rng, n, name="vis")

    def _write_translations(self, directory, source, skip=()):
        directory.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(0)
        for rec in source.records:
            if rec.image_id in skip:
                continue
            ann = rec.annotation
            img = rng.integers(0, 256, size=(ann.height, ann.width), dtype=np.uint8)
            save_image(img, directory / f"{rec.image_id}.png")

    def test_transfers_annotations(self, tmp_path):
        source = self._source(np.random.default_rng(1))
        self._write_translations(tmp_path / "t", source)
        fake = ingest_translated(tmp_path / "t", source)
        assert fake.name == "vis_ft"
        assert len(fake) == 3
        for a, b in zip(source.records, fake.records):
            assert a.annotation == b.annotation

    def test_missing_translation_names_stem(self, tmp_path):
        source = self._source(np.random.default_rng(2))
        self._write_translations(tmp_path / "t", source, skip=("vis_001",))
        with pytest.raises(MissingTranslation, match="vis_001"):
            ingest_translated(tmp_path / "t", source)

    def test_dimension_mismatch(self, tmp_path):
        source = self._source(np.random.default_rng(3), n=1)
        (tmp_path / "t").mkdir()
        save_image(np.zeros((5, 7), dtype=np.uint8),
                   tmp_path / "t" / f"{source.records[0].image_id}.png")
        with pytest.raises(DimensionMismatch):
            ingest_translated(tmp_path / "t", source)

    def test_rejects_color_translations(self, tmp_path):
        source = self._source(np.random.default_rng(4), n=1)
        ann = source.records[0].annotation
        (tmp_path / "t").mkdir()
        save_image(np.zeros((ann.height, ann.width, 3), dtype=np.uint8),
                   tmp_path / "t" / f"{source.records[0].image_id}.png")
        with pytest.raises(PipelineError, match="single-channel"):
            ingest_translated(tmp_path / "t", source)


class TestBuildRenewedSource:
    def test_doubles_and_transfers(self):
        rng = np.random.default_rng(9)
        fake = gray_domain(rng, 4)
        renewed = build_renewed_source(fake)
        assert len(renewed) == 8
        for rec in fake.records:
            sibling = renewed.get(f"{rec.image_id}_inv")
            assert sibling.annotation == rec.annotation
            assert serialize_voc_annotation(sibling.annotation) == \
                serialize_voc_annotation(rec.annotation)
            assert np.array_equal(sibling.pixels(), intensity_invert(rec.pixels()))

    def test_empty_domain(self):
        from thermadapt import DomainDataset
        empty = DomainDataset("fake", (), labelled=True)
        assert len(build_renewed_source(empty)) == 0

    def test_output_ids_are_union_with_inv_suffix(self):
        rng = np.random.default_rng(19)
        fake = gray_domain(rng, 5)
        renewed = build_renewed_source(fake)
        expected = set(fake.image_ids()) | {f"{i}_inv" for i in fake.image_ids()}
        assert set(renewed.image_ids()) == expected

    def test_geometry_untouched(self):
        rng = np.random.default_rng(10)
        fake = gray_domain(rng, 3)
        renewed = build_renewed_source(fake)
        for rec in fake.records:
            original = [o.box for o in rec.annotation.objects]
            for suffix in ("", "_inv"):
                got = [o.box for o in renewed.get(rec.image_id + suffix).annotation.objects]
                assert got == original

    def test_id_collision(self):
        rng = np.random.default_rng(12)
        base = gray_domain(rng, 1, name="d")
        from thermadapt import DomainDataset, DomainRecord
        rec = base.records[0]
        clash = DomainRecord(f"{rec.image_id}_inv", rec.annotation, image=rec.pixels())
        domain = DomainDataset("d", (rec, clash), labelled=True)
        with pytest.raises(IdCollision):
            build_renewed_source(domain)

    def test_requires_single_channel(self):
        from thermadapt import AnnotationSet, DomainDataset, DomainRecord
        rgb = np.zeros((8, 8, 3), dtype=np.uint8)
        rec = DomainRecord("a", AnnotationSet("a", 8, 8), image=rgb)
        domain = DomainDataset("d", (rec,), labelled=True)
        with pytest.raises(PipelineError, match="single-channel"):
            build_renewed_source(domain)

    def test_renewed_domain_is_loadable(self, tmp_path):
        rng = np.random.default_rng(13)
        renewed = build_renewed_source(gray_domain(rng, 2))
        save_domain(renewed, tmp_path / "renewed")
        loaded = load_domain(tmp_path / "renewed", labelled=True)
        assert loaded.image_ids() == renewed.image_ids()


class TestTranslateDomain:
    def test_gray_mode(self):
        rng = np.random.default_rng(14)
        from thermadapt import AnnotationSet, DomainDataset, DomainRecord
        rgb = rng.integers(0, 256, size=(12, 10, 3), dtype=np.uint8)
        rec = DomainRecord("a", AnnotationSet("a", 10, 12), image=rgb)
        domain = DomainDataset("vis", (rec,), labelled=True)
        gray = translate_domain(domain, "gray")
        assert gray.name == "vis_gray"
        assert np.array_equal(gray.records[0].pixels(), to_grayscale(rgb))

    def test_histmatch_mode_uses_reference(self):
        rng = np.random.default_rng(15)
        domain = gray_domain(rng, 2)
        reference = gray_domain(rng, 2, name="tgt")
        matched = translate_domain(domain, "histmatch", pooled_histogram(reference))
        assert len(matched) == 2

    def test_histmatch_requires_reference(self):
        rng = np.random.default_rng(16)
        with pytest.raises(ValueError):
            translate_domain(gray_domain(rng, 1), "histmatch")

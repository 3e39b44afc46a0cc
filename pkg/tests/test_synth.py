import numpy as np
import pytest

from thermadapt import (
    BoundingBox,
    DetectorParams,
    SynthParams,
    build_renewed_source,
    calibrate_detector,
    detect_domain,
    generate_paired_domains,
    generate_scene,
    intensity_invert,
    iou,
    load_detector_params,
    match_detections,
    save_detector_params,
    threshold_detect,
    translate_domain,
)
from thermadapt.errors import PlacementFailure


class TestGenerateScene:
    def test_zero_objects(self):
        params = SynthParams(n_objects=(0, 0), seed=1)
        visible, thermal, ann = generate_scene(params)
        assert ann.objects == ()
        assert thermal.min() == thermal.max() == params.background
        assert visible.shape == (params.height, params.width, 3)

    def test_same_seed_identical(self):
        params = SynthParams(seed=77)
        a = generate_scene(params, "s")
        b = generate_scene(params, "s")
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])
        assert a[2] == b[2]

    def test_different_seeds_differ(self):
        a = generate_scene(SynthParams(seed=1), "s")
        b = generate_scene(SynthParams(seed=2), "s")
        assert not np.array_equal(a[1], b[1])

    def test_all_bright_mix(self):
        params = SynthParams(polarity_mix=1.0, seed=5, n_objects=(3, 5))
        _, thermal, ann = generate_scene(params)
        for o in ann.objects:
            region = thermal[int(o.box.ymin):int(o.box.ymax), int(o.box.xmin):int(o.box.xmax)]
            assert region.max() > params.background

    def test_all_dark_mix(self):
        params = SynthParams(polarity_mix=0.0, seed=5, n_objects=(3, 5))
        _, thermal, ann = generate_scene(params)
        for o in ann.objects:
            region = thermal[int(o.box.ymin):int(o.box.ymax), int(o.box.xmin):int(o.box.xmax)]
            assert region.min() < params.background

    def test_boxes_bound_drawn_pixels_exactly(self):
        params = SynthParams(seed=21, n_objects=(3, 5), noise=0)
        _, thermal, ann = generate_scene(params)
        touched = thermal != params.background
        for o in ann.objects:
            x0, y0, x1, y1 = (int(o.box.xmin), int(o.box.ymin),
                              int(o.box.xmax), int(o.box.ymax))
            cell = touched[y0:y1, x0:x1]
            assert cell.any(axis=0)[0] and cell.any(axis=0)[-1]
            assert cell.any(axis=1)[0] and cell.any(axis=1)[-1]

    def test_boxes_inside_frame_with_margin(self):
        rng = np.random.default_rng(0)
        for seed in rng.integers(0, 10_000, size=10):
            params = SynthParams(seed=int(seed), n_objects=(2, 5))
            _, _, ann = generate_scene(params)
            for o in ann.objects:
                assert o.box.xmin >= params.margin and o.box.ymin >= params.margin
                assert o.box.xmax <= params.width - params.margin
                assert o.box.ymax <= params.height - params.margin

    def test_placement_failure(self):
        params = SynthParams(width=32, height=32, n_objects=(30, 30),
                             min_size=10, max_size=12, seed=3,
                             max_place_attempts=30)
        with pytest.raises(PlacementFailure):
            generate_scene(params)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            SynthParams(polarity_mix=1.5)
        with pytest.raises(ValueError):
            SynthParams(background=250, bright_level=240)


class TestGeneratePairedDomains:
    def test_shared_ids_and_annotations(self):
        visible, thermal = generate_paired_domains(SynthParams(seed=4), 5, "pair")
        assert visible.image_ids() == thermal.image_ids()
        for v, t in zip(visible.records, thermal.records):
            assert v.annotation == t.annotation
            assert v.pixels().ndim == 3 and t.pixels().ndim == 2

    def test_per_scene_seed_derivation(self):
        base = SynthParams(seed=100)
        _, thermal = generate_paired_domains(base, 3, "d")
        from dataclasses import replace
        _, single = generate_paired_domains(replace(base, seed=102), 1, "x")
        assert np.array_equal(thermal.records[2].pixels(), single.records[0].pixels())


def square_image(size=64, corner=(20, 20), side=12, bg=20, fg=200):
    img = np.full((size, size), bg, dtype=np.uint8)
    y, x = corner
    img[y:y + side, x:x + side] = fg
    return img


class TestThresholdDetect:
    def test_blank_image(self):
        img = np.full((32, 32), 50, dtype=np.uint8)
        assert threshold_detect(img, DetectorParams(threshold=110)) == []

    def test_bright_square_exact_box(self):
        img = square_image()
        dets = threshold_detect(img, DetectorParams(threshold=110, polarity="bright"))
        assert len(dets) == 1
        assert dets[0].box == BoundingBox(20.0, 20.0, 32.0, 32.0)
        assert 0.0 <= dets[0].score <= 1.0

    def test_same_square_dark_polarity_misses(self):
        img = square_image()
        assert threshold_detect(img, DetectorParams(threshold=110, polarity="dark")) == []

    def test_min_area_filters(self):
        img = square_image(side=2)
        params = DetectorParams(threshold=110, min_area=9)
        assert threshold_detect(img, params) == []

    def test_border_touching_blob_is_background(self):
        img = np.full((32, 32), 20, dtype=np.uint8)
        img[0:10, 5:15] = 200  # touches the top edge
        assert threshold_detect(img, DetectorParams(threshold=110)) == []

    def test_four_connectivity(self):
        # two diagonal pixels share a corner, not an edge: two blobs
        img = np.full((16, 16), 0, dtype=np.uint8)
        img[5, 5] = img[6, 6] = 255
        dets = threshold_detect(img, DetectorParams(threshold=128, min_area=1))
        assert len(dets) == 2

    def test_soundness_on_noise_free_scene(self):
        params = SynthParams(seed=31, polarity_mix=1.0, n_objects=(2, 4), noise=0)
        _, thermal, ann = generate_scene(params, "s")
        mid = (params.background + params.bright_level - params.level_jitter) / 2
        dets = threshold_detect(thermal, DetectorParams(threshold=mid), "s")
        assert len(dets) == len(ann.objects)
        for d in dets:
            assert max(iou(d.box, o.box) for o in ann.objects) == 1.0

    def test_polarity_blindness(self):
        params = SynthParams(seed=32, polarity_mix=0.0, n_objects=(2, 4), noise=0)
        _, thermal, _ = generate_scene(params, "s")
        mid = (params.background + params.bright_level) / 2
        assert threshold_detect(thermal, DetectorParams(threshold=mid, polarity="bright")) == []

    def test_inversion_bridge(self):
        params = SynthParams(seed=33, polarity_mix=0.0, n_objects=(2, 4), noise=0)
        _, thermal, _ = generate_scene(params, "s")
        via_dark = threshold_detect(thermal, DetectorParams(threshold=160.0, polarity="dark"), "s")
        via_invert = threshold_detect(intensity_invert(thermal),
                                      DetectorParams(threshold=160.0, polarity="bright"), "s")
        assert via_dark == via_invert
        assert len(via_dark) > 0

    def test_both_polarity_finds_mixed_objects(self):
        params = SynthParams(seed=34, polarity_mix=0.5, n_objects=(4, 4), noise=0)
        _, thermal, ann = generate_scene(params, "s")
        dets = threshold_detect(thermal, DetectorParams(threshold=170.0, polarity="both"), "s")
        assert len(dets) == len(ann.objects)


class TestCalibrateDetector:
    def test_bright_source(self):
        visible, _ = generate_paired_domains(SynthParams(seed=41, polarity_mix=1.0), 6)
        fake = translate_domain(visible, "gray")
        params = calibrate_detector(fake)
        assert params.polarity == "bright"
        assert 0 < params.threshold < 255

    def test_renewed_source_votes_both(self):
        visible, _ = generate_paired_domains(SynthParams(seed=42, polarity_mix=1.0), 6)
        renewed = build_renewed_source(translate_domain(visible, "gray"))
        assert calibrate_detector(renewed).polarity == "both"

    def test_dark_source(self):
        _, thermal = generate_paired_domains(SynthParams(seed=43, polarity_mix=0.0), 6)
        assert calibrate_detector(thermal).polarity == "dark"

    def test_calibrated_detector_is_sound(self):
        visible, thermal = generate_paired_domains(SynthParams(seed=44, polarity_mix=1.0), 6)
        params = calibrate_detector(translate_domain(visible, "gray"))
        dets = detect_domain(thermal, params)
        anns = [r.annotation for r in thermal.records]
        n_gt = sum(len(a.objects) for a in anns)
        flags = match_detections(dets, anns, params.emit_label, 0.5)
        assert sum(1 for _, tp in flags if tp) == n_gt

    def test_target_anchoring_runs(self):
        visible, _ = generate_paired_domains(SynthParams(seed=45, polarity_mix=1.0), 4)
        _, target = generate_paired_domains(SynthParams(seed=46, polarity_mix=1.0), 4, "t")
        fake = translate_domain(visible, "gray")
        adapted = calibrate_detector(fake, target=target)
        assert adapted.polarity == "bright"
        dets = detect_domain(target, adapted)
        assert len(dets) > 0

    def test_emit_label_follows_majority_class(self):
        visible, _ = generate_paired_domains(
            SynthParams(seed=47, classes=("person",)), 4)
        assert calibrate_detector(translate_domain(visible, "gray")).emit_label == "person"


class TestDetectorParamsFile:
    def test_round_trip(self, tmp_path):
        params = DetectorParams(threshold=171.5, polarity="both", min_area=9,
                                emit_label="person")
        save_detector_params(params, tmp_path / "model.json")
        assert load_detector_params(tmp_path / "model.json") == params

    def test_validation(self):
        with pytest.raises(ValueError):
            DetectorParams(threshold=300)
        with pytest.raises(ValueError):
            DetectorParams(threshold=100, polarity="sideways")
        with pytest.raises(ValueError):
            DetectorParams(threshold=100, min_area=0)

"""Scoring a detector with AP and mAP
=====================================

Detections are matched to ground truth greedily in score-descending order
(IoU at or above the threshold, one match per ground-truth box), the
prefix sweep gives a precision-recall curve, and AP integrates its
precision envelope.  mAP averages AP over the classes that have ground
truth.
"""

from thermadapt import (
    DetectorParams,
    EvalParams,
    SynthParams,
    average_precision,
    detect_domain,
    evaluate,
    generate_paired_domains,
    match_detections,
    precision_recall_curve,
    render_table,
)

_, target = generate_paired_domains(
    SynthParams(seed=21, polarity_mix=1.0, classes=("person", "car")), count=8)

# A deliberately loose detector: bright blobs only, low threshold.
params = DetectorParams(threshold=170.0, polarity="bright", emit_label="person")
detections = detect_domain(target, params)
print(f"{len(detections)} detections on {len(target)} images")

# The pieces compose: match -> sweep -> AP.
annotations = [r.annotation for r in target.records]
flags = match_detections(detections, annotations, "person", iou_threshold=0.5)
n_gt = sum(1 for a in annotations for o in a.objects if o.class_label == "person")
curve = precision_recall_curve(flags, n_gt)
print("sweep points (recall, precision):", [(round(r, 2), round(p, 2))
                                            for r, p in curve.points()][:6], "...")
print("person AP (all points):   %.4f" % average_precision(curve, "all_points"))
print("person AP (eleven point): %.4f" % average_precision(curve, "eleven_point"))

# Or in one call, over every class, with the standard report.
report = evaluate(detections, target, EvalParams(iou_threshold=0.5))
print()
print(render_table(report))
print("undefined:", report.undefined_classes, " unknown:", report.unknown_classes)

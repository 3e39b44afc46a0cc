"""Visible-to-thermal domain adaptation data pipeline.

Builds augmented fake-thermal source domains (translation stand-ins plus
8-bit intensity inversion) with annotations preserved, scores detectors
with per-class AP and mAP, and orchestrates external neural stages behind
a file-exchange hook contract so ablation grids run end-to-end.
"""

from . import errors
from .ablation import (
    AblationReport,
    AblationRow,
    PipelineConfig,
    build_source_for,
    load_ablation_config,
    plan_grid,
    render_report,
    run_ablation,
    run_pipeline,
    run_stage_hook,
)
from .dataset import (
    AnnotationSet,
    BoundingBox,
    DomainDataset,
    DomainRecord,
    ObjectInstance,
    SpectralPairing,
    load_domain,
    load_image,
    pair_spectral,
    parse_voc_annotation,
    save_domain,
    save_image,
    serialize_voc_annotation,
)
from .imagegen import (
    build_renewed_source,
    histogram,
    histogram_match,
    ingest_translated,
    intensity_invert,
    match_histogram_counts,
    pooled_histogram,
    replicate_channels,
    to_grayscale,
    translate_domain,
)
from .metrics import (
    Detection,
    EvalParams,
    EvalReport,
    PRCurve,
    average_precision,
    evaluate,
    iou,
    load_detections,
    match_detections,
    mean_ap,
    precision_recall_curve,
    render_table,
    save_detections,
)
from .synth import (
    DetectorParams,
    SynthParams,
    calibrate_detector,
    detect_domain,
    generate_paired_domains,
    generate_scene,
    load_detector_params,
    save_detector_params,
    threshold_detect,
)

__version__ = "0.1.0"

__all__ = [
    "AblationReport",
    "AblationRow",
    "AnnotationSet",
    "BoundingBox",
    "Detection",
    "DetectorParams",
    "DomainDataset",
    "DomainRecord",
    "EvalParams",
    "EvalReport",
    "ObjectInstance",
    "PRCurve",
    "PipelineConfig",
    "SpectralPairing",
    "SynthParams",
    "average_precision",
    "build_renewed_source",
    "build_source_for",
    "calibrate_detector",
    "detect_domain",
    "errors",
    "evaluate",
    "generate_paired_domains",
    "generate_scene",
    "histogram",
    "histogram_match",
    "ingest_translated",
    "intensity_invert",
    "iou",
    "load_ablation_config",
    "load_detections",
    "load_detector_params",
    "load_domain",
    "load_image",
    "match_detections",
    "match_histogram_counts",
    "mean_ap",
    "pair_spectral",
    "parse_voc_annotation",
    "plan_grid",
    "pooled_histogram",
    "precision_recall_curve",
    "render_report",
    "render_table",
    "replicate_channels",
    "run_ablation",
    "run_pipeline",
    "run_stage_hook",
    "save_detections",
    "save_detector_params",
    "save_domain",
    "save_image",
    "serialize_voc_annotation",
    "threshold_detect",
    "to_grayscale",
    "translate_domain",
]

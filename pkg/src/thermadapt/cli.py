"""Command-line entry point; every subcommand is a thin adapter over the
library API.

Exit codes: 0 success, 1 domain errors (bad data, failing hooks), 2 usage
errors.  Randomized subcommands require an explicit --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import ablation, imagegen, metrics, synth
from .dataset import load_domain, load_image, save_domain, save_image
from .errors import PipelineError


def _out_file(path: Path, default_name: str) -> Path:
    """Treat ``path`` as a file when it has a .json suffix, else a directory."""
    if path.suffix == ".json":
        return path
    return path / default_name


def _load_detector_params(args) -> synth.DetectorParams:
    if args.model is not None:
        return synth.load_detector_params(args.model)
    if args.threshold is None:
        raise PipelineError("provide --model or --threshold (with --polarity/--min-area)")
    return synth.DetectorParams(
        threshold=args.threshold,
        polarity=args.polarity,
        min_area=args.min_area,
        emit_label=args.label,
    )


def _cmd_synth(args) -> int:
    params = synth.SynthParams(
        width=args.width,
        height=args.height,
        n_objects=(args.min_objects, args.max_objects),
        polarity_mix=args.polarity_mix,
        background=args.background,
        bright_level=args.bright_level,
        dark_level=args.dark_level,
        noise=args.noise,
        classes=tuple(args.classes.split(",")),
        min_size=args.min_size,
        max_size=args.max_size,
        seed=args.seed,
    )
    visible, thermal = synth.generate_paired_domains(params, args.count, args.prefix)
    out = Path(args.out)
    save_domain(visible, out / "visible")
    save_domain(thermal, out / "thermal")
    print(f"wrote {args.count} paired scenes under {out}")
    return 0


def _cmd_translate(args) -> int:
    source = load_domain(args.source, labelled=True)
    if args.mode == "gray":
        domain = imagegen.translate_domain(source, "gray")
    elif args.mode == "histmatch":
        if args.reference is None:
            raise PipelineError("histmatch translation needs --reference <target domain dir>")
        reference = load_domain(args.reference, labelled=False)
        domain = imagegen.translate_domain(source, "histmatch",
                                           imagegen.pooled_histogram(reference))
    else:  # external
        if args.translated is None:
            raise PipelineError("external translation needs --translated <images dir>")
        domain = imagegen.ingest_translated(args.translated, source)
    save_domain(domain, args.out)
    print(f"wrote {len(domain)} translated images to {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    source = load_domain(args.source, labelled=True)
    domain = imagegen.ingest_translated(args.translated, source)
    save_domain(domain, args.out)
    print(f"ingested {len(domain)} translated images into {args.out}")
    return 0


def _cmd_invert(args) -> int:
    img = load_image(args.input)
    save_image(imagegen.intensity_invert(img), args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_build_renewed(args) -> int:
    source = load_domain(args.source, labelled=True)
    renewed = imagegen.build_renewed_source(source)
    save_domain(renewed, args.out)
    print(f"renewed domain: {len(source)} -> {len(renewed)} records at {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    source = load_domain(args.source, labelled=True)
    target = load_domain(args.target, labelled=False) if args.target else None
    params = synth.calibrate_detector(source, target, args.min_area)
    out = _out_file(Path(args.out), "model.json")
    synth.save_detector_params(params, out)
    print(f"calibrated: threshold={params.threshold:.1f} polarity={params.polarity} "
          f"min_area={params.min_area} -> {out}")
    return 0


def _cmd_detect(args) -> int:
    domain = load_domain(args.domain, labelled=False)
    params = _load_detector_params(args)
    detections = synth.detect_domain(domain, params)
    out = _out_file(Path(args.out), "detections.json")
    metrics.save_detections(detections, out)
    print(f"{len(detections)} detections over {len(domain)} images -> {out}")
    return 0


def _cmd_eval(args) -> int:
    target = load_domain(args.target, labelled=True)
    params = metrics.EvalParams(
        iou_threshold=args.iou,
        mode=args.mode,
        legacy_area=args.legacy_area,
        classes=tuple(args.classes.split(",")) if args.classes else None,
    )
    report = metrics.evaluate(args.detections, target, params)
    out = Path(args.out) if args.out else \
        Path(args.detections).parent / f"{Path(args.detections).stem}_report.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json() + "\n")
    print(metrics.render_table(report))
    print(f"report written to {out}")
    return 0


def _cmd_ablate(args) -> int:
    configs, jobs = ablation.load_ablation_config(args.config)
    if args.jobs is not None:
        jobs = args.jobs
    report = ablation.run_ablation(configs, jobs=jobs)
    out_dir = Path(configs[0].out_dir).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ablation.json").write_text(report.to_json() + "\n")
    table = ablation.render_report(report)
    (out_dir / "ablation.txt").write_text(table + "\n")
    print(table)
    failed = sum(1 for row in report.rows if row.status != "ok")
    print(f"{len(report.rows)} rows, {failed} failed; results under {out_dir}")
    return 0 if failed == 0 else 1


def _cmd_report(args) -> int:
    data = json.loads(Path(args.input).read_text())
    if "rows" in data:
        print(ablation.render_report(data))
    elif "per_class_ap" in data:
        classes = data["params"]["classes"] or sorted(data["per_class_ap"])
        header = [*classes, "mAP"]
        cells = [
            metrics.format_percent(data["per_class_ap"][c]) if c in data["per_class_ap"] else "—"
            for c in classes
        ] + [metrics.format_percent(data["map"])]
        widths = [max(len(h), len(v)) for h, v in zip(header, cells)]
        print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        print("  ".join(v.rjust(w) for v, w in zip(cells, widths)))
    else:
        raise PipelineError(f"{args.input}: neither an ablation report nor an eval report")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermadapt",
        description="Fake-thermal source-domain generation and detector evaluation pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("synth", help="generate paired visible/thermal synthetic domains")
    p.add_argument("--out", required=True, help="output root (visible/ and thermal/ inside)")
    p.add_argument("--count", type=int, default=12, help="number of scenes")
    p.add_argument("--seed", type=int, required=True, help="base RNG seed (scene i uses seed+i)")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--min-objects", type=int, default=2)
    p.add_argument("--max-objects", type=int, default=4)
    p.add_argument("--polarity-mix", type=float, default=1.0,
                   help="fraction of objects brighter than background in the thermal rendition")
    p.add_argument("--background", type=int, default=128)
    p.add_argument("--bright-level", type=int, default=220)
    p.add_argument("--dark-level", type=int, default=35)
    p.add_argument("--noise", type=int, default=0)
    p.add_argument("--classes", default="object", help="comma-separated class labels")
    p.add_argument("--min-size", type=int, default=10)
    p.add_argument("--max-size", type=int, default=28)
    p.add_argument("--prefix", default="scene")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("translate", help="produce a fake-thermal domain from a visible one")
    p.add_argument("--mode", required=True, choices=("gray", "histmatch", "external"))
    p.add_argument("--source", required=True, help="labelled visible domain directory")
    p.add_argument("--out", required=True)
    p.add_argument("--reference", help="target domain directory (histmatch reference)")
    p.add_argument("--translated", help="externally translated images directory")
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("ingest", help="adopt externally translated images with source annotations")
    p.add_argument("--source", required=True, help="labelled visible domain directory")
    p.add_argument("--translated", required=True, help="flat folder of <image_id>.png")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("invert", help="intensity-invert a single 8-bit image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=_cmd_invert)

    p = sub.add_parser("build-renewed", help="union a fake-thermal domain with inverted copies")
    p.add_argument("--source", required=True, help="labelled fake-thermal domain directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_renewed)

    p = sub.add_parser("calibrate", help="fit threshold-detector params from a labelled domain")
    p.add_argument("--source", required=True, help="labelled source domain directory")
    p.add_argument("--target", help="unlabelled target domain directory (re-adaptation)")
    p.add_argument("--out", required=True, help="model.json path or directory")
    p.add_argument("--min-area", type=int, default=None)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("detect", help="run the built-in threshold detector over a domain")
    p.add_argument("--domain", required=True, help="domain directory (images only are read)")
    p.add_argument("--out", required=True, help="detections.json path or directory")
    p.add_argument("--model", help="detector params JSON (as written by calibrate)")
    p.add_argument("--threshold", type=float, help="explicit threshold in [0, 255]")
    p.add_argument("--polarity", choices=("bright", "dark", "both"), default="bright")
    p.add_argument("--min-area", type=int, default=4)
    p.add_argument("--label", default="object", help="class label to emit")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("eval", help="score a detections file against a labelled domain")
    p.add_argument("--detections", required=True)
    p.add_argument("--target", required=True, help="labelled target domain directory")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--mode", choices=("all_points", "eleven_point"), default="all_points")
    p.add_argument("--legacy-area", action="store_true",
                   help="classic +1-per-axis box areas in IoU")
    p.add_argument("--classes", help="comma-separated class list (default: target's labels)")
    p.add_argument("--out", help="report JSON path (default: next to the detections file)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="run a configuration grid from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=None, help="run rows concurrently")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("report", help="re-render a stored eval or ablation report")
    p.add_argument("--input", required=True, help="report JSON file")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())

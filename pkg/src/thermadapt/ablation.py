"""Configuration-grid orchestration.

Each row of the grid is one pipeline configuration (translation mode x
intensity inversion x re-adaptation).  Neural stages run as external
processes behind a file-exchange contract: a command template with
{SOURCE_DIR}/{TARGET_DIR}/{OUT_DIR}/{CONFIG} placeholders succeeds iff it
exits 0 and its contract artifact exists.  Intermediate domains are
persisted under each row's output directory so rows are independently
auditable; a failing row never disturbs the others.

Stage contract artifacts:
  translate  <OUT_DIR>/<image_id>.png for every source id
  train      <OUT_DIR>/model.json (detector parameters; fit on source)
  readapt    <OUT_DIR>/model.json (fit on source plus unlabelled target)
  detect     <OUT_DIR>/detections.json
"""

from __future__ import annotations

import itertools
import json
import re
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .dataset import DomainDataset, load_domain, save_domain
from .errors import (
    HookFailed,
    InvalidCombination,
    MissingOutput,
    PipelineError,
    UnresolvedPlaceholder,
)
from .imagegen import build_renewed_source, ingest_translated, pooled_histogram, translate_domain
from .metrics import EvalParams, EvalReport, evaluate, format_percent

TRANSLATION_MODES = ("none", "gray", "histmatch", "external")
HOOK_PLACEHOLDERS = ("SOURCE_DIR", "TARGET_DIR", "OUT_DIR", "CONFIG")

_PLACEHOLDER_RE = re.compile(r"\{([A-Z][A-Z0-9_]*)\}")


@dataclass(frozen=True)
class PipelineConfig:
    """One ablation row: what to build, which hooks to run, where."""

    translation: str
    inversion: bool
    readapt: bool
    out_dir: Path
    stage_hooks: Mapping[str, str] = field(default_factory=dict)
    visible_dir: Path | None = None
    target_dir: Path | None = None
    target_test_dir: Path | None = None
    translated_dir: Path | None = None
    detector_config: Path | None = None
    eval_params: EvalParams = EvalParams()
    seed: int = 0
    timeout: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.translation not in TRANSLATION_MODES:
            raise ValueError(f"unknown translation mode {self.translation!r}")
        for name in ("out_dir", "visible_dir", "target_dir", "target_test_dir",
                     "translated_dir", "detector_config"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Path(value))
        if not self.label:
            object.__setattr__(self, "label", config_label(
                self.translation, self.inversion, self.readapt))

    def validate(self) -> None:
        """Reject rows that require an absent hook or path."""
        if self.translation == "external" and self.translated_dir is None \
                and "translate" not in self.stage_hooks:
            raise InvalidCombination(
                f"row {self.label!r}: external translation needs a translated-images "
                "directory or a translate hook"
            )
        if "detect" not in self.stage_hooks:
            raise InvalidCombination(f"row {self.label!r}: a detect hook is required")
        if self.readapt and "readapt" not in self.stage_hooks:
            raise InvalidCombination(f"row {self.label!r}: re-adaptation needs a readapt hook")

    def summary(self) -> dict:
        return {
            "label": self.label,
            "translation": self.translation,
            "inversion": self.inversion,
            "readapt": self.readapt,
            "seed": self.seed,
        }


def config_label(translation: str, inversion: bool, readapt: bool) -> str:
    parts = [translation]
    if inversion:
        parts.append("inv")
    if readapt:
        parts.append("ra")
    return "+".join(parts)


@dataclass
class AblationRow:
    config: PipelineConfig
    status: str  # "ok" | "failed"
    report: EvalReport | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config.summary(),
            "status": self.status,
            "error": self.error,
            "report": self.report.to_dict() if self.report is not None else None,
        }


@dataclass
class AblationReport:
    rows: list[AblationRow]

    def to_dict(self) -> dict:
        return {"rows": [row.to_dict() for row in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class HookResult:
    stage: str
    command: tuple[str, ...]
    artifacts: tuple[Path, ...]


def plan_grid(
    axes: Mapping[str, Sequence],
    stage_hooks: Mapping[str, str] | None = None,
    exclude: Sequence[Mapping] = (),
    *,
    out_dir: Path | str = ".",
    visible_dir: Path | str | None = None,
    target_dir: Path | str | None = None,
    target_test_dir: Path | str | None = None,
    translated_dir: Path | str | None = None,
    detector_config: Path | str | None = None,
    eval_params: EvalParams = EvalParams(),
    seed: int = 0,
    timeout: float | None = None,
) -> list[PipelineConfig]:
    """Expand translation/inversion/readapt axes into pipeline configs.

    Iterates translation (outer), then readapt, then inversion, collapses
    the inversion axis for untranslated rows (inversion applies to
    translated single-channel images only), and drops combinations matched
    by an ``exclude`` entry.  Rows requiring an absent hook raise
    InvalidCombination.
    """
    translations = list(axes.get("translation", ["none"]))
    inversions = [bool(v) for v in axes.get("inversion", [False])]
    readapts = [bool(v) for v in axes.get("readapt", [False])]
    if not translations or not inversions or not readapts:
        raise ValueError("every axis needs at least one value")

    combos: list[tuple[str, bool, bool]] = []
    for translation, readapt, inversion in itertools.product(translations, readapts, inversions):
        if translation == "none":
            inversion = False
        combo = (translation, inversion, readapt)
        if combo not in combos:
            combos.append(combo)

    def excluded(translation: str, inversion: bool, readapt: bool) -> bool:
        row = {"translation": translation, "inversion": inversion, "readapt": readapt}
        return any(all(row.get(k) == v for k, v in entry.items()) for entry in exclude)

    out_dir = Path(out_dir)
    configs = []
    index = 0
    for translation, inversion, readapt in combos:
        if excluded(translation, inversion, readapt):
            continue
        label = config_label(translation, inversion, readapt)
        config = PipelineConfig(
            translation=translation,
            inversion=inversion,
            readapt=readapt,
            out_dir=out_dir / f"row_{index:02d}_{label.replace('+', '_')}",
            stage_hooks=dict(stage_hooks or {}),
            visible_dir=Path(visible_dir) if visible_dir else None,
            target_dir=Path(target_dir) if target_dir else None,
            target_test_dir=Path(target_test_dir) if target_test_dir else None,
            translated_dir=Path(translated_dir) if translated_dir else None,
            detector_config=Path(detector_config) if detector_config else None,
            eval_params=eval_params,
            seed=seed,
            timeout=timeout,
            label=label,
        )
        config.validate()
        configs.append(config)
        index += 1
    return configs


def run_stage_hook(
    template: str,
    bindings: Mapping[str, Path | str],
    artifacts: Sequence[Path] = (),
    timeout: float | None = None,
    stage: str = "stage",
) -> HookResult:
    """Run one external stage command.

    Success means exit status 0 *and* every declared artifact exists;
    anything else raises HookFailed or MissingOutput.  Placeholders are
    substituted per shell token, so paths with spaces survive.
    """
    referenced = set(_PLACEHOLDER_RE.findall(template))
    unresolved = referenced - set(bindings)
    if unresolved:
        raise UnresolvedPlaceholder(
            f"{stage}: no binding for {{{sorted(unresolved)[0]}}} in {template!r}"
        )
    if "OUT_DIR" in bindings:
        Path(bindings["OUT_DIR"]).mkdir(parents=True, exist_ok=True)

    argv = [
        _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), token)
        for token in shlex.split(template)
    ]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise HookFailed(f"{stage}: timed out after {timeout:g}s") from exc
    except OSError as exc:
        raise HookFailed(f"{stage}: {exc}") from exc
    if proc.returncode != 0:
        detail = proc.stderr.strip().splitlines()
        suffix = f" ({detail[-1]})" if detail else ""
        raise HookFailed(f"{stage}: exit status {proc.returncode}{suffix}")

    missing = [p for p in artifacts if not Path(p).exists()]
    if missing:
        raise MissingOutput(f"{stage}: hook exited 0 but {missing[0]} was not produced")
    return HookResult(stage, tuple(argv), tuple(Path(p) for p in artifacts))


def build_source_for(
    config: PipelineConfig,
    visible: DomainDataset,
    target: DomainDataset | None = None,
) -> DomainDataset:
    """Assemble the (possibly renewed) source domain for one row."""
    translation = config.translation
    if translation == "none":
        source = visible
    elif translation == "gray":
        source = translate_domain(visible, "gray")
    elif translation == "histmatch":
        if target is None:
            raise InvalidCombination("histmatch translation needs the target domain as reference")
        source = translate_domain(visible, "histmatch", pooled_histogram(target))
    elif translation == "external":
        translated_dir = config.translated_dir
        if translated_dir is None:
            template = config.stage_hooks.get("translate")
            if template is None:
                raise InvalidCombination(
                    "external translation needs a translated-images directory or a translate hook"
                )
            translated_dir = config.out_dir / "translated"
            bindings: dict[str, Path | str] = {"OUT_DIR": translated_dir}
            if config.visible_dir is not None:
                bindings["SOURCE_DIR"] = config.visible_dir
            if config.target_dir is not None:
                bindings["TARGET_DIR"] = config.target_dir
            expected = [translated_dir / f"{rid}.png" for rid in visible.image_ids()]
            run_stage_hook(template, bindings, expected, config.timeout, stage="translate")
        source = ingest_translated(translated_dir, visible)
    else:
        raise ValueError(f"unknown translation mode {translation!r}")

    if config.inversion:
        source = build_renewed_source(source)
    return source


def run_pipeline(
    config: PipelineConfig,
    visible: DomainDataset,
    target: DomainDataset,
) -> EvalReport:
    """Execute one row: build source, run stage hooks, evaluate.

    ``target`` is the labelled domain the detections are scored against;
    hooks only ever see the directories named in the config.
    """
    config.validate()
    row_dir = Path(config.out_dir)
    row_dir.mkdir(parents=True, exist_ok=True)

    source = build_source_for(config, visible, target)
    source_dir = save_domain(source, row_dir / "source")

    # train / readapt stage: produces the detector model consumed via {CONFIG}
    model_path: Path | None = None
    stage = "readapt" if config.readapt else "train"
    template = config.stage_hooks.get(stage)
    if template is not None:
        stage_dir = row_dir / stage
        bindings: dict[str, Path | str] = {"SOURCE_DIR": source_dir, "OUT_DIR": stage_dir}
        if config.target_dir is not None:
            bindings["TARGET_DIR"] = config.target_dir
        model_path = stage_dir / "model.json"
        run_stage_hook(template, bindings, [model_path], config.timeout, stage=stage)

    detect_dir = row_dir / "detect"
    target_dir = config.target_test_dir or config.target_dir
    if target_dir is None:
        raise InvalidCombination("no target directory configured for the detect stage")
    bindings = {"TARGET_DIR": target_dir, "OUT_DIR": detect_dir}
    config_path = model_path or config.detector_config
    if config_path is not None:
        bindings["CONFIG"] = config_path
    detections_path = detect_dir / "detections.json"
    run_stage_hook(config.stage_hooks["detect"], bindings, [detections_path],
                   config.timeout, stage="detect")

    report = evaluate(detections_path, target, config.eval_params)
    (row_dir / "report.json").write_text(report.to_json() + "\n")
    return report


def run_ablation(
    configs: Sequence[PipelineConfig],
    visible: DomainDataset | None = None,
    target: DomainDataset | None = None,
    jobs: int = 1,
) -> AblationReport:
    """Run every row; a failing row is recorded and the rest still run.

    Rows execute sequentially by default; ``jobs > 1`` runs them
    concurrently (each row already writes under its own out_dir).
    """
    if not configs:
        raise ValueError("no configurations to run")
    first = configs[0]
    if visible is None:
        if first.visible_dir is None:
            raise InvalidCombination("no visible domain given and no visible_dir configured")
        visible = load_domain(first.visible_dir, labelled=True)
    if target is None:
        eval_dir = first.target_test_dir or first.target_dir
        if eval_dir is None:
            raise InvalidCombination("no target domain given and no target_dir configured")
        target = load_domain(eval_dir, labelled=True)

    def run_row(config: PipelineConfig) -> AblationRow:
        try:
            return AblationRow(config, "ok", run_pipeline(config, visible, target))
        except Exception as exc:  # a broken row must not sink the others
            return AblationRow(config, "failed", None, f"{type(exc).__name__}: {exc}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_row, configs))
    else:
        rows = [run_row(config) for config in configs]
    return AblationReport(rows)


def render_report(report: AblationReport | dict) -> str:
    """Aligned text table over the rows: axes, per-class AP, mAP.

    Percentages are rounded to one decimal; failed rows render with em-dash
    cells and the failure note.  Full precision lives in the JSON side
    (AblationReport.to_json).
    """
    data = report.to_dict() if isinstance(report, AblationReport) else report
    rows = data["rows"]
    if not rows:
        raise ValueError("nothing to render")

    classes: list[str] = []
    for row in rows:
        if row["report"]:
            for name in row["report"]["params"]["classes"] or row["report"]["per_class_ap"]:
                if name not in classes:
                    classes.append(name)

    header = ["Image trans", "Int-Inv", "R-A", *classes, "mAP", ""]
    lines = [header]
    for row in rows:
        cfg = row["config"]
        cells = [cfg["translation"],
                 "yes" if cfg["inversion"] else "-",
                 "yes" if cfg["readapt"] else "-"]
        if row["status"] == "ok":
            rep = row["report"]
            for name in classes:
                ap = rep["per_class_ap"].get(name)
                cells.append(format_percent(ap) if ap is not None else "—")
            cells.append(format_percent(rep["map"]))
            cells.append("")
        else:
            cells.extend(["—"] * (len(classes) + 1))
            cells.append(f"failed: {row['error']}")
        lines.append(cells)

    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    rendered = []
    for line in lines:
        rendered.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    return "\n".join(rendered)


def load_ablation_config(path: str | Path) -> tuple[list[PipelineConfig], int]:
    """Parse the single-JSON grid description; relative paths resolve
    against the config file's directory.  Returns (configs, jobs)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise PipelineError(f"{path}: not valid JSON: {exc}") from exc

    base = path.parent

    def resolve(key: str) -> Path | None:
        value = data.get("paths", {}).get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    eval_cfg = data.get("eval", {})
    classes = eval_cfg.get("classes")
    eval_params = EvalParams(
        iou_threshold=float(eval_cfg.get("iou_threshold", 0.5)),
        mode=str(eval_cfg.get("mode", "all_points")),
        legacy_area=bool(eval_cfg.get("legacy_area", False)),
        classes=tuple(classes) if classes else None,
    )

    out_dir = resolve("out") or base / "ablation_out"
    detector_config = None
    if data.get("detector"):
        out_dir.mkdir(parents=True, exist_ok=True)
        detector_config = out_dir / "detector.json"
        detector_config.write_text(json.dumps(data["detector"], indent=2) + "\n")

    configs = plan_grid(
        data.get("axes", {}),
        data.get("hooks", {}),
        data.get("exclude", ()),
        out_dir=out_dir,
        visible_dir=resolve("visible"),
        target_dir=resolve("target"),
        target_test_dir=resolve("target_test"),
        translated_dir=resolve("translated"),
        detector_config=detector_config,
        eval_params=eval_params,
        seed=int(data.get("seed", 0)),
        timeout=data.get("timeout"),
    )
    return configs, int(data.get("jobs", 1))

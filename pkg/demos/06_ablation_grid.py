"""Running an ablation grid
===========================

Each grid row is one configuration of (translation, intensity inversion,
re-adaptation).  Training and detection run as external processes behind a
file-exchange contract; here the package's own CLI plays both stages, so
the grid is fully self-contained.  A failing row is recorded and the rest
still run.
"""

import sys
from pathlib import Path

from thermadapt import (
    SynthParams,
    generate_paired_domains,
    plan_grid,
    render_report,
    run_ablation,
    save_domain,
)

out = Path("demo_out/06_ablation")
py = sys.executable

visible, _ = generate_paired_domains(
    SynthParams(seed=5, polarity_mix=1.0), count=5, prefix="src")
_, target = generate_paired_domains(
    SynthParams(seed=55, polarity_mix=0.5), count=6, prefix="tgt")
save_domain(visible, out / "visible")
save_domain(target, out / "target")

# The hook seam: command templates with {SOURCE_DIR}/{TARGET_DIR}/{OUT_DIR}/
# {CONFIG} placeholders.  Success = exit 0 plus the contract artifact.
hooks = {
    "train": f"{py} -m thermadapt calibrate --source {{SOURCE_DIR}} --out {{OUT_DIR}}",
    "readapt": (f"{py} -m thermadapt calibrate --source {{SOURCE_DIR}} "
                f"--target {{TARGET_DIR}} --out {{OUT_DIR}}"),
    "detect": (f"{py} -m thermadapt detect --domain {{TARGET_DIR}} "
               f"--model {{CONFIG}} --out {{OUT_DIR}}"),
}

configs = plan_grid(
    {"translation": ["none", "gray"], "inversion": [False, True], "readapt": [False, True]},
    hooks,
    out_dir=out / "rows",
    visible_dir=out / "visible",
    target_dir=out / "target",
)
print(f"planned {len(configs)} rows:", [c.label for c in configs])
# note the collapsed inversion axis on the untranslated rows

report = run_ablation(configs)
print()
print(render_report(report))

(out / "ablation.json").write_text(report.to_json() + "\n")
print(f"\nfull-precision report: {out / 'ablation.json'}")

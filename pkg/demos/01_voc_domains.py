"""Annotated image domains on disk
==================================

A domain is a folder of 8-bit PNGs plus VOC-style XML annotations.  This
demo builds a tiny visible/thermal pair from the synthetic generator,
saves both in the standard layout, reloads them, and pairs them by id.
"""

from pathlib import Path

from thermadapt import (
    SynthParams,
    generate_paired_domains,
    load_domain,
    pair_spectral,
    parse_voc_annotation,
    save_domain,
    serialize_voc_annotation,
)

out = Path("demo_out/01_voc_domains")

# Two spectra of the same scenes: identical ids, identical annotations.
visible, thermal = generate_paired_domains(SynthParams(seed=7), count=3, prefix="frame")
save_domain(visible, out / "visible")
save_domain(thermal, out / "thermal")
print(f"wrote {len(visible)} scene pairs under {out}")

# The XML is plain VOC: filename, size, one <object> per instance.
xml_text = (out / "visible" / "annotations" / "frame_0000.xml").read_text()
print("\n--- frame_0000.xml ---")
print(xml_text)

# Round trip: serialize(parse(x)) is structurally the identity.
ann = parse_voc_annotation(xml_text)
assert parse_voc_annotation(serialize_voc_annotation(ann)) == ann
print(f"parsed {len(ann.objects)} objects; round trip intact")

# Loading is deterministic and sorted by image id.
reloaded = load_domain(out / "visible", labelled=True)
print("ids:", reloaded.image_ids())

# Pairing matches by identical id and reports leftovers instead of
# dropping them.
pairing = pair_spectral(reloaded, load_domain(out / "thermal", labelled=True))
print(f"{len(pairing.pairs)} pairs, unpaired: {pairing.only_visible} / {pairing.only_thermal}")

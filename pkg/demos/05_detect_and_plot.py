#!/usr/bin/env python3
"""Run the whole toolchain through the command line: synthesize a corpus,
train, detect over one file, and emit the spectrogram figure.

Everything here shells through ``whalecall.cli.main`` with the same arguments
the installed ``whalecall`` command accepts.
"""

from pathlib import Path

from whalecall.cli import main

OUT = Path(__file__).resolve().parent / "demo_output" / "cli_run"
OUT.mkdir(parents=True, exist_ok=True)
corpus = OUT / "corpus"
model = OUT / "model.wcnn"

steps = [
    ["synth", "--out", str(corpus), "--recordings", "6", "--seed", "11",
     "--set", "synth.duration_seconds=40"],
    ["train", "--data", str(corpus), "--model-out", str(model),
     "--epochs", "4", "--seed", "0", "--history", str(OUT / "history.jsonl")],
    ["detect", "--model", str(model), "--wav", str(corpus / "rec_00.wav"),
     "--out", str(OUT / "rec_00.detections.csv")],
    ["plot", "--wav", str(corpus / "rec_00.wav"),
     "--annotations", str(corpus / "rec_00.annotations.csv"),
     "--detections", str(OUT / "rec_00.detections.csv"),
     "--out-image", str(OUT / "rec_00.ppm"),
     "--out-csv", str(OUT / "rec_00.spectrogram.csv")],
]

for argv in steps:
    print(f"\n$ whalecall {' '.join(argv)}")
    code = main(argv)
    if code != 0:
        raise SystemExit(f"step failed with exit code {code}")

print(f"\nartifacts in {OUT}:")
for path in sorted(OUT.rglob("*")):
    if path.is_file():
        print(f"  {path.relative_to(OUT)}  ({path.stat().st_size} bytes)")
print("\nthe .ppm figure stacks the annotation band (green), the prediction "
      "band (orange), and the spectrogram (top row = highest frequency).")

#!/usr/bin/env python3
"""Generate one synthetic recording and look at what the annotator "saw".

The generator drops a handful of repeated whale-like calls (linearly swept
tonal units on a fixed 1.5 s period) into white noise plus low-frequency
rumble. Complete calls are annotated positive over their exact span;
truncated calls are annotated negative, the way an expert building a call
dictionary would, even though the audio clearly contains call energy.
"""

from pathlib import Path

import numpy as np

from whalecall import write_annotations, write_wav
from whalecall.synth import SynthConfig, generate_recording, write_ground_truth

OUT = Path(__file__).resolve().parent / "demo_output"
OUT.mkdir(exist_ok=True)

config = SynthConfig(seed=2, partial_call_probability=0.5)
recording, track, ground_truth = generate_recording(
    config, np.random.default_rng(config.seed), "demo01"
)

print(f"recording: {recording.n_samples} samples at {recording.sample_rate} Hz "
      f"({recording.duration_seconds:.0f} s)")
print(f"peak amplitude {np.abs(recording.samples).max():.3f}")

print("\nexpert-style annotation (complete calls only):")
for start, end in track.positive_intervals():
    print(f"  positive [{start:>7}, {end:>7})  = "
          f"{start / 2000:6.1f} .. {end / 2000:6.1f} s")

active = [i for i, a in enumerate(ground_truth) if a]
print(f"\nground truth flags {len(active)} of {len(ground_truth)} windows as "
      f"call-active: {active}")

positive_windows = [
    i for i in range(len(ground_truth))
    if track.fully_positive(i * 3000, i * 3000 + 5000)
]
print(f"windows fully covered by a complete call (annotated positive): "
      f"{positive_windows}")
print("the difference is partial coverage: call edges and truncated calls,")
print("which is exactly what label propagation (demo 03) repairs for training.")

write_wav(recording, OUT / "demo01.wav")
write_annotations(track, OUT / "demo01.annotations.csv")
write_ground_truth(ground_truth, 3000, OUT / "demo01.ground_truth.csv")
print(f"\nwrote demo01.wav / .annotations.csv / .ground_truth.csv to {OUT}")

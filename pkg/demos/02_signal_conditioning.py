#!/usr/bin/env python3
"""Walk one recording through the conditioning pipeline, stage by stage.

Stages: segmentation (2.5 s windows, 1.5 s hop) -> spectral-floor denoising
(logistic per-bin gain against the 25th-percentile window's power spectrum)
-> 20-200 Hz zero-phase bandpass -> per-window normalization.
"""

import numpy as np

from whalecall.config import PipelineConfig
from whalecall.dsp import (
    bandpass,
    denoise,
    normalize,
    power_spectrum,
    segment,
    spectral_floor,
)
from whalecall.synth import SynthConfig, generate_recording

config = PipelineConfig()
recording, track, _ = generate_recording(
    SynthConfig(seed=5, partial_call_probability=0.0),
    np.random.default_rng(5),
    "demo02",
)

windows = segment(recording, config.window_seconds, config.overlap_seconds)
print(f"segmentation: {recording.n_samples} samples -> {len(windows)} windows "
      f"of {len(windows[0])} samples, hop 3000")

floor = spectral_floor(windows)
peaks = sorted(power_spectrum(w.samples).max() for w in windows)
print(f"\nspectral floor: per-window max spectral power spans "
      f"{peaks[0]:.2e} .. {peaks[-1]:.2e}")
print(f"chosen floor window has max power {floor.power.max():.2e} "
      f"(rank {int(0.25 * (len(windows) - 1))} of {len(windows)})")

# pick the loudest window (a call) and a quiet one (noise) and compare
# how much energy the denoiser removes from each
by_peak = sorted(windows, key=lambda w: power_spectrum(w.samples).max())
quiet, loud = by_peak[2], by_peak[-1]
for name, w in [("noise window", quiet), ("call window", loud)]:
    before = np.sum(w.samples**2)
    after = np.sum(denoise(w.samples, floor, config.denoise) ** 2)
    print(f"{name:>12}: denoiser keeps {100 * after / before:5.1f}% of the energy")

cleaned = denoise(loud.samples, floor, config.denoise)
filtered = bandpass(cleaned, config.bandpass, recording.sample_rate)
spectrum = np.abs(np.fft.rfft(filtered))
freqs = np.fft.rfftfreq(filtered.size, 1 / recording.sample_rate)
in_band = spectrum[(freqs >= 20) & (freqs <= 200)].sum() / spectrum.sum()
print(f"\nafter the bandpass, {100 * in_band:.1f}% of the call window's "
      f"spectral amplitude sits inside 20-200 Hz")

normalized, degenerate = normalize(filtered)
print(f"normalization: mean {normalized.mean():+.2e}, "
      f"std {normalized.std():.9f}, degenerate={degenerate}")

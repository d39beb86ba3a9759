"""Signal conditioning: segmentation, spectral-floor denoising, bandpass,
and per-window normalization.

A recording is cut into fixed-length windows (default 2.5 s with adjacent
windows sharing 1 s, i.e. a 1.5 s hop). Each window is then conditioned in
three stages, in order:

1. **Spectral-floor denoising.** A per-recording noise reference is the full
   power spectrum of a "typical" noise window, picked as the 25th percentile
   of the recording's windows ordered by their maximum power-spectrum value.
   Each window's spectrum is multiplied by a per-bin logistic gain

       gain[k] = sigmoid(alpha * (P[k] - beta * floor[k]) / (beta * floor[k] + guard))

   so bins at the scaled floor level are halved, bins far above pass through,
   and bins at or below it are strongly attenuated.
2. **Bandpass.** A 4th-order Butterworth bandpass (default 20-200 Hz) applied
   forward then backward, so the result is zero phase and labels stay aligned
   with the waveform.
3. **Normalization.** Subtract the mean, divide by the population standard
   deviation. Zero-variance windows come back as all zeros and are flagged
   degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.signal import butter, sosfiltfilt
from scipy.special import expit

from .audio_io import AnnotationTrack, Label, LabelSource, Recording
from .errors import (
    EmptyInput,
    InvalidSpec,
    LengthMismatch,
    MixedRecordings,
    NonIntegerHop,
    OutOfRange,
    SampleRateMismatch,
    TooShort,
)

if TYPE_CHECKING:
    from .config import PipelineConfig

DEGENERATE_STD = 1e-12


@dataclass
class Window:
    """A fixed-length labelled segment of one recording."""

    recording_id: str
    start_sample: int
    samples: np.ndarray
    label: Label | None = None
    label_source: LabelSource = LabelSource.EXPERT
    normalized: bool = False
    degenerate: bool = False

    def __len__(self) -> int:
        return int(self.samples.size)


@dataclass
class SpectralFloor:
    """Per-bin power spectrum of a recording's representative noise window."""

    recording_id: str
    power: np.ndarray


@dataclass
class DenoiseParams:
    """Logistic-gain denoiser parameters.

    ``alpha`` sets how sharp the pass/suppress transition is, ``beta`` scales
    the noise floor before comparison, and ``epsilon`` is a relative division
    guard: the working denominator is ``beta * floor + epsilon * max(floor)``
    (plus a tiny absolute term), so bins where the floor is empty saturate the
    gain toward 1 instead of dividing by zero.
    """

    alpha: float = 2.5
    beta: float = 50.0
    epsilon: float = 1e-12

    def validate(self) -> None:
        if self.alpha <= 0 or self.beta <= 0 or self.epsilon <= 0:
            raise InvalidSpec("denoise parameters must be positive")


@dataclass
class BandpassSpec:
    low_hz: float = 20.0
    high_hz: float = 200.0
    order: int = 4

    def validate(self, sample_rate: int) -> None:
        if not 0 < self.low_hz < self.high_hz < sample_rate / 2:
            raise InvalidSpec(
                f"band [{self.low_hz}, {self.high_hz}] Hz invalid at {sample_rate} Hz"
            )
        if self.order < 1:
            raise InvalidSpec("filter order must be >= 1")


def _exact_samples(seconds: float, sample_rate: int, what: str) -> int:
    exact = seconds * sample_rate
    rounded = round(exact)
    if rounded <= 0 or abs(exact - rounded) > 1e-9:
        raise NonIntegerHop(
            f"{what} of {seconds} s is {exact} samples at {sample_rate} Hz; "
            "must be a positive whole number"
        )
    return int(rounded)


def segment(
    recording: Recording,
    window_seconds: float = 2.5,
    overlap_seconds: float = 1.0,
) -> list[Window]:
    """Cut a recording into windows at starts 0, H, 2H, ...

    The hop H is ``(window_seconds - overlap_seconds) * sample_rate``. The
    window count is ``floor((N - W) / H) + 1``; a trailing remainder shorter
    than one window is discarded. Labels are left unset.
    """
    width = _exact_samples(window_seconds, recording.sample_rate, "window")
    hop = _exact_samples(
        window_seconds - overlap_seconds, recording.sample_rate, "hop"
    )
    n = recording.n_samples
    if n < width:
        raise TooShort(
            f"{recording.id}: {n} samples < one {width}-sample window"
        )
    count = (n - width) // hop + 1
    return [
        Window(
            recording_id=recording.id,
            start_sample=i * hop,
            samples=recording.samples[i * hop : i * hop + width].copy(),
        )
        for i in range(count)
    ]


def assign_window_label(window: Window, track: AnnotationTrack) -> Label:
    """Positive iff every sample the window covers is annotated positive."""
    start, end = window.start_sample, window.start_sample + len(window)
    if start < 0 or end > track.n_samples:
        raise OutOfRange(
            f"window [{start}, {end}) outside annotated range [0, {track.n_samples})"
        )
    return Label.POSITIVE if track.fully_positive(start, end) else Label.NEGATIVE


def dft(signal: np.ndarray) -> np.ndarray:
    """Exact-length discrete Fourier transform (no zero padding)."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size < 1:
        raise EmptyInput("cannot transform an empty signal")
    return np.fft.fft(x)


def idft(spectrum: np.ndarray) -> np.ndarray:
    """Inverse transform; complex output, take ``.real`` for real signals."""
    return np.fft.ifft(np.asarray(spectrum, dtype=np.complex128))


def power_spectrum(window_samples: np.ndarray) -> np.ndarray:
    """Per-bin squared magnitude of the exact-length transform."""
    spectrum = dft(window_samples)
    return (spectrum.real**2 + spectrum.imag**2)


def spectral_floor(windows: list[Window]) -> SpectralFloor:
    """Noise reference for one recording: the full power spectrum of the
    window at rank ``floor(0.25 * (count - 1))`` when windows are ordered
    ascending by their maximum power-spectrum value.

    Degenerate (zero-variance) windows are not floor candidates; if every
    window is degenerate the rank is taken over all of them (the floor is
    then all zeros).
    """
    if not windows:
        raise EmptyInput("spectral floor needs at least one window")
    ids = {w.recording_id for w in windows}
    if len(ids) > 1:
        raise MixedRecordings(f"windows from multiple recordings: {sorted(ids)}")

    candidates = [w for w in windows if np.std(w.samples) >= DEGENERATE_STD]
    if not candidates:
        candidates = list(windows)
    spectra = [power_spectrum(w.samples) for w in candidates]
    peaks = np.array([s.max() for s in spectra])
    order = np.argsort(peaks, kind="stable")
    rank = int(np.floor(0.25 * (len(candidates) - 1)))
    chosen = int(order[rank])
    return SpectralFloor(
        recording_id=candidates[chosen].recording_id, power=spectra[chosen]
    )


def denoise(
    window_samples: np.ndarray,
    floor: SpectralFloor,
    params: DenoiseParams,
) -> np.ndarray:
    """Apply the logistic spectral gain against a recording's noise floor.

    The gain is strictly inside (0, 1), so per-bin output power never exceeds
    input power. Because both spectra come from real signals the gain is
    conjugate-symmetric and the output is real to rounding error.
    """
    params.validate()
    x = np.asarray(window_samples, dtype=np.float64)
    if x.size != floor.power.size:
        raise LengthMismatch(
            f"window has {x.size} samples, floor has {floor.power.size} bins"
        )
    spectrum = dft(x)
    power = spectrum.real**2 + spectrum.imag**2
    scaled_floor = params.beta * floor.power
    guard = params.epsilon * float(floor.power.max()) + 1e-30
    gain = expit(params.alpha * (power - scaled_floor) / (scaled_floor + guard))
    return idft(spectrum * gain).real


def bandpass(signal: np.ndarray, spec: BandpassSpec, sample_rate: int) -> np.ndarray:
    """Zero-phase Butterworth bandpass (forward-backward, reflective padding
    of ``3 * order`` samples each side, trimmed to the input length)."""
    spec.validate(sample_rate)
    x = np.asarray(signal, dtype=np.float64)
    padlen = 3 * spec.order
    if x.size <= padlen:
        raise TooShort(f"signal of {x.size} samples too short to filter")
    sos = butter(
        spec.order,
        [spec.low_hz, spec.high_hz],
        btype="bandpass",
        fs=sample_rate,
        output="sos",
    )
    return sosfiltfilt(sos, x, padtype="even", padlen=padlen)


def normalize(window_samples: np.ndarray) -> tuple[np.ndarray, bool]:
    """Shift to mean 0 and scale to population standard deviation 1.

    Returns ``(normalized, degenerate)``; a zero-variance input yields the
    all-zero vector with the degenerate flag set rather than an error.
    """
    x = np.asarray(window_samples, dtype=np.float64)
    sd = float(x.std())
    if sd < DEGENERATE_STD:
        return np.zeros_like(x), True
    return (x - x.mean()) / sd, False


def preprocess_recording(
    recording: Recording,
    track: AnnotationTrack | None,
    config: "PipelineConfig",
) -> list[Window]:
    """Run the full conditioning pipeline on one recording.

    Order: segment, assign labels from the annotation track (skipped when no
    track is supplied, as in pure detection), compute the spectral floor from
    the raw segments, then per window: denoise, bandpass, normalize.
    Degenerate windows are forced negative.
    """
    if recording.sample_rate != config.sample_rate:
        raise SampleRateMismatch(
            f"{recording.id}: {recording.sample_rate} Hz, pipeline configured "
            f"for {config.sample_rate} Hz"
        )
    windows = segment(recording, config.window_seconds, config.overlap_seconds)
    if track is not None:
        for w in windows:
            w.label = assign_window_label(w, track)
            w.label_source = LabelSource.EXPERT
    floor = spectral_floor(windows)
    for w in windows:
        cleaned = denoise(w.samples, floor, config.denoise)
        filtered = bandpass(cleaned, config.bandpass, recording.sample_rate)
        w.samples, w.degenerate = normalize(filtered)
        w.normalized = True
        if w.degenerate:
            w.label = Label.NEGATIVE
            w.label_source = LabelSource.EXPERT
    return windows

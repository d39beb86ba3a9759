"""Spectrogram computation and the three-panel raster figure.

These exist for visual inspection only; the detector itself never consumes a
spectrogram. The figure is a binary PPM (P6) raster laid out top to bottom as

    annotation band        10 rows, green where the centre sample of the
                           column's frame is annotated positive
    prediction band        10 rows, orange where it falls in a window
                           predicted positive (omitted without detections)
    spectrogram            one row per frequency bin, highest frequency on
                           top, grey level spanning the dB range

so the image is ``n_frames`` wide and ``10 * bands_present + n_bins`` tall.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import AnnotationTrack, DetectionReport, Label
from .errors import TooShort

STFT_NFFT = 512
STFT_HOP = 128  # 75% overlap
BAND_ROWS = 10

_POSITIVE_TRUTH = (0, 200, 0)
_POSITIVE_PREDICTED = (255, 160, 0)
_BAND_BACKGROUND = (24, 24, 24)


def stft_power_db(
    samples: np.ndarray,
    sample_rate: int,
    nfft: int = STFT_NFFT,
    hop: int = STFT_HOP,
) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed short-time power spectrum in dB.

    Returns ``(freqs_hz, power_db)`` with ``power_db`` shaped
    (n_bins, n_frames); frame ``j`` covers samples ``[j*hop, j*hop + nfft)``.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < nfft:
        raise TooShort(f"need at least {nfft} samples for a spectrogram")
    n_frames = (x.size - nfft) // hop + 1
    window = np.hanning(nfft)
    frames = np.stack(
        [x[j * hop : j * hop + nfft] * window for j in range(n_frames)]
    )
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    power_db = 10.0 * np.log10(power + 1e-20)
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sample_rate)
    return freqs, power_db.T


def write_spectrogram_csv(
    path, freqs: np.ndarray, power_db: np.ndarray, sample_rate: int
) -> None:
    """One row per frequency bin: ``freq_hz`` then per-frame power in dB."""
    lines = [
        f"# sample_rate={sample_rate}",
        f"# nfft={STFT_NFFT} hop={STFT_HOP}",
        "# rows: freq_hz then one power value (dB) per time frame",
    ]
    for k, freq in enumerate(freqs):
        values = ",".join(f"{v:.3f}" for v in power_db[k])
        lines.append(f"{freq:.3f},{values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _frame_centres(n_frames: int, nfft: int = STFT_NFFT, hop: int = STFT_HOP):
    return np.arange(n_frames) * hop + nfft // 2


def _truth_band(track: AnnotationTrack, n_frames: int) -> np.ndarray:
    centres = _frame_centres(n_frames)
    flags = np.array(
        [
            centre < track.n_samples and track.label_at(int(centre)) is Label.POSITIVE
            for centre in centres
        ]
    )
    return flags


def _prediction_band(
    report: DetectionReport, n_frames: int, window_samples: int
) -> np.ndarray:
    centres = _frame_centres(n_frames)
    spans = [
        (start, start + window_samples)
        for start, label, _ in report.entries
        if label is Label.POSITIVE
    ]
    return np.array(
        [any(s <= c < e for s, e in spans) for c in centres], dtype=bool
    )


def render_figure(
    path,
    power_db: np.ndarray,
    track: AnnotationTrack | None = None,
    report: DetectionReport | None = None,
    window_samples: int = 5000,
) -> tuple[int, int]:
    """Write the PPM figure; returns ``(width, height)`` for convenience."""
    n_bins, n_frames = power_db.shape
    rows: list[np.ndarray] = []

    def band(flags: np.ndarray, colour) -> np.ndarray:
        strip = np.empty((BAND_ROWS, n_frames, 3), dtype=np.uint8)
        strip[:] = _BAND_BACKGROUND
        strip[:, flags] = colour
        return strip

    if track is not None:
        rows.append(band(_truth_band(track, n_frames), _POSITIVE_TRUTH))
    if report is not None:
        rows.append(
            band(_prediction_band(report, n_frames, window_samples), _POSITIVE_PREDICTED)
        )

    lo, hi = float(power_db.min()), float(power_db.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    grey = ((power_db - lo) * scale).astype(np.uint8)[::-1, :]  # top = highest freq
    rows.append(np.repeat(grey[:, :, None], 3, axis=2))

    image = np.concatenate(rows, axis=0)
    height, width = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6 {width} {height} 255\n".encode("ascii"))
        fh.write(image.tobytes())
    return width, height

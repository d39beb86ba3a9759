"""Bit-exact readers and writers for audio, annotations, and detection reports.

On-disk formats
---------------
WAV          RIFF/WAVE, ``fmt `` audio format 1 (PCM), 16-bit, mono. 16-bit
             value ``v`` decodes to the amplitude ``v / 32768``, so decoded
             samples lie in ``[-1, 1)``.
Annotations  UTF-8 CSV with header ``start_sample,end_sample,label`` where
             label is ``positive`` or ``negative``; ``#`` lines are comments.
             Samples not covered by any row are negative. Intervals are
             half-open: ``start_sample`` inclusive, ``end_sample`` exclusive.
Detections   UTF-8 CSV with header
             ``window_start_sample,window_start_seconds,label,probability_positive``,
             sorted by start sample, seconds printed with 3 decimals.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptHeader,
    OverlapError,
    ParseError,
    RangeError,
    UnsupportedFormat,
)

PCM_SCALE = 32768.0


class Label(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1

    @classmethod
    def from_string(cls, text: str) -> "Label":
        name = text.strip().lower()
        if name == "positive":
            return cls.POSITIVE
        if name == "negative":
            return cls.NEGATIVE
        raise ParseError(f"unknown label {text!r} (expected positive/negative)")

    def to_string(self) -> str:
        return "positive" if self is Label.POSITIVE else "negative"


class LabelSource(enum.Enum):
    EXPERT = "expert"
    PROPAGATED = "propagated"


@dataclass
class Recording:
    """A mono sample buffer; the unit over which noise floors and label
    propagation are computed."""

    id: str
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.size == 0:
            raise ValueError("recording has no samples")

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_seconds(self) -> float:
        return self.n_samples / self.sample_rate


@dataclass
class AnnotationTrack:
    """Per-sample positive/negative labelling stored as sorted, non-overlapping
    half-open intervals that jointly cover ``[0, n_samples)``.

    Positive intervals mark complete calls only; anything else (including
    partial calls) is negative.
    """

    recording_id: str
    intervals: list[tuple[int, int, Label]]

    @property
    def n_samples(self) -> int:
        return self.intervals[-1][1] if self.intervals else 0

    @classmethod
    def from_positive_intervals(
        cls,
        recording_id: str,
        positives: list[tuple[int, int]],
        n_samples: int,
    ) -> "AnnotationTrack":
        """Build a full coverage track from positive spans alone."""
        rows = [(s, e, Label.POSITIVE) for s, e in positives]
        return cls(recording_id, _canonical_intervals(rows, n_samples))

    def label_at(self, sample: int) -> Label:
        if not 0 <= sample < self.n_samples:
            raise RangeError(f"sample {sample} outside [0, {self.n_samples})")
        for start, end, label in self.intervals:
            if start <= sample < end:
                return label
        raise AssertionError("intervals do not cover the track")  # unreachable

    def fully_positive(self, start: int, end: int) -> bool:
        """True iff every sample in [start, end) carries a positive label."""
        for s, e, label in self.intervals:
            if label is Label.POSITIVE and s <= start and end <= e:
                return True
        return False

    def positive_intervals(self) -> list[tuple[int, int]]:
        return [(s, e) for s, e, lab in self.intervals if lab is Label.POSITIVE]


@dataclass
class DetectionReport:
    """Per-window predictions for one recording, sorted by start sample."""

    recording_id: str
    sample_rate: int
    entries: list[tuple[int, Label, float]] = field(default_factory=list)

    def sorted_entries(self) -> list[tuple[int, Label, float]]:
        return sorted(self.entries, key=lambda e: e[0])


def read_wav(path) -> Recording:
    """Read a PCM 16-bit mono RIFF/WAVE file into a Recording.

    The recording id is the file stem. Raises UnsupportedFormat for anything
    other than PCM/mono/16-bit, CorruptHeader for structural damage.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise CorruptHeader(f"{path}: not a RIFF/WAVE file")
    riff_size = struct.unpack_from("<I", raw, 4)[0]
    if riff_size != len(raw) - 8:
        raise CorruptHeader(
            f"{path}: RIFF size {riff_size} inconsistent with file size {len(raw)}"
        )

    fmt = None
    payload = None
    offset = 12
    while offset + 8 <= len(raw):
        chunk_id = raw[offset : offset + 4]
        chunk_size = struct.unpack_from("<I", raw, offset + 4)[0]
        body = raw[offset + 8 : offset + 8 + chunk_size]
        if len(body) < chunk_size:
            raise CorruptHeader(f"{path}: chunk {chunk_id!r} truncated")
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            payload = body
        offset += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise CorruptHeader(f"{path}: missing fmt or data chunk")
    if len(fmt) < 16:
        raise CorruptHeader(f"{path}: fmt chunk too small")
    audio_format, channels, rate, _byte_rate, _block_align, bits = struct.unpack_from(
        "<HHIIHH", fmt
    )
    if audio_format != 1:
        raise UnsupportedFormat(f"{path}: audio format {audio_format} is not PCM")
    if channels != 1:
        raise UnsupportedFormat(f"{path}: {channels} channels (mono required)")
    if bits != 16:
        raise UnsupportedFormat(f"{path}: {bits}-bit samples (16-bit required)")
    if rate == 0:
        raise CorruptHeader(f"{path}: zero sample rate")
    if len(payload) == 0 or len(payload) % 2 != 0:
        raise CorruptHeader(f"{path}: data chunk has {len(payload)} bytes")

    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / PCM_SCALE
    return Recording(id=Path(path).stem, sample_rate=int(rate), samples=samples)


def write_wav(recording: Recording, path) -> None:
    """Write a Recording as PCM 16-bit mono.

    Amplitudes are quantized to ``round(v * 32768)`` and clamped to the
    representable range, so a write/read round trip changes each sample by at
    most ``1/32768``.
    """
    quantized = np.clip(
        np.round(recording.samples * PCM_SCALE), -32768, 32767
    ).astype("<i2")
    payload = quantized.tobytes()
    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", 36 + len(payload)),
            b"WAVE",
            b"fmt ",
            struct.pack(
                "<IHHIIHH",
                16,
                1,  # PCM
                1,  # mono
                recording.sample_rate,
                recording.sample_rate * 2,
                2,
                16,
            ),
            b"data",
            struct.pack("<I", len(payload)),
        ]
    )
    Path(path).write_bytes(header + payload)


def _canonical_intervals(
    rows: list[tuple[int, int, Label]], n_samples: int
) -> list[tuple[int, int, Label]]:
    """Sort, overlap-check, gap-fill with NEGATIVE, and merge adjacent
    same-label intervals into a partition of [0, n_samples)."""
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    for start, end, _ in rows:
        if start < 0 or end > n_samples:
            raise RangeError(
                f"interval [{start}, {end}) outside recording of {n_samples} samples"
            )
    rows = sorted(rows, key=lambda r: r[0])
    for (s0, e0, _), (s1, e1, _) in zip(rows, rows[1:]):
        if s1 < e0:
            raise OverlapError(f"intervals [{s0},{e0}) and [{s1},{e1}) overlap")

    out: list[tuple[int, int, Label]] = []
    cursor = 0
    for start, end, label in rows + [(n_samples, n_samples, Label.NEGATIVE)]:
        if cursor < start:
            out.append((cursor, start, Label.NEGATIVE))
        if start < end:
            out.append((start, end, label))
        cursor = max(cursor, end)

    merged: list[tuple[int, int, Label]] = []
    for start, end, label in out:
        if merged and merged[-1][2] is label and merged[-1][1] == start:
            merged[-1] = (merged[-1][0], end, label)
        else:
            merged.append((start, end, label))
    return merged


def _default_annotation_id(path) -> str:
    stem = Path(path).stem
    return stem[: -len(".annotations")] if stem.endswith(".annotations") else stem


def read_annotations(path, n_samples: int, recording_id: str | None = None) -> AnnotationTrack:
    """Parse an interval CSV into a validated AnnotationTrack.

    Unlisted sample ranges become negative; coverage is extended to
    ``[0, n_samples)``. The recording id comes from, in order of priority: the
    ``recording_id`` argument, a ``# recording_id=...`` comment, the file stem.
    """
    comment_id = None
    rows: list[tuple[int, int, Label]] = []
    header_seen = False
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            meta = line[1:].strip()
            if meta.startswith("recording_id="):
                comment_id = meta.split("=", 1)[1].strip()
            continue
        if not header_seen:
            if line.replace(" ", "") != "start_sample,end_sample,label":
                raise ParseError(f"{path}:{line_no}: unexpected header {line!r}")
            header_seen = True
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise ParseError(f"{path}:{line_no}: expected 3 fields, got {len(fields)}")
        try:
            start, end = int(fields[0]), int(fields[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: non-integer sample index") from exc
        if start >= end:
            raise ParseError(f"{path}:{line_no}: empty or reversed interval [{start},{end})")
        rows.append((start, end, Label.from_string(fields[2])))
    if not header_seen:
        raise ParseError(f"{path}: missing header line")

    rec_id = recording_id or comment_id or _default_annotation_id(path)
    return AnnotationTrack(rec_id, _canonical_intervals(rows, n_samples))


def write_annotations(track: AnnotationTrack, path) -> None:
    """Write positive intervals only; negatives are implicit on read."""
    lines = [f"# recording_id={track.recording_id}", "start_sample,end_sample,label"]
    for start, end in track.positive_intervals():
        lines.append(f"{start},{end},positive")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_detections(report: DetectionReport, path) -> None:
    """Write a detection report as CSV, sorted by window start sample.

    ``window_start_seconds`` is ``start / sample_rate`` with 3 decimals;
    probabilities are printed with round-trip precision.
    """
    lines = [
        f"# recording_id={report.recording_id}",
        f"# sample_rate={report.sample_rate}",
        "window_start_sample,window_start_seconds,label,probability_positive",
    ]
    for start, label, prob in report.sorted_entries():
        seconds = start / report.sample_rate
        lines.append(f"{start},{seconds:.3f},{label.to_string()},{prob!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_detections(
    path, recording_id: str | None = None, sample_rate: int | None = None
) -> DetectionReport:
    """Parse a detection CSV written by :func:`write_detections`."""
    comment: dict[str, str] = {}
    entries: list[tuple[int, Label, float]] = []
    header_seen = False
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            meta = line[1:].strip()
            if "=" in meta:
                key, value = meta.split("=", 1)
                comment[key.strip()] = value.strip()
            continue
        if not header_seen:
            expected = "window_start_sample,window_start_seconds,label,probability_positive"
            if line.replace(" ", "") != expected:
                raise ParseError(f"{path}:{line_no}: unexpected header {line!r}")
            header_seen = True
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 4:
            raise ParseError(f"{path}:{line_no}: expected 4 fields, got {len(fields)}")
        try:
            start = int(fields[0])
            prob = float(fields[3])
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: bad numeric field") from exc
        if not 0.0 <= prob <= 1.0:
            raise ParseError(f"{path}:{line_no}: probability {prob} outside [0, 1]")
        entries.append((start, Label.from_string(fields[2]), prob))
    if not header_seen:
        raise ParseError(f"{path}: missing header line")

    rec_id = recording_id or comment.get("recording_id") or _default_annotation_id(path)
    rate = sample_rate if sample_rate is not None else int(comment.get("sample_rate", 0))
    if rate <= 0:
        raise ParseError(f"{path}: sample rate not recorded in file and not supplied")
    return DetectionReport(rec_id, rate, sorted(entries, key=lambda e: e[0]))

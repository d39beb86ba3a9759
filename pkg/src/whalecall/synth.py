"""Seeded generator of whale-like calls in noise, with expert-style
complete-call-only annotations.

Each recording gets one call *prototype* (unit count, unit length, pitch,
sweep, loudness) and every call in that recording renders the same prototype,
mimicking a single animal repeating a similar call. Units repeat on a fixed
1.5 s period, matching the default segmentation hop, and call starts snap to
the hop grid. Two useful properties follow:

* windows fully inside any call of a recording carry near-identical
  waveforms (up to noise), and partially covered windows at call edges hold
  a fixed 40/60 mix of call and noise;
* a truncated call (kept with probability ``partial_call_probability``,
  annotated negative like an expert would) produces interior windows that
  correlate almost perfectly with the complete calls' windows, which is
  exactly the situation label propagation exists to repair.

Ground truth sidecar data flags every window overlapping call energy,
including truncated calls the annotations call negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import AnnotationTrack, Recording
from .errors import InvalidParams, Overcrowded, ParseError

UNIT_PERIOD_SECONDS = 1.5  # unit start-to-start; equals the segmentation hop
RAMP_SECONDS = 0.1
PLACEMENT_ATTEMPTS = 200


@dataclass
class CallParams:
    """Ranges the per-recording prototype is drawn from."""

    n_units: tuple[int, int] = (3, 5)
    unit_duration_seconds: tuple[float, float] = (1.0, 1.4)
    fundamental_hz: tuple[float, float] = (35.0, 110.0)
    sweep_hz_per_s: tuple[float, float] = (-8.0, 8.0)
    amplitude: tuple[float, float] = (0.3, 0.6)


@dataclass
class NoiseParams:
    white_level: float = 0.03
    low_freq_rumble_level: float = 0.05


@dataclass
class SynthConfig:
    duration_seconds: float = 60.0
    sample_rate: int = 2000
    calls_per_recording: tuple[int, int] = (2, 3)
    call: CallParams = field(default_factory=CallParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    partial_call_probability: float = 0.15
    seed: int = 0

    def validate(self) -> None:
        if self.duration_seconds <= 0 or self.sample_rate <= 0:
            raise InvalidParams("duration and sample rate must be positive")
        for lo, hi, name in [
            (*self.calls_per_recording, "calls_per_recording"),
            (*self.call.n_units, "n_units"),
            (*self.call.unit_duration_seconds, "unit_duration_seconds"),
            (*self.call.fundamental_hz, "fundamental_hz"),
            (*self.call.sweep_hz_per_s, "sweep_hz_per_s"),
            (*self.call.amplitude, "amplitude"),
        ]:
            if lo > hi:
                raise InvalidParams(f"empty range for {name}: ({lo}, {hi})")
        if self.calls_per_recording[0] < 0 or self.call.n_units[0] < 1:
            raise InvalidParams("call counts must be non-negative, units >= 1")
        if not (
            20.0 <= self.call.fundamental_hz[0]
            and self.call.fundamental_hz[1] <= 200.0
        ):
            raise InvalidParams("fundamental range must sit inside [20, 200] Hz")
        if self.call.unit_duration_seconds[1] >= UNIT_PERIOD_SECONDS:
            raise InvalidParams(
                f"units must be shorter than the {UNIT_PERIOD_SECONDS} s period"
            )
        if self.call.unit_duration_seconds[0] <= 2 * RAMP_SECONDS:
            raise InvalidParams("units too short for their onset/offset ramps")
        if not 0.0 < self.call.amplitude[0] <= self.call.amplitude[1] < 1.0:
            raise InvalidParams("amplitude range must sit inside (0, 1)")
        if not 0.0 <= self.partial_call_probability <= 1.0:
            raise InvalidParams("partial_call_probability must lie in [0, 1]")
        if self.noise.white_level < 0 or self.noise.low_freq_rumble_level < 0:
            raise InvalidParams("noise levels must be non-negative")


@dataclass
class CallPrototype:
    """A concrete call drawn from CallParams; rendering it is deterministic."""

    n_units: int
    unit_samples: int
    fundamental_hz: float
    sweep_hz_per_s: float
    amplitude: float
    sample_rate: int

    @property
    def period_samples(self) -> int:
        return int(round(UNIT_PERIOD_SECONDS * self.sample_rate))

    def span_samples(self, n_units: int | None = None) -> int:
        """First unit start to last unit end, excluding the trailing gap."""
        n = self.n_units if n_units is None else n_units
        return (n - 1) * self.period_samples + self.unit_samples


def draw_prototype(
    params: CallParams, rng: np.random.Generator, sample_rate: int
) -> CallPrototype:
    n_units = int(rng.integers(params.n_units[0], params.n_units[1] + 1))
    unit_samples = int(round(rng.uniform(*params.unit_duration_seconds) * sample_rate))
    fundamental = rng.uniform(*params.fundamental_hz)
    sweep = rng.uniform(*params.sweep_hz_per_s)
    # keep the instantaneous frequency inside [20, 200] Hz over the unit
    unit_seconds = unit_samples / sample_rate
    sweep = float(
        np.clip(
            sweep,
            (20.0 - fundamental) / unit_seconds,
            (200.0 - fundamental) / unit_seconds,
        )
    )
    return CallPrototype(
        n_units=n_units,
        unit_samples=unit_samples,
        fundamental_hz=fundamental,
        sweep_hz_per_s=sweep,
        amplitude=rng.uniform(*params.amplitude),
        sample_rate=sample_rate,
    )


def render_unit(prototype: CallPrototype) -> np.ndarray:
    """One linearly swept tonal unit with raised-cosine onset/offset ramps."""
    t = np.arange(prototype.unit_samples) / prototype.sample_rate
    phase = 2.0 * np.pi * (
        prototype.fundamental_hz * t + 0.5 * prototype.sweep_hz_per_s * t**2
    )
    unit = prototype.amplitude * np.sin(phase)
    ramp = int(round(RAMP_SECONDS * prototype.sample_rate))
    envelope = np.ones(prototype.unit_samples)
    rise = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
    envelope[:ramp] = rise
    envelope[-ramp:] = rise[::-1]
    return unit * envelope


def render_call(
    prototype: CallPrototype, n_units: int | None = None
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Render ``n_units`` units (default: all of them) on the fixed period.

    Returns the samples over the call span and per-unit (start, end) offsets.
    """
    n = prototype.n_units if n_units is None else n_units
    span = prototype.span_samples(n)
    samples = np.zeros(span)
    unit = render_unit(prototype)
    boundaries = []
    for i in range(n):
        start = i * prototype.period_samples
        samples[start : start + prototype.unit_samples] = unit
        boundaries.append((start, start + prototype.unit_samples))
    return samples, boundaries


def generate_call(
    params: CallParams, rng: np.random.Generator, sample_rate: int = 2000
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Draw a prototype and render it once."""
    return render_call(draw_prototype(params, rng, sample_rate))


@dataclass
class PlacedCall:
    start_sample: int
    n_units_rendered: int
    truncated: bool
    span_samples: int


def _place_calls(
    prototype: CallPrototype,
    n_calls: int,
    n_samples: int,
    hop: int,
    window: int,
    partial_probability: float,
    rng: np.random.Generator,
) -> list[PlacedCall]:
    """Choose non-overlapping grid-aligned starts, call spans separated by at
    least one full window of clear noise."""
    placed: list[PlacedCall] = []
    occupied: list[tuple[int, int]] = []
    for _ in range(n_calls):
        truncated = (
            prototype.n_units >= 3 and rng.random() < partial_probability
        )
        if truncated:
            kept = int(rng.integers(2, prototype.n_units))
        else:
            kept = prototype.n_units
        span = prototype.span_samples(kept)
        max_slot = (n_samples - span) // hop
        if max_slot < 0:
            raise Overcrowded(
                f"call span {span} exceeds recording of {n_samples} samples"
            )
        for _attempt in range(PLACEMENT_ATTEMPTS):
            start = int(rng.integers(0, max_slot + 1)) * hop
            lo, hi = start - window, start + span + window
            if all(e <= lo or s >= hi for s, e in occupied):
                occupied.append((start, start + span))
                placed.append(PlacedCall(start, kept, truncated, span))
                break
        else:
            raise Overcrowded(
                f"could not place call {len(placed) + 1} of {n_calls} "
                f"after {PLACEMENT_ATTEMPTS} attempts"
            )
    return sorted(placed, key=lambda c: c.start_sample)


def generate_recording(
    config: SynthConfig,
    rng: np.random.Generator,
    recording_id: str = "synth",
    window_samples: int = 5000,
    hop_samples: int = 3000,
) -> tuple[Recording, AnnotationTrack, list[bool]]:
    """Build one recording: noise bed, placed calls, expert-style annotations,
    and per-window ground-truth activity flags.

    Complete calls are annotated positive over their exact span. Truncated
    calls are annotated negative (the expert convention for partial calls) but
    still flagged in the ground truth.
    """
    config.validate()
    fs = config.sample_rate
    n = int(round(config.duration_seconds * fs))

    noise = config.noise.white_level * rng.standard_normal(n)
    t = np.arange(n) / fs
    for _ in range(3):
        freq = rng.uniform(1.0, 10.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        level = config.noise.low_freq_rumble_level * rng.uniform(0.5, 1.0)
        noise += level * np.sin(2.0 * np.pi * freq * t + phase)

    prototype = draw_prototype(config.call, rng, fs)
    n_calls = int(
        rng.integers(config.calls_per_recording[0], config.calls_per_recording[1] + 1)
    )
    placed = _place_calls(
        prototype,
        n_calls,
        n,
        hop_samples,
        window_samples,
        config.partial_call_probability,
        rng,
    )

    samples = noise
    positives: list[tuple[int, int]] = []
    for call in placed:
        rendered, _ = render_call(prototype, call.n_units_rendered)
        samples[call.start_sample : call.start_sample + call.span_samples] += rendered
        if not call.truncated:
            positives.append((call.start_sample, call.start_sample + call.span_samples))

    recording = Recording(recording_id, fs, samples)
    track = AnnotationTrack.from_positive_intervals(recording_id, positives, n)

    n_windows = max(0, (n - window_samples) // hop_samples + 1)
    ground_truth = []
    for i in range(n_windows):
        w_start, w_end = i * hop_samples, i * hop_samples + window_samples
        active = any(
            c.start_sample < w_end and w_start < c.start_sample + c.span_samples
            for c in placed
        )
        ground_truth.append(active)
    return recording, track, ground_truth


def write_ground_truth(flags: list[bool], hop_samples: int, path) -> None:
    lines = ["window_index,start_sample,active"]
    for i, active in enumerate(flags):
        lines.append(f"{i},{i * hop_samples},{int(active)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ground_truth(path) -> list[bool]:
    flags = []
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("window_index"):
            continue
        fields = line.split(",")
        if len(fields) != 3 or fields[2] not in ("0", "1"):
            raise ParseError(f"{path}:{line_no}: bad ground-truth row {line!r}")
        flags.append(fields[2] == "1")
    return flags

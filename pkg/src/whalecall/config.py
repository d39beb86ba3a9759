"""Pipeline configuration and its flat-key text file format.

The file format is UTF-8 ``key = value`` lines with ``#`` comments. Keys are
dotted paths into the configuration (``denoise.alpha``, ``train.epochs``,
``synth.call.n_units``); integer-list and range values are comma separated.
Unknown keys are rejected. Defaults are the published operating point of the
detector: 2.5 s windows at 2000 Hz with 1 s shared between neighbours,
denoiser at alpha 2.5 / beta 50, 20-200 Hz band, propagation threshold 0.95,
the 9-conv/5-dense architecture with weight decay 0.001.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .dsp import BandpassSpec, DenoiseParams
from .errors import ConfigError
from .labelprop import PropagationConfig
from .nn import ModelConfig, TrainConfig
from .synth import SynthConfig


@dataclass
class SplitConfig:
    fraction: float = 0.8
    by_recording: bool = False


@dataclass
class PipelineConfig:
    sample_rate: int = 2000
    window_seconds: float = 2.5
    overlap_seconds: float = 1.0
    denoise: DenoiseParams = field(default_factory=DenoiseParams)
    bandpass: BandpassSpec = field(default_factory=BandpassSpec)
    labelprop: PropagationConfig = field(default_factory=PropagationConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def validate(self) -> None:
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        if not 0 < self.overlap_seconds < self.window_seconds:
            raise ConfigError("need 0 < overlap_seconds < window_seconds")
        if not 0 < self.split.fraction < 1:
            raise ConfigError("split.fraction must lie in (0, 1)")
        try:
            self.denoise.validate()
            self.bandpass.validate(self.sample_rate)
            self.labelprop.validate()
            self.model.validate()
            self.train.validate()
            self.synth.validate()
        except Exception as exc:
            raise ConfigError(str(exc)) from exc


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_int_pair(text: str) -> tuple[int, int]:
    parts = _parse_int_list(text)
    if len(parts) != 2:
        raise ValueError(f"expected two integers, got {text!r}")
    return parts[0], parts[1]


def _parse_float_pair(text: str) -> tuple[float, float]:
    parts = [float(p) for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected two reals, got {text!r}")
    return parts[0], parts[1]


# key -> (path to the owning object, attribute, parser, formatter)
_KEYS: dict[str, tuple[tuple[str, ...], str, object]] = {
    "sample_rate": ((), "sample_rate", int),
    "window_seconds": ((), "window_seconds", float),
    "overlap_seconds": ((), "overlap_seconds", float),
    "denoise.alpha": (("denoise",), "alpha", float),
    "denoise.beta": (("denoise",), "beta", float),
    "bandpass.low_hz": (("bandpass",), "low_hz", float),
    "bandpass.high_hz": (("bandpass",), "high_hz", float),
    "bandpass.order": (("bandpass",), "order", int),
    "labelprop.threshold": (("labelprop",), "threshold", float),
    "labelprop.enabled": (("labelprop",), "enabled", _parse_bool),
    "model.input_length": (("model",), "input_length", int),
    "model.conv_channels": (("model",), "conv_channels", _parse_int_list),
    "model.kernel_size": (("model",), "kernel_size", int),
    "model.padding_per_side": (("model",), "padding_per_side", int),
    "model.pool_size": (("model",), "pool_size", int),
    "model.conv_dropout": (("model",), "conv_dropout", float),
    "model.dense_widths": (("model",), "dense_widths", _parse_int_list),
    "model.dense_dropout": (("model",), "dense_dropout", float),
    "model.weight_decay": (("model",), "weight_decay", float),
    "train.learning_rate": (("train",), "learning_rate", float),
    "train.adam_beta1": (("train",), "adam_beta1", float),
    "train.adam_beta2": (("train",), "adam_beta2", float),
    "train.adam_epsilon": (("train",), "adam_epsilon", float),
    "train.batch_size": (("train",), "batch_size", int),
    "train.epochs": (("train",), "epochs", int),
    "train.seed": (("train",), "seed", int),
    "train.bn_momentum": (("train",), "bn_momentum", float),
    "split.fraction": (("split",), "fraction", float),
    "split.by_recording": (("split",), "by_recording", _parse_bool),
    "synth.duration_seconds": (("synth",), "duration_seconds", float),
    "synth.calls_per_recording": (("synth",), "calls_per_recording", _parse_int_pair),
    "synth.call.n_units": (("synth", "call"), "n_units", _parse_int_pair),
    "synth.call.unit_duration_seconds": (
        ("synth", "call"), "unit_duration_seconds", _parse_float_pair),
    "synth.call.fundamental_hz": (("synth", "call"), "fundamental_hz", _parse_float_pair),
    "synth.call.sweep_hz_per_s": (("synth", "call"), "sweep_hz_per_s", _parse_float_pair),
    "synth.call.amplitude": (("synth", "call"), "amplitude", _parse_float_pair),
    "synth.noise.white_level": (("synth", "noise"), "white_level", float),
    "synth.noise.low_freq_rumble_level": (
        ("synth", "noise"), "low_freq_rumble_level", float),
    "synth.partial_call_probability": ((), None, None),  # filled below
    "synth.seed": (("synth",), "seed", int),
}
_KEYS["synth.partial_call_probability"] = (
    ("synth",), "partial_call_probability", float)


def set_key(config: PipelineConfig, key: str, raw_value: str) -> None:
    """Apply one flat key to the configuration, with type checking."""
    if key not in _KEYS:
        raise ConfigError(f"unknown configuration key {key!r}")
    path, attr, parser = _KEYS[key]
    target = config
    for step in path:
        target = getattr(target, step)
    try:
        setattr(target, attr, parser(raw_value))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value for {key}: {raw_value!r} ({exc})") from exc


def get_key(config: PipelineConfig, key: str):
    path, attr, _ = _KEYS[key]
    target = config
    for step in path:
        target = getattr(target, step)
    return getattr(target, attr)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def format_config(config: PipelineConfig) -> str:
    """Render every key as ``key = value`` lines (the file format itself)."""
    lines = [f"{key} = {_format_value(get_key(config, key))}" for key in _KEYS]
    return "\n".join(lines) + "\n"


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse a flat-key config file on top of the defaults (or ``base``)."""
    config = base if base is not None else PipelineConfig()
    for line_no, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), 1
    ):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        set_key(config, key.strip(), value.strip())
    config.validate()
    return config

"""Command-line front end.

Subcommands: ``synth``, ``preprocess``, ``propagate``, ``train``, ``detect``,
``evaluate``, ``plot``. Every subcommand accepts ``--config FILE`` (flat
``key = value`` text, see :mod:`whalecall.config`) plus repeatable
``--set key=value`` overrides; dedicated flags override both. The effective
configuration is echoed to stderr for reproducibility; data goes to files or
stdout, diagnostics to stderr.

Exit codes: 0 success, 2 configuration/usage, 3 data, 4 training, 5 model
file format.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import detector, dsp, nn, plotting, synth
from .labelprop import propagate
from .audio_io import (
    Label,
    LabelSource,
    read_annotations,
    read_detections,
    read_wav,
    write_annotations,
    write_detections,
    write_wav,
)
from .config import PipelineConfig, format_config, load_config, set_key
from .errors import (
    BadMagic,
    ConfigError,
    CorruptHeader,
    EmptyDataset,
    EmptyInput,
    EmptyMatrix,
    InvalidParams,
    InvalidSpec,
    MixedRecordings,
    NonIntegerHop,
    Overcrowded,
    OverlapError,
    OutOfRange,
    ParseError,
    RangeError,
    SampleRateMismatch,
    SizeMismatch,
    TooShort,
    UnsupportedFormat,
    VersionMismatch,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAIN = 4
EXIT_MODEL = 5

_DATA_ERRORS = (
    OSError,
    ParseError,
    OverlapError,
    RangeError,
    CorruptHeader,
    UnsupportedFormat,
    TooShort,
    OutOfRange,
    NonIntegerHop,
    SampleRateMismatch,
    MixedRecordings,
    EmptyInput,
    EmptyDataset,
    EmptyMatrix,
)
_CONFIG_ERRORS = (ConfigError, InvalidParams, InvalidSpec, Overcrowded, ValueError)
_MODEL_ERRORS = (BadMagic, VersionMismatch, SizeMismatch)


class TrainingFailure(Exception):
    """Raised when the optimization itself breaks (maps to exit 4)."""


def _effective_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "config", None):
        config = load_config(args.config, base=config)
    for pair in getattr(args, "set", None) or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        set_key(config, key.strip(), value.strip())
    # dedicated flags win over the file and --set
    if getattr(args, "epochs", None) is not None:
        config.train.epochs = args.epochs
    if getattr(args, "seed", None) is not None:
        config.train.seed = args.seed
        config.synth.seed = args.seed
    if getattr(args, "duration", None) is not None:
        config.synth.duration_seconds = args.duration
    config.validate()
    sys.stderr.write("# effective configuration\n")
    sys.stderr.write(format_config(config))
    return config


def _hop_and_window(config: PipelineConfig) -> tuple[int, int]:
    window = int(round(config.window_seconds * config.sample_rate))
    hop = int(round((config.window_seconds - config.overlap_seconds) * config.sample_rate))
    return hop, window


def _check_model_geometry(config: PipelineConfig) -> None:
    _, window = _hop_and_window(config)
    if config.model.input_length != window:
        raise ConfigError(
            f"model expects {config.model.input_length}-sample windows but the "
            f"pipeline produces {window}-sample windows"
        )


# --- synth ---------------------------------------------------------------------


def _write_recording_set(config, out_dir: Path, count: int, prefix: str, seed_base: int):
    hop, window = _hop_and_window(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        rec_id = f"{prefix}_{i:02d}"
        rng = np.random.default_rng(seed_base + i)
        recording, track, ground_truth = synth.generate_recording(
            config.synth, rng, rec_id, window_samples=window, hop_samples=hop
        )
        write_wav(recording, out_dir / f"{rec_id}.wav")
        write_annotations(track, out_dir / f"{rec_id}.annotations.csv")
        synth.write_ground_truth(ground_truth, hop, out_dir / f"{rec_id}.ground_truth.csv")
    sys.stderr.write(f"wrote {count} recordings to {out_dir}\n")


def cmd_synth(args) -> int:
    config = _effective_config(args)
    out_dir = Path(args.out)
    if args.recordings is not None:
        if args.recordings < 1:
            raise ConfigError("--recordings must be at least 1")
        _write_recording_set(config, out_dir, args.recordings, "rec", config.synth.seed)
    else:
        _write_recording_set(
            config, out_dir / "train", args.train_recordings, "train", config.synth.seed
        )
        _write_recording_set(
            config, out_dir / "test", args.test_recordings, "test",
            config.synth.seed + 10_000,
        )
    return 0


# --- dataset loading -------------------------------------------------------------


def _load_pairs(data_dir: Path, config: PipelineConfig):
    wavs = sorted(data_dir.glob("*.wav"))
    if not wavs:
        raise EmptyDataset(f"no WAV files in {data_dir}")
    pairs = []
    for wav_path in wavs:
        annotations = wav_path.with_name(wav_path.stem + ".annotations.csv")
        if not annotations.exists():
            raise ParseError(f"missing annotations for {wav_path}: {annotations}")
        recording = read_wav(wav_path)
        track = read_annotations(annotations, recording.n_samples, recording.id)
        pairs.append((recording, track))
    return pairs


# --- train -----------------------------------------------------------------------


def cmd_train(args) -> int:
    config = _effective_config(args)
    _check_model_geometry(config)
    pairs = _load_pairs(Path(args.data), config)
    dataset = detector.build_dataset(pairs, config, apply_propagation=config.labelprop.enabled)
    if len(dataset) == 0:
        raise EmptyDataset("no windows after preprocessing")
    train_set, val_set = detector.split_train_val(
        dataset,
        fraction=config.split.fraction,
        seed=config.train.seed,
        by_recording=config.split.by_recording,
    )
    sys.stderr.write(
        f"dataset: {len(dataset)} windows ({dataset.positive_count()} positive), "
        f"split {len(train_set)}/{len(val_set)}\n"
    )
    try:
        val_arrays = (
            (val_set.inputs(), val_set.labels()) if len(val_set) else (None, None)
        )
        params, history = nn.train(
            train_set.inputs(),
            train_set.labels(),
            config.model,
            config.train,
            val_inputs=val_arrays[0],
            val_labels=val_arrays[1],
        )
        if history and not np.isfinite(history[-1]["loss"]):
            raise TrainingFailure("training loss diverged")
    except (FloatingPointError, TrainingFailure) as exc:
        raise TrainingFailure(str(exc)) from exc

    nn.save_model(params, config.model, args.model_out)
    sys.stderr.write(f"model written to {args.model_out}\n")
    if args.history:
        import json

        with open(args.history, "w", encoding="utf-8") as fh:
            for entry in history:
                fh.write(json.dumps(entry) + "\n")
    if len(val_set):
        cm, metrics, _ = detector.evaluate(params, config.model, val_set)
        sys.stdout.write(detector.metrics_json(cm, metrics) + "\n")
    return 0


# --- detect / evaluate --------------------------------------------------------------


def _load_model_with_config(args, config: PipelineConfig):
    params, model_config = nn.load_model(args.model)
    config.model = model_config
    _check_model_geometry(config)
    return params


def cmd_detect(args) -> int:
    config = _effective_config(args)
    params = _load_model_with_config(args, config)
    recording = read_wav(args.wav)
    report = detector.detect_recording(params, config, recording)
    write_detections(report, args.out)
    positives = sum(1 for _, label, _ in report.entries if label is Label.POSITIVE)
    sys.stderr.write(
        f"{recording.id}: {positives}/{len(report.entries)} windows positive\n"
    )
    return 0


def cmd_evaluate(args) -> int:
    config = _effective_config(args)
    params = _load_model_with_config(args, config)
    pairs = _load_pairs(Path(args.data), config)
    # test protocol: labels stay exactly as annotated
    dataset = detector.build_dataset(pairs, config, apply_propagation=False)
    assert not dataset.propagation_applied
    cm, metrics, reports = detector.evaluate(params, config.model, dataset)
    line = detector.metrics_json(cm, metrics)
    sys.stdout.write(line + "\n")
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")
    if args.reports_dir:
        reports_dir = Path(args.reports_dir)
        reports_dir.mkdir(parents=True, exist_ok=True)
        for report in reports:
            write_detections(report, reports_dir / f"{report.recording_id}.detections.csv")
    return 0


# --- preprocess / propagate ----------------------------------------------------------


_SOURCE_CODES = {LabelSource.EXPERT: 0, LabelSource.PROPAGATED: 1}


def _windows_to_npz(path, windows, sample_rate: int) -> None:
    np.savez(
        path,
        samples=np.stack([w.samples for w in windows]),
        start_sample=np.array([w.start_sample for w in windows], dtype=np.int64),
        label=np.array(
            [-1 if w.label is None else int(w.label) for w in windows], dtype=np.int64
        ),
        label_source=np.array(
            [_SOURCE_CODES[w.label_source] for w in windows], dtype=np.int64
        ),
        degenerate=np.array([w.degenerate for w in windows], dtype=bool),
        recording_id=np.array(windows[0].recording_id),
        sample_rate=np.array(sample_rate, dtype=np.int64),
    )


def _windows_from_npz(path):
    data = np.load(path, allow_pickle=False)
    rec_id = str(data["recording_id"])
    windows = [
        dsp.Window(
            recording_id=rec_id,
            start_sample=int(start),
            samples=samples,
            label=None if label < 0 else Label(int(label)),
            label_source=LabelSource.PROPAGATED if source else LabelSource.EXPERT,
            normalized=True,
            degenerate=bool(degenerate),
        )
        for samples, start, label, source, degenerate in zip(
            data["samples"],
            data["start_sample"],
            data["label"],
            data["label_source"],
            data["degenerate"],
        )
    ]
    return windows, int(data["sample_rate"])


def cmd_preprocess(args) -> int:
    config = _effective_config(args)
    recording = read_wav(args.wav)
    track = None
    if args.annotations:
        track = read_annotations(args.annotations, recording.n_samples, recording.id)
    windows = dsp.preprocess_recording(recording, track, config)
    _windows_to_npz(args.out, windows, recording.sample_rate)
    sys.stderr.write(f"{recording.id}: {len(windows)} conditioned windows\n")
    return 0


def cmd_propagate(args) -> int:
    config = _effective_config(args)
    windows, sample_rate = _windows_from_npz(args.windows)
    if any(w.label is None for w in windows):
        raise ParseError(f"{args.windows}: windows carry no labels; preprocess with --annotations")
    propagated = propagate(windows, config.labelprop)
    flipped = sum(w.label_source is LabelSource.PROPAGATED for w in propagated)
    _windows_to_npz(args.out, propagated, sample_rate)
    sys.stderr.write(f"propagation flipped {flipped} windows\n")
    return 0


# --- plot -------------------------------------------------------------------------


def cmd_plot(args) -> int:
    config = _effective_config(args)
    recording = read_wav(args.wav)
    freqs, power_db = plotting.stft_power_db(recording.samples, recording.sample_rate)
    plotting.write_spectrogram_csv(args.out_csv, freqs, power_db, recording.sample_rate)

    track = None
    if args.annotations:
        track = read_annotations(args.annotations, recording.n_samples, recording.id)
    report = None
    if args.detections:
        report = read_detections(args.detections, recording_id=recording.id)
    _, window = _hop_and_window(config)
    width, height = plotting.render_figure(
        args.out_image, power_db, track, report, window_samples=window
    )
    sys.stderr.write(f"figure {width}x{height} written to {args.out_image}\n")
    return 0


# --- argument parsing ----------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat-key configuration file")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one configuration key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whalecall",
        description="Blue whale call detection on raw low-frequency audio.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--recordings", type=int, help="flat set of N recordings")
    p.add_argument("--train-recordings", type=int, default=28)
    p.add_argument("--test-recordings", type=int, default=6)
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--duration", type=float, help="seconds per recording")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("preprocess", help="condition one recording into windows")
    _add_common(p)
    p.add_argument("--wav", required=True)
    p.add_argument("--annotations")
    p.add_argument("--out", required=True, help="output .npz path")
    p.set_defaults(handler=cmd_preprocess)

    p = sub.add_parser("propagate", help="propagate labels in a windows file")
    _add_common(p)
    p.add_argument("--windows", required=True, help="input .npz from preprocess")
    p.add_argument("--out", required=True, help="output .npz path")
    p.set_defaults(handler=cmd_propagate)

    p = sub.add_parser("train", help="train the detector on a corpus directory")
    _add_common(p)
    p.add_argument("--data", required=True, help="directory of WAV + annotation pairs")
    p.add_argument("--model-out", required=True)
    p.add_argument("--history", help="JSON-lines per-epoch history path")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("detect", help="run the detector over one WAV file")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True, help="detection CSV path")
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("evaluate", help="score a model on an annotated corpus")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="also write the metrics JSON line here")
    p.add_argument("--reports-dir", help="write per-recording detection CSVs here")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("plot", help="emit spectrogram CSV and label-band figure")
    _add_common(p)
    p.add_argument("--wav", required=True)
    p.add_argument("--annotations")
    p.add_argument("--detections")
    p.add_argument("--out-image", required=True, help="PPM figure path")
    p.add_argument("--out-csv", required=True, help="spectrogram CSV path")
    p.set_defaults(handler=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except _CONFIG_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except _MODEL_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_MODEL
    except _DATA_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except TrainingFailure as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_TRAIN


if __name__ == "__main__":
    sys.exit(main())

"""Dataset assembly, train/validation protocol, inference, and metrics.

Windows from many recordings are preprocessed and pooled into a Dataset.
Label propagation is applied per recording, and only when the caller asks:
the evaluation path always builds its datasets with propagation off, so test
labels stay exactly as the expert wrote them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .audio_io import AnnotationTrack, DetectionReport, Label, Recording
from .config import PipelineConfig
from .dsp import Window, preprocess_recording, segment
from .errors import EmptyDataset, EmptyMatrix
from .labelprop import propagate
from . import nn


@dataclass
class Dataset:
    """Preprocessed labelled windows with provenance."""

    windows: list[Window]
    sample_rate: int
    propagation_applied: bool = False

    def __post_init__(self):
        seen = set()
        for w in self.windows:
            key = (w.recording_id, w.start_sample)
            if key in seen:
                raise ValueError(f"duplicate window {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.windows)

    def inputs(self) -> np.ndarray:
        if not self.windows:
            raise EmptyDataset("dataset has no windows")
        return np.stack([w.samples for w in self.windows])[:, None, :]

    def labels(self) -> np.ndarray:
        out = np.empty(len(self.windows), dtype=np.intp)
        for i, w in enumerate(self.windows):
            if w.label is None:
                raise ValueError(
                    f"window {w.recording_id}@{w.start_sample} has no label"
                )
            out[i] = int(w.label)
        return out

    def positive_count(self) -> int:
        return int(np.sum(self.labels() == 1)) if self.windows else 0


@dataclass
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class Metrics:
    accuracy: float
    recall: float
    precision: float
    vacuous_recall: bool = False
    vacuous_precision: bool = False


def build_dataset(
    pairs: list[tuple[Recording, AnnotationTrack]],
    config: PipelineConfig,
    apply_propagation: bool,
) -> Dataset:
    """Preprocess every (recording, annotations) pair and pool the windows.

    Propagation, when requested, runs separately inside each recording and
    only ever adds positives.
    """
    windows: list[Window] = []
    for recording, track in pairs:
        conditioned = preprocess_recording(recording, track, config)
        if apply_propagation:
            conditioned = propagate(conditioned, config.labelprop)
        windows.extend(conditioned)
    return Dataset(
        windows=windows,
        sample_rate=config.sample_rate,
        propagation_applied=apply_propagation,
    )


def split_train_val(
    dataset: Dataset,
    fraction: float = 0.8,
    seed: int = 0,
    by_recording: bool = False,
) -> tuple[Dataset, Dataset]:
    """Seeded split into disjoint, exhaustive train/validation datasets.

    The default shuffles windows uniformly and takes the first
    ``floor(fraction * n)`` for training. With ``by_recording`` whole
    recordings are assigned in shuffled order until the training side holds at
    least the requested fraction of windows (a leakage-averse variant).
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction {fraction} outside (0, 1)")
    n = len(dataset)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    rng = np.random.default_rng(seed)

    if by_recording:
        rec_ids = sorted({w.recording_id for w in dataset.windows})
        order = [rec_ids[i] for i in rng.permutation(len(rec_ids))]
        target = int(np.floor(fraction * n))
        train_ids: set[str] = set()
        count = 0
        for rec in order:
            if count >= target and train_ids:
                break
            train_ids.add(rec)
            count += sum(w.recording_id == rec for w in dataset.windows)
        train_windows = [w for w in dataset.windows if w.recording_id in train_ids]
        val_windows = [w for w in dataset.windows if w.recording_id not in train_ids]
    else:
        order = rng.permutation(n)
        cut = int(np.floor(fraction * n))
        train_windows = [dataset.windows[i] for i in order[:cut]]
        val_windows = [dataset.windows[i] for i in order[cut:]]

    make = lambda ws: Dataset(ws, dataset.sample_rate, dataset.propagation_applied)
    return make(train_windows), make(val_windows)


def compute_metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, recall, precision from the tallies.

    Empty denominators (no actual positives, or no predicted positives) yield
    1.0 by vacuous truth; the corresponding flag is set so downstream output
    can surface that the value is conventional, not measured.
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / cm.total
    vacuous_recall = cm.tp + cm.fn == 0
    vacuous_precision = cm.tp + cm.fp == 0
    recall = 1.0 if vacuous_recall else cm.tp / (cm.tp + cm.fn)
    precision = 1.0 if vacuous_precision else cm.tp / (cm.tp + cm.fp)
    return Metrics(accuracy, recall, precision, vacuous_recall, vacuous_precision)


def metrics_json(cm: ConfusionMatrix, metrics: Metrics) -> str:
    """One JSON line with the metric values and raw tallies."""
    payload = {
        "accuracy": metrics.accuracy,
        "recall": metrics.recall,
        "precision": metrics.precision,
        "tp": cm.tp,
        "tn": cm.tn,
        "fp": cm.fp,
        "fn": cm.fn,
    }
    if metrics.vacuous_recall:
        payload["vacuous_recall"] = True
    if metrics.vacuous_precision:
        payload["vacuous_precision"] = True
    return json.dumps(payload)


def evaluate(
    params: nn.ModelParams,
    model_config: nn.ModelConfig,
    dataset: Dataset,
) -> tuple[ConfusionMatrix, Metrics, list[DetectionReport]]:
    """Classify every window, tally against its label, and assemble one
    detection report per recording (entries sorted by start sample)."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot evaluate an empty dataset")
    labels = dataset.labels()
    predicted, probs = nn.predict_batch(params, model_config, dataset.inputs())

    cm = ConfusionMatrix()
    cm.tp = int(np.sum((predicted == 1) & (labels == 1)))
    cm.tn = int(np.sum((predicted == 0) & (labels == 0)))
    cm.fp = int(np.sum((predicted == 1) & (labels == 0)))
    cm.fn = int(np.sum((predicted == 0) & (labels == 1)))

    by_recording: dict[str, DetectionReport] = {}
    for w, pred, prob in zip(dataset.windows, predicted, probs):
        report = by_recording.setdefault(
            w.recording_id, DetectionReport(w.recording_id, dataset.sample_rate)
        )
        report.entries.append((w.start_sample, Label(int(pred)), float(prob)))
    reports = [by_recording[k] for k in sorted(by_recording)]
    for report in reports:
        report.entries.sort(key=lambda e: e[0])
    return cm, compute_metrics(cm), reports


def detect_recording(
    params: nn.ModelParams,
    config: PipelineConfig,
    recording: Recording,
) -> DetectionReport:
    """End-user entry point: condition a recording (noise floor from its own
    windows), classify every window, and report."""
    windows = preprocess_recording(recording, None, config)
    _, probs = nn.predict_batch(
        params, config.model, np.stack([w.samples for w in windows])[:, None, :]
    )
    entries = [
        (w.start_sample, Label(int(p >= 0.5)), float(p))
        for w, p in zip(windows, probs)
    ]
    return DetectionReport(recording.id, recording.sample_rate, entries)

"""Similarity-based label repair within a single recording.

Expert annotations mark only complete calls, so a window holding the head or
tail of a call is labelled negative even though it clearly contains call
energy. After conditioning, such a window is often nearly identical to some
positive window of the same recording. This module flips those negatives:
an expert-negative window becomes positive (with a PROPAGATED provenance
mark) when its normalized inner product with any expert-positive window
reaches the threshold.

The comparison set is the original expert positives only; newly flipped
windows never seed further flips, so one pass is a fixed point. Propagation
is meaningful only inside one continuous recording, where noise conditions
are shared; mixed-recording batches are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Label, LabelSource
from .dsp import Window
from .errors import DegenerateWindow, MixedRecordings, NotNormalized


@dataclass
class PropagationConfig:
    threshold: float = 0.95
    enabled: bool = True

    def validate(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside (0, 1]")


def similarity(a: Window, b: Window) -> float:
    """Normalized inner product ``(1/W) * sum(a_i * b_i)`` of two conditioned
    windows; equals the Pearson correlation of the raw windows and lies in
    [-1, 1] up to rounding."""
    for w in (a, b):
        if not w.normalized:
            raise NotNormalized(f"window at {w.start_sample} was never normalized")
        if w.degenerate:
            raise DegenerateWindow(f"window at {w.start_sample} is degenerate")
    if len(a) != len(b):
        raise ValueError(f"window lengths differ: {len(a)} vs {len(b)}")
    return float(a.samples @ b.samples) / len(a)


def propagate(windows: list[Window], config: PropagationConfig) -> list[Window]:
    """Flip expert-negative windows whose best similarity against the
    recording's expert-positive windows reaches the threshold.

    Returns a new window list in the original order; inputs are not mutated.
    Expert positives never change; degenerate windows neither flip nor serve
    as anchors. With no positive anchors the input is returned unchanged.
    """
    config.validate()
    if not config.enabled:
        return list(windows)
    ids = {w.recording_id for w in windows}
    if len(ids) > 1:
        raise MixedRecordings(
            f"propagation is per-recording; got windows from {sorted(ids)}"
        )

    anchors = [
        w
        for w in windows
        if w.label is Label.POSITIVE
        and w.label_source is LabelSource.EXPERT
        and not w.degenerate
    ]
    if not anchors:
        return list(windows)
    anchor_matrix = np.stack([w.samples for w in anchors])

    out: list[Window] = []
    for w in windows:
        flippable = (
            w.label is Label.NEGATIVE
            and w.label_source is LabelSource.EXPERT
            and not w.degenerate
        )
        if flippable:
            if not w.normalized:
                raise NotNormalized(
                    f"window at {w.start_sample} was never normalized"
                )
            scores = anchor_matrix @ w.samples / len(w)
            if float(scores.max()) >= config.threshold:
                w = Window(
                    recording_id=w.recording_id,
                    start_sample=w.start_sample,
                    samples=w.samples,
                    label=Label.POSITIVE,
                    label_source=LabelSource.PROPAGATED,
                    normalized=w.normalized,
                    degenerate=w.degenerate,
                )
        out.append(w)
    return out

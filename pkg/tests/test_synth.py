import numpy as np
import pytest

from whalecall.audio_io import Label
from whalecall.errors import InvalidParams, Overcrowded
from whalecall.synth import (
    CallParams,
    SynthConfig,
    draw_prototype,
    generate_call,
    generate_recording,
    read_ground_truth,
    write_ground_truth,
)

FS = 2000


def _tone_params():
    return CallParams(
        n_units=(1, 1),
        unit_duration_seconds=(1.0, 1.0),
        fundamental_hz=(50.0, 50.0),
        sweep_hz_per_s=(0.0, 0.0),
        amplitude=(0.5, 0.5),
    )


class TestGenerateCall:
    def test_pure_tone_peak_bin(self):
        samples, bounds = generate_call(_tone_params(), np.random.default_rng(0))
        assert bounds == [(0, 2000)]
        spectrum = np.abs(np.fft.rfft(samples))
        freqs = np.fft.rfftfreq(samples.size, 1 / FS)
        assert freqs[int(np.argmax(spectrum))] == pytest.approx(50.0, abs=1.0)
        assert np.abs(samples).max() <= 0.5 + 1e-12

    def test_spectral_containment(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            samples, _ = generate_call(CallParams(), rng, FS)
            energy = np.abs(np.fft.rfft(samples)) ** 2
            freqs = np.fft.rfftfreq(samples.size, 1 / FS)
            assert energy[freqs > 300].sum() < 0.01 * energy.sum()
            in_band = energy[(freqs >= 20) & (freqs <= 200)].sum()
            assert in_band > 0.95 * energy.sum()

    def test_same_seed_identical(self):
        a, _ = generate_call(CallParams(), np.random.default_rng(42))
        b, _ = generate_call(CallParams(), np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_sweep_clamped_into_band(self):
        params = CallParams(fundamental_hz=(195.0, 195.0), sweep_hz_per_s=(50.0, 50.0))
        proto = draw_prototype(params, np.random.default_rng(2), FS)
        end_freq = proto.fundamental_hz + proto.sweep_hz_per_s * proto.unit_samples / FS
        assert 20.0 <= end_freq <= 200.0 + 1e-9


class TestGenerateRecording:
    def test_no_calls_is_pure_noise(self):
        cfg = SynthConfig(calls_per_recording=(0, 0), seed=0)
        rec, track, gt = generate_recording(cfg, np.random.default_rng(0), "quiet")
        assert track.positive_intervals() == []
        assert not any(gt)
        assert rec.n_samples == 120_000

    def test_complete_call_annotated_exactly(self):
        cfg = SynthConfig(calls_per_recording=(1, 1), partial_call_probability=0.0, seed=5)
        rec, track, gt = generate_recording(cfg, np.random.default_rng(5), "one")
        positives = track.positive_intervals()
        assert len(positives) == 1
        start, end = positives[0]
        assert start % 3000 == 0  # grid aligned
        # the annotated span carries call energy, outside is noise-level
        inside = rec.samples[start:end]
        rms_in = np.sqrt(np.mean(inside**2))
        outside = np.concatenate([rec.samples[:start], rec.samples[end:]])
        assert rms_in > 3 * np.sqrt(np.mean(outside**2))

    def test_all_truncated_keeps_ground_truth(self):
        cfg = SynthConfig(calls_per_recording=(5, 5), partial_call_probability=1.0,
                          duration_seconds=120.0, seed=7)
        _, track, gt = generate_recording(cfg, np.random.default_rng(7), "cut")
        assert track.positive_intervals() == []
        assert sum(gt) > 0

    def test_annotation_ground_truth_consistency(self):
        for seed in range(5):
            cfg = SynthConfig(seed=seed, partial_call_probability=0.5)
            rec, track, gt = generate_recording(cfg, np.random.default_rng(seed), "c")
            for i, active in enumerate(gt):
                w0, w1 = i * 3000, i * 3000 + 5000
                overlaps_positive = any(
                    s < w1 and w0 < e for s, e in track.positive_intervals()
                )
                if overlaps_positive:
                    assert active  # annotated positives are always active

    def test_determinism(self):
        cfg = SynthConfig(seed=11)
        a = generate_recording(cfg, np.random.default_rng(11), "a")
        b = generate_recording(cfg, np.random.default_rng(11), "a")
        assert np.array_equal(a[0].samples, b[0].samples)
        assert a[1] == b[1]
        assert a[2] == b[2]

    def test_overcrowded(self):
        cfg = SynthConfig(duration_seconds=15.0, calls_per_recording=(6, 6), seed=0)
        with pytest.raises(Overcrowded):
            generate_recording(cfg, np.random.default_rng(0), "full")

    def test_validation(self):
        bad = SynthConfig()
        bad.call.fundamental_hz = (10.0, 50.0)  # below the 20 Hz floor
        with pytest.raises(InvalidParams):
            bad.validate()
        bad2 = SynthConfig(partial_call_probability=1.5)
        with pytest.raises(InvalidParams):
            bad2.validate()


class TestGroundTruthFile:
    def test_round_trip(self, tmp_path):
        flags = [True, False, False, True]
        path = tmp_path / "gt.csv"
        write_ground_truth(flags, 3000, path)
        assert read_ground_truth(path) == flags

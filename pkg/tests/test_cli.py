import json

import numpy as np
import pytest

from whalecall import cli, nn
from whalecall.audio_io import read_detections, read_wav, write_wav, Recording
from whalecall.synth import read_ground_truth

SMALL = [
    "--set", "synth.duration_seconds=30",
    "--set", "synth.calls_per_recording=1,2",
]


def _run(argv):
    return cli.main(argv)


def _make_corpus(tmp_path, recordings=2, seed=3):
    out = tmp_path / "corpus"
    code = _run(
        ["synth", "--out", str(out), "--recordings", str(recordings),
         "--seed", str(seed)] + SMALL
    )
    assert code == 0
    return out


class TestSynth:
    def test_same_seed_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert _run(["synth", "--out", str(out), "--recordings", "1",
                         "--seed", "7"] + SMALL) == 0
        for name in ("rec_00.wav", "rec_00.annotations.csv", "rec_00.ground_truth.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_zero_recordings_usage_error(self, tmp_path):
        assert _run(["synth", "--out", str(tmp_path / "x"), "--recordings", "0"]) == 2

    def test_split_corpus_layout(self, tmp_path):
        out = tmp_path / "corpus"
        code = _run(
            ["synth", "--out", str(out), "--train-recordings", "2",
             "--test-recordings", "1", "--seed", "1"] + SMALL
        )
        assert code == 0
        assert len(list((out / "train").glob("*.wav"))) == 2
        assert len(list((out / "test").glob("*.wav"))) == 1
        gt = read_ground_truth(out / "train" / "train_00.ground_truth.csv")
        rec = read_wav(out / "train" / "train_00.wav")
        assert len(gt) == (rec.n_samples - 5000) // 3000 + 1


class TestTrain:
    def test_smoke_and_model_loadable(self, tmp_path):
        corpus = _make_corpus(tmp_path)
        model = tmp_path / "model.wcnn"
        history = tmp_path / "history.jsonl"
        code = _run(
            ["train", "--data", str(corpus), "--model-out", str(model),
             "--history", str(history), "--epochs", "1", "--seed", "0"]
        )
        assert code == 0
        params, config = nn.load_model(model)
        assert config.input_length == 5000
        entries = [json.loads(line) for line in history.read_text().splitlines()]
        assert len(entries) == 1 and "loss" in entries[0]

    def test_missing_annotations_exit_3(self, tmp_path, capsys):
        corpus = _make_corpus(tmp_path)
        missing = corpus / "rec_00.annotations.csv"
        missing.unlink()
        code = _run(
            ["train", "--data", str(corpus), "--model-out", str(tmp_path / "m.wcnn"),
             "--epochs", "1"]
        )
        assert code == 3
        assert "rec_00" in capsys.readouterr().err

    def test_zero_epochs_equals_seeded_init(self, tmp_path):
        corpus = _make_corpus(tmp_path)
        model = tmp_path / "m.wcnn"
        code = _run(
            ["train", "--data", str(corpus), "--model-out", str(model),
             "--epochs", "0", "--seed", "5"]
        )
        assert code == 0
        params, config = nn.load_model(model)
        reference = nn.init_params(config, np.random.default_rng(5))
        for (name, a), (_, b) in zip(
            nn.named_tensors(params), nn.named_tensors(reference)
        ):
            assert np.array_equal(a, b), name

    def test_empty_data_dir_exit_3(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        assert _run(["train", "--data", str(empty),
                     "--model-out", str(tmp_path / "m.wcnn")]) == 3


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """A tiny corpus and a briefly trained model shared by detect/evaluate tests."""
    root = tmp_path_factory.mktemp("cli")
    corpus = _make_corpus(root, recordings=3, seed=2)
    model = root / "model.wcnn"
    assert _run(["train", "--data", str(corpus), "--model-out", str(model),
                 "--epochs", "2", "--seed", "1"]) == 0
    return root, corpus, model


class TestDetect:
    def test_report_matches_segmentation(self, trained, tmp_path):
        root, corpus, model = trained
        wav = corpus / "rec_00.wav"
        out = tmp_path / "det.csv"
        assert _run(["detect", "--model", str(model), "--wav", str(wav),
                     "--out", str(out)]) == 0
        report = read_detections(out)
        rec = read_wav(wav)
        assert len(report.entries) == (rec.n_samples - 5000) // 3000 + 1

    def test_too_short_exit_3(self, trained, tmp_path, capsys):
        root, corpus, model = trained
        short = tmp_path / "short.wav"
        write_wav(Recording("short", 2000, np.zeros(3000)), short)
        assert _run(["detect", "--model", str(model), "--wav", str(short),
                     "--out", str(tmp_path / "d.csv")]) == 3
        assert "window" in capsys.readouterr().err

    def test_bad_model_exit_5(self, trained, tmp_path):
        root, corpus, model = trained
        fake = tmp_path / "fake.wcnn"
        fake.write_bytes(b"XXXX" + bytes(16))
        assert _run(["detect", "--model", str(fake),
                     "--wav", str(corpus / "rec_00.wav"),
                     "--out", str(tmp_path / "d.csv")]) == 5


class TestEvaluate:
    def test_metrics_json_line(self, trained, tmp_path, capsys):
        root, corpus, model = trained
        out = tmp_path / "metrics.json"
        code = _run(["evaluate", "--model", str(model), "--data", str(corpus),
                     "--out", str(out)])
        assert code == 0
        line = capsys.readouterr().out.strip()
        payload = json.loads(line)
        assert set(payload) >= {"accuracy", "recall", "precision", "tp", "tn", "fp", "fn"}
        assert payload["tp"] + payload["tn"] + payload["fp"] + payload["fn"] > 0
        assert json.loads(out.read_text()) == payload

    def test_reports_dir(self, trained, tmp_path):
        root, corpus, model = trained
        reports = tmp_path / "reports"
        assert _run(["evaluate", "--model", str(model), "--data", str(corpus),
                     "--reports-dir", str(reports)]) == 0
        assert sorted(p.name for p in reports.glob("*.csv")) == [
            "rec_00.detections.csv", "rec_01.detections.csv", "rec_02.detections.csv",
        ]


class TestPreprocessPropagate:
    def test_pipeline_files(self, tmp_path, capsys):
        corpus = _make_corpus(tmp_path, recordings=1, seed=4)
        wav = corpus / "rec_00.wav"
        annotations = corpus / "rec_00.annotations.csv"
        windows = tmp_path / "w.npz"
        assert _run(["preprocess", "--wav", str(wav),
                     "--annotations", str(annotations), "--out", str(windows)]) == 0
        propagated = tmp_path / "p.npz"
        assert _run(["propagate", "--windows", str(windows),
                     "--out", str(propagated)]) == 0
        err = capsys.readouterr().err
        assert "flipped" in err
        data = np.load(propagated)
        rec = read_wav(wav)
        assert data["samples"].shape == ((rec.n_samples - 5000) // 3000 + 1, 5000)
        assert data["label"].min() >= 0

    def test_propagate_unlabelled_exit_3(self, tmp_path):
        corpus = _make_corpus(tmp_path, recordings=1, seed=4)
        windows = tmp_path / "w.npz"
        assert _run(["preprocess", "--wav", str(corpus / "rec_00.wav"),
                     "--out", str(windows)]) == 0
        assert _run(["propagate", "--windows", str(windows),
                     "--out", str(tmp_path / "p.npz")]) == 3


class TestPlot:
    def test_tone_spectrogram_and_figure(self, tmp_path):
        t = np.arange(10_000) / 2000
        wav = tmp_path / "tone.wav"
        write_wav(Recording("tone", 2000, 0.5 * np.sin(2 * np.pi * 100 * t)), wav)
        annotations = tmp_path / "tone.annotations.csv"
        annotations.write_text("start_sample,end_sample,label\n0,5000,positive\n")
        image = tmp_path / "fig.ppm"
        csv = tmp_path / "spec.csv"
        assert _run(["plot", "--wav", str(wav), "--annotations", str(annotations),
                     "--out-image", str(image), "--out-csv", str(csv)]) == 0
        table = np.loadtxt(csv, delimiter=",", comments="#")
        freqs = table[:, 0]
        nearest = int(np.argmin(np.abs(freqs - 100.0)))
        assert np.all(table[:, 1:].argmax(axis=0) == nearest)
        header = image.read_bytes().split(b"\n", 1)[0].split()
        n_frames = (10_000 - 512) // 128 + 1
        assert header == [b"P6", str(n_frames).encode(), b"267", b"255"]

    def test_missing_wav_exit_3(self, tmp_path):
        assert _run(["plot", "--wav", str(tmp_path / "nope.wav"),
                     "--out-image", str(tmp_path / "f.ppm"),
                     "--out-csv", str(tmp_path / "s.csv")]) == 3


class TestConfigPrecedence:
    def test_flag_overrides_file_and_set(self, tmp_path, capsys):
        cfg_file = tmp_path / "pipeline.cfg"
        cfg_file.write_text("train.seed = 1\ntrain.epochs = 9\n")
        corpus = _make_corpus(tmp_path, recordings=1, seed=6)
        model = tmp_path / "m.wcnn"
        code = _run(["train", "--config", str(cfg_file), "--set", "train.epochs=8",
                     "--data", str(corpus), "--model-out", str(model),
                     "--epochs", "0", "--seed", "5"])
        assert code == 0
        err = capsys.readouterr().err
        assert "train.epochs = 0" in err
        assert "train.seed = 5" in err

    def test_unknown_set_key_exit_2(self, tmp_path):
        assert _run(["synth", "--out", str(tmp_path / "o"), "--recordings", "1",
                     "--set", "nope=1"]) == 2

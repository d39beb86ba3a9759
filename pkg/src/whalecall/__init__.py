"""Blue whale call detection in low-frequency underwater audio.

The pipeline conditions recordings (segmentation, spectral-floor denoising,
20-200 Hz bandpass, per-window normalization), repairs complete-call-only
annotations by similarity-based label propagation, and classifies each 2.5 s
window with a from-scratch temporal 1D convolutional network.
"""

from .audio_io import (
    AnnotationTrack,
    DetectionReport,
    Label,
    LabelSource,
    Recording,
    read_annotations,
    read_detections,
    read_wav,
    write_annotations,
    write_detections,
    write_wav,
)
from .config import PipelineConfig, load_config
from .detector import (
    ConfusionMatrix,
    Dataset,
    Metrics,
    build_dataset,
    compute_metrics,
    detect_recording,
    evaluate,
    split_train_val,
)
from .dsp import (
    BandpassSpec,
    DenoiseParams,
    SpectralFloor,
    Window,
    bandpass,
    denoise,
    normalize,
    preprocess_recording,
    segment,
    spectral_floor,
)
from .labelprop import PropagationConfig, propagate, similarity
from .nn import (
    ModelConfig,
    ModelParams,
    TrainConfig,
    load_model,
    predict,
    save_model,
    train,
)
from .synth import SynthConfig, generate_call, generate_recording

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

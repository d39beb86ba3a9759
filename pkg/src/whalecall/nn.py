"""From-scratch temporal 1D convolutional network in 64-bit numpy.

The classifier receives conditioned audio windows directly (no spectrogram
features): a stack of conv blocks, each convolution (stride 1, per-side zero
padding) -> batch norm -> ReLU -> max pool (floor semantics) -> dropout,
followed by a flatten and a stack of dense blocks (affine -> ReLU -> dropout)
into a 2-logit output layer. Default geometry: 9 conv blocks with channels
{4, 8, 16, ..., 16}, kernel 8, padding 6 per side, pool 2; 5 dense layers of
widths {160, 96, 48, 32, 16}.

Everything is explicit: the forward pass records a cache, ``backward``
differentiates it exactly (through batch statistics, with max-pool routing to
the first argmax on ties), and ``adam_step`` applies decoupled-from-nothing
classic Adam where the L2 weight-decay term is added to the data gradient for
kernels and weight matrices only. All arithmetic is float64 and all
randomness flows from one seeded generator, so training is bit-reproducible
on a given machine.
"""

from __future__ import annotations

import enum
import json
import struct
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    EmptyDataset,
    ShapeCollapse,
    ShapeMismatch,
    SingleClassWarning,
    SizeMismatch,
    StaleCache,
    VersionMismatch,
)

BN_EPS = 1e-5
MODEL_MAGIC = b"WCNN"
MODEL_VERSION = 1


class Mode(enum.Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass
class ModelConfig:
    """Architecture hyperparameters. The defaults are the full detector; any
    positive channel/width lists that keep the shape flow alive are accepted,
    which is what the reduced test architectures use."""

    input_length: int = 5000
    conv_channels: list[int] = field(
        default_factory=lambda: [4, 8, 16, 16, 16, 16, 16, 16, 16]
    )
    kernel_size: int = 8
    padding_per_side: int = 6
    pool_size: int = 2
    conv_dropout: float = 0.01
    dense_widths: list[int] = field(default_factory=lambda: [160, 96, 48, 32, 16])
    dense_dropout: float = 0.1
    n_classes: int = 2
    weight_decay: float = 0.001

    def validate(self) -> None:
        if self.input_length < 1:
            raise ShapeMismatch("input_length must be positive")
        if not self.conv_channels or any(c < 1 for c in self.conv_channels):
            raise ShapeMismatch("conv_channels must be positive")
        if not self.dense_widths or any(w < 1 for w in self.dense_widths):
            raise ShapeMismatch("dense_widths must be positive")
        if self.kernel_size < 1 or self.pool_size < 1 or self.padding_per_side < 0:
            raise ShapeMismatch("bad kernel/pool/padding geometry")
        if not (0 <= self.conv_dropout < 1 and 0 <= self.dense_dropout < 1):
            raise ShapeMismatch("dropout rates must lie in [0, 1)")
        if self.n_classes != 2:
            raise ShapeMismatch("the detector is a two-class network")
        if self.weight_decay < 0:
            raise ShapeMismatch("weight_decay must be non-negative")
        compute_shape_flow(self)  # raises ShapeCollapse when lengths die


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 12
    seed: int = 0
    bn_momentum: float = 0.1

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.adam_epsilon <= 0:
            raise ValueError("adam_epsilon must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if not 0 < self.bn_momentum <= 1:
            raise ValueError("bn_momentum must lie in (0, 1]")


@dataclass
class ShapeFlow:
    """Per-block output geometry plus the flatten width feeding the dense stack."""

    blocks: list[tuple[str, int, int]]
    flatten: int


def compute_shape_flow(config: ModelConfig) -> ShapeFlow:
    """Trace lengths through the conv stack.

    Each block maps length L to ``floor((L + 2*padding - kernel + 1) / pool)``
    and must stay >= 1.
    """
    length = config.input_length
    blocks: list[tuple[str, int, int]] = []
    for i, channels in enumerate(config.conv_channels):
        conv_len = length + 2 * config.padding_per_side - config.kernel_size + 1
        pooled = conv_len // config.pool_size
        if conv_len < 1 or pooled < 1:
            raise ShapeCollapse(
                f"block {i}: length {length} collapses to {pooled} "
                f"(kernel {config.kernel_size}, pad {config.padding_per_side}, "
                f"pool {config.pool_size})"
            )
        blocks.append((f"conv{i + 1}", pooled, channels))
        length = pooled
    return ShapeFlow(blocks=blocks, flatten=length * config.conv_channels[-1])


# --- parameters ---------------------------------------------------------------


@dataclass
class ConvBlockParams:
    kernel: np.ndarray  # (out_channels, in_channels, kernel_size)
    bias: np.ndarray  # (out_channels,)
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray


@dataclass
class DenseParams:
    weight: np.ndarray  # (out_features, in_features)
    bias: np.ndarray


@dataclass
class ModelParams:
    conv: list[ConvBlockParams]
    dense: list[DenseParams]
    output: DenseParams

    def copy(self) -> "ModelParams":
        return ModelParams(
            conv=[
                ConvBlockParams(*(getattr(c, f).copy() for f in _CONV_FIELDS))
                for c in self.conv
            ],
            dense=[DenseParams(d.weight.copy(), d.bias.copy()) for d in self.dense],
            output=DenseParams(self.output.weight.copy(), self.output.bias.copy()),
        )


_CONV_FIELDS = ("kernel", "bias", "gamma", "beta", "running_mean", "running_var")
_CONV_LEARNABLE = ("kernel", "bias", "gamma", "beta")


def named_tensors(params: ModelParams, include_stats: bool = True):
    """Canonical (name, array) ordering used by the optimizer and the model
    file: conv blocks first, then dense layers, then the output layer."""
    for i, block in enumerate(params.conv):
        fields = _CONV_FIELDS if include_stats else _CONV_LEARNABLE
        for name in fields:
            yield f"conv{i}.{name}", getattr(block, name)
    for i, layer in enumerate(params.dense):
        yield f"dense{i}.weight", layer.weight
        yield f"dense{i}.bias", layer.bias
    yield "output.weight", params.output.weight
    yield "output.bias", params.output.bias


def named_learnable(params: ModelParams):
    """Yields (name, array, decayed) where decayed marks tensors subject to
    L2 weight decay: conv kernels and dense/output weight matrices only."""
    for name, arr in named_tensors(params, include_stats=False):
        yield name, arr, name.endswith((".kernel", ".weight"))


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """He-uniform kernels and weights; zero biases; identity batch norm."""
    config.validate()

    def he_uniform(shape, fan_in):
        limit = np.sqrt(6.0 / fan_in)
        return rng.uniform(-limit, limit, size=shape)

    conv = []
    in_channels = 1
    for out_channels in config.conv_channels:
        conv.append(
            ConvBlockParams(
                kernel=he_uniform(
                    (out_channels, in_channels, config.kernel_size),
                    in_channels * config.kernel_size,
                ),
                bias=np.zeros(out_channels),
                gamma=np.ones(out_channels),
                beta=np.zeros(out_channels),
                running_mean=np.zeros(out_channels),
                running_var=np.ones(out_channels),
            )
        )
        in_channels = out_channels

    dense = []
    width_in = compute_shape_flow(config).flatten
    for width_out in config.dense_widths:
        dense.append(
            DenseParams(
                weight=he_uniform((width_out, width_in), width_in),
                bias=np.zeros(width_out),
            )
        )
        width_in = width_out
    output = DenseParams(
        weight=he_uniform((config.n_classes, width_in), width_in),
        bias=np.zeros(config.n_classes),
    )
    return ModelParams(conv=conv, dense=dense, output=output)


# --- forward ------------------------------------------------------------------


def _as_batch(inputs: np.ndarray, config: ModelConfig) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, None, :]
    if x.ndim != 3 or x.shape[1] != 1 or x.shape[2] != config.input_length:
        raise ShapeMismatch(
            f"expected (batch, 1, {config.input_length}) inputs, got {x.shape}"
        )
    return x


def _conv_cols(x: np.ndarray, kernel_size: int, pad: int) -> np.ndarray:
    """Zero-pad and unfold into (batch, conv_len, in_channels * kernel_size)."""
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    view = np.lib.stride_tricks.sliding_window_view(padded, kernel_size, axis=2)
    b, c, conv_len, k = view.shape
    return np.ascontiguousarray(view.transpose(0, 2, 1, 3)).reshape(
        b, conv_len, c * k
    )


def _dropout_mask(rng, shape, rate):
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(np.float64) / keep


def forward(
    params: ModelParams,
    config: ModelConfig,
    inputs: np.ndarray,
    mode: Mode,
    rng: np.random.Generator | None = None,
):
    """Run the network. Returns ``(logits, cache)``.

    TRAIN mode normalizes with batch statistics, applies inverted dropout from
    ``rng``, and returns the cache ``backward`` needs. EVAL mode uses running
    statistics, is deterministic, and returns ``cache=None``. Neither mode
    mutates ``params``; the training loop folds the cached batch statistics
    into the running ones itself.
    """
    if mode is Mode.TRAIN and rng is None:
        raise ValueError("TRAIN-mode forward needs an rng for dropout masks")
    x = _as_batch(inputs, config)
    train = mode is Mode.TRAIN
    conv_caches = []

    for block in params.conv:
        cols = _conv_cols(x, config.kernel_size, config.padding_per_side)
        b, conv_len, _ = cols.shape
        out_ch = block.kernel.shape[0]
        kernel_mat = block.kernel.reshape(out_ch, -1)
        pre_bn = (
            (cols.reshape(b * conv_len, -1) @ kernel_mat.T)
            .reshape(b, conv_len, out_ch)
            .transpose(0, 2, 1)
        ) + block.bias[None, :, None]

        if train:
            mean = pre_bn.mean(axis=(0, 2))
            var = pre_bn.var(axis=(0, 2))
        else:
            mean, var = block.running_mean, block.running_var
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (pre_bn - mean[None, :, None]) * inv_std[None, :, None]
        bn_out = block.gamma[None, :, None] * xhat + block.beta[None, :, None]

        relu_mask = bn_out > 0
        activated = bn_out * relu_mask

        pooled_len = conv_len // config.pool_size
        trimmed = activated[:, :, : pooled_len * config.pool_size].reshape(
            b, out_ch, pooled_len, config.pool_size
        )
        if config.pool_size == 2:
            # argmax with first-index tie break, as cheap elementwise ops
            pool_arg = (trimmed[..., 1] > trimmed[..., 0]).astype(np.intp)
            pooled = np.maximum(trimmed[..., 0], trimmed[..., 1])
        else:
            pool_arg = trimmed.argmax(axis=3)
            pooled = np.take_along_axis(trimmed, pool_arg[..., None], axis=3)[..., 0]

        drop_mask = None
        if train and config.conv_dropout > 0:
            drop_mask = _dropout_mask(rng, pooled.shape, config.conv_dropout)
            pooled = pooled * drop_mask

        conv_caches.append(
            {
                "cols": cols,
                "input_length": x.shape[2],
                "conv_len": conv_len,
                "xhat": xhat,
                "inv_std": inv_std,
                "batch_mean": mean,
                "batch_var": var,
                "relu_mask": relu_mask,
                "pool_arg": pool_arg,
                "drop_mask": drop_mask,
            }
        )
        x = pooled

    batch = x.shape[0]
    flat = x.reshape(batch, -1)
    expected = compute_shape_flow(config).flatten
    if flat.shape[1] != expected:
        raise ShapeMismatch(
            f"flatten width {flat.shape[1]} != configured {expected}"
        )

    dense_caches = []
    h = flat
    for layer in params.dense:
        pre = h @ layer.weight.T + layer.bias
        relu_mask = pre > 0
        act = pre * relu_mask
        drop_mask = None
        if train and config.dense_dropout > 0:
            drop_mask = _dropout_mask(rng, act.shape, config.dense_dropout)
            act = act * drop_mask
        dense_caches.append({"input": h, "relu_mask": relu_mask, "drop_mask": drop_mask})
        h = act

    logits = h @ params.output.weight.T + params.output.bias
    if not train:
        return logits, None
    cache = {
        "mode": Mode.TRAIN,
        "conv": conv_caches,
        "dense": dense_caches,
        "output_input": h,
        "conv_output_shape": x.shape,
    }
    return logits, cache


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood with max-subtraction stabilization.

    Returns the loss and its gradient with respect to the logits,
    ``(softmax - one_hot) / batch``.
    """
    labels = np.asarray(labels, dtype=np.intp)
    batch = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_norm - shifted[np.arange(batch), labels]))
    dlogits = softmax(logits)
    dlogits[np.arange(batch), labels] -= 1.0
    return loss, dlogits / batch


# --- backward -----------------------------------------------------------------


def backward(
    params: ModelParams,
    config: ModelConfig,
    cache: dict,
    dlogits: np.ndarray,
) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients of the data loss for every learnable
    tensor, keyed by the names from :func:`named_learnable`."""
    if cache is None or cache.get("mode") is not Mode.TRAIN:
        raise StaleCache("backward needs the cache of a TRAIN-mode forward")
    grads: dict[str, np.ndarray] = {}

    h = cache["output_input"]
    grads["output.weight"] = dlogits.T @ h
    grads["output.bias"] = dlogits.sum(axis=0)
    dh = dlogits @ params.output.weight

    for i in reversed(range(len(params.dense))):
        layer_cache = cache["dense"][i]
        if layer_cache["drop_mask"] is not None:
            dh = dh * layer_cache["drop_mask"]
        dpre = dh * layer_cache["relu_mask"]
        grads[f"dense{i}.weight"] = dpre.T @ layer_cache["input"]
        grads[f"dense{i}.bias"] = dpre.sum(axis=0)
        dh = dpre @ params.dense[i].weight

    dx = dh.reshape(cache["conv_output_shape"])

    for i in reversed(range(len(params.conv))):
        block = params.conv[i]
        block_cache = cache["conv"][i]
        b, out_ch, pooled_len = dx.shape

        if block_cache["drop_mask"] is not None:
            dx = dx * block_cache["drop_mask"]

        conv_len = block_cache["conv_len"]
        dact = np.zeros((b, out_ch, conv_len))
        covered = dact[:, :, : pooled_len * config.pool_size].reshape(
            b, out_ch, pooled_len, config.pool_size
        )
        if config.pool_size == 2:
            arg = block_cache["pool_arg"]
            covered[..., 0] = dx * (1 - arg)
            covered[..., 1] = dx * arg
        else:
            np.put_along_axis(
                covered, block_cache["pool_arg"][..., None], dx[..., None], axis=3
            )

        dbn = dact * block_cache["relu_mask"]

        xhat = block_cache["xhat"]
        inv_std = block_cache["inv_std"]
        grads[f"conv{i}.gamma"] = (dbn * xhat).sum(axis=(0, 2))
        grads[f"conv{i}.beta"] = dbn.sum(axis=(0, 2))
        dxhat = dbn * block.gamma[None, :, None]
        m = b * conv_len
        dpre = inv_std[None, :, None] * (
            dxhat
            - dxhat.mean(axis=(0, 2), keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=(0, 2), keepdims=True)
        )

        grads[f"conv{i}.bias"] = dpre.sum(axis=(0, 2))
        dflat = np.ascontiguousarray(dpre.transpose(0, 2, 1)).reshape(
            b * conv_len, out_ch
        )
        cols = block_cache["cols"]
        grads[f"conv{i}.kernel"] = (
            dflat.T @ cols.reshape(b * conv_len, -1)
        ).reshape(block.kernel.shape)

        if i == 0:
            continue  # nothing consumes the gradient at the raw input

        # gradient to the block input: one small matmul per kernel tap,
        # reusing the (batch*conv_len, out_ch) layout built for the kernel
        # gradient; accumulation happens in (batch, position, channel) layout
        # so the shifted adds stay contiguous
        k = config.kernel_size
        in_ch = block.kernel.shape[1]
        pad = config.padding_per_side
        input_length = block_cache["input_length"]
        dpadded = np.zeros((b, input_length + 2 * pad, in_ch))
        for j in range(k):
            tap = (dflat @ block.kernel[:, :, j]).reshape(b, conv_len, in_ch)
            dpadded[:, j : j + conv_len, :] += tap
        dx = np.ascontiguousarray(
            dpadded.transpose(0, 2, 1)[:, :, pad : pad + input_length]
        )

    return grads


# --- optimizer ------------------------------------------------------------------


@dataclass
class AdamState:
    step: int
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]


def init_adam(params: ModelParams) -> AdamState:
    return AdamState(
        step=0,
        first_moment={n: np.zeros_like(a) for n, a, _ in named_learnable(params)},
        second_moment={n: np.zeros_like(a) for n, a, _ in named_learnable(params)},
    )


def adam_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    state: AdamState,
    train_config: TrainConfig,
    config: ModelConfig,
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update, in place.

    The effective gradient is the data gradient plus ``weight_decay * value``
    for kernels and weight matrices; biases and batch-norm gain/shift are
    exempt.
    """
    state.step += 1
    b1, b2 = train_config.adam_beta1, train_config.adam_beta2
    bias1 = 1.0 - b1**state.step
    bias2 = 1.0 - b2**state.step
    for name, tensor, decayed in named_learnable(params):
        g = grads[name]
        if g.shape != tensor.shape:
            raise ShapeMismatch(f"{name}: gradient {g.shape} vs parameter {tensor.shape}")
        if decayed and config.weight_decay:
            g = g + config.weight_decay * tensor
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        tensor -= (
            train_config.learning_rate
            * (m / bias1)
            / (np.sqrt(v / bias2) + train_config.adam_epsilon)
        )
    return params, state


# --- training and inference -----------------------------------------------------


def _update_running_stats(params: ModelParams, cache: dict, momentum: float) -> None:
    for block, block_cache in zip(params.conv, cache["conv"]):
        block.running_mean *= 1.0 - momentum
        block.running_mean += momentum * block_cache["batch_mean"]
        block.running_var *= 1.0 - momentum
        block.running_var += momentum * block_cache["batch_var"]


def train(
    inputs: np.ndarray,
    labels: np.ndarray,
    config: ModelConfig,
    train_config: TrainConfig,
    val_inputs: np.ndarray | None = None,
    val_labels: np.ndarray | None = None,
) -> tuple[ModelParams, list[dict]]:
    """Fit the network on preprocessed labelled windows.

    The seed fully determines initialization, per-epoch shuffling, and dropout
    masks. Mini-batches keep the last partial batch. Returns the trained
    parameters and one history entry per epoch (mean training loss, plus
    validation loss/accuracy when a validation set is supplied).
    """
    train_config.validate()
    x = _as_batch(inputs, config)
    y = np.asarray(labels, dtype=np.intp)
    n = x.shape[0]
    if n == 0:
        raise EmptyDataset("cannot train on zero windows")
    if y.shape != (n,):
        raise ShapeMismatch(f"labels {y.shape} do not match {n} inputs")
    if len(np.unique(y)) < 2:
        warnings.warn(
            "training set contains a single class; validation metrics degenerate",
            SingleClassWarning,
        )

    rng = np.random.default_rng(train_config.seed)
    params = init_params(config, rng)
    state = init_adam(params)
    history: list[dict] = []

    for epoch in range(1, train_config.epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, train_config.batch_size):
            idx = order[start : start + train_config.batch_size]
            logits, cache = forward(params, config, x[idx], Mode.TRAIN, rng)
            loss, dlogits = softmax_cross_entropy(logits, y[idx])
            grads = backward(params, config, cache, dlogits)
            adam_step(params, grads, state, train_config, config)
            _update_running_stats(params, cache, train_config.bn_momentum)
            loss_sum += loss * idx.size
        entry = {"epoch": epoch, "loss": loss_sum / n}
        if val_inputs is not None and val_labels is not None:
            val_logits, _ = forward(params, config, val_inputs, Mode.EVAL)
            val_y = np.asarray(val_labels, dtype=np.intp)
            entry["val_loss"], _ = softmax_cross_entropy(val_logits, val_y)
            entry["val_accuracy"] = float(
                np.mean(val_logits.argmax(axis=1) == val_y)
            )
        history.append(entry)
    return params, history


def predict_batch(
    params: ModelParams,
    config: ModelConfig,
    inputs: np.ndarray,
    chunk: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """EVAL-mode inference. Returns (labels, probability_positive) arrays;
    a window is positive when its positive probability is >= 0.5."""
    x = _as_batch(inputs, config)
    probs = np.empty(x.shape[0])
    for start in range(0, x.shape[0], chunk):
        logits, _ = forward(params, config, x[start : start + chunk], Mode.EVAL)
        probs[start : start + chunk] = softmax(logits)[:, 1]
    return (probs >= 0.5).astype(np.intp), probs


def predict(params: ModelParams, config: ModelConfig, window: np.ndarray):
    """Classify one window; returns ``(label_index, probability_positive)``."""
    labels, probs = predict_batch(params, config, np.asarray(window)[None, :])
    return int(labels[0]), float(probs[0])


# --- serialization ----------------------------------------------------------------


def save_model(params: ModelParams, config: ModelConfig, path) -> None:
    """Single-file binary model: magic ``WCNN``, u32 format version, u32
    length-prefixed canonical JSON of the configuration, then every tensor
    from :func:`named_tensors` as little-endian float64, in order."""
    config.validate()
    meta = json.dumps(asdict(config), sort_keys=True).encode("utf-8")
    parts = [MODEL_MAGIC, struct.pack("<II", MODEL_VERSION, len(meta)), meta]
    for _, arr in named_tensors(params):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def _zero_params(config: ModelConfig) -> ModelParams:
    conv = []
    in_channels = 1
    for out_channels in config.conv_channels:
        conv.append(
            ConvBlockParams(
                kernel=np.zeros((out_channels, in_channels, config.kernel_size)),
                bias=np.zeros(out_channels),
                gamma=np.zeros(out_channels),
                beta=np.zeros(out_channels),
                running_mean=np.zeros(out_channels),
                running_var=np.zeros(out_channels),
            )
        )
        in_channels = out_channels
    width_in = compute_shape_flow(config).flatten
    dense = []
    for width_out in config.dense_widths:
        dense.append(DenseParams(np.zeros((width_out, width_in)), np.zeros(width_out)))
        width_in = width_out
    output = DenseParams(np.zeros((config.n_classes, width_in)), np.zeros(config.n_classes))
    return ModelParams(conv=conv, dense=dense, output=output)


def load_model(path) -> tuple[ModelParams, ModelConfig]:
    """Read a model file, validating magic, version, and that the payload size
    matches the parameter count implied by the stored configuration."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MODEL_MAGIC:
        raise BadMagic(f"{path}: not a model file")
    version, meta_len = struct.unpack_from("<II", raw, 4)
    if version != MODEL_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {MODEL_VERSION}")
    if len(raw) < 12 + meta_len:
        raise SizeMismatch(f"{path}: truncated configuration block")
    try:
        fields = json.loads(raw[12 : 12 + meta_len].decode("utf-8"))
        config = ModelConfig(**fields)
        config.validate()
    except (ValueError, TypeError) as exc:
        raise SizeMismatch(f"{path}: bad configuration block: {exc}") from exc

    params = _zero_params(config)
    offset = 12 + meta_len
    for name, arr in named_tensors(params):
        nbytes = arr.size * 8
        if offset + nbytes > len(raw):
            raise SizeMismatch(f"{path}: file ends inside tensor {name}")
        arr[...] = np.frombuffer(raw, dtype="<f8", count=arr.size, offset=offset).reshape(
            arr.shape
        )
        offset += nbytes
    if offset != len(raw):
        raise SizeMismatch(f"{path}: {len(raw) - offset} trailing bytes")
    return params, config

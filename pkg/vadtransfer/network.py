import os
import json
import copy
import struct

import numpy as np

from scipy.special import expit
from dataclasses import dataclass, field, asdict, replace, fields
from typing import Any, Callable, Dict, List, Optional, Tuple
from .utils import *
from .feature_store import FeatureMatrix

#   --------------------------------------------------------------------------------------------------------------------
#
#   DDNN engine
#
#   * sigmoid encoder stack with tied-weight decoders, a single sigmoid output unit
#   * greedy layer-wise pre-training, the noisy stack reconstructing an accompanying clean stack
#   * supervised fine-tuning by backpropagation with best-dev-epoch selection
#
#   Losses are summed over the rows of a mini-batch, learning rates are per-row rates.
#
#   --------------------------------------------------------------------------------------------------------------------

ProgressCallback = Optional[Callable[[str], None]]


@dataclass
class LayerWeights:
    W: np.ndarray  # (out_dim, in_dim), decoder weight is W.T
    b_enc: np.ndarray
    b_dec: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def encode(self, x: np.ndarray) -> np.ndarray:
        return expit(x @ self.W.T + self.b_enc)

    def decode(self, h: np.ndarray) -> np.ndarray:
        return expit(h @ self.W + self.b_dec)

    def params(self) -> List[np.ndarray]:
        return [self.W, self.b_enc, self.b_dec]


@dataclass
class OutputUnit:
    w: np.ndarray
    b: np.ndarray  # shape (1,) so it can be updated in place

    def params(self) -> List[np.ndarray]:
        return [self.w, self.b]


@dataclass
class NetworkStack:
    hidden_layers: List[LayerWeights]
    output_unit: OutputUnit
    input_dim: int = FEATURE_DIM

    def __post_init__(self):
        expected = self.input_dim
        for idx, layer in enumerate(self.hidden_layers):
            if layer.in_dim != expected:
                raise InvalidNetworkShape(f"layer {idx + 1} expects {layer.in_dim} inputs, previous width {expected}")
            expected = layer.out_dim
        if self.output_unit.w.shape[0] != expected:
            raise InvalidNetworkShape(f"output unit expects {self.output_unit.w.shape[0]} inputs, top width {expected}")

    @property
    def depth(self) -> int:
        return len(self.hidden_layers)

    @property
    def widths(self) -> Tuple[int, ...]:
        return tuple(layer.out_dim for layer in self.hidden_layers)

    def representations(self, x: np.ndarray, upto: Optional[int] = None) -> List[np.ndarray]:
        """
        [h0 = x, h1, ..., h_upto]
        """
        reps = [np.asarray(x, dtype=np.float64)]
        for layer in self.hidden_layers[:self.depth if upto is None else upto]:
            reps.append(layer.encode(reps[-1]))
        return reps

    def encode(self, x: np.ndarray, upto: Optional[int] = None) -> np.ndarray:
        return self.representations(x, upto)[-1]

    def output_logits(self, x: np.ndarray) -> np.ndarray:
        return self.encode(x) @ self.output_unit.w + self.output_unit.b[0]

    def params(self) -> List[np.ndarray]:
        return [p for layer in self.hidden_layers for p in layer.params()] + self.output_unit.params()

    def copy(self) -> "NetworkStack":
        return copy.deepcopy(self)

    def truncated(self, depth: int) -> "NetworkStack":
        """
        The lower `depth` layers, with a fresh zero output unit.
        """
        layers = copy.deepcopy(self.hidden_layers[:depth])
        width = layers[-1].out_dim if layers else self.input_dim
        return NetworkStack(layers, OutputUnit(np.zeros(width), np.zeros(1)), self.input_dim)


@dataclass(frozen=True)
class TrainConfig:
    lr_pretrain: float = TrainDefaultParams.LrPretrain
    epochs_pretrain: int = TrainDefaultParams.EpochsPretrain
    lr_finetune: float = TrainDefaultParams.LrFinetune
    epochs_finetune: int = TrainDefaultParams.EpochsFinetune
    batch_size: int = TrainDefaultParams.BatchSize
    seed: int = TrainDefaultParams.Seed
    hidden_widths: Tuple[int, ...] = TrainDefaultParams.HiddenWidths
    checkpoint_every: int = TrainDefaultParams.CheckpointEvery
    pretrain_target: str = PretrainTarget.LayerInput

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        for name in ("lr_pretrain", "lr_finetune", "batch_size", "checkpoint_every"):
            if getattr(self, name) <= 0:
                raise InvalidExperimentConfig(f"{name} must be positive")
        for name in ("epochs_pretrain", "epochs_finetune", "seed"):
            if getattr(self, name) < 0:
                raise InvalidExperimentConfig(f"{name} must not be negative")
        if not self.hidden_widths or min(self.hidden_widths) <= 0:
            raise InvalidExperimentConfig("hidden widths must be positive")
        if len(self.hidden_widths) > TrainDefaultParams.MaxDepth:
            raise InvalidExperimentConfig(f"at most {TrainDefaultParams.MaxDepth} hidden layers are supported")
        if self.pretrain_target not in [t.value for t in PretrainTarget]:
            raise InvalidExperimentConfig(f"unknown pre-training target {self.pretrain_target!r}")

    def with_overrides(self, overrides: Optional[Dict[str, Any]] = None, **kwargs) -> "TrainConfig":
        changes = dict(overrides or dict(), **kwargs)
        known = {f.name for f in fields(self)}
        unknown = set(changes) - known
        if unknown:
            raise InvalidExperimentConfig(f"unknown train settings: {','.join(sorted(unknown))}")
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["hidden_widths"] = list(self.hidden_widths)
        return data


@dataclass
class PretrainPair:
    noisy: FeatureMatrix
    clean: FeatureMatrix

    def __post_init__(self):
        if len(self.noisy) != len(self.clean):
            raise RowCountMismatch("pretrain pair", len(self.noisy), len(self.clean))
        if self.noisy.dim != self.clean.dim:
            raise DimensionMismatch(self.noisy.dim, self.clean.dim)
        for which, matrix in (("noisy", self.noisy), ("clean", self.clean)):
            if len(matrix) and (matrix.rows.min() < 0.0 or matrix.rows.max() > 1.0):
                raise InvalidNetworkShape(f"{which} pre-training rows must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.noisy)


@dataclass
class PretrainResult:
    stack: NetworkStack
    representations: List[np.ndarray]  # h0..hL of the data the stack was trained on
    loss_history: List[List[Tuple[int, float]]] = field(default_factory=list)  # per layer: (epoch, mean row loss)


@dataclass
class FinetuneResult:
    stack: NetworkStack
    dev_accuracies: List[float] = field(default_factory=list)  # index = epoch, 0 = before any update
    train_losses: List[float] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def best_dev_accuracy(self) -> float:
        return self.dev_accuracies[self.best_epoch] if self.dev_accuracies else float("nan")


@dataclass
class Prediction:
    labels: np.ndarray
    probabilities: np.ndarray


@dataclass
class GradientCheckReport:
    max_relative: float
    max_absolute: float
    n_params: int

    def passed(self, relative_tol: float = 1e-6, absolute_tol: float = 1e-9) -> bool:
        return self.max_relative < relative_tol and self.max_absolute < absolute_tol

# ========= Losses


def reconstruction_ce(target: np.ndarray, reconstruction: np.ndarray) -> float:
    target = np.asarray(target, dtype=np.float64)
    reconstruction = np.asarray(reconstruction, dtype=np.float64)
    if target.shape != reconstruction.shape:
        raise DimensionMismatch(target.shape, reconstruction.shape)
    return float(-np.sum(target * np.log(reconstruction) + (1.0 - target) * np.log1p(-reconstruction)))


def _ce_from_logits(target: np.ndarray, logits: np.ndarray) -> float:
    # -[t ln s(z) + (1 - t) ln(1 - s(z))] = ln(1 + e^z) - t z, summed per row and averaged over rows
    return float(np.sum(np.logaddexp(0.0, logits) - target * logits) / max(logits.shape[0], 1))

# ========= Initialization


def init_layer(in_dim: int, out_dim: int, seed: int) -> LayerWeights:
    if in_dim <= 0 or out_dim <= 0:
        raise InvalidNetworkShape(f"layer dims must be positive, got {in_dim}x{out_dim}")
    bound = np.sqrt(6.0 / (in_dim + out_dim))
    W = np.random.default_rng(seed).uniform(-bound, bound, size=(out_dim, in_dim))
    return LayerWeights(W, np.zeros(out_dim), np.zeros(in_dim))


def init_output_unit(in_dim: int, seed: int) -> OutputUnit:
    bound = np.sqrt(6.0 / (in_dim + 1))
    return OutputUnit(np.random.default_rng(seed).uniform(-bound, bound, size=in_dim), np.zeros(1))


def _layer_seed(cfg: TrainConfig, layer_index: int) -> int:
    return derive_seed(cfg.seed, SeedPurpose.Pretrain, layer_index)


def _check_depth(depth: int, cfg: TrainConfig, minimum: int = 1):
    if not minimum <= depth <= len(cfg.hidden_widths):
        raise InvalidNetworkShape(f"depth {depth} outside 1..{len(cfg.hidden_widths)}")

# ========= Pre-training


def reconstruction_loss_and_grads(layer: LayerWeights, x: np.ndarray,
                                  target: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    """
    Mean row CE(target, decode(encode(x))), with gradients for [W, b_enc, b_dec].
    """
    h = layer.encode(x)
    logits = h @ layer.W + layer.b_dec
    loss = _ce_from_logits(target, logits)
    d_out = (expit(logits) - target) / x.shape[0]
    d_code = (d_out @ layer.W.T) * h * (1.0 - h)
    grad_W = d_code.T @ x + h.T @ d_out
    return loss, [grad_W, d_code.sum(axis=0), d_out.sum(axis=0)]


def code_loss_and_grads(layer: LayerWeights, x: np.ndarray,
                        target_code: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    """
    Mean row CE(target_code, encode(x)); the decoder bias receives no gradient.
    """
    logits = x @ layer.W.T + layer.b_enc
    loss = _ce_from_logits(target_code, logits)
    d_code = (expit(logits) - target_code) / x.shape[0]
    return loss, [d_code.T @ x, d_code.sum(axis=0), np.zeros_like(layer.b_dec)]


_PRETRAINTARGET_TO_OBJECTIVE_MAP = {
    PretrainTarget.LayerInput: reconstruction_loss_and_grads,
    PretrainTarget.LayerOutput: code_loss_and_grads,
}


def _train_layer(layer: LayerWeights, inputs: np.ndarray, targets: np.ndarray, cfg: TrainConfig, seed: int,
                 objective=reconstruction_loss_and_grads, progress: ProgressCallback = None,
                 label: str = "") -> List[Tuple[int, float]]:
    n_rows = inputs.shape[0]
    rng = np.random.default_rng(seed)
    history = [(0, objective(layer, inputs, targets)[0])]
    for epoch in range(1, cfg.epochs_pretrain + 1):
        order = rng.permutation(n_rows)
        for start in range(0, n_rows, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, grads = objective(layer, inputs[batch], targets[batch])
            for param, grad in zip(layer.params(), grads):
                param -= cfg.lr_pretrain * grad
        if epoch % cfg.checkpoint_every == 0 or epoch == cfg.epochs_pretrain:
            history.append((epoch, objective(layer, inputs, targets)[0]))
            if progress:
                progress(f"{label} epoch {epoch} loss {history[-1][1]:.4f}")
    return history


def pretrain_clean_stack(clean: FeatureMatrix, depth: int, cfg: TrainConfig,
                         progress: ProgressCallback = None) -> PretrainResult:
    """
    Accompanying clean network: every layer is an autoencoder of the clean representation below it.
    A depth of 0 gives an empty stack, which is all a single noisy layer needs.
    """
    _check_depth(depth, cfg, minimum=0)
    if not len(clean):
        raise EmptyFeatureInput("pretrain_clean_stack")
    reps = [clean.rows]
    layers, history = list(), list()
    for idx, width in enumerate(cfg.hidden_widths[:depth]):
        layer = init_layer(reps[-1].shape[1], width, _layer_seed(cfg, idx + 1))
        history.append(_train_layer(layer, reps[-1], reps[-1], cfg, _layer_seed(cfg, idx + 1),
                                    progress=progress, label=f"clean layer {idx + 1}"))
        layers.append(layer)
        reps.append(layer.encode(reps[-1]))
    output = init_output_unit(reps[-1].shape[1], derive_seed(cfg.seed, SeedPurpose.OutputUnit))
    return PretrainResult(NetworkStack(layers, output, clean.dim), reps, history)


def pretrain_noisy_stack(pair: PretrainPair, clean_stack: NetworkStack, depth: int, cfg: TrainConfig,
                         target: Optional[str] = None, progress: ProgressCallback = None) -> PretrainResult:
    """
    Greedy noisy stack. With the LayerInput target, layer l reconstructs the clean layer-(l-1) representation from
    the noisy one; with LayerOutput, the noisy layer-l code is fit to the clean layer-l code.
    """
    _check_depth(depth, cfg)
    if not len(pair):
        raise EmptyFeatureInput("pretrain_noisy_stack")
    target = target or cfg.pretrain_target
    objective = _PRETRAINTARGET_TO_OBJECTIVE_MAP.get(target)
    if objective is None:
        raise InvalidExperimentConfig(f"unknown pre-training target {target!r}")
    needed = depth if target == PretrainTarget.LayerOutput else depth - 1
    if clean_stack.depth < needed:
        raise InvalidNetworkShape(f"clean stack depth {clean_stack.depth} < {needed}")
    clean_reps = clean_stack.representations(pair.clean.rows, upto=needed)

    reps = [pair.noisy.rows]
    layers, history = list(), list()
    for idx, width in enumerate(cfg.hidden_widths[:depth]):
        layer = init_layer(reps[-1].shape[1], width, _layer_seed(cfg, idx + 1))
        goal = clean_reps[idx + 1] if target == PretrainTarget.LayerOutput else clean_reps[idx]
        history.append(_train_layer(layer, reps[-1], goal, cfg, _layer_seed(cfg, idx + 1), objective,
                                    progress=progress, label=f"noisy layer {idx + 1}"))
        layers.append(layer)
        reps.append(layer.encode(reps[-1]))
    output = init_output_unit(reps[-1].shape[1], derive_seed(cfg.seed, SeedPurpose.OutputUnit))
    return PretrainResult(NetworkStack(layers, output, pair.noisy.dim), reps, history)


def pretrain_ddnn(pair: PretrainPair, depth: int, cfg: TrainConfig, progress: ProgressCallback = None,
                  clean_depth: Optional[int] = None) -> Tuple[PretrainResult, PretrainResult]:
    """
    Clean stack first, then the noisy stack against it. Returns (noisy, clean).
    """
    if clean_depth is None:
        clean_depth = depth if cfg.pretrain_target == PretrainTarget.LayerOutput else depth - 1
    clean = pretrain_clean_stack(pair.clean, clean_depth, cfg, progress)
    noisy = pretrain_noisy_stack(pair, clean.stack, depth, cfg, progress=progress)
    return noisy, clean


def pretrain_top_layer(inputs: np.ndarray, cfg: TrainConfig, layer_index: int,
                       targets: Optional[np.ndarray] = None,
                       progress: ProgressCallback = None) -> Tuple[LayerWeights, List[Tuple[int, float]]]:
    """
    One autoencoder layer on already-encoded rows (values in (0, 1)). Targets default to the inputs.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = inputs if targets is None else np.asarray(targets, dtype=np.float64)
    if not inputs.shape[0]:
        raise EmptyFeatureInput("pretrain_top_layer")
    if inputs.shape != targets.shape:
        raise DimensionMismatch(inputs.shape, targets.shape)
    width = cfg.hidden_widths[layer_index - 1]
    layer = init_layer(inputs.shape[1], width, _layer_seed(cfg, layer_index))
    history = _train_layer(layer, inputs, targets, cfg, _layer_seed(cfg, layer_index),
                           progress=progress, label=f"top layer {layer_index}")
    return layer, history

# ========= Fine-tuning


def finetune_loss_and_grads(stack: NetworkStack, x: np.ndarray, y: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    """
    Mean binary CE of the output unit; gradients follow `stack.params()` order
    (decoder biases get zeros).
    """
    reps = stack.representations(x)
    logits = reps[-1] @ stack.output_unit.w + stack.output_unit.b[0]
    loss = _ce_from_logits(y, logits)
    d_logit = (expit(logits) - y) / x.shape[0]
    out_grads = [reps[-1].T @ d_logit, np.array([d_logit.sum()])]
    d_h = np.outer(d_logit, stack.output_unit.w)
    layer_grads = list()
    for idx in range(stack.depth - 1, -1, -1):
        layer, h, below = stack.hidden_layers[idx], reps[idx + 1], reps[idx]
        d_z = d_h * h * (1.0 - h)
        layer_grads.insert(0, [d_z.T @ below, d_z.sum(axis=0), np.zeros_like(layer.b_dec)])
        d_h = d_z @ layer.W
    return loss, [g for grads in layer_grads for g in grads] + out_grads


def predict(stack: NetworkStack, features: FeatureMatrix) -> Prediction:
    if features.dim != stack.input_dim:
        raise DimensionMismatch(stack.input_dim, features.dim)
    probabilities = expit(stack.output_logits(features.rows))
    labels = np.where(probabilities > TrainDefaultParams.DecisionThreshold,
                      FrameLabel.Speech, FrameLabel.NonSpeech).astype(np.int8)
    return Prediction(labels, probabilities)


def frame_accuracy(stack: NetworkStack, labeled: FeatureMatrix) -> float:
    if not len(labeled):
        raise EmptyFeatureInput("accuracy")
    return float(100.0 * np.mean(predict(stack, labeled).labels == labeled.labels))


def finetune(stack: NetworkStack, labeled: FeatureMatrix, cfg: TrainConfig, dev: Optional[FeatureMatrix] = None,
             progress: ProgressCallback = None) -> FinetuneResult:
    """
    Mini-batch backpropagation over the whole stack. Dev accuracy is measured before training and after every
    epoch; the first epoch reaching the best dev accuracy is returned.
    """
    if not labeled.is_labeled:
        raise LabelLengthMismatch("finetune", 0, len(labeled))
    if not len(labeled):
        raise EmptyFeatureInput("finetune")
    if dev is not None and not dev.is_labeled:
        raise LabelLengthMismatch("finetune dev", 0, len(dev))
    if labeled.dim != stack.input_dim:
        raise DimensionMismatch(stack.input_dim, labeled.dim)
    model = stack.copy()
    x, y = labeled.rows, labeled.labels.astype(np.float64)
    rng = np.random.default_rng(derive_seed(cfg.seed, SeedPurpose.Finetune))
    params = model.params()

    result = FinetuneResult(model.copy())
    best = -1.0
    if dev is not None:
        best = frame_accuracy(model, dev)
        result.dev_accuracies.append(best)
    for epoch in range(1, cfg.epochs_finetune + 1):
        order = rng.permutation(x.shape[0])
        epoch_loss = 0.0
        for start in range(0, x.shape[0], cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads = finetune_loss_and_grads(model, x[batch], y[batch])
            epoch_loss += loss * batch.shape[0]
            for param, grad in zip(params, grads):
                param -= cfg.lr_finetune * grad
        result.train_losses.append(epoch_loss / x.shape[0])
        if dev is not None:
            accuracy = frame_accuracy(model, dev)
            result.dev_accuracies.append(accuracy)
            if accuracy > best:
                best = accuracy
                result.best_epoch = epoch
                result.stack = model.copy()
        if progress and (epoch % cfg.checkpoint_every == 0 or epoch == cfg.epochs_finetune):
            progress(f"finetune epoch {epoch} loss {result.train_losses[-1]:.4f} best dev {best:.2f}")
    if dev is None:
        result.stack = model.copy()
        result.best_epoch = cfg.epochs_finetune
    return result

# ========= Gradient check


def _compare_gradients(params: List[np.ndarray], analytic: List[np.ndarray], loss_fn: Callable[[], float],
                       step: float = GradCheckParams.Step) -> GradientCheckReport:
    max_relative, max_absolute, count = 0.0, 0.0, 0
    for param, grad in zip(params, analytic):
        flat, flat_grad = param.reshape(-1), grad.reshape(-1)
        for idx in range(flat.shape[0]):
            original = flat[idx]
            flat[idx] = original + step
            loss_plus = loss_fn()
            flat[idx] = original - step
            loss_minus = loss_fn()
            flat[idx] = original
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            scale = max(abs(numeric), abs(flat_grad[idx]))
            error = abs(numeric - flat_grad[idx])
            if scale >= GradCheckParams.AbsoluteFallback:
                max_relative = max(max_relative, error / scale)
            else:
                max_absolute = max(max_absolute, error)
            count += 1
    return GradientCheckReport(max_relative, max_absolute, count)


def gradient_check(stack: NetworkStack, x: np.ndarray, y: np.ndarray,
                   step: float = GradCheckParams.Step) -> GradientCheckReport:
    """
    Central finite differences of the fine-tuning loss against backpropagation, for every parameter
    except the decoder biases (the fine-tuning loss does not depend on them).
    """
    model = stack.copy()
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    _, grads = finetune_loss_and_grads(model, x, y)
    params = model.params()
    checked = [(p, g) for p, g in zip(params, grads)
               if not any(p is layer.b_dec for layer in model.hidden_layers)]
    return _compare_gradients([p for p, _ in checked], [g for _, g in checked],
                              lambda: finetune_loss_and_grads(model, x, y)[0], step)


def pretrain_gradient_check(layer: LayerWeights, x: np.ndarray, target: np.ndarray,
                            target_kind: str = PretrainTarget.LayerInput,
                            step: float = GradCheckParams.Step) -> GradientCheckReport:
    objective = _PRETRAINTARGET_TO_OBJECTIVE_MAP[target_kind]
    model = copy.deepcopy(layer)
    _, grads = objective(model, x, target)
    params = model.params()
    if target_kind == PretrainTarget.LayerOutput:
        params, grads = params[:2], grads[:2]
    return _compare_gradients(params, grads, lambda: objective(model, x, target)[0], step)

# ========= Model files


def _model_paths(path: str) -> Tuple[str, str]:
    base, ext = os.path.splitext(path)
    if ext != ModelFileParams.Extension:
        base = path
    return f"{base}{ModelFileParams.Extension}", f"{base}{ModelFileParams.SidecarExtension}"


def write_model(path: str, stack: NetworkStack, sidecar: Optional[Dict[str, Any]] = None) -> str:
    model_path, sidecar_path = _model_paths(path)
    with open(model_path, "wb") as mf:
        mf.write(struct.pack(ModelFileParams.HeaderFormat, ModelFileParams.Magic, ModelFileParams.Version,
                             stack.depth, stack.input_dim))
        for layer in stack.hidden_layers:
            mf.write(struct.pack(ModelFileParams.LayerFormat, layer.out_dim, layer.in_dim))
            for param in layer.params():
                mf.write(np.ascontiguousarray(param, dtype="<f8").tobytes(order="C"))
        mf.write(struct.pack("<I", stack.output_unit.w.shape[0]))
        for param in stack.output_unit.params():
            mf.write(np.ascontiguousarray(param, dtype="<f8").tobytes(order="C"))
    with open(sidecar_path, "w") as sf:
        json.dump(sidecar or dict(), sf, indent=2, sort_keys=True)
        sf.write("\n")
    return model_path


def _read_floats(buffer: bytes, offset: int, count: int, path: str) -> Tuple[np.ndarray, int]:
    stop = offset + 8 * count
    if stop > len(buffer):
        raise InvalidModelFile(path, "truncated payload")
    return np.frombuffer(buffer[offset:stop], dtype="<f8").astype(np.float64), stop


def read_model(path: str) -> Tuple[NetworkStack, Dict[str, Any]]:
    model_path, sidecar_path = _model_paths(path)
    try:
        with open(model_path, "rb") as mf:
            buffer = mf.read()
    except OSError:
        raise MissingCorpusFile(model_path)
    header_size = struct.calcsize(ModelFileParams.HeaderFormat)
    if len(buffer) < header_size:
        raise InvalidModelFile(model_path, "truncated header")
    magic, version, depth, input_dim = struct.unpack_from(ModelFileParams.HeaderFormat, buffer)
    if magic != ModelFileParams.Magic:
        raise InvalidModelFile(model_path, f"bad magic {magic!r}")
    if version != ModelFileParams.Version:
        raise InvalidModelFile(model_path, f"unsupported version {version}")
    offset = header_size
    layers = list()
    layer_header = struct.calcsize(ModelFileParams.LayerFormat)
    try:
        for _ in range(depth):
            out_dim, in_dim = struct.unpack_from(ModelFileParams.LayerFormat, buffer, offset)
            offset += layer_header
            W, offset = _read_floats(buffer, offset, out_dim * in_dim, model_path)
            b_enc, offset = _read_floats(buffer, offset, out_dim, model_path)
            b_dec, offset = _read_floats(buffer, offset, in_dim, model_path)
            layers.append(LayerWeights(W.reshape(out_dim, in_dim), b_enc, b_dec))
        (out_in,) = struct.unpack_from("<I", buffer, offset)
        offset += 4
        w, offset = _read_floats(buffer, offset, out_in, model_path)
        b, offset = _read_floats(buffer, offset, 1, model_path)
    except struct.error:
        raise InvalidModelFile(model_path, "truncated payload")
    if offset != len(buffer):
        raise InvalidModelFile(model_path, "trailing bytes")
    sidecar = dict()
    if os.path.isfile(sidecar_path):
        with open(sidecar_path, "r") as sf:
            sidecar = json.load(sf)
    return NetworkStack(layers, OutputUnit(w, b), input_dim), sidecar

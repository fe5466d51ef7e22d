"""Fully connected ReLU network with inverted dropout, softmax cross-entropy,
and hand-derived backpropagation.

Parameters flatten to a single vector in layer order (W0, b0, W1, b1, ...),
which is the currency the optimizers operate on.  Dropout masks and weight
initialization draw from the package PRNG, so a seed pins every random
choice bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Batch
from .rng import Rng, STREAM_DROPOUT, STREAM_INIT, derive_seed


@dataclass
class MlpModel:
    """Weights/biases per layer; weights[k] maps layer_dims[k] -> layer_dims[k+1].

    dropout_rate applies to hidden activations only, and only in training
    mode (inverted dropout: survivors are scaled by 1/(1-rate) at train time
    so evaluation needs no rescaling).
    """

    layer_dims: list[int]
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    dropout_rate: float = 0.0

    def __post_init__(self):
        if len(self.layer_dims) < 2:
            raise ValueError("need at least input and output dims")
        if any(d < 1 for d in self.layer_dims):
            raise ValueError(f"all layer dims must be >= 1, got {self.layer_dims}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        for k, w in enumerate(self.weights):
            if w.shape != (self.layer_dims[k], self.layer_dims[k + 1]):
                raise ValueError(f"weight {k} has shape {w.shape}, expected "
                                 f"{(self.layer_dims[k], self.layer_dims[k + 1])}")

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def he_init(layer_dims: list[int], seed: int, dropout_rate: float = 0.0) -> MlpModel:
    """Model with weights ~ N(0, 2/fan_in) and zero biases, seeded."""
    if len(layer_dims) < 2:
        raise ValueError("need at least input and output dims")
    rng = Rng(derive_seed(seed, STREAM_INIT))
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        w = rng.normals(fan_in * fan_out).reshape(fan_in, fan_out)
        w *= np.sqrt(2.0 / fan_in)
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpModel(list(layer_dims), weights, biases, dropout_rate)


def params_to_vector(model: MlpModel) -> np.ndarray:
    """Flatten all parameters to one vector, layer order (W0, b0, W1, b1, ...)."""
    chunks = []
    for w, b in zip(model.weights, model.biases):
        chunks.append(w.ravel())
        chunks.append(b)
    return np.concatenate(chunks)


def set_params_from_vector(model: MlpModel, vec: np.ndarray) -> None:
    """Write a flat parameter vector back into the model's matrices."""
    if vec.size != model.num_params:
        raise ValueError(f"vector has {vec.size} entries, model has {model.num_params}")
    pos = 0
    for k in range(len(model.weights)):
        w_size = model.weights[k].size
        model.weights[k] = vec[pos:pos + w_size].reshape(model.weights[k].shape)
        pos += w_size
        b_size = model.biases[k].size
        model.biases[k] = vec[pos:pos + b_size]
        pos += b_size


def _dropout_masks(model: MlpModel, batch_size: int, rng_seed: int) -> list[np.ndarray]:
    """Pre-scaled keep masks (0 or 1/(1-rate)) for every hidden layer."""
    rng = Rng(derive_seed(rng_seed, STREAM_DROPOUT))
    keep = 1.0 - model.dropout_rate
    masks = []
    for dim in model.layer_dims[1:-1]:
        masks.append(rng.bernoulli(keep, (batch_size, dim)).astype(np.float64) / keep)
    return masks


def forward(model: MlpModel, inputs: np.ndarray, training: bool = False,
            rng_seed: int = 0) -> np.ndarray:
    """Logits for a (batch, input_dim) matrix.

    Evaluation mode uses no randomness; training mode applies fresh dropout
    masks drawn from rng_seed.
    """
    if inputs.ndim != 2 or inputs.shape[1] != model.layer_dims[0]:
        raise ValueError(f"inputs have shape {inputs.shape}, expected "
                         f"(batch, {model.layer_dims[0]})")
    drop = training and model.dropout_rate > 0.0
    masks = _dropout_masks(model, inputs.shape[0], rng_seed) if drop else None
    a = inputs
    for k in range(len(model.weights) - 1):
        a = np.maximum(a @ model.weights[k] + model.biases[k], 0.0)
        if drop:
            a = a * masks[k]
    return a @ model.weights[-1] + model.biases[-1]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted by the row max for stability."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def mlp_loss_and_grad(model: MlpModel, batch: Batch, training: bool,
                      rng_seed: int) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy, exact flat-parameter gradient, and accuracy.

    Accuracy breaks argmax ties toward the lowest class index.  With
    training=False the result is a pure function of (model, batch).
    """
    x, y = batch.inputs, batch.labels
    n_classes = model.layer_dims[-1]
    if x.ndim != 2 or x.shape[1] != model.layer_dims[0]:
        raise ValueError(f"inputs have shape {x.shape}, expected "
                         f"(batch, {model.layer_dims[0]})")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes}), got range "
                         f"[{y.min()}, {y.max()}]")
    b = x.shape[0]
    drop = training and model.dropout_rate > 0.0
    masks = _dropout_masks(model, b, rng_seed) if drop else None

    # Forward, caching pre-activations and activations for the backward pass.
    pre = []
    acts = [x]
    a = x
    for k in range(len(model.weights) - 1):
        z = a @ model.weights[k] + model.biases[k]
        pre.append(z)
        a = np.maximum(z, 0.0)
        if drop:
            a = a * masks[k]
        acts.append(a)
    logits = a @ model.weights[-1] + model.biases[-1]

    row_max = logits.max(axis=1, keepdims=True)
    shifted = logits - row_max
    log_z = np.log(np.exp(shifted).sum(axis=1)) + row_max[:, 0]
    loss = float(np.mean(log_z - logits[np.arange(b), y]))
    accuracy = float(np.mean(logits.argmax(axis=1) == y))

    probs = softmax(logits)
    d_logits = probs
    d_logits[np.arange(b), y] -= 1.0
    d_logits /= b

    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    grad_w[-1] = acts[-1].T @ d_logits
    grad_b[-1] = d_logits.sum(axis=0)
    da = d_logits @ model.weights[-1].T
    for k in range(len(model.weights) - 2, -1, -1):
        if drop:
            da = da * masks[k]
        dz = da * (pre[k] > 0.0)
        grad_w[k] = acts[k].T @ dz
        grad_b[k] = dz.sum(axis=0)
        if k > 0:
            da = dz @ model.weights[k].T

    chunks = []
    for gw, gb in zip(grad_w, grad_b):
        chunks.append(gw.ravel())
        chunks.append(gb)
    return loss, np.concatenate(chunks), accuracy


def evaluate(model: MlpModel, inputs: np.ndarray, labels: np.ndarray,
             chunk: int = 4096) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over a full set, evaluation mode.

    Processes in chunks so large sets do not materialize huge activations.
    """
    n = inputs.shape[0]
    loss_sum = 0.0
    hits = 0
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        logits = forward(model, inputs[start:stop], training=False)
        y = labels[start:stop]
        row_max = logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(logits - row_max).sum(axis=1)) + row_max[:, 0]
        loss_sum += float(np.sum(log_z - logits[np.arange(stop - start), y]))
        hits += int(np.sum(logits.argmax(axis=1) == y))
    return loss_sum / n, hits / n

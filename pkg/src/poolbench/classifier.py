"""Linear softmax classification head and its training regime.

The head is a multinomial logistic regression over fixed embeddings,
trained with AdamW (decoupled weight decay, bias-corrected moments) under
a linear warmup/decay learning-rate schedule and a fixed number of epochs.
There is no validation set and no early stopping; a warm start continues
from the previous parameters but always resets the optimizer moments.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CannotTrainError,
    DivergenceError,
    FormatError,
    InvalidConfigError,
)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

PARAMS_MAGIC = b"AGLH"
PARAMS_VERSION = 1


@dataclass(frozen=True, eq=False)
class HeadParams:
    """Head parameters: class weights (C, D) and per-class bias (C,)."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Fixed training hyperparameters for one head fit.

    ``warmup_fraction`` is the share of total optimizer steps spent ramping
    the learning rate from 0 to ``learning_rate`` before the linear decay
    back to 0.
    """

    epochs: int = 15
    learning_rate: float = 1e-1
    warmup_fraction: float = 0.05
    weight_decay: float = 0.01
    minibatch_size: int = 20
    numeric_epsilon: float = 1e-12

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise InvalidConfigError("learning_rate must be positive")
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise InvalidConfigError("warmup_fraction must be in [0, 1]")
        if self.weight_decay < 0:
            raise InvalidConfigError("weight_decay must be >= 0")
        if self.minibatch_size < 1:
            raise InvalidConfigError("minibatch_size must be >= 1")
        if self.numeric_epsilon <= 0:
            raise InvalidConfigError("numeric_epsilon must be positive")


# Short / long / long-careful profiles; the learning rates are scaled for a
# fresh linear head rather than encoder fine-tuning.
TRAIN_PRESETS = {
    "st": TrainConfig(epochs=5),
    "lt": TrainConfig(epochs=15),
    "lt+": TrainConfig(epochs=20, learning_rate=4e-2, warmup_fraction=0.1),
}


def init_params(d: int, c: int, rng: np.random.Generator) -> HeadParams:
    """Fresh head: weights uniform in [-1/sqrt(d), 1/sqrt(d)], zero bias."""
    if d < 1 or c < 1:
        raise InvalidConfigError(f"invalid head dimensions d={d}, c={c}")
    bound = 1.0 / np.sqrt(d)
    weights = rng.uniform(-bound, bound, size=(c, d))
    return HeadParams(weights=weights, bias=np.zeros(c, dtype=np.float64))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _lr_at(step: int, total_steps: int, warmup_steps: int, lr: float) -> float:
    # step is 0-based; the ramp reaches full lr exactly at the last warmup
    # step and the decay reaches 0 one step past the schedule's end.
    if warmup_steps > 0 and step < warmup_steps:
        return lr * (step + 1) / warmup_steps
    if total_steps == warmup_steps:
        return lr
    return lr * (total_steps - step) / (total_steps - warmup_steps)


def train(
    features: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
    start: HeadParams | None = None,
    num_classes: int | None = None,
    init_rng: np.random.Generator | None = None,
) -> HeadParams:
    """Fit the head by mini-batch AdamW on mean cross-entropy.

    Cold start (``start is None``) draws fresh parameters, which requires
    ``num_classes``; a warm start continues from ``start``.  Optimizer
    moments always begin at zero.  ``rng`` drives the per-epoch shuffle;
    ``init_rng`` (defaulting to ``rng``) drives the cold-start init.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidConfigError(f"features must be 2-D, got shape {x.shape}")
    y = np.asarray(labels, dtype=np.int64)
    n, d = x.shape
    if n == 0:
        raise CannotTrainError("cannot train on an empty labeled set")
    if y.shape != (n,):
        raise InvalidConfigError(f"labels shape {y.shape} does not match {n} rows")

    if start is None:
        if num_classes is None:
            raise InvalidConfigError("cold start requires num_classes")
        params = init_params(d, num_classes, init_rng if init_rng is not None else rng)
    else:
        if start.dim != d:
            raise InvalidConfigError(
                f"warm-start dimension {start.dim} does not match features ({d})"
            )
        params = start
    c = params.num_classes
    if y.size and (y.min() < 0 or y.max() >= c):
        raise InvalidConfigError(f"labels outside [0, {c})")

    w = params.weights.astype(np.float64, copy=True)
    b = params.bias.astype(np.float64, copy=True)
    mw = np.zeros_like(w)
    vw = np.zeros_like(w)
    mb = np.zeros_like(b)
    vb = np.zeros_like(b)

    batch = cfg.minibatch_size
    steps_per_epoch = -(-n // batch)
    total_steps = cfg.epochs * steps_per_epoch
    warmup_steps = min(total_steps, max(0, round(cfg.warmup_fraction * total_steps)))
    eps = cfg.numeric_epsilon

    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch):
            rows = order[lo : lo + batch]
            xb = x[rows]
            yb = y[rows]
            m = rows.size

            probs = _softmax(xb @ w.T + b)
            loss = -np.log(np.maximum(probs[np.arange(m), yb], eps)).mean()
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at step {step}")

            grad = probs
            grad[np.arange(m), yb] -= 1.0
            grad /= m
            gw = grad.T @ xb
            gb = grad.sum(axis=0)

            lr_s = _lr_at(step, total_steps, warmup_steps, cfg.learning_rate)
            t = step + 1
            bc1 = 1.0 - ADAM_BETA1**t
            bc2 = 1.0 - ADAM_BETA2**t

            mw = ADAM_BETA1 * mw + (1.0 - ADAM_BETA1) * gw
            vw = ADAM_BETA2 * vw + (1.0 - ADAM_BETA2) * gw * gw
            w -= lr_s * (mw / bc1) / (np.sqrt(vw / bc2) + ADAM_EPS)
            # decay is decoupled from the gradient and skips the bias
            w -= lr_s * cfg.weight_decay * w

            mb = ADAM_BETA1 * mb + (1.0 - ADAM_BETA1) * gb
            vb = ADAM_BETA2 * vb + (1.0 - ADAM_BETA2) * gb * gb
            b -= lr_s * (mb / bc1) / (np.sqrt(vb / bc2) + ADAM_EPS)

            step += 1

    return HeadParams(weights=w, bias=b)


def predict_proba(params: HeadParams, features: np.ndarray) -> np.ndarray:
    """Row-stochastic class probabilities softmax(Wx + b)."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.dim:
        raise ValueError(
            f"features shape {x.shape} incompatible with head dimension {params.dim}"
        )
    return _softmax(x @ params.weights.T + params.bias)


def grad_embedding(params: HeadParams, features: np.ndarray) -> np.ndarray:
    """Per-instance loss gradient of the output layer at the pseudo-label.

    For each row x with probabilities p and pseudo-label y* = argmax p
    (ties -> lowest class), the embedding is (p - e_{y*}) (x) [x; 1]
    flattened class-major, i.e. exactly the cross-entropy gradient with
    respect to (W, b) if y* were the true label.  Shape (M, C * (D + 1)).
    """
    x = np.asarray(features, dtype=np.float64)
    probs = predict_proba(params, x)
    m = x.shape[0]
    pseudo = probs.argmax(axis=1)
    coeff = probs.copy()
    coeff[np.arange(m), pseudo] -= 1.0
    ext = np.concatenate([x, np.ones((m, 1))], axis=1)
    return np.einsum("mc,mk->mck", coeff, ext).reshape(m, -1)


def mean_cross_entropy(
    params: HeadParams, features: np.ndarray, labels: np.ndarray, eps: float = 1e-12
) -> float:
    """Mean cross-entropy of the head on a labeled set."""
    probs = predict_proba(params, features)
    y = np.asarray(labels, dtype=np.int64)
    picked = probs[np.arange(y.size), y]
    return float(-np.log(np.maximum(picked, eps)).mean())


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

_PARAMS_HEADER_LEN = 4 + 2 + 4 + 4


def save_params(params: HeadParams, destination) -> None:
    """Checkpoint parameters to an AGLH file (float64 payload)."""
    c, d = params.weights.shape
    header = PARAMS_MAGIC + struct.pack("<HII", PARAMS_VERSION, c, d)
    body = (
        np.ascontiguousarray(params.weights, dtype="<f8").tobytes()
        + np.ascontiguousarray(params.bias, dtype="<f8").tobytes()
    )
    destination = Path(destination)
    tmp = destination.with_name(destination.name + ".tmp")
    tmp.write_bytes(header + body)
    os.replace(tmp, destination)


def load_params(source) -> HeadParams:
    data = Path(source).read_bytes()
    if len(data) < _PARAMS_HEADER_LEN:
        raise FormatError("checkpoint header truncated", offset=len(data))
    if data[:4] != PARAMS_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {PARAMS_MAGIC!r}", offset=0)
    version, c, d = struct.unpack("<HII", data[4:_PARAMS_HEADER_LEN])
    if version != PARAMS_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    body = data[_PARAMS_HEADER_LEN:]
    expected = (c * d + c) * 8
    if len(body) != expected:
        raise FormatError(
            f"checkpoint payload truncated: expected {expected} bytes, found {len(body)}",
            offset=_PARAMS_HEADER_LEN + len(body),
        )
    weights = np.frombuffer(body[: c * d * 8], dtype="<f8").reshape(c, d).astype(np.float64)
    bias = np.frombuffer(body[c * d * 8 :], dtype="<f8").astype(np.float64)
    return HeadParams(weights=weights, bias=bias)

"""From-scratch feed-forward classifier for the steering hierarchy.

A plain numpy multilayer perceptron: ReLU hidden layers, a five-neuron
softmax output over the classes (UNS, MS2, MS3, MS4, STE) with SEP folded
into UNS, trained by mini-batch gradient descent with momentum on a
class-weighted cross-entropy.  Nothing here depends on the physics
modules except the feature encoding of dataset records.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import SCHEMES, encode
from .protocol import splitmix64, state_from_theta_row
from .qcore import ValidationError

__all__ = [
    "CLASS_LABELS",
    "MlpModel",
    "TrainConfig",
    "EvalReport",
    "init_model",
    "forward",
    "train",
    "train_arrays",
    "gradient_check",
    "evaluate",
    "save_model",
    "load_model",
    "features_from_records",
    "split_masks",
]

#: network output classes, in output-neuron order
CLASS_LABELS = ("UNS", "MS2", "MS3", "MS4", "STE")

_FOLD = {"SEP": "UNS", "UNS": "UNS", "MS2": "MS2", "MS3": "MS3",
         "MS4": "MS4", "STE": "STE"}


@dataclass
class MlpModel:
    """Weights and biases of a ReLU/softmax network tied to a feature scheme."""

    scheme: str
    layer_sizes: tuple
    weights: list
    biases: list

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        sizes = tuple(int(s) for s in self.layer_sizes)
        if sizes[0] != SCHEMES[self.scheme] or sizes[-1] != len(CLASS_LABELS):
            raise ValidationError(
                f"layer sizes {sizes} do not match scheme {self.scheme}"
            )
        for m, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[m], sizes[m + 1]) or b.shape != (sizes[m + 1],):
                raise ValidationError(f"layer {m} has inconsistent shapes")
        self.layer_sizes = sizes


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 400
    batch_size: int = 64
    learning_rate: float = 0.01
    seed: int = 0
    validation_fraction: float = 0.1
    early_stop_patience: int = 60
    momentum: float = 0.9
    class_weighting: bool = True

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.early_stop_patience) < 1:
            raise ValueError("epochs, batch_size, patience must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 < self.validation_fraction <= 0.5:
            raise ValueError("validation_fraction must lie in (0, 0.5]")


@dataclass(frozen=True)
class EvalReport:
    """Per-label accuracy and the 5x5 confusion matrix (rows = true label)."""

    overall_accuracy: float
    per_label_accuracy: dict
    confusion: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.confusion, dtype=int)
        if c.shape != (5, 5):
            raise ValidationError("confusion matrix must be 5x5")
        object.__setattr__(self, "confusion", c)


def init_model(scheme: str, hidden_sizes, rng: np.random.Generator) -> MlpModel:
    """Scaled-uniform initialization: |w| <= 1/sqrt(fan-in), zero biases."""
    if not hidden_sizes:
        raise ValueError("at least one hidden layer is required")
    sizes = (SCHEMES[scheme], *hidden_sizes, len(CLASS_LABELS))
    weights, biases = [], []
    for m in range(len(sizes) - 1):
        bound = 1.0 / np.sqrt(sizes[m])
        weights.append(rng.uniform(-bound, bound, size=(sizes[m], sizes[m + 1])))
        biases.append(np.zeros(sizes[m + 1]))
    return MlpModel(scheme, sizes, weights, biases)


def _forward_batch(model: MlpModel, x: np.ndarray):
    """Returns (activations per layer, probability matrix)."""
    acts = [x]
    h = x
    for m in range(len(model.weights) - 1):
        h = np.maximum(0.0, h @ model.weights[m] + model.biases[m])
        acts.append(h)
    logits = h @ model.weights[-1] + model.biases[-1]
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=1, keepdims=True)
    return acts, probs


def forward(model: MlpModel, feature) -> np.ndarray:
    """Probability 5-vector for one feature vector."""
    x = np.asarray(feature, dtype=float)
    if x.shape != (model.layer_sizes[0],):
        raise ValidationError(
            f"feature length {x.shape} does not match input size {model.layer_sizes[0]}"
        )
    _, probs = _forward_batch(model, x[None, :])
    return probs[0]


def _loss_and_grads(model: MlpModel, x, y, sample_w):
    """Weighted mean cross-entropy and its gradients by backpropagation."""
    acts, probs = _forward_batch(model, x)
    wsum = sample_w.sum()
    eps = 1e-12
    loss = -np.sum(sample_w * np.log(probs[np.arange(len(y)), y] + eps)) / wsum
    delta = probs.copy()
    delta[np.arange(len(y)), y] -= 1.0
    delta *= (sample_w / wsum)[:, None]
    gw, gb = [None] * len(model.weights), [None] * len(model.biases)
    for m in range(len(model.weights) - 1, -1, -1):
        gw[m] = acts[m].T @ delta
        gb[m] = delta.sum(axis=0)
        if m > 0:
            delta = (delta @ model.weights[m].T) * (acts[m] > 0)
    return loss, gw, gb


def split_masks(seeds) -> tuple:
    """Deterministic 80/10/10 train/validation/test split by seed hash."""
    h = np.array([splitmix64(int(s) ^ 0xA5A5A5A55A5A5A5A) for s in seeds])
    u = h / float(1 << 64)
    return u < 0.8, (u >= 0.8) & (u < 0.9), u >= 0.9


def features_from_records(records, scheme: str):
    """Encode dataset records; returns (X, class indices, seeds)."""
    x = np.empty((len(records), SCHEMES[scheme]))
    y = np.empty(len(records), dtype=int)
    seeds = np.empty(len(records), dtype=np.uint64)
    for i, rec in enumerate(records):
        x[i] = encode(state_from_theta_row(rec.theta), scheme).values
        y[i] = CLASS_LABELS.index(_FOLD[rec.label])
        seeds[i] = rec.seed
    return x, y, seeds


def train_arrays(x, y, sizes_hidden, cfg: TrainConfig, scheme: str = "LutA6",
                 val_mask=None, log=None) -> MlpModel:
    """Core training loop on raw arrays.

    ``val_mask`` marks held-out validation rows; when None a trailing
    fraction is used.  The model snapshot with the best validation
    accuracy is returned.  ``log``, when a list, receives per-epoch
    (loss, validation accuracy) pairs.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(np.unique(y)) < 2:
        raise ValidationError("training data must contain at least 2 labels")
    if val_mask is None:
        nval = max(1, int(round(cfg.validation_fraction * len(y))))
        val_mask = np.zeros(len(y), dtype=bool)
        val_mask[-nval:] = True
    xt, yt = x[~val_mask], y[~val_mask]
    xv, yv = x[val_mask], y[val_mask]

    counts = np.bincount(yt, minlength=len(CLASS_LABELS)).astype(float)
    if cfg.class_weighting:
        w_class = np.where(counts > 0, len(yt) / np.maximum(counts, 1.0), 0.0)
        w_class /= w_class[counts > 0].mean()
    else:
        w_class = np.ones(len(CLASS_LABELS))
    sample_w = w_class[yt]

    rng = np.random.default_rng(cfg.seed)
    model = init_model(scheme, sizes_hidden, rng)
    vw = [np.zeros_like(w) for w in model.weights]
    vb = [np.zeros_like(b) for b in model.biases]
    best_acc, best = -1.0, None
    stale = 0
    order = np.arange(len(yt))
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, gw, gb = _loss_and_grads(model, xt[idx], yt[idx], sample_w[idx])
            losses.append(loss)
            for m in range(len(model.weights)):
                vw[m] = cfg.momentum * vw[m] - cfg.learning_rate * gw[m]
                vb[m] = cfg.momentum * vb[m] - cfg.learning_rate * gb[m]
                model.weights[m] += vw[m]
                model.biases[m] += vb[m]
        _, probs = _forward_batch(model, xv)
        acc = float(np.mean(probs.argmax(axis=1) == yv)) if len(yv) else 0.0
        if log is not None:
            log.append((float(np.mean(losses)), acc))
        if acc > best_acc:
            best_acc = acc
            best = ([w.copy() for w in model.weights],
                    [b.copy() for b in model.biases])
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break
    if best is not None:
        model.weights, model.biases = best
    return model


def train(records, scheme: str, cfg: TrainConfig | None = None,
          hidden_sizes=(128, 64), log=None) -> MlpModel:
    """Train on dataset records with the deterministic seed-hash split.

    Only train+validation rows are touched; the test split is left for
    ``evaluate``.
    """
    cfg = cfg or TrainConfig()
    x, y, seeds = features_from_records(records, scheme)
    tr, va, _ = split_masks(seeds)
    used = tr | va
    val_mask = va[used]
    return train_arrays(x[used], y[used], hidden_sizes, cfg, scheme=scheme,
                        val_mask=val_mask, log=log)


def gradient_check(model: MlpModel, x, y, step: float = 1e-5) -> float:
    """Max relative error between backprop and central finite differences."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    sample_w = np.ones(len(y))
    _, gw, gb = _loss_and_grads(model, x, y, sample_w)
    worst = 0.0

    def probe(arr, grad):
        nonlocal worst
        flat = arr.ravel()
        gflat = grad.ravel()
        for k in range(flat.size):
            keep = flat[k]
            flat[k] = keep + step
            lp, _, _ = _loss_and_grads(model, x, y, sample_w)
            flat[k] = keep - step
            lm, _, _ = _loss_and_grads(model, x, y, sample_w)
            flat[k] = keep
            fd = (lp - lm) / (2 * step)
            denom = max(abs(fd), abs(gflat[k]), 1e-8)
            worst = max(worst, abs(fd - gflat[k]) / denom)

    for m in range(len(model.weights)):
        probe(model.weights[m], gw[m])
        probe(model.biases[m], gb[m])
    return worst


def evaluate(model: MlpModel, records) -> EvalReport:
    """Argmax predictions against record labels; builds the 5x5 confusion."""
    x, y, _ = features_from_records(records, model.scheme)
    _, probs = _forward_batch(model, x)
    pred = probs.argmax(axis=1)
    k = len(CLASS_LABELS)
    confusion = np.zeros((k, k), dtype=int)
    np.add.at(confusion, (y, pred), 1)
    support = confusion.sum(axis=1)
    per_label = {
        lab: (confusion[i, i] / support[i] if support[i] else float("nan"))
        for i, lab in enumerate(CLASS_LABELS)
    }
    overall = float(np.trace(confusion) / max(1, confusion.sum()))
    return EvalReport(overall, per_label, confusion)


# --------------------------------------------------------------------------
# model file
# --------------------------------------------------------------------------

_MODEL_HEADER = "#steerhier-mlp v1 scheme="


def save_model(model: MlpModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{_MODEL_HEADER}{model.scheme}\n")
        fh.write(" ".join(str(s) for s in model.layer_sizes) + "\n")
        for w, b in zip(model.weights, model.biases):
            for row in w:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
            fh.write(" ".join(f"{v:.17g}" for v in b) + "\n")


def load_model(path) -> MlpModel:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(_MODEL_HEADER):
            raise ValidationError(f"not a steerhier model file: {header!r}")
        scheme = header[len(_MODEL_HEADER):]
        try:
            sizes = tuple(int(t) for t in fh.readline().split())
            weights, biases = [], []
            for m in range(len(sizes) - 1):
                rows = [
                    np.array([float(t) for t in fh.readline().split()])
                    for _ in range(sizes[m])
                ]
                w = np.vstack(rows)
                b = np.array([float(t) for t in fh.readline().split()])
                if w.shape != (sizes[m], sizes[m + 1]) or b.shape != (sizes[m + 1],):
                    raise ValidationError("model file has inconsistent layer shapes")
                weights.append(w)
                biases.append(b)
        except ValueError as exc:
            raise ValidationError(f"malformed model file: {exc}") from exc
    return MlpModel(scheme, sizes, weights, biases)

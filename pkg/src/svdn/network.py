"""A small fully connected classifier with a bias-free embedding layer.

The model is: affine+ReLU backbone layers, then a pure linear map
``f = h @ W`` (the "eigenlayer" -- no bias, no activation, so that its
columns can be orthogonalized without anything else interfering), then
an affine classifier over the training identities.

Activations are row vectors and weights are (fan_in, fan_out), so a
layer computes ``x @ W + b``.  The weight vectors subject to
decorrelation are the columns of the eigenlayer matrix.  All gradients
are exact analytic expressions; no autodiff involved.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericError, ValidationError
from .linalg import as_matrix

CHECKPOINT_MAGIC = b"SVDN"
CHECKPOINT_VERSION = 1

_ROLE_BACKBONE = 0
_ROLE_EIGENLAYER = 1
_ROLE_CLASSIFIER = 2

FEATURE_KINDS = ("input", "output")


@dataclass
class AffineLayer:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray    # (fan_out,)

    def copy(self) -> "AffineLayer":
        return AffineLayer(self.weight.copy(), self.bias.copy())


@dataclass(frozen=True)
class FreezeMask:
    """When set, the gradient of the eigenlayer weights is forced to zero
    so an update leaves them untouched while everything else trains."""

    eigenlayer_frozen: bool = False


@dataclass
class EigenModel:
    backbone: list[AffineLayer]
    eigenlayer: np.ndarray        # (n, k), bias-free
    classifier: AffineLayer       # (k, c)

    @property
    def input_dim(self) -> int:
        return self.backbone[0].weight.shape[0] if self.backbone else self.eigenlayer.shape[0]

    @property
    def feature_dim(self) -> int:
        """Width n of the eigenlayer input."""
        return self.eigenlayer.shape[0]

    @property
    def embed_dim(self) -> int:
        """Width k of the eigenlayer output."""
        return self.eigenlayer.shape[1]

    @property
    def num_classes(self) -> int:
        return self.classifier.weight.shape[1]

    def copy(self) -> "EigenModel":
        return EigenModel(
            backbone=[layer.copy() for layer in self.backbone],
            eigenlayer=self.eigenlayer.copy(),
            classifier=self.classifier.copy(),
        )

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        """Named parameter arrays, in a fixed order (views, not copies)."""
        items: list[tuple[str, np.ndarray]] = []
        for i, layer in enumerate(self.backbone):
            items.append((f"backbone{i}.weight", layer.weight))
            items.append((f"backbone{i}.bias", layer.bias))
        items.append(("eigenlayer", self.eigenlayer))
        items.append(("classifier.weight", self.classifier.weight))
        items.append(("classifier.bias", self.classifier.bias))
        return items

    def num_params(self) -> int:
        return sum(p.size for _, p in self.param_items())

    def _check_batch(self, batch) -> np.ndarray:
        batch = as_matrix(batch, "batch")
        if batch.shape[1] != self.input_dim:
            raise ValidationError(
                f"batch has {batch.shape[1]} features but the model expects {self.input_dim}"
            )
        return batch

    def _forward_full(self, batch: np.ndarray):
        """Forward pass keeping the intermediates needed for backprop."""
        pre_acts = []   # z_i = a_{i-1} @ W_i + b_i, before ReLU
        acts = [batch]  # a_0 = batch, a_i = relu(z_i)
        a = batch
        for layer in self.backbone:
            z = a @ layer.weight + layer.bias
            a = np.maximum(z, 0.0)
            pre_acts.append(z)
            acts.append(a)
        h = a
        f = h @ self.eigenlayer
        logits = f @ self.classifier.weight + self.classifier.bias
        return pre_acts, acts, h, f, logits

    def forward(self, batch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (h, f, logits): the eigenlayer input feature, the
        eigenlayer output feature, and the classifier scores."""
        batch = self._check_batch(batch)
        _, _, h, f, logits = self._forward_full(batch)
        return h, f, logits

    def extract_features(self, batch, which: str = "output") -> np.ndarray:
        """Retrieval features: the eigenlayer's input (``which="input"``)
        or its output (``which="output"``)."""
        if which not in FEATURE_KINDS:
            raise ValidationError(f"which must be one of {FEATURE_KINDS}, got {which!r}")
        h, f, _ = self.forward(batch)
        return h if which == "input" else f

    def _check_labels(self, labels, m: int) -> np.ndarray:
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.shape[0] != m:
            raise ValidationError(f"labels must be a length-{m} sequence, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValidationError("labels must be integers")
        c = self.num_classes
        if labels.min() < 0 or labels.max() >= c:
            raise ValidationError(f"labels must lie in [0, {c}), got range [{labels.min()}, {labels.max()}]")
        return labels.astype(np.int64)

    def loss(self, batch, labels) -> float:
        """Mean softmax cross-entropy of the batch."""
        batch = self._check_batch(batch)
        labels = self._check_labels(labels, batch.shape[0])
        _, _, _, _, logits = self._forward_full(batch)
        return _cross_entropy(logits, labels)[0]

    def loss_and_grads(self, batch, labels, mask: FreezeMask = FreezeMask()):
        """Mean softmax cross-entropy and exact gradients for every
        parameter, keyed like :meth:`param_items`.  With a frozen mask the
        eigenlayer gradient is identically zero and all other gradients
        are exactly what the unfrozen call produces."""
        batch = self._check_batch(batch)
        labels = self._check_labels(labels, batch.shape[0])
        pre_acts, acts, h, f, logits = self._forward_full(batch)
        loss, probs = _cross_entropy(logits, labels)

        m = batch.shape[0]
        dlogits = probs
        dlogits[np.arange(m), labels] -= 1.0
        dlogits /= m

        grads: dict[str, np.ndarray] = {}
        grads["classifier.weight"] = f.T @ dlogits
        grads["classifier.bias"] = dlogits.sum(axis=0)
        df = dlogits @ self.classifier.weight.T
        if mask.eigenlayer_frozen:
            grads["eigenlayer"] = np.zeros_like(self.eigenlayer)
        else:
            grads["eigenlayer"] = h.T @ df
        da = df @ self.eigenlayer.T
        for i in range(len(self.backbone) - 1, -1, -1):
            dz = da * (pre_acts[i] > 0.0)
            grads[f"backbone{i}.weight"] = acts[i].T @ dz
            grads[f"backbone{i}.bias"] = dz.sum(axis=0)
            if i > 0:
                da = dz @ self.backbone[i].weight.T
        return loss, grads


def _cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Numerically stable mean cross-entropy; also returns the softmax."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(total)
    m = logits.shape[0]
    loss = float(-log_probs[np.arange(m), labels].mean())
    return loss, exp / total


def build_model(input_dim: int, hidden_dims, eigen_dim: int, num_classes: int, seed: int) -> EigenModel:
    """Fresh model with scaled-uniform fan-in initialization,
    U(-1/sqrt(fan_in), 1/sqrt(fan_in)), for every parameter."""
    hidden_dims = tuple(int(d) for d in hidden_dims)
    if input_dim < 1 or eigen_dim < 1 or any(d < 1 for d in hidden_dims):
        raise ValidationError("all layer dimensions must be >= 1")
    if num_classes < 2:
        raise ValidationError(f"need at least 2 classes, got {num_classes}")
    rng = np.random.default_rng(seed)

    def affine(fan_in: int, fan_out: int) -> AffineLayer:
        bound = 1.0 / np.sqrt(fan_in)
        return AffineLayer(
            weight=rng.uniform(-bound, bound, size=(fan_in, fan_out)),
            bias=rng.uniform(-bound, bound, size=fan_out),
        )

    dims = (int(input_dim), *hidden_dims)
    backbone = [affine(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
    n = dims[-1]
    eigen_bound = 1.0 / np.sqrt(n)
    eigenlayer = rng.uniform(-eigen_bound, eigen_bound, size=(n, int(eigen_dim)))
    classifier = affine(int(eigen_dim), int(num_classes))
    return EigenModel(backbone=backbone, eigenlayer=eigenlayer, classifier=classifier)


def sgd_step(model: EigenModel, grads: dict, lr: float) -> EigenModel:
    """In-place update ``p <- p - lr * g`` for every parameter; returns the
    model.  Rejects negative rates and non-finite gradients."""
    if lr < 0:
        raise ValidationError(f"learning rate must be non-negative, got {lr}")
    for name, p in model.param_items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValidationError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name}")
        p -= lr * g
    return model


# Checkpoint wire format, all integers little-endian:
#   magic "SVDN" | version u16 | layer count u16
#   per layer: role u8 (0 backbone, 1 eigenlayer, 2 classifier)
#              rows u32 | cols u32 | rows*cols float64 row-major
#              bias flag u8 | cols float64 when flag == 1
def save_checkpoint(model: EigenModel, path) -> None:
    """Write the model to ``path``; the round-trip is bit-exact."""
    layers: list[tuple[int, np.ndarray, np.ndarray | None]] = []
    for layer in model.backbone:
        layers.append((_ROLE_BACKBONE, layer.weight, layer.bias))
    layers.append((_ROLE_EIGENLAYER, model.eigenlayer, None))
    layers.append((_ROLE_CLASSIFIER, model.classifier.weight, model.classifier.bias))

    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack("<HH", CHECKPOINT_VERSION, len(layers))
    for role, weight, bias in layers:
        rows, cols = weight.shape
        blob += struct.pack("<BII", role, rows, cols)
        blob += np.ascontiguousarray(weight, dtype="<f8").tobytes()
        if bias is None:
            blob += struct.pack("<B", 0)
        else:
            blob += struct.pack("<B", 1)
            blob += np.ascontiguousarray(bias, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path) -> EigenModel:
    """Read a model written by :func:`save_checkpoint`, validating the
    magic, version, layer roles, and shape chain."""
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ValidationError(f"{path}: not a checkpoint file (bad magic)")
    off = 4
    try:
        version, count = struct.unpack_from("<HH", raw, off)
        off += 4
        if version != CHECKPOINT_VERSION:
            raise ValidationError(f"{path}: unsupported checkpoint version {version}")
        parsed: list[tuple[int, np.ndarray, np.ndarray | None]] = []
        for _ in range(count):
            role, rows, cols = struct.unpack_from("<BII", raw, off)
            off += 9
            n = rows * cols
            weight = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(rows, cols).copy()
            off += 8 * n
            (flag,) = struct.unpack_from("<B", raw, off)
            off += 1
            bias = None
            if flag == 1:
                bias = np.frombuffer(raw, dtype="<f8", count=cols, offset=off).copy()
                off += 8 * cols
            elif flag != 0:
                raise ValidationError(f"{path}: bad bias flag {flag}")
            parsed.append((role, weight, bias))
    except (struct.error, ValueError) as exc:
        raise ValidationError(f"{path}: truncated or corrupt checkpoint") from exc
    if off != len(raw):
        raise ValidationError(f"{path}: {len(raw) - off} trailing bytes after last layer")

    roles = [role for role, _, _ in parsed]
    if roles[:-2].count(_ROLE_BACKBONE) != len(roles) - 2 or roles[-2:] != [_ROLE_EIGENLAYER, _ROLE_CLASSIFIER]:
        raise ValidationError(f"{path}: unexpected layer roles {roles}")
    backbone = []
    for role, weight, bias in parsed[:-2]:
        if bias is None:
            raise ValidationError(f"{path}: backbone layer missing bias")
        backbone.append(AffineLayer(weight, bias))
    _, eigen_w, eigen_b = parsed[-2]
    if eigen_b is not None:
        raise ValidationError(f"{path}: eigenlayer must not carry a bias")
    _, cls_w, cls_b = parsed[-1]
    if cls_b is None:
        raise ValidationError(f"{path}: classifier layer missing bias")

    widths = [w.shape for _, w, _ in parsed]
    for (r1, c1), (r2, c2) in zip(widths, widths[1:]):
        if c1 != r2:
            raise ValidationError(f"{path}: layer shapes do not chain ({c1} -> {r2})")
    return EigenModel(backbone=backbone, eigenlayer=eigen_w, classifier=AffineLayer(cls_w, cls_b))

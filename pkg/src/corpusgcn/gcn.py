"""Multi-layer GCN with exact manual gradients, trained from scratch.

The propagation rule per layer is ReLU(A_hat @ H @ W) with a row-wise
softmax instead of ReLU on the last layer; the loss is softmax
cross-entropy summed over the labeled document nodes.  Training is
full-batch with Adam, inverted dropout on every layer input, a seeded
validation carve-out, and early stopping on validation loss.

One-hot input features are kept implicit: the first propagation then
needs only the adjacency, never an N x N identity.

Dropout masks come from a counter-based hash of (seed, layer, entry
index), so a mask entry can be evaluated in isolation; the implicit
one-hot path and a materialized identity therefore see bitwise-identical
masks.  Every kernel has a fixed reduction order, so a given seed always
reproduces the same trajectory.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus
from .features import FeatureKind, FeatureMatrix
from .sparse import CsrMatrix, DenseMatrix, spmm
from .textgraph import TextGraph, normalized_adjacency

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    n_layers: int = 2
    hidden_dim: int = 200
    learning_rate: float = 0.02
    dropout: float = 0.5
    l2_weight: float = 0.0
    max_epochs: int = 200
    patience: int = 10
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.n_layers <= 5:
            raise ValueError(f"n_layers must be in 1..5, got {self.n_layers}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")

    def dims(self, input_dim: int, n_labels: int) -> list[int]:
        return [input_dim] + [self.hidden_dim] * (self.n_layers - 1) + [n_labels]


@dataclass
class GcnModel:
    """Per-layer weight matrices W_l of shape (d_l, d_{l+1})."""

    weights: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> list[int]:
        return [w.shape[0] for w in self.weights] + [self.weights[-1].shape[1]]

    def copy(self) -> "GcnModel":
        return GcnModel([w.copy() for w in self.weights])


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_model(cls, model: GcnModel) -> "AdamState":
        return cls(
            [np.zeros_like(w) for w in model.weights],
            [np.zeros_like(w) for w in model.weights],
        )


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    stopping_epoch: int = 0
    best_epoch: int = 0


def init_model(dims: list[int], seed: int) -> GcnModel:
    """Glorot-uniform weights, reproducible from the seed."""
    if len(dims) < 2:
        raise ValueError("need at least an input and an output dimension")
    rng = np.random.default_rng(seed)
    weights = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = math.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
    return GcnModel(weights)


# --- counter-based dropout hashing ------------------------------------------

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix_int(x: int) -> int:
    """splitmix64 finalizer on a Python int."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *stream: int) -> int:
    """Deterministic sub-seed for (seed, stream...) tuples."""
    key = _mix_int(seed)
    for s in stream:
        key = _mix_int(key + _GAMMA * (s + 1))
    return key


def _hash_uniform(key: int, idx: np.ndarray) -> np.ndarray:
    """Uniform [0,1) values addressed by entry index, splitmix64-style."""
    z = np.uint64(key) + (idx.astype(np.uint64) + np.uint64(1)) * np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _dropout_factors(key: int, shape: tuple[int, int], keep: float) -> np.ndarray:
    """Inverted-dropout factor matrix: 1/keep where kept, 0 where dropped."""
    n_rows, n_cols = shape
    idx = np.arange(n_rows * n_cols, dtype=np.uint64).reshape(shape)
    return (_hash_uniform(key, idx) < keep) / keep


def _dropout_diag_factors(key: int, n: int, keep: float) -> np.ndarray:
    """Diagonal of the factor matrix for an implicit n x n identity input."""
    idx = np.arange(n, dtype=np.uint64) * np.uint64(n + 1)
    return (_hash_uniform(key, idx) < keep) / keep


# --- forward / backward ------------------------------------------------------


@dataclass
class ForwardCache:
    """Intermediate products needed for the exact backward pass."""

    onehot_input: bool
    input_factors: np.ndarray | None  # layer-1 dropout (diag vector if one-hot)
    dense_input_dropped: np.ndarray | None
    propagated: list[np.ndarray | None]  # P_l = A_hat @ dropped(H_l); None when implicit
    factors: list[np.ndarray | None]  # dropout factors per layer (None in eval)
    relu_masks: list[np.ndarray]  # S_l > 0 for l < L


def row_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(
    model: GcnModel,
    a_hat: CsrMatrix,
    x: FeatureMatrix,
    train_mode: bool = False,
    dropout_seed: int = 0,
    dropout: float = 0.5,
) -> tuple[ForwardCache, DenseMatrix]:
    """Propagate features through all layers; returns (cache, softmax output).

    In train mode each layer's input is subjected to inverted dropout
    (seeded by ``dropout_seed``) before the adjacency multiply; in eval
    mode there is no dropout and no rescaling.
    """
    n = a_hat.n_rows
    if x.n_nodes != n:
        raise ValueError(f"features cover {x.n_nodes} nodes, adjacency has {n}")
    if x.dim != model.dims[0]:
        raise ValueError(f"feature dim {x.dim} != model input dim {model.dims[0]}")
    keep = 1.0 - dropout
    use_dropout = train_mode and dropout > 0.0
    n_layers = model.n_layers

    cache = ForwardCache(
        onehot_input=x.kind is FeatureKind.ONE_HOT,
        input_factors=None,
        dense_input_dropped=None,
        propagated=[None] * n_layers,
        factors=[None] * n_layers,
        relu_masks=[],
    )

    # Layer 1 is computed as A_hat @ (X W), not (A_hat @ X) W: the products
    # then agree bit for bit between an implicit one-hot input (where X W
    # collapses to a row-scaled W and no N x N identity is materialized)
    # and an explicitly materialized identity.
    w1 = model.weights[0]
    if cache.onehot_input:
        if use_dropout:
            f1 = _dropout_diag_factors(derive_seed(dropout_seed, 0), n, keep)
            cache.input_factors = f1
            logits = spmm(a_hat, f1[:, None] * w1)
        else:
            logits = spmm(a_hat, w1)
    else:
        h = x.data
        if use_dropout:
            f1 = _dropout_factors(derive_seed(dropout_seed, 0), h.shape, keep)
            cache.input_factors = f1
            cache.factors[0] = f1
            h = h * f1
        cache.dense_input_dropped = h
        logits = spmm(a_hat, h @ w1)

    for layer in range(1, n_layers):
        cache.relu_masks.append(logits > 0.0)
        h = np.maximum(logits, 0.0)
        if use_dropout:
            f = _dropout_factors(derive_seed(dropout_seed, layer), h.shape, keep)
            cache.factors[layer] = f
            h = h * f
        p = spmm(a_hat, h)
        cache.propagated[layer] = p
        logits = p @ model.weights[layer]

    return cache, row_softmax(logits)


def _index_array(mask) -> np.ndarray:
    if isinstance(mask, (set, frozenset)):
        mask = sorted(mask)
    return np.asarray(mask, dtype=np.int64)


def masked_cross_entropy(
    z: DenseMatrix, labels: np.ndarray, mask
) -> float:
    """Cross-entropy summed (not averaged) over the masked document rows."""
    mask = _index_array(mask)
    if mask.size == 0:
        raise ValueError("training requires at least one labeled document")
    picked = z[mask, np.asarray(labels, dtype=np.int64)[mask]]
    return float(-np.sum(np.log(picked)))


def backward(
    model: GcnModel,
    a_hat: CsrMatrix,
    cache: ForwardCache,
    z: DenseMatrix,
    labels: np.ndarray,
    mask,
) -> list[np.ndarray]:
    """Exact gradients of the masked cross-entropy w.r.t. every weight.

    The output-layer delta is (Z - Y) restricted to masked rows; deltas
    propagate back through the symmetric adjacency, and the ReLU and
    dropout masks recorded by the forward pass are re-applied where the
    forward applied them.
    """
    n_layers = model.n_layers
    if len(cache.propagated) != n_layers:
        raise ValueError("forward cache does not match the model")
    mask = _index_array(mask)
    labels = np.asarray(labels, dtype=np.int64)

    delta = np.zeros_like(z)
    delta[mask] = z[mask]
    delta[mask, labels[mask]] -= 1.0

    grads: list[np.ndarray] = [np.empty(0)] * n_layers
    for layer in range(n_layers - 1, -1, -1):
        if layer == 0:
            # Layer 1 forward is A_hat @ (X W), so dW = X^T (A_hat^T delta);
            # for one-hot inputs X is diag(f) (or the identity in eval mode).
            g = spmm(a_hat, delta)
            if cache.onehot_input:
                if cache.input_factors is not None:
                    g = cache.input_factors[:, None] * g
                grads[0] = g
            else:
                grads[0] = cache.dense_input_dropped.T @ g
            break
        grads[layer] = cache.propagated[layer].T @ delta
        dh = spmm(a_hat, delta @ model.weights[layer].T)
        if cache.factors[layer] is not None:
            dh = dh * cache.factors[layer]
        delta = dh * cache.relu_masks[layer - 1]
    return grads


def adam_step(
    state: AdamState, model: GcnModel, grads: list[np.ndarray], lr: float
) -> GcnModel:
    """Bias-corrected Adam update; mutates the state, returns a new model."""
    state.step += 1
    t = state.step
    new_weights = []
    for i, (w, g) in enumerate(zip(model.weights, grads)):
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g
        m_hat = state.m[i] / (1.0 - ADAM_BETA1**t)
        v_hat = state.v[i] / (1.0 - ADAM_BETA2**t)
        new_weights.append(w - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS))
    return GcnModel(new_weights)


class EarlyStopper:
    """Stops after `patience` consecutive epochs without a strictly better loss."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.counter = 0

    def update(self, loss: float, epoch: int) -> bool:
        """Record one epoch's monitored loss; True means stop now."""
        if loss < self.best:
            self.best = loss
            self.best_epoch = epoch
            self.counter = 0
            return False
        self.counter += 1
        return self.counter >= self.patience


def _val_carveout(
    corpus: Corpus, train_docs: list[int], fraction: float, seed: int
) -> tuple[list[int], list[int]]:
    """Stratified validation split that never strips a label's last train doc."""
    n_val = int(round(fraction * len(train_docs)))
    n_val = min(n_val, len(train_docs) - 1)
    if n_val <= 0:
        return train_docs, []
    rng = random.Random(seed)
    by_label: dict[int, list[int]] = {}
    for d in train_docs:
        by_label.setdefault(corpus.documents[d].label, []).append(d)
    for docs in by_label.values():
        rng.shuffle(docs)
    label_order = sorted(by_label)
    shares = {
        lab: n_val * len(by_label[lab]) / len(train_docs) for lab in label_order
    }
    take = {lab: min(int(shares[lab]), len(by_label[lab]) - 1) for lab in label_order}
    remaining = n_val - sum(take.values())
    by_remainder = sorted(label_order, key=lambda l: (-(shares[l] - int(shares[l])), l))
    while remaining > 0:
        progressed = False
        for lab in by_remainder:
            if remaining == 0:
                break
            if take[lab] < len(by_label[lab]) - 1:
                take[lab] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            break
    val = sorted(d for lab in label_order for d in by_label[lab][: take[lab]])
    val_set = set(val)
    core = [d for d in train_docs if d not in val_set]
    return core, val


def train(
    graph: TextGraph,
    x: FeatureMatrix,
    corpus: Corpus,
    config: TrainConfig,
) -> tuple[GcnModel, TrainHistory]:
    """Full-batch training with Adam, dropout, and early stopping.

    A seeded ``val_fraction`` of the training documents is held out;
    training stops once validation loss has not improved for ``patience``
    consecutive epochs (or at ``max_epochs``), and the returned model is
    the copy from the best validation-loss epoch.  When the carve-out is
    empty, the eval-mode training loss is monitored instead.
    """
    a_hat = normalized_adjacency(graph)
    train_docs = corpus.doc_indices("train")
    if not train_docs:
        raise ValueError("training requires at least one train-split document")
    core_docs, val_docs = _val_carveout(
        corpus, train_docs, config.val_fraction, derive_seed(config.seed, 101)
    )
    labels = np.array([doc.label for doc in corpus.documents], dtype=np.int64)
    core_mask = np.array(core_docs, dtype=np.int64)
    val_mask = np.array(val_docs, dtype=np.int64)

    model = init_model(config.dims(x.dim, corpus.n_labels), config.seed)
    state = AdamState.for_model(model)
    stopper = EarlyStopper(config.patience)
    history = TrainHistory()
    best_model = model.copy()

    for epoch in range(1, config.max_epochs + 1):
        cache, z = forward(
            model,
            a_hat,
            x,
            train_mode=True,
            dropout_seed=derive_seed(config.seed, 202, epoch),
            dropout=config.dropout,
        )
        train_loss = masked_cross_entropy(z, labels, core_mask)
        grads = backward(model, a_hat, cache, z, labels, core_mask)
        if config.l2_weight > 0.0:
            train_loss += config.l2_weight * sum(
                float(np.sum(w * w)) for w in model.weights
            )
            grads = [
                g + 2.0 * config.l2_weight * w
                for g, w in zip(grads, model.weights)
            ]
        model = adam_step(state, model, grads, config.learning_rate)

        _, z_eval = forward(model, a_hat, x)
        monitor_mask = val_mask if len(val_mask) else core_mask
        val_loss = masked_cross_entropy(z_eval, labels, monitor_mask)
        val_pred = np.argmax(z_eval[monitor_mask], axis=1)
        val_acc = float(np.mean(val_pred == labels[monitor_mask]))

        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        history.val_accuracy.append(val_acc)
        should_stop = stopper.update(val_loss, epoch)
        if stopper.best_epoch == epoch:
            best_model = model.copy()
        history.stopping_epoch = epoch
        if should_stop:
            break

    history.best_epoch = stopper.best_epoch
    return best_model, history


def predict(
    model: GcnModel,
    a_hat: CsrMatrix,
    x: FeatureMatrix,
    doc_indices,
) -> np.ndarray:
    """Argmax label per requested document node (ties to the lowest index)."""
    _, z = forward(model, a_hat, x)
    return np.argmax(z[np.asarray(doc_indices, dtype=np.int64)], axis=1)


def save_checkpoint(model: GcnModel, path) -> None:
    """Text checkpoint: `GCN L d_0 ... d_L` header, then one line per weight row.

    Values are written with 17 significant digits, so a load reproduces
    the weights bit for bit.
    """
    lines = ["GCN %d %s" % (model.n_layers, " ".join(map(str, model.dims)))]
    for w in model.weights:
        for row in w:
            lines.append(" ".join("%.17g" % v for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> GcnModel:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("GCN "):
        raise ValueError(f"{path}: not a GCN checkpoint")
    header = lines[0].split()
    n_layers = int(header[1])
    dims = [int(d) for d in header[2:]]
    if len(dims) != n_layers + 1:
        raise ValueError(f"{path}: header lists {len(dims)} dims for {n_layers} layers")
    weights = []
    cursor = 1
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        block = lines[cursor : cursor + d_in]
        if len(block) != d_in:
            raise ValueError(f"{path}: truncated checkpoint")
        w = np.array([[float(v) for v in ln.split()] for ln in block])
        if w.shape != (d_in, d_out):
            raise ValueError(f"{path}: weight block is {w.shape}, expected {(d_in, d_out)}")
        weights.append(w)
        cursor += d_in
    if cursor != len(lines):
        raise ValueError(f"{path}: trailing data after the last weight block")
    return GcnModel(weights)

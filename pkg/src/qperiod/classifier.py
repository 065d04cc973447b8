"""From-scratch MLP separating learned post-processing unitaries from Haar ones.

Architecture follows the shape rule: hidden layers (2 * input_dim, 512)
with ReLU, a single sigmoid output, binary cross-entropy loss, mini-batch
ADAM, and validation-based early stopping with a best-snapshot return.
"""

import math
from dataclasses import dataclass

import numpy as np

from .circuit import generate_periodic_function
from .linalg import haar_random_unitary, unitarity_defect
from .training import (
    AdamConfig,
    LossConfig,
    TrainState,
    TrainingDataset,
    adam_step,
    loss as sample_loss,
    target_distribution,
    train,
)

__all__ = [
    "MLPConfig",
    "MLP",
    "LabeledUnitaryCorpus",
    "CorpusSplits",
    "CorpusConfig",
    "default_hidden_dims",
    "flatten_unitary",
    "unitary_features",
    "initialize_mlp",
    "forward",
    "bce_loss",
    "backprop_gradient",
    "build_corpus",
    "split_corpus",
    "train_classifier",
    "evaluate",
]

BCE_CLAMP = 1e-12


def default_hidden_dims(input_dim: int) -> tuple:
    """Shape rule: first hidden twice the input width, second hidden 2^9."""
    return (2 * input_dim, 512)


@dataclass(frozen=True)
class MLPConfig:
    input_dim: int
    hidden_dims: tuple = None
    seed: int = 0

    def layer_dims(self) -> tuple:
        hidden = self.hidden_dims
        if hidden is None:
            hidden = default_hidden_dims(self.input_dim)
        return (self.input_dim, *hidden, 1)


@dataclass
class MLP:
    """Weight matrices (fan_in x fan_out) and bias vectors, one pair per layer."""

    weights: list
    biases: list

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]


@dataclass(frozen=True)
class LabeledUnitaryCorpus:
    """(matrix, label) pairs: label 1 = learned, 0 = random.

    provenance[i] records how entries[i] was produced (seeds, periods,
    final loss for learned runs; the generator seed for Haar draws).
    """

    entries: list
    provenance: list

    def __post_init__(self):
        ones = sum(label for _, label in self.entries)
        zeros = len(self.entries) - ones
        if abs(ones - zeros) > 1:
            raise ValueError(f"class imbalance: {ones} learned vs {zeros} random")
        if len(self.provenance) != len(self.entries):
            raise ValueError("provenance must align with entries")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CorpusSplits:
    train: list
    validation: list
    test: list


@dataclass(frozen=True)
class CorpusConfig:
    """Protocol for the learned half of a corpus."""

    dataset_size: int = 8
    epochs: int = 4000
    stop_below: float = 1e-8
    loss_threshold: float = 1e-6
    defect_threshold: float = 1e-6
    period_policy: str = "random"
    max_attempts_factor: int = 5
    loss_cfg: LossConfig = LossConfig()
    adam_cfg: AdamConfig = AdamConfig()

    def __post_init__(self):
        if self.period_policy not in ("random", "cycle"):
            raise ValueError(f"unknown period policy {self.period_policy!r}")


def flatten_unitary(u) -> np.ndarray:
    """Row-major interleaved (re, im) feature layout, length 2 * dim^2."""
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    return u.ravel().view(np.float64).copy()


def unitary_features(u) -> np.ndarray:
    """Classifier input features: flattened entries scaled by the dimension.

    Raw unitary entries shrink like 2^{-n/2}; scaling by dim keeps the
    feature magnitudes (and hence gradient scales under the fixed init)
    in a regime where training behaves uniformly across n.
    """
    x = flatten_unitary(u)
    return x * math.sqrt(x.size / 2.0)


def initialize_mlp(config: MLPConfig) -> MLP:
    """Uniform(-sqrt(6/(fan_in+fan_out)), +...) weights, zero biases."""
    dims = config.layer_dims()
    rng = np.random.default_rng(config.seed)
    weights, biases = [], []
    for din, dout in zip(dims[:-1], dims[1:]):
        lim = np.sqrt(6.0 / (din + dout))
        weights.append(rng.uniform(-lim, lim, (din, dout)))
        biases.append(np.zeros(dout))
    return MLP(weights=weights, biases=biases)


def _forward_batch(net: MLP, xb: np.ndarray) -> list:
    """Activations per layer; ReLU on hidden layers, sigmoid on the last."""
    h = xb
    acts = [xb]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        h = np.maximum(z, 0.0) if i < last else 1.0 / (1.0 + np.exp(-z))
        acts.append(h)
    return acts


def forward(net: MLP, x) -> float:
    """Probability that x is a learned unitary's feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ValueError(f"input shape {x.shape} does not match net input {net.input_dim}")
    return float(_forward_batch(net, x[None, :])[-1][0, 0])


def bce_loss(prediction: float, label) -> float:
    """Binary cross-entropy with predictions clamped away from {0, 1}."""
    p = min(max(float(prediction), BCE_CLAMP), 1.0 - BCE_CLAMP)
    y = float(label)
    return -(y * math.log(p) + (1.0 - y) * math.log(1.0 - p))


def _batch_bce(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def _backprop_batch(net: MLP, xb: np.ndarray, yb: np.ndarray):
    """Mean-reduced BCE gradients for every weight and bias tensor.

    The sigmoid+BCE pair collapses to the (p - y) residual at the output,
    so the clamp only guards the loss value, not the gradient path.
    """
    acts = _forward_batch(net, xb)
    batch = xb.shape[0]
    p = np.clip(acts[-1][:, 0], BCE_CLAMP, 1.0 - BCE_CLAMP)
    delta = ((p - yb) / batch)[:, None]
    g_w = [None] * len(net.weights)
    g_b = [None] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        g_w[i] = acts[i].T @ delta
        g_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (acts[i] > 0)
    return g_w, g_b


def backprop_gradient(net: MLP, x, label):
    """Gradients of bce_loss(forward(net, x), label) for a single example."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray([float(label)])
    return _backprop_batch(net, x[None, :], y)


def _random_periods(n: int, size: int, rng) -> list:
    return [int(r) for r in rng.integers(1, 2 ** (n - 1) + 1, size=size)]


def _cycled_periods(n: int, size: int) -> list:
    return [1 + (i % 2 ** (n - 1)) for i in range(size)]


def _corpus_training_run(n: int, cfg: CorpusConfig, base_seed, attempt: int):
    """One candidate learned matrix; returns (matrix, provenance) or None."""
    if cfg.period_policy == "random":
        period_rng = np.random.default_rng((base_seed, 0, attempt))
        periods = _random_periods(n, cfg.dataset_size, period_rng)
    else:
        periods = _cycled_periods(n, cfg.dataset_size)
    value_seeds = np.random.SeedSequence((base_seed, 1, attempt)).spawn(cfg.dataset_size)
    functions = [generate_periodic_function(n, n, r, s) for r, s in zip(periods, value_seeds)]
    targets = [target_distribution(cfg.loss_cfg.target_kind, f,
                                   gaussian_sigma=cfg.loss_cfg.gaussian_sigma)
               for f in functions]
    dataset = TrainingDataset(functions=functions, targets=targets)
    m3, history = train(dataset, cfg.loss_cfg, cfg.adam_cfg, cfg.epochs,
                        seed=(base_seed, 2, attempt), stop_below=cfg.stop_below)
    defect = unitarity_defect(m3)
    # fresh functions, same periods: checks value-independence of the fit
    check_seeds = np.random.SeedSequence((base_seed, 4, attempt)).spawn(cfg.dataset_size)
    check_losses = []
    for r, s in zip(periods, check_seeds):
        f = generate_periodic_function(n, n, r, s)
        p_d = target_distribution(cfg.loss_cfg.target_kind, f,
                                  gaussian_sigma=cfg.loss_cfg.gaussian_sigma)
        check_losses.append(sample_loss(m3, f, p_d, cfg.loss_cfg.k))
    accepted = (history[-1] <= cfg.loss_threshold
                and defect <= cfg.defect_threshold
                and max(check_losses) <= cfg.loss_threshold)
    provenance = {
        "source": "training",
        "base_seed": base_seed,
        "attempt": attempt,
        "periods": periods,
        "final_loss": history[-1],
        "unitarity_defect": defect,
        "max_check_loss": max(check_losses),
        "epochs_run": len(history),
        "loss_history": history,
    }
    return (m3, provenance) if accepted else (None, provenance)


def build_corpus(n: int, per_class: int, cfg: CorpusConfig = CorpusConfig(),
                 seed=0) -> LabeledUnitaryCorpus:
    """per_class learned matrices (independent seeded runs) + per_class Haar.

    Runs failing the convergence gate are rejected and retried with the
    next attempt seed, up to max_attempts_factor * per_class attempts.
    """
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    entries, provenance = [], []
    attempt = 0
    limit = cfg.max_attempts_factor * per_class
    while sum(1 for _, label in entries if label == 1) < per_class:
        if attempt >= limit:
            raise RuntimeError(
                f"corpus generation exhausted {limit} attempts for {per_class} accepted runs"
            )
        m3, prov = _corpus_training_run(n, cfg, seed, attempt)
        attempt += 1
        if m3 is not None:
            entries.append((m3, 1))
            provenance.append(prov)
    for j in range(per_class):
        u = haar_random_unitary(n, (seed, 3, j))
        entries.append((u, 0))
        provenance.append({"source": "haar", "base_seed": seed, "index": j})
    return LabeledUnitaryCorpus(entries=entries, provenance=provenance)


def _allocate(total: int, class_sizes: list) -> list:
    """Largest-remainder split of `total` seats across classes."""
    n_all = sum(class_sizes)
    raw = [total * c / n_all for c in class_sizes]
    base = [int(x) for x in raw]
    short = total - sum(base)
    order = sorted(range(len(raw)), key=lambda i: raw[i] - base[i], reverse=True)
    for i in order[:short]:
        base[i] += 1
    return base


def split_corpus(corpus: LabeledUnitaryCorpus, seed) -> CorpusSplits:
    """Stratified 75/25 train-pool/test split, then 10% of the pool as validation.

    Fractional seats round toward validation, then test. Deterministic:
    one permutation per class (label 1 first) and one shuffle of the
    combined training order, all from the same generator.
    """
    if len(corpus) < 10:
        raise ValueError("corpus too small to split (need >= 10 entries)")
    total = len(corpus)
    n_test = math.ceil(total / 4)
    n_val = math.ceil((total - n_test) / 10)
    class_indices = [
        [i for i, (_, label) in enumerate(corpus.entries) if label == 1],
        [i for i, (_, label) in enumerate(corpus.entries) if label == 0],
    ]
    sizes = [len(ix) for ix in class_indices]
    test_alloc = _allocate(n_test, sizes)
    val_alloc = _allocate(n_val, sizes)
    rng = np.random.default_rng(seed)
    train_idx, val_idx, test_idx = [], [], []
    for ix, n_te, n_va in zip(class_indices, test_alloc, val_alloc):
        perm = np.asarray(ix)[rng.permutation(len(ix))]
        val_idx.extend(perm[:n_va])
        train_idx.extend(perm[n_va:len(ix) - n_te])
        test_idx.extend(perm[len(ix) - n_te:])
    train_idx = np.asarray(train_idx)
    rng.shuffle(train_idx)

    def pick(idx):
        return [corpus.entries[i] for i in idx]

    return CorpusSplits(train=pick(train_idx), validation=pick(val_idx), test=pick(test_idx))


def _featurize(entries) -> tuple:
    x = np.array([unitary_features(m) for m, _ in entries])
    y = np.array([float(label) for _, label in entries])
    return x, y


def train_classifier(net: MLP, splits: CorpusSplits, adam_cfg: AdamConfig = AdamConfig(),
                     max_epochs: int = 400, batch_size: int = 32, patience: int = 5,
                     shuffle_seed=None):
    """Mini-batch ADAM with early stopping on validation loss.

    Returns (best_net, history) where history rows are dicts with per-epoch
    train/validation loss and accuracy. The returned parameters are the
    snapshot from the epoch with the lowest validation loss, never a later
    one. `shuffle_seed` seeds the per-epoch minibatch permutation; None
    keeps the fixed order.
    """
    x_tr, y_tr = _featurize(splits.train)
    x_va, y_va = _featurize(splits.validation)
    shuffle_rng = np.random.default_rng(shuffle_seed) if shuffle_seed is not None else None
    tensors = net.weights + net.biases
    states = [TrainState(w=t.ravel().copy(), adam_m=np.zeros(t.size),
                         adam_v=np.zeros(t.size), t=0) for t in tensors]
    best = None
    best_val = np.inf
    stale = 0
    history = []
    for epoch in range(max_epochs):
        if shuffle_rng is not None:
            order = shuffle_rng.permutation(len(x_tr))
        else:
            order = np.arange(len(x_tr))
        for start in range(0, len(x_tr), batch_size):
            sel = order[start:start + batch_size]
            g_w, g_b = _backprop_batch(net, x_tr[sel], y_tr[sel])
            grads = g_w + g_b
            for i, g in enumerate(grads):
                states[i] = adam_step(states[i], np.ascontiguousarray(g).ravel(), adam_cfg)
            for i, w in enumerate(net.weights):
                net.weights[i] = states[i].w.reshape(w.shape)
            for j, b in enumerate(net.biases):
                net.biases[j] = states[len(net.weights) + j].w.reshape(b.shape)
        p_tr = _forward_batch(net, x_tr)[-1][:, 0]
        p_va = _forward_batch(net, x_va)[-1][:, 0]
        row = {
            "epoch": epoch,
            "train_loss": _batch_bce(p_tr, y_tr),
            "train_accuracy": float(np.mean((p_tr > 0.5) == (y_tr == 1.0))),
            "val_loss": _batch_bce(p_va, y_va),
            "val_accuracy": float(np.mean((p_va > 0.5) == (y_va == 1.0))),
        }
        history.append(row)
        if not np.isfinite(row["train_loss"]):
            raise RuntimeError(f"classifier training diverged at epoch {epoch}")
        if row["val_loss"] < best_val - 1e-12:
            best_val = row["val_loss"]
            stale = 0
            best = ([w.copy() for w in net.weights], [b.copy() for b in net.biases])
        else:
            stale += 1
            if stale >= patience:
                break
    if best is not None:
        net.weights, net.biases = best
    return net, history


def evaluate(net: MLP, examples) -> tuple:
    """Accuracy and raw scores; score > 0.5 predicts learned (0.5 is class 0)."""
    if not examples:
        raise ValueError("cannot evaluate on an empty example list")
    x, y = _featurize(examples)
    scores = _forward_batch(net, x)[-1][:, 0]
    accuracy = float(np.mean((scores > 0.5) == (y == 1.0)))
    return accuracy, [float(s) for s in scores]

"""Loss, analytic gradient, ADAM, and the stochastic training loop for M3.

The candidate matrix is parameterized by 2 * dim^2 reals: real and
imaginary parts interleaved per entry, row-major. The loss is

    (1/2^n) sum_i [P_a(i) - P_d(i)]^2  +  (k/dim^2) sum_ij |M†M - I|^2_ij

where P_a is the X-register distribution the candidate produces and dim
is the full matrix dimension (2^{n+ancilla}).
"""

from dataclasses import dataclass

import numpy as np

from .circuit import PeriodicFunction, generate_periodic_function, reference_distribution

__all__ = [
    "LossConfig",
    "AdamConfig",
    "TrainState",
    "TrainingDataset",
    "DivergenceError",
    "target_distribution",
    "loss",
    "loss_gradient",
    "achieved_distribution",
    "adam_step",
    "initialize_parameters",
    "build_training_dataset",
    "train",
    "params_to_matrix",
    "matrix_to_params",
]

TARGET_KINDS = ("qft-reference", "single-peak", "step", "gaussian")

# abort threshold: optimizer has left the basin of any useful minimum
DIVERGENCE_LIMIT = 1e6


class DivergenceError(RuntimeError):
    """Training loss became non-finite or exceeded the divergence limit.

    Carries the parameters and history at the point of abort so callers
    can still persist diagnostics.
    """

    def __init__(self, message, w=None, history=None):
        super().__init__(message)
        self.w = w
        self.history = history if history is not None else []


@dataclass(frozen=True)
class LossConfig:
    k: float = 1.0
    target_kind: str = "qft-reference"
    gaussian_sigma: float = 1.0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("penalty weight k must be positive")
        if self.target_kind not in TARGET_KINDS:
            raise ValueError(f"unknown target kind {self.target_kind!r}")
        if self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be positive")


@dataclass(frozen=True)
class AdamConfig:
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class TrainState:
    """Flattened parameters plus first/second ADAM moments and step count."""

    w: np.ndarray
    adam_m: np.ndarray
    adam_v: np.ndarray
    t: int


@dataclass(frozen=True)
class TrainingDataset:
    """Periodic functions with their precomputed target distributions."""

    functions: list
    targets: list

    def __post_init__(self):
        if not self.functions:
            raise ValueError("dataset must be nonempty")
        if len(self.functions) != len(self.targets):
            raise ValueError("functions and targets must pair up")
        n, m = self.functions[0].n, self.functions[0].m
        if any((f.n, f.m) != (n, m) for f in self.functions):
            raise ValueError("all dataset functions must share register widths")

    @property
    def n(self) -> int:
        return self.functions[0].n

    @property
    def m(self) -> int:
        return self.functions[0].m

    def __len__(self) -> int:
        return len(self.functions)


def params_to_matrix(w: np.ndarray, dim: int) -> np.ndarray:
    """Reinterpret the interleaved real vector as a dim x dim complex matrix."""
    if w.size != 2 * dim * dim:
        raise ValueError(f"parameter vector length {w.size} does not fit dim {dim}")
    return w.view(np.complex128).reshape(dim, dim)


def matrix_to_params(m3: np.ndarray) -> np.ndarray:
    """Flatten a complex matrix to the interleaved real parameter layout."""
    return np.ascontiguousarray(m3, dtype=np.complex128).ravel().view(np.float64).copy()


def target_distribution(kind: str, f: PeriodicFunction,
                        gaussian_sigma: float = 1.0) -> np.ndarray:
    """Desired X-register distribution for a training sample."""
    size = 2 ** f.n
    if kind == "qft-reference":
        return reference_distribution(f)
    if kind == "single-peak":
        if f.r >= size:
            raise ValueError(f"single-peak target needs r < 2^n, got r={f.r}")
        p = np.zeros(size)
        p[f.r] = 1.0
        return p
    if kind == "step":
        if f.r >= size:
            raise ValueError(f"step target needs r < 2^n, got r={f.r}")
        p = np.zeros(size)
        p[f.r:] = 1.0 / (size - f.r)
        return p
    if kind == "gaussian":
        if gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be positive")
        i = np.arange(size)
        p = np.exp(-((i - f.r) ** 2) / (2.0 * gaussian_sigma ** 2))
        return p / p.sum()
    raise ValueError(f"unknown target kind {kind!r}")


def _grouped_columns(f: PeriodicFunction) -> np.ndarray:
    """Post-oracle amplitudes grouped by function value: (2^n, r) reals.

    Column order is first occurrence, i.e. column x mod r; the marginal
    over F only ever sees column magnitudes, so the value labels drop out.
    """
    size = 2 ** f.n
    psi = np.zeros((size, f.r))
    psi[np.arange(size), np.arange(size) % f.r] = 1.0 / np.sqrt(size)
    return psi


def _loss_terms(m3: np.ndarray, psi: np.ndarray, p_d: np.ndarray, k: float):
    """Loss value and gradient matrix for one sample.

    Supports ancilla-extended matrices: when dim > 2^n, the X register is
    the high-order index, ancillas start in |0> (so only every
    (dim/2^n)-th column of m3 acts) and P_a marginalizes the ancillas.
    """
    size = psi.shape[0]
    dim = m3.shape[0]
    anc = dim // size
    if anc * size != dim:
        raise ValueError(f"matrix dim {dim} is not a multiple of 2^n = {size}")
    sub = m3[:, ::anc]
    a = sub @ psi
    rowp = (a.real ** 2 + a.imag ** 2).sum(axis=1)
    p_a = rowp.reshape(size, anc).sum(axis=1)
    e = p_a - p_d
    dist = float(e @ e) / size
    h = m3.conj().T @ m3 - np.eye(dim)
    pen = k * float(np.vdot(h, h).real) / dim ** 2
    erow = np.repeat(e, anc)
    grad = (4.0 * k / dim ** 2) * (m3 @ h)
    grad[:, ::anc] += (4.0 / size) * ((erow[:, None] * a) @ psi.T)
    return dist + pen, grad


def achieved_distribution(m3, f: PeriodicFunction) -> np.ndarray:
    """X-register distribution the candidate matrix produces for f.

    Accepts ancilla-extended matrices (dim a power-of-two multiple of 2^n)
    and marginalizes the ancillas along with F.
    """
    m3 = np.asarray(m3, dtype=np.complex128)
    psi = _grouped_columns(f)
    size = psi.shape[0]
    dim = m3.shape[0]
    anc = dim // size
    if anc * size != dim:
        raise ValueError(f"matrix dim {dim} is not a multiple of 2^n = {size}")
    a = m3[:, ::anc] @ psi
    rowp = (a.real ** 2 + a.imag ** 2).sum(axis=1)
    return rowp.reshape(size, anc).sum(axis=1)


def loss(m3, f: PeriodicFunction, p_d, k: float) -> float:
    """Distribution mismatch plus unitarity penalty for one sample."""
    m3 = np.asarray(m3, dtype=np.complex128)
    value, _ = _loss_terms(m3, _grouped_columns(f), np.asarray(p_d, dtype=np.float64), k)
    return value


def loss_gradient(m3, f: PeriodicFunction, p_d, k: float) -> np.ndarray:
    """Gradient of loss with respect to the 2 * dim^2 real parameters."""
    m3 = np.asarray(m3, dtype=np.complex128)
    _, grad = _loss_terms(m3, _grouped_columns(f), np.asarray(p_d, dtype=np.float64), k)
    return np.ascontiguousarray(grad).ravel().view(np.float64)


def adam_step(state: TrainState, grad: np.ndarray, cfg: AdamConfig) -> TrainState:
    """One ADAM update, exactly in this operation order:

    t <- t+1; m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g*g;
    mhat <- m/(1-b1^t); vhat <- v/(1-b2^t); w <- w - alpha*mhat/(sqrt(vhat)+eps).
    """
    if grad.shape != state.w.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match parameters {state.w.shape}")
    t = state.t + 1
    m = cfg.beta1 * state.adam_m + (1 - cfg.beta1) * grad
    v = cfg.beta2 * state.adam_v + (1 - cfg.beta2) * (grad * grad)
    mhat = m / (1 - cfg.beta1 ** t)
    vhat = v / (1 - cfg.beta2 ** t)
    w = state.w - cfg.alpha * mhat / (np.sqrt(vhat) + cfg.epsilon)
    return TrainState(w=w, adam_m=m, adam_v=v, t=t)


def initialize_parameters(n: int, seed) -> TrainState:
    """Gaussian start: i.i.d. N(0, 1/2^n) per real component.

    Standard deviation 2^{-n/2} puts rows at roughly unit norm, i.e. near
    the scale of a unitary, so the penalty term starts in a useful regime.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dim = 2 ** n
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 1.0 / np.sqrt(dim), 2 * dim * dim)
    return TrainState(w=w, adam_m=np.zeros_like(w), adam_v=np.zeros_like(w), t=0)


def build_training_dataset(n: int, m: int, size: int, seed,
                           loss_cfg: LossConfig = LossConfig()) -> TrainingDataset:
    """Dataset of `size` functions with periods cycling 1..2^{n-1}.

    Cycling guarantees every small period (always including r = 1) is
    represented, which random draws at desk scale frequently miss; the
    function values themselves are random per item.
    """
    if size < 1:
        raise ValueError("dataset size must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(size)
    functions = []
    targets = []
    for i in range(size):
        r = 1 + (i % 2 ** (n - 1)) if n > 1 else 1
        f = generate_periodic_function(n, m, r, seeds[i])
        functions.append(f)
        targets.append(target_distribution(loss_cfg.target_kind, f,
                                           gaussian_sigma=loss_cfg.gaussian_sigma))
    return TrainingDataset(functions=functions, targets=targets)


def train(dataset: TrainingDataset, loss_cfg: LossConfig, adam_cfg: AdamConfig,
          epochs: int, seed, ancilla: int = 0, *,
          init: TrainState = None, stop_below: float = None):
    """Per-sample stochastic ADAM over the dataset in fixed order.

    Returns (m3, loss_history) where loss_history[e] is the mean of the
    per-sample losses measured before each update in epoch e. With
    ancilla > 0 the learned matrix acts on n + ancilla qubits. `init`
    overrides the random start; `stop_below` ends training early once the
    epoch loss reaches the given level.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if ancilla < 0:
        raise ValueError("ancilla must be >= 0")
    n = dataset.n
    dim = 2 ** (n + ancilla)
    psis = [_grouped_columns(f) for f in dataset.functions]
    targets = [np.asarray(t, dtype=np.float64) for t in dataset.targets]
    state = init if init is not None else initialize_parameters(n + ancilla, seed)
    if state.w.size != 2 * dim * dim:
        raise ValueError("init state size does not match n + ancilla")
    history = []
    for epoch in range(epochs):
        total = 0.0
        for psi, p_d in zip(psis, targets):
            m3 = state.w.view(np.complex128).reshape(dim, dim)
            value, grad_mat = _loss_terms(m3, psi, p_d, loss_cfg.k)
            if not np.isfinite(value) or value > DIVERGENCE_LIMIT:
                raise DivergenceError(
                    f"loss diverged at epoch {epoch} (value {value:.3e})",
                    w=state.w, history=history,
                )
            total += value
            grad = np.ascontiguousarray(grad_mat).ravel().view(np.float64)
            state = adam_step(state, grad, adam_cfg)
        history.append(total / len(dataset))
        if stop_below is not None and history[-1] <= stop_below:
            break
    m3 = state.w.view(np.complex128).reshape(dim, dim).copy()
    return m3, history

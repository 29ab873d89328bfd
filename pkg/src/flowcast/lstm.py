"""Single-hidden-layer LSTM regressor written against numpy.

Gate weights are stored stacked in one ``(4H, H + I)`` matrix ``W`` whose row
blocks are, in order, forget, input, candidate and output gates, and whose
columns act on ``[h_prev, x_t]``. A linear readout ``V h_t + c`` maps the
hidden state to one output per step.

Training consumes the (chronologically ordered) training rows in chunks of
``seq_len`` steps. Every chunk starts from a zero state, is run forward,
backpropagated through all of its steps, and followed by one Adam update.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import Normalizer, SplitSpec, holdout_split
from .errors import DataError, DivergenceError
from .windowing import SupervisedSet

GATES = ("forget", "input", "candidate", "output")
PARAM_NAMES = ("W", "b", "V", "c")
FORMAT_NAME = "flowcast-lstm"
FORMAT_VERSION = 1


def sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True)
class TrainConfig:
    seq_len: int = 500
    hidden_dim: int = 100
    epochs: int = 50
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    shuffle: bool = False
    clip_norm: float | None = None
    train_fraction: float = 2 / 3

    def __post_init__(self):
        for name in ("seq_len", "hidden_dim", "epochs"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be a positive integer")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise DataError("clip_norm must be positive or None")


@dataclass(frozen=True)
class LstmModel:
    input_dim: int
    hidden_dim: int
    params: dict

    def __post_init__(self):
        H, I = self.hidden_dim, self.input_dim
        shapes = {"W": (4 * H, H + I), "b": (4 * H,), "V": (1, H), "c": (1,)}
        for name, shape in shapes.items():
            if self.params[name].shape != shape:
                raise DataError(f"parameter {name} has shape {self.params[name].shape}, expected {shape}")

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """(H x (H + I) weights, H bias) of one gate."""
        k = GATES.index(name)
        H = self.hidden_dim
        return self.params["W"][k * H : (k + 1) * H], self.params["b"][k * H : (k + 1) * H]

    def with_params(self, params: dict) -> "LstmModel":
        return LstmModel(self.input_dim, self.hidden_dim, params)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "params": {k: self.params[k].tolist() for k in PARAM_NAMES},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LstmModel":
        params = {k: np.asarray(data["params"][k], dtype=np.float64) for k in PARAM_NAMES}
        return cls(int(data["input_dim"]), int(data["hidden_dim"]), params)


@dataclass(frozen=True)
class CellState:
    C: np.ndarray
    h: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int) -> "CellState":
        return cls(np.zeros(hidden_dim), np.zeros(hidden_dim))


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: LstmModel, config: TrainConfig | None = None) -> "AdamState":
        config = config or TrainConfig()
        zeros = {k: np.zeros_like(p) for k, p in model.params.items()}
        return cls(
            zeros,
            {k: z.copy() for k, z in zeros.items()},
            0,
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.eps,
        )


def init_network(config: TrainConfig, input_dim: int, seed: int | None = None) -> LstmModel:
    """Glorot-uniform weights, forget-gate bias 1, all other biases 0."""
    if input_dim < 1:
        raise DataError("input_dim must be positive")
    H, I = config.hidden_dim, input_dim
    rng = np.random.default_rng(config.seed if seed is None else seed)
    gate_bound = math.sqrt(6.0 / (I + H + H))
    out_bound = math.sqrt(6.0 / (H + 1))
    b = np.zeros(4 * H)
    b[:H] = 1.0
    params = {
        "W": rng.uniform(-gate_bound, gate_bound, (4 * H, H + I)),
        "b": b,
        "V": rng.uniform(-out_bound, out_bound, (1, H)),
        "c": np.zeros(1),
    }
    return LstmModel(I, H, params)


@dataclass(frozen=True)
class StepCache:
    x: np.ndarray
    prev: CellState
    z: np.ndarray  # gate pre-activations, stacked like W
    f: np.ndarray
    i: np.ndarray
    g: np.ndarray  # candidate state
    o: np.ndarray
    C: np.ndarray
    tanh_C: np.ndarray


def cell_forward(model: LstmModel, x_t, prev: CellState) -> tuple[CellState, StepCache]:
    x_t = np.asarray(x_t, dtype=np.float64)
    H = model.hidden_dim
    if x_t.shape != (model.input_dim,) or prev.h.shape != (H,) or prev.C.shape != (H,):
        raise DataError("cell_forward: input or state shape does not match the model")
    z = model.params["W"] @ np.concatenate([prev.h, x_t]) + model.params["b"]
    f = sigmoid(z[:H])
    i = sigmoid(z[H : 2 * H])
    g = np.tanh(z[2 * H : 3 * H])
    o = sigmoid(z[3 * H :])
    C = f * prev.C + i * g
    tanh_C = np.tanh(C)
    h = o * tanh_C
    return CellState(C, h), StepCache(x_t, prev, z, f, i, g, o, C, tanh_C)


@dataclass
class SequenceCache:
    """Everything backward() needs from one forward_sequence() call.

    Row ``t + 1`` of ``h``/``C`` is the state after step ``t``; row 0 is the
    initial state. ``gates`` holds activated f, i, g, o stacked like ``W``.
    """

    model: LstmModel
    X: np.ndarray
    z: np.ndarray
    gates: np.ndarray
    C: np.ndarray
    h: np.ndarray
    tanh_C: np.ndarray
    predictions: np.ndarray

    @property
    def final_state(self) -> CellState:
        return CellState(self.C[-1].copy(), self.h[-1].copy())


def forward_sequence(model: LstmModel, window, init: CellState | None = None):
    """Run the cell over the rows of ``window`` (T x I), threading the state.

    Returns ``(predictions, cache)``; ``cache.final_state`` continues the
    sequence in a later call.
    """
    X = np.asarray(window, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DataError(f"window must be T x {model.input_dim}, got {X.shape}")
    H = model.hidden_dim
    T = X.shape[0]
    W, b = model.params["W"], model.params["b"]
    Wh, Wx = W[:, :H], W[:, H:]
    init = init or CellState.zeros(H)

    z = X @ Wx.T + b
    gates = np.empty((T, 4 * H))
    Cs = np.empty((T + 1, H))
    hs = np.empty((T + 1, H))
    tanh_C = np.empty((T, H))
    Cs[0], hs[0] = init.C, init.h
    for t in range(T):
        z[t] += Wh @ hs[t]
        a = gates[t]
        a[: 2 * H] = sigmoid(z[t, : 2 * H])
        a[2 * H : 3 * H] = np.tanh(z[t, 2 * H : 3 * H])
        a[3 * H :] = sigmoid(z[t, 3 * H :])
        Cs[t + 1] = a[:H] * Cs[t] + a[H : 2 * H] * a[2 * H : 3 * H]
        tanh_C[t] = np.tanh(Cs[t + 1])
        hs[t + 1] = a[3 * H :] * tanh_C[t]
    predictions = hs[1:] @ model.params["V"][0] + model.params["c"][0]
    return predictions, SequenceCache(model, X, z, gates, Cs, hs, tanh_C, predictions)


def sequence_loss(predictions, targets) -> float:
    diff = np.asarray(predictions) - np.asarray(targets)
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.mean(diff * diff))


def backward(cache: SequenceCache, targets) -> dict:
    """Gradients of the mean squared error over the cached sequence."""
    model = cache.model
    H = model.hidden_dim
    targets = np.asarray(targets, dtype=np.float64)
    T = cache.X.shape[0]
    if targets.shape != (T,):
        raise DataError(f"expected {T} targets, got shape {targets.shape}")
    W = model.params["W"]
    Wh = W[:, :H]
    v = model.params["V"][0]

    d_pred = 2.0 * (cache.predictions - targets) / T
    dV = (d_pred @ cache.h[1:])[None, :]
    dc = np.array([d_pred.sum()])

    gates, Cs, tanh_C = cache.gates, cache.C, cache.tanh_C
    dz = np.empty((T, 4 * H))
    dh_next = np.zeros(H)
    dC_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        a = gates[t]
        f, i, g, o = a[:H], a[H : 2 * H], a[2 * H : 3 * H], a[3 * H :]
        dh = d_pred[t] * v + dh_next
        dC = dC_next + dh * o * (1.0 - tanh_C[t] * tanh_C[t])
        row = dz[t]
        row[:H] = dC * Cs[t] * f * (1.0 - f)
        row[H : 2 * H] = dC * g * i * (1.0 - i)
        row[2 * H : 3 * H] = dC * i * (1.0 - g * g)
        row[3 * H :] = dh * tanh_C[t] * o * (1.0 - o)
        dC_next = dC * f
        dh_next = Wh.T @ row
    dW = np.concatenate([dz.T @ cache.h[:-1], dz.T @ cache.X], axis=1)
    return {"W": dW, "b": dz.sum(axis=0), "V": dV, "c": dc}


def clip_gradients(grads: dict, max_norm: float) -> dict:
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


def adam_step(model: LstmModel, grads: dict, state: AdamState) -> tuple[LstmModel, AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    params, m_new, v_new = {}, {}, {}
    for k in PARAM_NAMES:
        g = grads[k]
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * (g * g)
        params[k] = model.params[k] - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        m_new[k], v_new[k] = m, v
    return model.with_params(params), replace(state, m=m_new, v=v_new, t=t)


def _chunks(length: int, size: int) -> list[slice]:
    return [slice(s, min(s + size, length)) for s in range(0, length, size)]


def predict_normalized(model: LstmModel, X, seq_len: int) -> np.ndarray:
    """Outputs for consecutive chunks of ``seq_len`` rows, each from a zero state.

    Full chunks run together as one batch, which agrees with calling
    forward_sequence per chunk up to floating-point rounding.
    """
    X = np.asarray(X, dtype=np.float64)
    N = X.shape[0]
    out = np.empty(N)
    full = (N // seq_len) * seq_len
    if full:
        out[:full] = _forward_batch(model, X[:full].reshape(-1, seq_len, X.shape[1])).ravel()
    if full < N:
        out[full:] = forward_sequence(model, X[full:])[0]
    return out


def _forward_batch(model: LstmModel, X: np.ndarray) -> np.ndarray:
    B, T, _ = X.shape
    H = model.hidden_dim
    W, b = model.params["W"], model.params["b"]
    Wh, Wx = W[:, :H], W[:, H:]
    z = X @ Wx.T + b
    h = np.zeros((B, H))
    C = np.zeros((B, H))
    hs = np.empty((B, T, H))
    for t in range(T):
        zt = z[:, t] + h @ Wh.T
        f = sigmoid(zt[:, :H])
        i = sigmoid(zt[:, H : 2 * H])
        g = np.tanh(zt[:, 2 * H : 3 * H])
        o = sigmoid(zt[:, 3 * H :])
        C = f * C + i * g
        h = o * np.tanh(C)
        hs[:, t] = h
    return hs @ model.params["V"][0] + model.params["c"][0]


@dataclass(frozen=True)
class TrainedModel:
    model: LstmModel
    config: TrainConfig
    x_normalizer: Normalizer
    y_normalizer: Normalizer
    train_loss_curve: tuple[float, ...]
    test_loss_curve: tuple[float, ...]
    test_rmse: float
    n: int = 1
    mode: str = "block"
    columns: tuple[str, ...] = ()
    feature_layout: tuple[tuple[int, str], ...] = ()
    split_seed: int = 0
    test_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    test_pred: np.ndarray = field(default_factory=lambda: np.zeros(0))
    test_true: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "model": self.model.to_dict(),
            "config": asdict(self.config),
            "x_normalizer": self.x_normalizer.to_dict(),
            "y_normalizer": self.y_normalizer.to_dict(),
            "window": {"n": self.n, "mode": self.mode},
            "columns": list(self.columns),
            "feature_layout": [list(p) for p in self.feature_layout],
            "split_seed": self.split_seed,
            "train_loss_curve": list(self.train_loss_curve),
            "test_loss_curve": list(self.test_loss_curve),
            "test_rmse": self.test_rmse,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        if data.get("format") != FORMAT_NAME:
            raise DataError("not a serialized flowcast model")
        if data.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported model format version {data.get('version')}")
        return cls(
            model=LstmModel.from_dict(data["model"]),
            config=TrainConfig(**data["config"]),
            x_normalizer=Normalizer.from_dict(data["x_normalizer"]),
            y_normalizer=Normalizer.from_dict(data["y_normalizer"]),
            train_loss_curve=tuple(data["train_loss_curve"]),
            test_loss_curve=tuple(data["test_loss_curve"]),
            test_rmse=data["test_rmse"],
            n=data["window"]["n"],
            mode=data["window"]["mode"],
            columns=tuple(data["columns"]),
            feature_layout=tuple((int(o), str(c)) for o, c in data["feature_layout"]),
            split_seed=data["split_seed"],
        )


def save_model(trained: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(trained.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> TrainedModel:
    return TrainedModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _rmse(pred, truth) -> float:
    diff = pred - truth
    return math.sqrt(float(np.mean(diff * diff)))


def train(
    data: SupervisedSet,
    config: TrainConfig = TrainConfig(),
    seed: int | None = None,
    split_seed: int | None = None,
    columns=(),
) -> TrainedModel:
    """Holdout-split ``data``, fit on the training part, score the rest.

    ``seed`` drives initialization and chunk shuffling; ``split_seed``
    (default: ``seed``) drives the train/test partition. Features and target
    are min-max scaled with training-part statistics; reported losses are
    RMSE in original target units.
    """
    if len(data) == 0:
        raise DataError("cannot train on an empty set")
    seed = config.seed if seed is None else seed
    split_seed = seed if split_seed is None else split_seed
    config = replace(config, seed=seed)
    train_set, test_set = holdout_split(data, SplitSpec(config.train_fraction, split_seed))

    x_norm = Normalizer.fit(train_set.X)
    y_norm = Normalizer.fit(train_set.y)
    Xtr, ytr = x_norm.apply(train_set.X), y_norm.apply(train_set.y[:, None])[:, 0]
    Xte = x_norm.apply(test_set.X)

    model = init_network(config, data.n_features, seed)
    adam = AdamState.for_model(model, config)
    shuffle_rng = np.random.default_rng([seed, 1])
    chunks = _chunks(len(train_set), config.seq_len)
    scale = float(y_norm.span[0])

    train_curve, test_curve = [], []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(chunks)) if config.shuffle else range(len(chunks))
        sse = 0.0
        for k in order:
            sl = chunks[k]
            pred, cache = forward_sequence(model, Xtr[sl])
            loss = sequence_loss(pred, ytr[sl])
            if not math.isfinite(loss):
                raise DivergenceError(epoch)
            sse += loss * (sl.stop - sl.start)
            grads = backward(cache, ytr[sl])
            if config.clip_norm is not None:
                grads = clip_gradients(grads, config.clip_norm)
            model, adam = adam_step(model, grads, adam)
        train_curve.append(math.sqrt(sse / len(train_set)) * scale)
        test_pred = y_norm.invert(predict_normalized(model, Xte, config.seq_len)[:, None])[:, 0]
        test_rmse = _rmse(test_pred, test_set.y)
        if not math.isfinite(test_rmse):
            raise DivergenceError(epoch)
        test_curve.append(test_rmse)

    return TrainedModel(
        model=model,
        config=config,
        x_normalizer=x_norm,
        y_normalizer=y_norm,
        train_loss_curve=tuple(train_curve),
        test_loss_curve=tuple(test_curve),
        test_rmse=test_curve[-1],
        n=data.n,
        mode=data.mode,
        columns=tuple(columns),
        feature_layout=data.feature_layout,
        split_seed=split_seed,
        test_index=test_set.index.copy(),
        test_pred=test_pred,
        test_true=test_set.y.copy(),
    )


def predict(trained: TrainedModel, data: SupervisedSet) -> np.ndarray:
    """Predictions in original units, one per row, chunked like training."""
    if data.n_features != trained.model.input_dim:
        raise DataError(
            f"model expects {trained.model.input_dim} features, set has {data.n_features}"
        )
    out = predict_normalized(trained.model, trained.x_normalizer.apply(data.X), trained.config.seq_len)
    return trained.y_normalizer.invert(out[:, None])[:, 0]

"""Baseline trend classifier: a from-scratch numpy MLP.

The default architecture flattens an h x 4L observation window into a
single vector, applies one LeakyReLU hidden layer of 256 units and a
3-way softmax head; at h=100, L=10 that is 1,024,771 trainable
parameters. Training minimizes softmax cross-entropy with mini-batch
Adam/SGD/RMSprop, shuffles per epoch from a seeded generator, and keeps
the weights of the epoch with the best validation macro-F1.

Matrix products go through BLAS; a hand-written numba loop cannot beat
sgemm here, so this module has no jit lane on purpose.

External deep models exchange predictions through a small CSV format
(see write_predictions) keyed by sample index, one file per
(model, horizon, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DimensionMismatch,
    DuplicateIndex,
    MissingHeader,
    NonFiniteLoss,
    RowProbabilityInvalid,
)

LEAKY_SLOPE = 0.01
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
RMSPROP_RHO = 0.99

SIMPLEX_TOL = 1e-6

OPTIMIZERS = ("adam", "sgd", "rmsprop")
ACTIVATIONS = ("leaky_relu", "relu")


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden: tuple[int, ...] = (256,)
    activation: str = "leaky_relu"
    output_dim: int = 3

    def __post_init__(self):
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be positive, got {self.input_dim}")
        if not self.hidden:
            raise ConfigError("need at least one hidden layer")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if self.output_dim != 3:
            raise ConfigError("trend classifier output is 3-way")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 64
    epochs: int = 100
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch size and epochs must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")


@dataclass
class PredictionSet:
    """Per-sample class probability triplets for one (model, horizon, seed)."""

    model_id: str
    horizon: int
    seed: int
    probs: np.ndarray  # (n, 3): p_up, p_stationary, p_down
    indices: np.ndarray  # (n,) sample indices within the target split
    dataset_hash: str = ""

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.probs.ndim != 2 or self.probs.shape[1] != 3:
            raise DataError(f"probs must be (n, 3), got {self.probs.shape}")
        if len(self.probs) != len(self.indices):
            raise DataError("probs and indices length mismatch")
        validate_simplex(self.probs)

    def argmax(self) -> np.ndarray:
        return self.probs.argmax(axis=1).astype(np.int8)

    def __len__(self) -> int:
        return len(self.probs)


def validate_simplex(probs: np.ndarray, tol: float = SIMPLEX_TOL) -> None:
    probs = np.asarray(probs)
    if probs.size == 0:
        return
    if probs.min() < -tol:
        raise RowProbabilityInvalid(f"negative probability {probs.min()}")
    sums = probs.sum(axis=1)
    worst = np.abs(sums - 1.0).max()
    if worst > tol:
        bad = int(np.abs(sums - 1.0).argmax())
        raise RowProbabilityInvalid(f"row {bad} sums to {sums[bad]}, off by {worst}")


class MlpModel:
    """Weights plus forward pass; immutable by convention once trained."""

    def __init__(self, config: MlpConfig, weights, biases, dtype=np.float32):
        self.config = config
        self.weights = weights
        self.biases = biases
        self.dtype = dtype

    def param_count(self) -> int:
        return int(sum(w.size for w in self.weights) + sum(b.size for b in self.biases))

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.config,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.dtype,
        )

    def _activate(self, z: np.ndarray) -> np.ndarray:
        if self.config.activation == "relu":
            return np.maximum(z, 0)
        return np.where(z > 0, z, LEAKY_SLOPE * z)

    def _activate_grad(self, z: np.ndarray) -> np.ndarray:
        if self.config.activation == "relu":
            return (z > 0).astype(z.dtype)
        return np.where(z > 0, z.dtype.type(1.0), z.dtype.type(LEAKY_SLOPE))

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits for a (n, input_dim) batch."""
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = self._activate(a @ w + b)
        return a @ self.weights[-1] + self.biases[-1]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.forward(x))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def init_mlp(config: MlpConfig, seed: int, dtype=np.float32) -> MlpModel:
    """Fan-in-scaled uniform init, deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    dims = (config.input_dim,) + tuple(config.hidden) + (config.output_dim,)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
        biases.append(rng.uniform(-bound, bound, size=fan_out).astype(dtype))
    return MlpModel(config, weights, biases, dtype)


def _flatten_obs(observations: np.ndarray) -> np.ndarray:
    obs = np.asarray(observations)
    if obs.ndim == 3:
        obs = obs.reshape(len(obs), -1)
    elif obs.ndim != 2:
        raise DimensionMismatch(f"observations must be 2-d or 3-d, got shape {obs.shape}")
    return obs


def loss_and_grads(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch and gradients for every parameter."""
    acts = [x]
    zs = []
    a = x
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ w + b
        zs.append(z)
        a = model._activate(z)
        acts.append(a)
    logits = a @ model.weights[-1] + model.biases[-1]

    shifted = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1))
    n = len(x)
    loss = float(np.mean(logsumexp - shifted[np.arange(n), y]))

    probs = softmax(logits)
    dz = probs
    dz[np.arange(n), y] -= 1.0
    dz /= n

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ dz
        grads_b[layer] = dz.sum(axis=0)
        if layer > 0:
            dz = (dz @ model.weights[layer].T) * model._activate_grad(zs[layer - 1])
    return loss, grads_w, grads_b


class _Optimizer:
    def __init__(self, cfg: TrainConfig, params: list[np.ndarray]):
        self.cfg = cfg
        self.t = 0
        if cfg.optimizer == "adam":
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        elif cfg.optimizer == "rmsprop":
            self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        lr = self.cfg.learning_rate
        if self.cfg.optimizer == "sgd":
            for p, g in zip(params, grads):
                p -= lr * g
            return
        if self.cfg.optimizer == "rmsprop":
            for p, g, v in zip(params, grads, self.v):
                v *= RMSPROP_RHO
                v += (1 - RMSPROP_RHO) * g * g
                p -= lr * g / (np.sqrt(v) + ADAM_EPS)
            return
        self.t += 1
        c1 = 1 - ADAM_BETA1**self.t
        c2 = 1 - ADAM_BETA2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1 - ADAM_BETA2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def _macro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Unweighted 3-class macro F1 with the zero-denominator-is-zero rule."""
    f1s = []
    for c in range(3):
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(f1s))


def train(model: MlpModel, bundle, cfg: TrainConfig):
    """Train on bundle's train split, checkpoint on val macro-F1.

    Returns (best_model, history) where history has per-epoch
    ``train_loss`` and ``val_f1`` lists plus the best epoch index.
    Raises NonFiniteLoss with the offending epoch/batch on divergence.
    """
    x_tr = _flatten_obs(bundle.windows["train"]).astype(model.dtype, copy=False)
    y_tr = np.asarray(bundle.labels["train"], dtype=np.int64)
    x_va = _flatten_obs(bundle.windows["val"]).astype(model.dtype, copy=False)
    y_va = np.asarray(bundle.labels["val"], dtype=np.int64)
    if len(x_tr) == 0 or len(x_va) == 0:
        raise DataError("train and val splits must be non-empty")
    if x_tr.shape[1] != model.config.input_dim:
        raise DimensionMismatch(
            f"observations are {x_tr.shape[1]}-wide, model expects {model.config.input_dim}"
        )

    model = model.copy()
    params = model.weights + model.biases
    opt = _Optimizer(cfg, params)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5F1E]))

    history = {"train_loss": [], "val_f1": [], "best_epoch": -1}
    best_f1 = -1.0
    best = model.copy()
    n = len(x_tr)
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            sel = order[start : start + cfg.batch_size]
            loss, gw, gb = loss_and_grads(model, x_tr[sel], y_tr[sel])
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch, bi)
            total += loss * len(sel)
            opt.step(params, gw + gb)
        history["train_loss"].append(total / n)

        val_pred = _predict_classes(model, x_va)
        f1 = _macro_f1(y_va, val_pred)
        history["val_f1"].append(f1)
        if f1 > best_f1:
            best_f1 = f1
            best = model.copy()
            history["best_epoch"] = epoch
    return best, history


def _predict_classes(model: MlpModel, x: np.ndarray, chunk: int = 8192) -> np.ndarray:
    out = np.empty(len(x), dtype=np.int8)
    for start in range(0, len(x), chunk):
        out[start : start + chunk] = model.forward(x[start : start + chunk]).argmax(axis=1)
    return out


def predict(
    model: MlpModel,
    observations: np.ndarray,
    model_id: str = "MLP",
    horizon: int = 0,
    seed: int = 0,
    dataset_hash: str = "",
    chunk: int = 8192,
) -> PredictionSet:
    """Softmax probabilities for every observation, in input order."""
    x = _flatten_obs(observations).astype(model.dtype, copy=False)
    if x.shape[1] != model.config.input_dim:
        raise DimensionMismatch(
            f"observations are {x.shape[1]}-wide, model expects {model.config.input_dim}"
        )
    probs = np.empty((len(x), 3), dtype=np.float64)
    for start in range(0, len(x), chunk):
        probs[start : start + chunk] = model.predict_proba(x[start : start + chunk])
    return PredictionSet(
        model_id=model_id,
        horizon=horizon,
        seed=seed,
        probs=probs,
        indices=np.arange(len(x)),
        dataset_hash=dataset_hash,
    )


@dataclass
class GridCell:
    learning_rate: float
    batch_size: int
    val_f1: float
    diverged: bool
    history: dict = field(repr=False, default_factory=dict)


def grid_search(
    bundle,
    learning_rates,
    batch_sizes,
    mlp_config: MlpConfig,
    base: TrainConfig = TrainConfig(),
) -> list[GridCell]:
    """One training run per (lr, batch) cell, ranked by validation macro-F1.

    Cells that diverge are kept in the table (val_f1 = nan, flagged) and
    never abort the sweep. All cells share the base seed.
    """
    if not list(learning_rates) or not list(batch_sizes):
        raise ConfigError("learning-rate and batch-size grids must be non-empty")
    cells = []
    for lr in learning_rates:
        for bs in batch_sizes:
            cfg = replace(base, learning_rate=lr, batch_size=bs)
            model = init_mlp(mlp_config, cfg.seed)
            try:
                _, hist = train(model, bundle, cfg)
                cells.append(GridCell(lr, bs, max(hist["val_f1"]), False, hist))
            except NonFiniteLoss:
                cells.append(GridCell(lr, bs, float("nan"), True))
    cells.sort(key=lambda c: (-(c.val_f1 if not c.diverged else -np.inf), c.learning_rate, c.batch_size))
    return cells


def save_model(model: MlpModel, path) -> None:
    """Persist weights plus config as a compressed npz archive."""
    import json

    arrays = {f"w{i}": w for i, w in enumerate(model.weights)}
    arrays.update({f"b{i}": b for i, b in enumerate(model.biases)})
    arrays["config"] = np.frombuffer(
        json.dumps(
            {
                "input_dim": model.config.input_dim,
                "hidden": list(model.config.hidden),
                "activation": model.config.activation,
                "output_dim": model.config.output_dim,
                "dtype": np.dtype(model.dtype).name,
            }
        ).encode(),
        dtype=np.uint8,
    )
    np.savez_compressed(path, **arrays)


def load_model(path) -> MlpModel:
    import json

    with np.load(path) as data:
        meta = json.loads(bytes(data["config"]).decode())
        cfg = MlpConfig(
            input_dim=meta["input_dim"],
            hidden=tuple(meta["hidden"]),
            activation=meta["activation"],
            output_dim=meta["output_dim"],
        )
        n_layers = len(cfg.hidden) + 1
        weights = [data[f"w{i}"] for i in range(n_layers)]
        biases = [data[f"b{i}"] for i in range(n_layers)]
    return MlpModel(cfg, weights, biases, dtype=np.dtype(meta["dtype"]).type)


# ---------------------------------------------------------------------------
# prediction file interchange
# ---------------------------------------------------------------------------

_HEADER = "index,p_up,p_stationary,p_down"


def write_predictions(pset: PredictionSet, path) -> None:
    """CSV with metadata comments; rows sorted by index, 9 sig digits."""
    order = np.argsort(pset.indices, kind="stable")
    with open(path, "w") as fh:
        fh.write(f"# model={pset.model_id}\n")
        fh.write(f"# horizon={pset.horizon}\n")
        fh.write(f"# seed={pset.seed}\n")
        fh.write(f"# dataset_hash={pset.dataset_hash}\n")
        fh.write(_HEADER + "\n")
        for i in order:
            p = pset.probs[i]
            fh.write(f"{pset.indices[i]},{p[0]:.9g},{p[1]:.9g},{p[2]:.9g}\n")


def read_predictions(path) -> PredictionSet:
    """Parse and validate a prediction CSV; rows are re-sorted by index."""
    meta = {"model": "", "horizon": "0", "seed": "0", "dataset_hash": ""}
    rows = []
    seen_header = False
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
                continue
            if not seen_header:
                if line.replace(" ", "") != _HEADER:
                    raise MissingHeader(f"expected '{_HEADER}' before data, got {line!r}")
                seen_header = True
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DataError(f"line {ln}: expected 4 fields, got {len(parts)}")
            rows.append(
                (int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]))
            )
    if not seen_header:
        raise MissingHeader("file has no header row")
    if not rows:
        raise DataError("prediction file has no rows")
    idx = np.array([r[0] for r in rows], dtype=np.int64)
    if len(np.unique(idx)) != len(idx):
        dup = idx[np.argmax(np.bincount(idx - idx.min()) > 1)]
        raise DuplicateIndex(f"sample index repeated (e.g. around {dup})")
    probs = np.array([r[1:] for r in rows], dtype=np.float64)
    validate_simplex(probs)
    order = np.argsort(idx, kind="stable")
    return PredictionSet(
        model_id=meta.get("model", ""),
        horizon=int(meta.get("horizon", "0") or 0),
        seed=int(meta.get("seed", "0") or 0),
        probs=probs[order],
        indices=idx[order],
        dataset_hash=meta.get("dataset_hash", ""),
    )

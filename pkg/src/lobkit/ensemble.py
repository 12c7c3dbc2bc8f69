"""Prediction aggregators: weighted majority voting and a trained meta-MLP.

Majority voting weights each model's argmax vote by its F1 score and
emits the winning class as a degenerate probability triplet; score ties
resolve by the fixed priority S > U > D (bias toward no-trade). The
meta-classifier concatenates every model's probability triplet into a
3M-wide feature row and trains a small two-layer MLP on a chronological
70/15/15 split of the supplied samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import DatasetBundle
from .errors import ConfigError, DataError, MisalignedSets
from .predictor import (
    MlpConfig,
    PredictionSet,
    TrainConfig,
    init_mlp,
    predict,
    train,
)

# argmax preference when weighted votes tie: stationary, then up, then down
_TIE_PRIORITY = (1, 0, 2)

METALOB_TRAIN = TrainConfig(learning_rate=1e-4, batch_size=64, epochs=100, optimizer="sgd")


@dataclass
class EnsembleInput:
    """Aligned prediction sets plus per-model weights (typically F1)."""

    sets: list[PredictionSet]
    weights: np.ndarray

    def __post_init__(self):
        if not self.sets:
            raise DataError("ensemble needs at least one prediction set")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.weights) != len(self.sets):
            raise DataError("one weight per model required")
        if np.any(self.weights < 0) or not np.any(self.weights > 0):
            raise ConfigError("weights must be non-negative and not all zero")
        ref = self.sets[0]
        for s in self.sets[1:]:
            if len(s) != len(ref) or not np.array_equal(s.indices, ref.indices):
                raise MisalignedSets(
                    f"{s.model_id} covers different samples than {ref.model_id}"
                )

    @property
    def n_models(self) -> int:
        return len(self.sets)

    def __len__(self) -> int:
        return len(self.sets[0])


def majority_vote(inp: EnsembleInput) -> PredictionSet:
    """F1-weighted vote tally; winner emitted as a one-hot triplet."""
    n = len(inp)
    scores = np.zeros((n, 3), dtype=np.float64)
    for s, w in zip(inp.sets, inp.weights):
        votes = s.argmax()
        for c in range(3):
            scores[votes == c, c] += w
    # evaluate classes in tie priority order; argmax keeps the first max
    prio = np.array(_TIE_PRIORITY)
    winner = prio[scores[:, prio].argmax(axis=1)]
    probs = np.zeros((n, 3), dtype=np.float64)
    probs[np.arange(n), winner] = 1.0
    ref = inp.sets[0]
    return PredictionSet(
        model_id="MAJORITY",
        horizon=ref.horizon,
        seed=ref.seed,
        probs=probs,
        indices=ref.indices.copy(),
        dataset_hash=ref.dataset_hash,
    )


def build_meta_features(inp: EnsembleInput) -> np.ndarray:
    """(n, 3M) concatenation of probability triplets in model order."""
    return np.concatenate([s.probs for s in inp.sets], axis=1)


@dataclass
class MetaResult:
    model: object
    predictions: PredictionSet  # on the held-out 15% tail
    test_labels: np.ndarray
    split_sizes: tuple[int, int, int]
    history: dict = field(repr=False, default_factory=dict)


def train_metalob(
    inp: EnsembleInput,
    labels: np.ndarray,
    hidden: int = 64,
    train_config: TrainConfig = METALOB_TRAIN,
    seed: int = 0,
) -> MetaResult:
    """Fit the meta-MLP on a chronological 70/15/15 split of the samples.

    ``labels`` must align with the ensemble's sample indices. Returns
    the meta model plus its predictions on the held-out tail.
    """
    labels = np.asarray(labels, dtype=np.int8)
    if len(labels) != len(inp):
        raise MisalignedSets(
            f"{len(labels)} labels for {len(inp)} ensemble samples"
        )
    feats = build_meta_features(inp).astype(np.float32)
    n = len(feats)
    n_train = int(n * 0.70)
    n_val = int(n * 0.15)
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise DataError(f"{n} samples cannot form a 70/15/15 split")

    bundle = DatasetBundle(
        windows={
            "train": feats[:n_train],
            "val": feats[n_train : n_train + n_val],
            "test": feats[n_train + n_val :],
        },
        labels={
            "train": labels[:n_train],
            "val": labels[n_train : n_train + n_val],
            "test": labels[n_train + n_val :],
        },
        segments={s: [] for s in ("train", "val", "test")},
    )
    cfg = MlpConfig(input_dim=3 * inp.n_models, hidden=(hidden,))
    model = init_mlp(cfg, seed)
    trained, history = train(model, bundle, TrainConfig(
        learning_rate=train_config.learning_rate,
        batch_size=train_config.batch_size,
        epochs=train_config.epochs,
        optimizer=train_config.optimizer,
        seed=seed,
    ))

    ref = inp.sets[0]
    pset = predict(
        trained,
        feats[n_train + n_val :],
        model_id="METALOB",
        horizon=ref.horizon,
        seed=seed,
        dataset_hash=ref.dataset_hash,
    )
    pset.indices = ref.indices[n_train + n_val :].copy()
    return MetaResult(
        model=trained,
        predictions=pset,
        test_labels=labels[n_train + n_val :],
        split_sizes=(n_train, n_val, n_test),
        history=history,
    )

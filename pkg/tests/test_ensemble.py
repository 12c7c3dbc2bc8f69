"""Aggregators: weighted voting and the trained meta-classifier."""

import numpy as np
import pytest

from lobkit.ensemble import EnsembleInput, build_meta_features, majority_vote, train_metalob
from lobkit.errors import ConfigError, MisalignedSets
from lobkit.predictor import PredictionSet


def one_hot_set(classes, model_id="m", horizon=5, seed=0):
    classes = np.asarray(classes, dtype=np.int64)
    probs = np.zeros((len(classes), 3))
    probs[np.arange(len(classes)), classes] = 1.0
    return PredictionSet(model_id, horizon, seed, probs, np.arange(len(classes)))


def test_plain_majority():
    sets = [one_hot_set([0]), one_hot_set([0]), one_hot_set([2])]
    out = majority_vote(EnsembleInput(sets, np.ones(3)))
    assert out.argmax().tolist() == [0]
    assert out.model_id == "MAJORITY"


def test_weighted_majority():
    # weights {0.9 on D; 0.3, 0.3 on U} -> D wins (0.9 > 0.6)
    sets = [one_hot_set([2]), one_hot_set([0]), one_hot_set([0])]
    out = majority_vote(EnsembleInput(sets, np.array([0.9, 0.3, 0.3])))
    assert out.argmax().tolist() == [2]


def test_tie_break_priority_s_u_d():
    sets = [one_hot_set([0]), one_hot_set([1])]
    out = majority_vote(EnsembleInput(sets, np.ones(2)))
    assert out.argmax().tolist() == [1]  # S beats U on ties
    sets = [one_hot_set([0]), one_hot_set([2])]
    out = majority_vote(EnsembleInput(sets, np.ones(2)))
    assert out.argmax().tolist() == [0]  # U beats D on ties


def test_majority_matches_brute_force(rng):
    n, m = 1000, 15
    votes = rng.integers(0, 3, size=(m, n))
    weights = rng.uniform(0.1, 1.0, size=m)
    sets = [one_hot_set(votes[j], model_id=f"m{j}") for j in range(m)]
    out = majority_vote(EnsembleInput(sets, weights)).argmax()
    prio = {1: 2, 0: 1, 2: 0}  # S > U > D
    for i in range(n):
        tally = [0.0, 0.0, 0.0]
        for j in range(m):
            tally[votes[j, i]] += weights[j]
        best = max(range(3), key=lambda c: (tally[c], prio[c]))
        assert out[i] == best, f"sample {i}"


def test_unanimity(rng):
    n, m = 500, 7
    classes = rng.integers(0, 3, size=n)
    sets = [one_hot_set(classes, model_id=f"m{j}") for j in range(m)]
    weights = rng.uniform(0.01, 5.0, size=m)
    out = majority_vote(EnsembleInput(sets, weights))
    assert np.array_equal(out.argmax(), classes)


def test_weight_scale_invariance(rng):
    n, m = 400, 9
    votes = rng.integers(0, 3, size=(m, n))
    weights = rng.uniform(0.1, 1.0, size=m)
    sets = [one_hot_set(votes[j], model_id=f"m{j}") for j in range(m)]
    a = majority_vote(EnsembleInput(sets, weights)).argmax()
    b = majority_vote(EnsembleInput(sets, weights * 37.5)).argmax()
    assert np.array_equal(a, b)


def test_misaligned_sets_rejected():
    a = one_hot_set([0, 1])
    b = PredictionSet("b", 5, 0, np.array([[1.0, 0, 0]]), np.array([5]))
    with pytest.raises(MisalignedSets):
        EnsembleInput([a, b], np.ones(2))


def test_weights_validation():
    a = one_hot_set([0, 1])
    b = one_hot_set([1, 2])
    with pytest.raises(ConfigError):
        EnsembleInput([a, b], np.zeros(2))
    with pytest.raises(ConfigError):
        EnsembleInput([a, b], np.array([-1.0, 2.0]))


def test_meta_features_layout():
    a = one_hot_set([0])
    b = one_hot_set([1])
    feats = build_meta_features(EnsembleInput([a, b], np.ones(2)))
    assert feats.tolist() == [[1, 0, 0, 0, 1, 0]]


def test_meta_features_width_and_blocks(rng):
    m, n = 15, 40
    sets = []
    for j in range(m):
        raw = rng.uniform(0.1, 1, size=(n, 3))
        sets.append(
            PredictionSet(f"m{j}", 5, 0, raw / raw.sum(1, keepdims=True), np.arange(n))
        )
    feats = build_meta_features(EnsembleInput(sets, np.ones(m)))
    assert feats.shape == (n, 45)
    for j in range(m):
        assert np.allclose(feats[:, 3 * j : 3 * j + 3].sum(axis=1), 1.0, atol=1e-6)
    # permuting model order permutes feature blocks
    perm = list(reversed(range(m)))
    feats_p = build_meta_features(EnsembleInput([sets[j] for j in perm], np.ones(m)))
    for new_pos, old_pos in enumerate(perm):
        assert np.array_equal(
            feats_p[:, 3 * new_pos : 3 * new_pos + 3],
            feats[:, 3 * old_pos : 3 * old_pos + 3],
        )


def test_metalob_split_sizes(rng):
    n = 100
    labels = rng.integers(0, 3, size=n).astype(np.int8)
    sets = [one_hot_set(labels), one_hot_set(rng.integers(0, 3, size=n))]
    result = train_metalob(EnsembleInput(sets, np.ones(2)), labels)
    assert result.split_sizes == (70, 15, 15)


def test_metalob_learns_to_copy_oracle(rng):
    # the pinned conservative meta hyperparameters (SGD, lr 1e-4) need a
    # realistically sized sample pool to move the weights
    from lobkit.metrics import macro_f1

    n = 20_000
    labels = rng.integers(0, 3, size=n).astype(np.int8)
    oracle = one_hot_set(labels, model_id="oracle")
    noise1 = one_hot_set(rng.integers(0, 3, size=n), model_id="n1")
    noise2 = one_hot_set(rng.integers(0, 3, size=n), model_id="n2")
    result = train_metalob(
        EnsembleInput([oracle, noise1, noise2], np.array([1.0, 0.3, 0.3])),
        labels,
        seed=0,
    )
    meta_f1 = macro_f1(result.predictions, result.test_labels)
    assert meta_f1 >= 1.0 - 0.02  # within 2 points of the perfect oracle


def test_metalob_redundant_models(rng):
    from lobkit.metrics import macro_f1

    n = 20_000
    labels = rng.integers(0, 3, size=n).astype(np.int8)
    noisy = labels.copy()
    flip = rng.random(n) < 0.4
    noisy[flip] = rng.integers(0, 3, size=int(flip.sum()))
    base = one_hot_set(noisy, model_id="base")
    sets = [
        PredictionSet(f"m{j}", 5, 0, base.probs.copy(), base.indices.copy())
        for j in range(3)
    ]
    result = train_metalob(EnsembleInput(sets, np.ones(3)), labels, seed=0)
    meta_f1 = macro_f1(result.predictions, result.test_labels)
    base_f1 = macro_f1(base.argmax()[-result.split_sizes[2] :], result.test_labels)
    assert abs(meta_f1 - base_f1) <= 0.01

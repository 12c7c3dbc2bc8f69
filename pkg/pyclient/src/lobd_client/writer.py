"""Prediction CSV writer, byte-compatible with the evaluation pipeline."""

from __future__ import annotations

import numpy as np

from .errors import InvalidSimplexRow

SIMPLEX_TOL = 1e-6
_HEADER = "index,p_up,p_stationary,p_down"


def save_predictions(
    probabilities: np.ndarray,
    metadata: dict,
    path,
    indices: np.ndarray | None = None,
) -> None:
    """Write per-sample probability triplets as a prediction CSV.

    ``metadata`` may carry model, horizon, seed, and dataset_hash; rows
    are written sorted by index with 9 significant digits. Raises
    InvalidSimplexRow when any triplet is negative or does not sum to 1
    within 1e-6.
    """
    probs = np.asarray(probabilities, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != 3:
        raise InvalidSimplexRow(f"expected (n, 3) probabilities, got {probs.shape}")
    if probs.size and probs.min() < -SIMPLEX_TOL:
        raise InvalidSimplexRow(f"negative probability {probs.min()}")
    sums = probs.sum(axis=1)
    if probs.size and np.abs(sums - 1.0).max() > SIMPLEX_TOL:
        bad = int(np.abs(sums - 1.0).argmax())
        raise InvalidSimplexRow(f"row {bad} sums to {sums[bad]}")

    idx = np.arange(len(probs)) if indices is None else np.asarray(indices, dtype=np.int64)
    order = np.argsort(idx, kind="stable")
    with open(path, "w") as fh:
        fh.write(f"# model={metadata.get('model', '')}\n")
        fh.write(f"# horizon={metadata.get('horizon', 0)}\n")
        fh.write(f"# seed={metadata.get('seed', 0)}\n")
        fh.write(f"# dataset_hash={metadata.get('dataset_hash', '')}\n")
        fh.write(_HEADER + "\n")
        for i in order:
            p = probs[i]
            fh.write(f"{idx[i]},{p[0]:.9g},{p[1]:.9g},{p[2]:.9g}\n")

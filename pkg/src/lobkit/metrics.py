"""Classification metrics, agreement matrices, and the reliability score.

Macro metrics are unweighted means over the three classes, with the
0-for-0/0 convention on empty denominators (degenerate classes are
flagged rather than crashing evaluation). The reliability score
summarizes how far observed F1 lands from a model's claimed F1:

    score = 100 - (|A| + S)

where A is the mean and S the population standard deviation of
(observed - claimed) differences in percentage points, taken over the
model's declared horizons and every seed. The same formula serves both
robustness (benchmark reference) and generalizability (unseen-market
reference) reporting.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, MisalignedSets, NoDeclaredHorizons


def _classes_of(preds) -> np.ndarray:
    """Accept a PredictionSet-like (argmax method) or a class array."""
    if hasattr(preds, "argmax") and not isinstance(preds, np.ndarray):
        return np.asarray(preds.argmax(), dtype=np.int64)
    arr = np.asarray(preds)
    if arr.ndim == 2:
        return arr.argmax(axis=1).astype(np.int64)
    return arr.astype(np.int64)


def confusion(preds, labels) -> np.ndarray:
    """3x3 count matrix: rows = true class, cols = predicted class."""
    y_pred = _classes_of(preds)
    y_true = np.asarray(labels, dtype=np.int64)
    if len(y_pred) != len(y_true):
        raise MisalignedSets(f"{len(y_pred)} predictions vs {len(y_true)} labels")
    cm = np.zeros((3, 3), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def macro_metrics(cm: np.ndarray) -> dict:
    """Accuracy plus macro precision/recall/F1 from a confusion matrix."""
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix has no counts")
    tp = np.diag(cm).astype(np.float64)
    pred_per_class = cm.sum(axis=0).astype(np.float64)
    true_per_class = cm.sum(axis=1).astype(np.float64)

    degenerate = []
    precision = np.zeros(3)
    recall = np.zeros(3)
    f1 = np.zeros(3)
    for c in range(3):
        if pred_per_class[c] > 0:
            precision[c] = tp[c] / pred_per_class[c]
        else:
            degenerate.append(c)
        if true_per_class[c] > 0:
            recall[c] = tp[c] / true_per_class[c]
        elif c not in degenerate:
            degenerate.append(c)
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])

    return {
        "accuracy": float(tp.sum() / total),
        "macro_precision": float(precision.mean()),
        "macro_recall": float(recall.mean()),
        "macro_f1": float(f1.mean()),
        "per_class": {
            "precision": precision.tolist(),
            "recall": recall.tolist(),
            "f1": f1.tolist(),
        },
        "degenerate_classes": sorted(degenerate),
        "total": total,
    }


def macro_f1(preds, labels) -> float:
    return macro_metrics(confusion(preds, labels))["macro_f1"]


def agreement_matrix(sets: list) -> np.ndarray:
    """Pairwise fraction of samples where two models emit the same class."""
    if not sets:
        raise MisalignedSets("no prediction sets")
    classes = [_classes_of(s) for s in sets]
    n = len(classes[0])
    for s, c in zip(sets, classes):
        if len(c) != n:
            raise MisalignedSets("prediction sets cover different sample counts")
    m = len(classes)
    out = np.ones((m, m), dtype=np.float64)
    for i in range(m):
        for j in range(i + 1, m):
            frac = float(np.mean(classes[i] == classes[j]))
            out[i, j] = out[j, i] = frac
    return out


@dataclass(frozen=True)
class ScoreInputs:
    """claimed: horizon -> claimed F1 (pp); observed: (horizon, seed) -> F1."""

    claimed: dict[int, float]
    observed: dict[tuple[int, int], float]

    def __post_init__(self):
        observed_horizons = {k for k, _ in self.observed}
        missing = set(self.claimed) - observed_horizons
        if missing:
            raise MisalignedSets(f"no observations for declared horizons {sorted(missing)}")
        if self.claimed and not self.observed:
            raise MisalignedSets("no observed cells")


def reliability_score(inputs: ScoreInputs) -> float:
    """100 - (|mean| + population std) of observed-minus-claimed F1.

    Differences are taken over declared horizons only, across every seed
    observed for those horizons; <= 100 always, with equality iff every
    observation matches its claim exactly.
    """
    if not inputs.claimed:
        raise NoDeclaredHorizons("model declares no horizons")
    diffs = [
        f1 - inputs.claimed[k]
        for (k, _seed), f1 in sorted(inputs.observed.items())
        if k in inputs.claimed
    ]
    d = np.asarray(diffs, dtype=np.float64)
    a = float(d.mean())
    s = float(d.std())  # population (divide-by-N)
    return 100.0 - (abs(a) + s)


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def score_table(per_model: dict[str, dict]) -> list[dict]:
    """Assemble rows shaped like the headline results table.

    per_model maps model id to {"observed": {(k, seed): f1pp},
    "claimed": {k: f1pp} or {}}. Rank is by measured mean F1 descending;
    the score column stays blank for models without claims.
    """
    rows = []
    for model_id, entry in per_model.items():
        obs = entry["observed"]
        vals = np.array(sorted(obs.values()), dtype=np.float64) if obs else np.empty(0)
        claimed = entry.get("claimed") or {}
        row = {
            "model": model_id,
            "f1_claimed": (
                float(np.mean(sorted(claimed.values()))) if claimed else None
            ),
            "f1_measured": float(vals.mean()) if len(vals) else None,
            "f1_std": float(vals.std()) if len(vals) else None,
            "score": (
                reliability_score(ScoreInputs(claimed, obs)) if claimed else None
            ),
        }
        rows.append(row)
    measured = sorted(
        (r for r in rows if r["f1_measured"] is not None),
        key=lambda r: -r["f1_measured"],
    )
    for rank, row in enumerate(measured, start=1):
        row["rank"] = rank
    for row in rows:
        row.setdefault("rank", None)
    rows.sort(key=lambda r: (r["rank"] is None, r["rank"]))
    return rows


def write_report_json(rows: list[dict], path, extra: dict | None = None) -> None:
    payload = {"results": rows}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(rows: list[dict], path) -> None:
    """F1 columns in percentage points with one decimal."""
    cols = ("model", "f1_claimed", "f1_measured", "f1_std", "rank", "score")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow(
                [
                    row["model"],
                    *(
                        ("" if row[c] is None else f"{row[c]:.1f}")
                        for c in ("f1_claimed", "f1_measured", "f1_std")
                    ),
                    "" if row["rank"] is None else row["rank"],
                    "" if row["score"] is None else f"{row['score']:.1f}",
                ]
            )

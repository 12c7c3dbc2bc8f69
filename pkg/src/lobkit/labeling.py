"""Trend labelling from mid-price series.

A sample at index t is labelled by comparing the mean mid-price over
the next k sampled steps against a band of half-width theta around the
current mid: up when the future mean exceeds m(t)*(1+theta), down when
it falls below m(t)*(1-theta), stationary inside the closed band. The
horizon k counts sampled records (10-event steps under the default
pipeline stride), not raw events.

Samples with fewer than k future steps are dropped, never extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import (
    ConfigError,
    DegenerateSeries,
    EmptyInput,
    HorizonOutOfBounds,
    SeriesTooShort,
)

THETA_MIN = 1e-6
THETA_MAX = 0.05


class TrendLabel(IntEnum):
    U = 0
    S = 1
    D = 2


@dataclass(frozen=True)
class LabelParams:
    k: int
    theta: float

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"horizon k must be >= 1, got {self.k}")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must be in (0, 1), got {self.theta}")


def future_avg_mid(mids: np.ndarray, t: int, k: int) -> float:
    """Mean of the next k mids after t: (1/k) * sum of m(t+1..t+k)."""
    mids = np.asarray(mids, dtype=np.float64)
    if k < 1:
        raise ConfigError(f"horizon k must be >= 1, got {k}")
    if t < 0 or t + k > len(mids) - 1:
        raise HorizonOutOfBounds(
            f"need {k} samples after index {t}, series has {len(mids)}"
        )
    return float(np.mean(mids[t + 1 : t + k + 1]))


def label(mids: np.ndarray, t: int, params: LabelParams) -> TrendLabel:
    """Trend class at index t; the stationary band is a closed interval."""
    m = float(np.asarray(mids)[t])
    if m <= 0:
        raise ConfigError(f"mid at t={t} must be positive, got {m}")
    a = future_avg_mid(mids, t, params.k)
    if a > m * (1.0 + params.theta):
        return TrendLabel.U
    if a < m * (1.0 - params.theta):
        return TrendLabel.D
    return TrendLabel.S


def label_series(mids: np.ndarray, params: LabelParams) -> np.ndarray:
    """Labels for every index with a full horizon: t = 0 .. n-k-1.

    Vectorized via a prefix sum; matches :func:`label` index by index.
    Returns an empty array when the series is shorter than k+1.
    """
    mids = np.asarray(mids, dtype=np.float64)
    n = len(mids)
    k = params.k
    if n <= k:
        return np.empty(0, dtype=np.int8)
    s = np.concatenate(([0.0], np.cumsum(mids)))
    a = (s[k + 1 :] - s[1 : n - k + 1]) / k
    m = mids[: n - k]
    out = np.full(n - k, int(TrendLabel.S), dtype=np.int8)
    out[a > m * (1.0 + params.theta)] = int(TrendLabel.U)
    out[a < m * (1.0 - params.theta)] = int(TrendLabel.D)
    return out


def class_counts(labels: np.ndarray) -> np.ndarray:
    """Exact (U, S, D) counts."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptyInput("no labels")
    return np.bincount(labels.astype(np.int64), minlength=3)[:3]


def class_distribution(labels: np.ndarray) -> tuple[float, float, float]:
    """(U%, S%, D%) shares; they sum to 100 within float rounding."""
    counts = class_counts(labels)
    shares = counts / counts.sum() * 100.0
    return float(shares[0]), float(shares[1]), float(shares[2])


def balance_threshold(mids: np.ndarray, k: int) -> float:
    """Threshold minimizing class imbalance (max share - min share).

    The imbalance is piecewise-constant in theta with breakpoints at the
    observed |future-mean / mid - 1| ratios, so scanning those
    breakpoints inside (1e-6, 0.05) is an exact search; ties resolve to
    the smallest theta. Constant series raise DegenerateSeries since
    every threshold yields 100% stationary.
    """
    mids = np.asarray(mids, dtype=np.float64)
    n = len(mids)
    if n < 4 * k or n - k < 3:
        raise SeriesTooShort(f"need at least {4 * k} mids to balance k={k}, got {n}")
    s = np.concatenate(([0.0], np.cumsum(mids)))
    a = (s[k + 1 :] - s[1 : n - k + 1]) / k
    m = mids[: n - k]
    rho = a / m - 1.0

    if np.all(np.abs(rho) <= THETA_MIN):
        raise DegenerateSeries("mid series is flat: every threshold labels 100% S")

    inner = np.unique(np.abs(rho))
    candidates = np.concatenate(([THETA_MIN], inner[(inner > THETA_MIN) & (inner < THETA_MAX)]))
    rho_sorted = np.sort(rho)
    n_lab = len(rho)
    up = n_lab - np.searchsorted(rho_sorted, candidates, side="right")
    down = np.searchsorted(rho_sorted, -candidates, side="left")
    stat = n_lab - up - down
    shares = np.stack([up, stat, down]) * (100.0 / n_lab)
    imbalance = shares.max(axis=0) - shares.min(axis=0)
    return float(candidates[int(np.argmin(imbalance))])

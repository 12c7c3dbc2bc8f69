"""Model-ready dataset construction and the LOBD file format.

Pipeline per stock: replay each day, keep complete snapshots, sample at
the event stride, split whole days 6-2-2 (train/val/test), fit z-score
statistics on the union of train and validation records (prices and
volumes separately, population std), normalize every split with those
statistics, then cut h-row sliding windows labelled at their last row.
Windows and label horizons never cross a day boundary. Multi-stock
datasets are the per-split vertical stack of the per-stock bundles in
declared stock order, with origins kept for per-stock evaluation.

LOBD file layout (all little-endian):

    magic   "LOBD" (4 bytes)
    version u16
    m_len   u32, then m_len bytes of UTF-8 JSON metadata
    tensor  float32 (n, h, 4L) row-major, splits concatenated
            train | val | test (counts in metadata)
    labels  n bytes, 0=U 1=S 2=D
    crc     u32 CRC32C of every preceding byte

The format is deliberately trivial to parse from any language; the
reference client package reads it with no dependency on this one.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ._crc32c import crc32c
from .book import PRICE_SCALE, replay, sample_matrix
from .errors import (
    BadMagic,
    ChecksumMismatch,
    ConfigError,
    DataError,
    IncompatibleParams,
    InsufficientDays,
    SeriesTooShort,
    TruncatedPayload,
    VersionUnsupported,
    ZeroVariance,
)
from .ingest import DayStream, Fi2010Set
from .labeling import LabelParams, label_series

MAGIC = b"LOBD"
FORMAT_VERSION = 1
SPLITS = ("train", "val", "test")

LABEL_NAMES = ("U", "S", "D")


@dataclass(frozen=True)
class SplitSpec:
    """Ordered, disjoint day lists; train days precede val precede test."""

    train_days: tuple[str, ...]
    val_days: tuple[str, ...]
    test_days: tuple[str, ...]

    def __post_init__(self):
        all_days = list(self.train_days) + list(self.val_days) + list(self.test_days)
        if len(set(all_days)) != len(all_days):
            raise ConfigError("split day lists overlap")
        if all_days != sorted(all_days):
            raise ConfigError("split days must be chronological train < val < test")

    @property
    def total(self) -> int:
        return len(self.train_days) + len(self.val_days) + len(self.test_days)


def make_622(days: list[str]) -> SplitSpec:
    """6-2-2 whole-day split; proportional for more than ten days."""
    days = sorted(days)
    n = len(days)
    if n < 10:
        raise InsufficientDays(f"6-2-2 split needs >= 10 days, got {n}")
    n_val = round(0.2 * n)
    n_test = round(0.2 * n)
    n_train = n - n_val - n_test
    return SplitSpec(
        tuple(days[:n_train]),
        tuple(days[n_train : n_train + n_val]),
        tuple(days[n_train + n_val :]),
    )


def split_by_days(streams: list[DayStream], spec: SplitSpec) -> dict[str, list[DayStream]]:
    """Assign day streams to splits by whole trading day."""
    if len(streams) < spec.total:
        raise InsufficientDays(f"{len(streams)} days < {spec.total} required by spec")
    by_date = {s.date: s for s in streams}
    out: dict[str, list[DayStream]] = {}
    for split, days in (
        ("train", spec.train_days),
        ("val", spec.val_days),
        ("test", spec.test_days),
    ):
        missing = [d for d in days if d not in by_date]
        if missing:
            raise InsufficientDays(f"missing day(s) {missing} for split {split}")
        out[split] = [by_date[d] for d in days]
    return out


@dataclass(frozen=True)
class NormalizationStats:
    """z-score statistics, prices and volumes fitted separately."""

    price_mean: float
    price_std: float
    volume_mean: float
    volume_std: float

    def __post_init__(self):
        if self.price_std <= 0 or self.volume_std <= 0:
            raise ZeroVariance("standard deviations must be positive")

    def as_dict(self) -> dict:
        return {
            "price_mean": self.price_mean,
            "price_std": self.price_std,
            "volume_mean": self.volume_mean,
            "volume_std": self.volume_std,
            "std_convention": "population",
            "fitted_on": "train+val",
        }


def _price_volume_views(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cols = np.arange(mat.shape[1])
    price_cols = cols[(cols % 4 == 0) | (cols % 4 == 2)]
    vol_cols = cols[(cols % 4 == 1) | (cols % 4 == 3)]
    return mat[:, price_cols], mat[:, vol_cols]


def unscale_features(int_features: np.ndarray) -> np.ndarray:
    """Tick-integer snapshot matrix -> float price units (volumes as-is)."""
    out = np.asarray(int_features, dtype=np.float64).copy()
    cols = np.arange(out.shape[1])
    price_cols = (cols % 4 == 0) | (cols % 4 == 2)
    out[:, price_cols] /= PRICE_SCALE
    return out


def fit_normalization(matrices: list[np.ndarray]) -> NormalizationStats:
    """Pooled price/volume mean and population std over train+val records."""
    if not matrices or sum(len(m) for m in matrices) == 0:
        raise DataError("no records to fit normalization on")
    prices = np.concatenate([_price_volume_views(m)[0].ravel() for m in matrices])
    vols = np.concatenate([_price_volume_views(m)[1].ravel() for m in matrices])
    p_std = float(prices.std())
    v_std = float(vols.std())
    if p_std == 0.0 or v_std == 0.0:
        raise ZeroVariance("constant price or volume field in the fitting set")
    return NormalizationStats(float(prices.mean()), p_std, float(vols.mean()), v_std)


def apply_zscore(mat: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """(x - mean) / std per field family; works on any split."""
    out = np.asarray(mat, dtype=np.float64).copy()
    cols = np.arange(out.shape[1])
    price_cols = (cols % 4 == 0) | (cols % 4 == 2)
    out[:, price_cols] = (out[:, price_cols] - stats.price_mean) / stats.price_std
    out[:, ~price_cols] = (out[:, ~price_cols] - stats.volume_mean) / stats.volume_std
    return out


def invert_zscore(mat: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    out = np.asarray(mat, dtype=np.float64).copy()
    cols = np.arange(out.shape[1])
    price_cols = (cols % 4 == 0) | (cols % 4 == 2)
    out[:, price_cols] = out[:, price_cols] * stats.price_std + stats.price_mean
    out[:, ~price_cols] = out[:, ~price_cols] * stats.volume_std + stats.volume_mean
    return out


@dataclass(frozen=True)
class Segment:
    """Origin bookkeeping: ``count`` consecutive observations from one
    (stock, day), whose first observation is anchored at sample ``t0``."""

    stock: str
    day: str
    t0: int
    count: int


def make_observations(
    features_norm: np.ndarray,
    mids: np.ndarray,
    h: int,
    params: LabelParams,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Sliding h-row windows over one contiguous (in-day) sampled series.

    The window at t covers rows t-h+1..t of ``features_norm``; its label
    comes from the raw ``mids`` at the same t. Only t with full history
    and full horizon emit: count = n - h - k + 1. Returns (windows
    float32 (count, h, 4L), labels int8, first_t).
    """
    feats = np.asarray(features_norm, dtype=np.float64)
    mids = np.asarray(mids, dtype=np.float64)
    n = len(feats)
    if len(mids) != n:
        raise DataError(f"mids ({len(mids)}) and features ({n}) misaligned")
    k = params.k
    if n < h + k:
        raise SeriesTooShort(f"need >= h+k = {h + k} samples, got {n}")
    labels_all = label_series(mids, params)  # defined for t in [0, n-k-1]
    first_t = h - 1
    count = n - h - k + 1
    win = np.lib.stride_tricks.sliding_window_view(feats, (h, feats.shape[1]))
    windows = win[: count, 0].astype(np.float32)
    labels = labels_all[first_t : first_t + count].copy()
    return windows, labels, first_t


@dataclass
class DatasetBundle:
    """Observations per split plus the metadata that reproduces them."""

    windows: dict[str, np.ndarray]
    labels: dict[str, np.ndarray]
    segments: dict[str, list[Segment]]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for split in SPLITS:
            if split not in self.windows:
                self.windows[split] = np.empty(
                    (0,) + self._shape_tail(), dtype=np.float32
                )
                self.labels[split] = np.empty(0, dtype=np.int8)
                self.segments.setdefault(split, [])
            if len(self.windows[split]) != len(self.labels[split]):
                raise DataError(f"split {split}: window/label count mismatch")

    def _shape_tail(self) -> tuple[int, int]:
        for split in SPLITS:
            if split in self.windows and self.windows[split].size:
                return self.windows[split].shape[1:]
        return (self.meta.get("h", 0), 4 * self.meta.get("levels", 0))

    def n(self, split: str) -> int:
        return len(self.windows[split])

    def __eq__(self, other) -> bool:
        if not isinstance(other, DatasetBundle):
            return NotImplemented
        for split in SPLITS:
            if self.windows[split].shape != other.windows[split].shape:
                return False
            if self.windows[split].tobytes() != other.windows[split].tobytes():
                return False
            if self.labels[split].tobytes() != other.labels[split].tobytes():
                return False
            if self.segments[split] != other.segments[split]:
                return False
        return self.meta == other.meta


def stack_stocks(bundles: list[DatasetBundle]) -> DatasetBundle:
    """Vertical per-split stack in declared stock order, origins intact."""
    if not bundles:
        raise DataError("nothing to stack")
    keys = ("k", "theta", "h", "stride", "levels")
    ref = {key: bundles[0].meta.get(key) for key in keys}
    for b in bundles[1:]:
        got = {key: b.meta.get(key) for key in keys}
        if got != ref:
            raise IncompatibleParams(f"bundle params differ: {got} vs {ref}")
    windows = {}
    labels = {}
    segments = {}
    for split in SPLITS:
        windows[split] = np.concatenate([b.windows[split] for b in bundles])
        labels[split] = np.concatenate([b.labels[split] for b in bundles])
        segments[split] = [seg for b in bundles for seg in b.segments[split]]
    meta = dict(bundles[0].meta)
    meta["stocks"] = [s for b in bundles for s in b.meta.get("stocks", [])]
    per_stock_stats = {}
    for b in bundles:
        per_stock_stats.update(b.meta.get("stats_per_stock", {}))
    meta["stats_per_stock"] = per_stock_stats
    meta.pop("stats", None)
    return DatasetBundle(windows, labels, segments, meta)


def sample_day(day: DayStream, stride: int = 10, levels: int = 10):
    """Replay one day and event-stride sample it.

    Returns (features float64 (n, 4L) in price units, mids (n,)).
    """
    feats_i, incomplete = replay(day.events, levels)
    feat_sel, _ = sample_matrix(feats_i, incomplete, stride)
    feats = unscale_features(feat_sel)
    mids = (feat_sel[:, 0] + feat_sel[:, 2]) / 2 / PRICE_SCALE
    return feats, mids


def build_stock_bundle(
    days: list[DayStream],
    spec: SplitSpec,
    params: LabelParams,
    h: int,
    stride: int = 10,
    levels: int = 10,
) -> DatasetBundle:
    """Full per-stock pipeline: replay, sample, split, normalize, window.

    Normalization statistics come from the union of train and val
    records of this stock and are recorded in the bundle metadata.
    """
    assigned = split_by_days(days, spec)
    sampled: dict[str, list[tuple[str, np.ndarray, np.ndarray]]] = {s: [] for s in SPLITS}
    for split, streams in assigned.items():
        for day in streams:
            feats, mids = sample_day(day, stride, levels)
            sampled[split].append((day.date, feats, mids))

    stats = fit_normalization(
        [f for _, f, _ in sampled["train"]] + [f for _, f, _ in sampled["val"]]
    )

    stock = days[0].symbol
    windows = {}
    labels = {}
    segments = {}
    for split in SPLITS:
        w_parts, l_parts, segs = [], [], []
        for date, feats, mids in sampled[split]:
            norm = apply_zscore(feats, stats)
            w, lab, first_t = make_observations(norm, mids, h, params)
            w_parts.append(w)
            l_parts.append(lab)
            segs.append(Segment(stock, date, first_t, len(lab)))
        windows[split] = (
            np.concatenate(w_parts) if w_parts else np.empty((0, h, 4 * levels), np.float32)
        )
        labels[split] = np.concatenate(l_parts) if l_parts else np.empty(0, np.int8)
        segments[split] = segs

    meta = {
        "k": params.k,
        "theta": params.theta,
        "h": h,
        "stride": stride,
        "levels": levels,
        "stocks": [stock],
        "split_days": {
            "train": list(spec.train_days),
            "val": list(spec.val_days),
            "test": list(spec.test_days),
        },
        "stats_per_stock": {stock: stats.as_dict()},
        "source": "events",
        "label_encoding": {"U": 0, "S": 1, "D": 2},
    }
    return DatasetBundle(windows, labels, segments, meta)


def build_fi2010_bundle(
    train_set: Fi2010Set,
    test_set: Fi2010Set,
    k: int,
    h: int,
    val_fraction: float = 0.2,
    normalize: bool = False,
    stock: str = "FI2010",
) -> DatasetBundle:
    """Windowed bundle from pre-assembled benchmark matrices.

    Labels are the shipped per-sample labels at the window's last row.
    The published z-score variant is consumed as-is (normalize=False);
    raw-style matrices can be normalized here, with statistics fitted on
    the train-file samples that form train+val.
    """
    if k not in train_set.horizons:
        raise ConfigError(f"horizon {k} not in {train_set.horizons}")

    def cut_windows(fs: Fi2010Set) -> tuple[np.ndarray, np.ndarray]:
        feats = fs.features
        if len(feats) < h:
            raise SeriesTooShort(f"need >= {h} samples, got {len(feats)}")
        win = np.lib.stride_tricks.sliding_window_view(feats, (h, feats.shape[1]))[:, 0]
        lab = fs.label_for_horizon(k)[h - 1 :]
        return win, lab

    stats = None
    train_feats = train_set.features
    test_feats = test_set.features
    if normalize:
        stats = fit_normalization([train_set.features])
        train_feats = apply_zscore(train_set.features, stats)
        test_feats = apply_zscore(test_set.features, stats)
        train_set = Fi2010Set(train_feats, train_set.labels, train_set.split)
        test_set = Fi2010Set(test_feats, test_set.labels, test_set.split)

    w_tr_all, l_tr_all = cut_windows(train_set)
    w_te, l_te = cut_windows(test_set)
    n_val = int(round(val_fraction * len(w_tr_all)))
    n_tr = len(w_tr_all) - n_val

    windows = {
        "train": w_tr_all[:n_tr].astype(np.float32),
        "val": w_tr_all[n_tr:].astype(np.float32),
        "test": w_te.astype(np.float32),
    }
    labels = {
        "train": l_tr_all[:n_tr].astype(np.int8),
        "val": l_tr_all[n_tr:].astype(np.int8),
        "test": l_te.astype(np.int8),
    }
    segments = {
        "train": [Segment(stock, "train-file", h - 1, n_tr)],
        "val": [Segment(stock, "train-file", h - 1 + n_tr, n_val)],
        "test": [Segment(stock, "test-file", h - 1, len(w_te))],
    }
    meta = {
        "k": k,
        "theta": 0.002,
        "h": h,
        "stride": 10,
        "levels": train_set.features.shape[1] // 4,
        "stocks": [stock],
        "split_days": {"train": [], "val": [], "test": []},
        "stats_per_stock": {stock: stats.as_dict()} if stats else {},
        "source": "fi2010",
        "val_fraction": val_fraction,
        "label_encoding": {"U": 0, "S": 1, "D": 2},
    }
    return DatasetBundle(windows, labels, segments, meta)


# ---------------------------------------------------------------------------
# LOBD file io
# ---------------------------------------------------------------------------


def write_dataset(bundle: DatasetBundle, path) -> None:
    """Serialize a bundle; read(write(b)) == b bit-exactly."""
    h = bundle._shape_tail()[0]
    width = bundle._shape_tail()[1]
    meta = dict(bundle.meta)
    meta["format_version"] = FORMAT_VERSION
    meta["split_counts"] = {s: int(bundle.n(s)) for s in SPLITS}
    meta["tensor_shape"] = [int(sum(bundle.n(s) for s in SPLITS)), int(h), int(width)]
    meta["segments"] = {
        s: [[seg.stock, seg.day, seg.t0, seg.count] for seg in bundle.segments[s]]
        for s in SPLITS
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()

    tensor = np.concatenate([bundle.windows[s] for s in SPLITS]).astype("<f4")
    labels = np.concatenate([bundle.labels[s] for s in SPLITS]).astype(np.uint8)

    with open(path, "wb") as fh:
        head = MAGIC + struct.pack("<H", FORMAT_VERSION) + struct.pack("<I", len(blob)) + blob
        body = tensor.tobytes() + labels.tobytes()
        fh.write(head)
        fh.write(body)
        fh.write(struct.pack("<I", crc32c(body, crc32c(head))))


def read_dataset(path) -> DatasetBundle:
    """Read and verify a LOBD file written by :func:`write_dataset`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 10:
        raise TruncatedPayload(f"file is {len(data)} bytes")
    if data[:4] != MAGIC:
        raise BadMagic(f"magic {data[:4]!r} != {MAGIC!r}")
    version = struct.unpack_from("<H", data, 4)[0]
    if version > FORMAT_VERSION:
        raise VersionUnsupported(f"file version {version} > supported {FORMAT_VERSION}")
    m_len = struct.unpack_from("<I", data, 6)[0]
    meta_end = 10 + m_len
    if len(data) < meta_end:
        raise TruncatedPayload("metadata block truncated")
    meta = json.loads(data[10:meta_end].decode())

    n, h, width = meta["tensor_shape"]
    tensor_bytes = n * h * width * 4
    body_end = meta_end + tensor_bytes + n
    if len(data) < body_end + 4:
        raise TruncatedPayload(
            f"need {body_end + 4} bytes for declared payload, file has {len(data)}"
        )
    stored_crc = struct.unpack_from("<I", data, body_end)[0]
    if crc32c(data[:body_end]) != stored_crc:
        raise ChecksumMismatch("payload checksum does not match")

    tensor = np.frombuffer(data, dtype="<f4", count=n * h * width, offset=meta_end)
    tensor = tensor.reshape(n, h, width)
    labels = np.frombuffer(data, dtype=np.uint8, count=n, offset=meta_end + tensor_bytes)

    counts = meta["split_counts"]
    windows = {}
    labs = {}
    segments = {}
    at = 0
    for split in SPLITS:
        c = counts[split]
        windows[split] = tensor[at : at + c].copy()
        labs[split] = labels[at : at + c].astype(np.int8)
        segments[split] = [Segment(*row) for row in meta["segments"][split]]
        at += c

    inner = dict(meta)
    for key in ("format_version", "split_counts", "tensor_shape", "segments"):
        inner.pop(key, None)
    return DatasetBundle(windows, labs, segments, inner)

"""File ingestion: LOBSTER day-file pairs and FI-2010 benchmark matrices.

LOBSTER ships one CSV pair per stock-day: a message file (time, type,
order id, size, price, direction) and a row-aligned orderbook file with
the book state after each message. Only submissions (type 1), cancels
(2, partial), deletions (3, full) and visible executions (4) feed the
book model here; hidden executions, crosses, and halts (5, 6, 7) are
dropped, with the orderbook rows of retained messages kept for oracle
checks.

FI-2010 matrices are 149 rows per sample block: 144 feature rows of
which the first 40 are the raw LOB values used here, then 5 label rows
(horizons 1, 2, 3, 5, 10; classes 1=up, 2=stationary, 3=down).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .book import EventArrays, EventKind
from .errors import (
    DataError,
    LabelOutOfRange,
    MalformedRow,
    NonMonotonicTimestamp,
    RowCountMismatch,
    UnexpectedRowCount,
)

FI2010_HORIZONS = (1, 2, 3, 5, 10)
FI2010_ROWS = 149
FI2010_RAW_FEATURES = 40

# vendor message types
_LOBSTER_SUBMIT = 1
_LOBSTER_PARTIAL_CANCEL = 2
_LOBSTER_DELETE = 3
_LOBSTER_EXECUTE = 4
_RETAINED_TYPES = (_LOBSTER_SUBMIT, _LOBSTER_PARTIAL_CANCEL, _LOBSTER_DELETE, _LOBSTER_EXECUTE)


@dataclass
class DayStream:
    """One stock-day of events, optionally with vendor snapshots.

    ``vendor_snapshots`` is row-aligned with ``events``: row i is the
    book state immediately after event i (rows of dropped message kinds
    are filtered out together with their messages).
    """

    symbol: str
    date: str
    events: EventArrays
    vendor_snapshots: np.ndarray | None = None

    def __post_init__(self):
        if self.vendor_snapshots is not None and len(self.vendor_snapshots) != len(self.events):
            raise DataError(
                f"vendor snapshot rows ({len(self.vendor_snapshots)}) != "
                f"event count ({len(self.events)})"
            )

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class Fi2010Set:
    """Parsed FI-2010 matrix: 40 raw LOB features + 5 horizon labels.

    Labels are re-encoded 0=up, 1=stationary, 2=down (vendor 1/2/3).
    """

    features: np.ndarray  # (n_samples, 40) float64
    labels: np.ndarray  # (n_samples, 5) int8
    split: str
    horizons: tuple[int, ...] = FI2010_HORIZONS

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise DataError("feature and label sample counts differ")

    def label_for_horizon(self, k: int) -> np.ndarray:
        return self.labels[:, self.horizons.index(k)]

    def __len__(self) -> int:
        return len(self.features)


def _load_matrix(path, expected_cols: int | None = None) -> np.ndarray:
    """Fast CSV load with per-line fallback diagnosis on failure."""
    try:
        with open(path, "rb") as fh:
            first = fh.readline()
        delim = "," if b"," in first else None
        return np.loadtxt(path, delimiter=delim, ndmin=2)
    except (ValueError, IndexError):
        with open(path) as fh:
            for ln, line in enumerate(fh, start=1):
                parts = line.replace(",", " ").split()
                try:
                    vals = [float(p) for p in parts]
                except ValueError:
                    raise MalformedRow(ln, f"unparseable field in {parts!r}") from None
                if expected_cols is not None and len(vals) != expected_cols:
                    raise MalformedRow(ln, f"expected {expected_cols} fields, got {len(vals)}")
        raise MalformedRow(0, f"failed to load {path}")


def parse_lobster_day(
    message_path,
    orderbook_path,
    symbol: str = "",
    date: str = "",
) -> DayStream:
    """Parse a LOBSTER message/orderbook pair into a DayStream.

    Keeps types 1-4 (submission, partial cancel, full delete, visible
    execution); both cancel kinds map to Deletion. Raises
    RowCountMismatch, MalformedRow, or NonMonotonicTimestamp.
    """
    msgs = _load_matrix(message_path, expected_cols=6)
    if msgs.shape[1] != 6:
        raise MalformedRow(1, f"message rows must have 6 fields, got {msgs.shape[1]}")
    book_rows = _load_matrix(orderbook_path)
    if len(book_rows) != len(msgs):
        raise RowCountMismatch(
            f"{len(msgs)} message rows vs {len(book_rows)} orderbook rows"
        )
    if book_rows.shape[1] % 4 != 0:
        raise MalformedRow(1, f"orderbook width {book_rows.shape[1]} is not a multiple of 4")

    times = msgs[:, 0]
    types = msgs[:, 1].astype(np.int64)
    oids = msgs[:, 2].astype(np.int64)
    sizes = msgs[:, 3].astype(np.int64)
    prices = msgs[:, 4].astype(np.int64)
    dirs = msgs[:, 5].astype(np.int64)

    bad_dir = np.flatnonzero(~np.isin(dirs, (1, -1)))
    if len(bad_dir):
        raise MalformedRow(int(bad_dir[0]) + 1, f"direction must be +-1, got {dirs[bad_dir[0]]}")

    keep = np.isin(types, _RETAINED_TYPES)
    ridx = np.flatnonzero(keep)
    kept_sizes = sizes[ridx]
    kept_prices = prices[ridx]
    nonpos = np.flatnonzero((kept_sizes <= 0) | (kept_prices <= 0))
    if len(nonpos):
        ln = int(ridx[nonpos[0]]) + 1
        raise MalformedRow(ln, "non-positive size or price")

    kept_times = times[ridx]
    if len(kept_times) > 1 and np.any(np.diff(kept_times) < 0):
        at = int(ridx[int(np.flatnonzero(np.diff(kept_times) < 0)[0]) + 1]) + 1
        raise NonMonotonicTimestamp(f"timestamp decreases at line {at}")

    kind = np.where(
        types[ridx] == _LOBSTER_SUBMIT,
        int(EventKind.SUBMISSION),
        np.where(types[ridx] == _LOBSTER_EXECUTE, int(EventKind.EXECUTION), int(EventKind.DELETION)),
    ).astype(np.int8)

    events = EventArrays(
        kept_times,
        kind,
        oids[ridx],
        kept_sizes,
        kept_prices,
        dirs[ridx].astype(np.int8),
    )
    return DayStream(
        symbol=symbol,
        date=date,
        events=events,
        vendor_snapshots=book_rows[ridx].astype(np.int64),
    )


def write_lobster_day(stream: DayStream, message_path, orderbook_path) -> None:
    """Write a DayStream back out in the vendor CSV layout.

    Deletions are emitted as type 2 (remove-up-to-size), which parses
    back to the identical event semantics.
    """
    ev = stream.events
    vendor_type = np.where(
        ev.kind == int(EventKind.SUBMISSION),
        _LOBSTER_SUBMIT,
        np.where(ev.kind == int(EventKind.EXECUTION), _LOBSTER_EXECUTE, _LOBSTER_PARTIAL_CANCEL),
    )
    with open(message_path, "w") as fh:
        for i in range(len(ev)):
            fh.write(
                f"{ev.timestamp[i]:.9f},{vendor_type[i]},{ev.order_id[i]},"
                f"{ev.size[i]},{ev.price[i]},{ev.side[i]}\n"
            )
    if stream.vendor_snapshots is None:
        raise DataError("stream has no snapshots to write")
    np.savetxt(orderbook_path, stream.vendor_snapshots, fmt="%d", delimiter=",")


def parse_fi2010(path, split: str) -> Fi2010Set:
    """Parse one FI-2010 matrix file (samples are columns).

    Extracts the 40 raw LOB feature rows and the 5 horizon label rows;
    raises UnexpectedRowCount for a non-149-row layout and
    LabelOutOfRange for labels outside {1, 2, 3}.
    """
    mat = _load_matrix(path)
    if mat.shape[0] != FI2010_ROWS:
        raise UnexpectedRowCount(f"expected {FI2010_ROWS} rows, got {mat.shape[0]}")
    feats = mat[:FI2010_RAW_FEATURES].T.copy()
    raw_labels = mat[FI2010_ROWS - 5 :].T
    if not np.isin(raw_labels, (1.0, 2.0, 3.0)).all():
        bad = raw_labels[~np.isin(raw_labels, (1.0, 2.0, 3.0))][0]
        raise LabelOutOfRange(f"label {bad} outside {{1,2,3}}")
    labels = (raw_labels - 1).astype(np.int8)  # 0=U, 1=S, 2=D
    return Fi2010Set(features=feats, labels=labels, split=split)


def write_fi2010(fi: Fi2010Set, path) -> None:
    """Debug writer: emit the 149-row layout (unused feature rows zero).

    parse(write(parse(x))) is a fixed point on the parsed content.
    """
    n = len(fi)
    mat = np.zeros((FI2010_ROWS, n))
    mat[:FI2010_RAW_FEATURES] = fi.features.T
    mat[FI2010_ROWS - 5 :] = fi.labels.T.astype(np.float64) + 1.0
    buf = io.StringIO()
    np.savetxt(buf, mat, fmt="%.10g")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())

"""Order book state machine.

Applies submission/deletion/execution events to per-side depth ladders,
emits fixed-width top-L snapshots, and computes mid-prices. Prices are
integer ticks (price x 10^4, the LOBSTER convention) everywhere inside
this module so book arithmetic is exact; floats appear only when a
caller unscales a snapshot for normalization.

Missing levels in a snapshot are sentinel-padded (far ask / far bid,
zero volume) and the record is flagged incomplete. Incomplete records
never reach models: :func:`sample_records` drops them before striding.

Replaying a whole day (snapshot after every event) is the hottest loop
in the package; it runs through a numba kernel when available and an
equivalent pure-Python book otherwise (see ``_accel``). Both lanes use
identical integer arithmetic and produce byte-identical snapshots.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from ._accel import NUMBA_ENABLED, njit
from .errors import (
    ConfigError,
    CrossedBookAfterApply,
    DataError,
    IncompleteRecord,
    UnknownOrderId,
)

PRICE_SCALE = 10_000
ASK_SENTINEL = 9_999_999_999
BID_SENTINEL = -9_999_999_999

DEFAULT_LEVELS = 10


class EventKind(IntEnum):
    SUBMISSION = 1
    DELETION = 2
    EXECUTION = 3


class Side(IntEnum):
    BID = 1
    ASK = -1


@dataclass(frozen=True)
class LobEvent:
    """One order-flow event.

    timestamp is seconds after midnight (decimal, ns precision survives
    a float for intraday magnitudes); price is integer ticks; size is
    shares and must be positive.
    """

    timestamp: float
    kind: EventKind
    order_id: int
    size: int
    price: int
    side: Side

    def __post_init__(self):
        if self.size <= 0:
            raise DataError(f"event size must be positive, got {self.size}")
        if self.price <= 0:
            raise DataError(f"event price must be positive, got {self.price}")


@dataclass(frozen=True)
class LobRecord:
    """Top-L book snapshot.

    ``features`` holds 4L int64 tick values laid out per level l=1..L as
    (P_ask_l, V_ask_l, P_bid_l, V_bid_l). ``incomplete`` is True when
    either side had fewer than L levels (sentinel padding present).
    """

    t: int
    features: np.ndarray
    levels: int
    incomplete: bool

    def ask_price(self, level: int = 1) -> int:
        return int(self.features[4 * (level - 1)])

    def bid_price(self, level: int = 1) -> int:
        return int(self.features[4 * (level - 1) + 2])


class EventArrays:
    """Struct-of-arrays event stream (the fast in-memory form).

    Columns: timestamp f8, kind i8, order_id i64, size i64, price i64,
    side i8. Indexing yields :class:`LobEvent` views for small-scale use.
    """

    __slots__ = ("timestamp", "kind", "order_id", "size", "price", "side")

    def __init__(self, timestamp, kind, order_id, size, price, side):
        self.timestamp = np.asarray(timestamp, dtype=np.float64)
        self.kind = np.asarray(kind, dtype=np.int8)
        self.order_id = np.asarray(order_id, dtype=np.int64)
        self.size = np.asarray(size, dtype=np.int64)
        self.price = np.asarray(price, dtype=np.int64)
        self.side = np.asarray(side, dtype=np.int8)
        n = len(self.timestamp)
        for col in (self.kind, self.order_id, self.size, self.price, self.side):
            if len(col) != n:
                raise DataError("event columns have unequal lengths")

    @classmethod
    def from_events(cls, events: Iterable[LobEvent]) -> "EventArrays":
        events = list(events)
        return cls(
            [e.timestamp for e in events],
            [int(e.kind) for e in events],
            [e.order_id for e in events],
            [e.size for e in events],
            [e.price for e in events],
            [int(e.side) for e in events],
        )

    def __len__(self) -> int:
        return len(self.timestamp)

    def __getitem__(self, i: int) -> LobEvent:
        return LobEvent(
            timestamp=float(self.timestamp[i]),
            kind=EventKind(int(self.kind[i])),
            order_id=int(self.order_id[i]),
            size=int(self.size[i]),
            price=int(self.price[i]),
            side=Side(int(self.side[i])),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


class BookState:
    """Mutable book: per-side price->depth ladders plus an order index.

    Single-writer by contract; distinct streams get distinct books.
    Empty levels are absent (no zero-depth entries).
    """

    __slots__ = ("bid_depth", "ask_depth", "_bid_prices", "_ask_prices", "orders")

    def __init__(self):
        self.bid_depth: dict[int, int] = {}
        self.ask_depth: dict[int, int] = {}
        self._bid_prices: list[int] = []  # ascending
        self._ask_prices: list[int] = []  # ascending
        self.orders: dict[int, list] = {}  # oid -> [side, price, remaining]

    # -- queries -------------------------------------------------------

    def best_bid(self) -> int | None:
        return self._bid_prices[-1] if self._bid_prices else None

    def best_ask(self) -> int | None:
        return self._ask_prices[0] if self._ask_prices else None

    def depth_at(self, side: Side, price: int) -> int:
        table = self.bid_depth if side == Side.BID else self.ask_depth
        return table.get(price, 0)

    def n_levels(self, side: Side) -> int:
        return len(self._bid_prices) if side == Side.BID else len(self._ask_prices)

    # -- mutation ------------------------------------------------------

    def _add_depth(self, side: Side, price: int, size: int) -> None:
        if side == Side.BID:
            table, ladder = self.bid_depth, self._bid_prices
        else:
            table, ladder = self.ask_depth, self._ask_prices
        if price in table:
            table[price] += size
        else:
            table[price] = size
            bisect.insort(ladder, price)

    def _remove_depth(self, side: Side, price: int, size: int) -> None:
        if side == Side.BID:
            table, ladder = self.bid_depth, self._bid_prices
        else:
            table, ladder = self.ask_depth, self._ask_prices
        left = table[price] - size
        if left > 0:
            table[price] = left
        else:
            del table[price]
            ladder.pop(bisect.bisect_left(ladder, price))

    def _check_uncrossed(self) -> None:
        if self._bid_prices and self._ask_prices:
            if self._bid_prices[-1] >= self._ask_prices[0]:
                raise CrossedBookAfterApply(
                    f"best bid {self._bid_prices[-1]} >= best ask {self._ask_prices[0]}"
                )


def apply_event(book: BookState, e: LobEvent) -> BookState:
    """Apply one event in place and return the book.

    Submission adds depth; Deletion removes up to ``e.size`` from the
    referenced order (full removal when size >= remaining); Execution
    reduces the referenced order by ``e.size``. Raises UnknownOrderId
    for deletion/execution of an untracked order and
    CrossedBookAfterApply when the result violates bid < ask.
    """
    if e.kind == EventKind.SUBMISSION:
        if e.order_id in book.orders:
            raise DataError(f"duplicate submission for order id {e.order_id}")
        book.orders[e.order_id] = [e.side, e.price, e.size]
        book._add_depth(e.side, e.price, e.size)
        book._check_uncrossed()
        return book

    rec = book.orders.get(e.order_id)
    if rec is None:
        raise UnknownOrderId(f"order id {e.order_id} not in book")
    side, price, remaining = rec
    take = min(e.size, remaining) if e.kind == EventKind.DELETION else e.size
    if e.kind == EventKind.EXECUTION and take > remaining:
        raise DataError(
            f"execution of {take} exceeds remaining {remaining} for order {e.order_id}"
        )
    book._remove_depth(side, price, take)
    if take >= remaining:
        del book.orders[e.order_id]
    else:
        rec[2] = remaining - take
    return book


def snapshot(book: BookState, levels: int = DEFAULT_LEVELS, t: int = 0) -> LobRecord:
    """Top-``levels`` snapshot in the fixed (P_ask, V_ask, P_bid, V_bid) layout.

    Sides with fewer than ``levels`` price levels are sentinel-padded and
    the record is flagged incomplete. An empty book yields a fully
    sentinel record.
    """
    feats = np.empty(4 * levels, dtype=np.int64)
    asks = book._ask_prices
    bids = book._bid_prices
    n_ask = min(len(asks), levels)
    n_bid = min(len(bids), levels)
    for i in range(levels):
        base = 4 * i
        if i < n_ask:
            p = asks[i]
            feats[base] = p
            feats[base + 1] = book.ask_depth[p]
        else:
            feats[base] = ASK_SENTINEL
            feats[base + 1] = 0
        if i < n_bid:
            p = bids[len(bids) - 1 - i]
            feats[base + 2] = p
            feats[base + 3] = book.bid_depth[p]
        else:
            feats[base + 2] = BID_SENTINEL
            feats[base + 3] = 0
    return LobRecord(
        t=t,
        features=feats,
        levels=levels,
        incomplete=(n_ask < levels or n_bid < levels),
    )


def mid_price(record: LobRecord) -> float:
    """(best ask + best bid) / 2, in price units (not ticks)."""
    a = record.features[0]
    b = record.features[2]
    if a == ASK_SENTINEL or b == BID_SENTINEL:
        raise IncompleteRecord("level-1 quote missing on at least one side")
    return (int(a) + int(b)) / 2 / PRICE_SCALE


def mid_prices(features: np.ndarray, incomplete: np.ndarray | None = None) -> np.ndarray:
    """Vectorized mid-price over a (n, 4L) snapshot matrix, price units."""
    feats = np.asarray(features)
    if incomplete is not None and np.any(incomplete):
        raise IncompleteRecord("matrix contains incomplete records")
    return (feats[:, 0] + feats[:, 2]) / 2 / PRICE_SCALE


def sample_records(records: Sequence[LobRecord], stride: int) -> list[LobRecord]:
    """Every stride-th complete record (indices stride-1, 2*stride-1, ...).

    Incomplete records are dropped before striding so sentinel values
    never reach a model.
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    complete = [r for r in records if not r.incomplete]
    return complete[stride - 1 :: stride]


def sample_matrix(
    features: np.ndarray, incomplete: np.ndarray, stride: int
) -> tuple[np.ndarray, np.ndarray]:
    """Matrix variant of :func:`sample_records`.

    Returns (sampled features, indices into the original event sequence).
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    keep = np.flatnonzero(~incomplete.astype(bool))
    sel = keep[stride - 1 :: stride]
    return features[sel], sel


# ---------------------------------------------------------------------------
# Whole-day replay (hot path)
# ---------------------------------------------------------------------------

_ERR_NONE = 0
_ERR_UNKNOWN_ID = 1
_ERR_CROSSED = 2
_ERR_DUP_ID = 3
_ERR_BAD = 4

_ERR_MESSAGES = {
    _ERR_UNKNOWN_ID: UnknownOrderId,
    _ERR_CROSSED: CrossedBookAfterApply,
    _ERR_DUP_ID: DataError,
    _ERR_BAD: DataError,
}


def _replay_python(ev: EventArrays, levels: int) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Fallback lane: replay through BookState, snapshot after every event."""
    n = len(ev)
    feats = np.empty((n, 4 * levels), dtype=np.int64)
    incomplete = np.zeros(n, dtype=np.uint8)
    book = BookState()
    kinds = ev.kind
    oids = ev.order_id
    sizes = ev.size
    prices = ev.price
    sides = ev.side
    for i in range(n):
        try:
            apply_event(
                book,
                LobEvent(
                    timestamp=float(ev.timestamp[i]),
                    kind=EventKind(int(kinds[i])),
                    order_id=int(oids[i]),
                    size=int(sizes[i]),
                    price=int(prices[i]),
                    side=Side(int(sides[i])),
                ),
            )
        except UnknownOrderId:
            return feats, incomplete, _ERR_UNKNOWN_ID, i
        except CrossedBookAfterApply:
            return feats, incomplete, _ERR_CROSSED, i
        except DataError:
            return feats, incomplete, _ERR_DUP_ID, i
        rec = snapshot(book, levels, t=i)
        feats[i] = rec.features
        incomplete[i] = 1 if rec.incomplete else 0
    return feats, incomplete, _ERR_NONE, -1


if NUMBA_ENABLED:
    from numba import types
    from numba.typed import Dict as _NumbaDict

    @njit(cache=True)
    def _ladder_insert(prices, depths, count, price, size):
        """Insert/accumulate (price, size) in an ascending ladder.

        Returns (prices, depths, count); arrays are reallocated on growth.
        """
        lo, hi = 0, count
        while lo < hi:
            mid = (lo + hi) >> 1
            if prices[mid] < price:
                lo = mid + 1
            else:
                hi = mid
        if lo < count and prices[lo] == price:
            depths[lo] += size
            return prices, depths, count
        if count == prices.shape[0]:
            new_p = np.empty(prices.shape[0] * 2, np.int64)
            new_d = np.empty(prices.shape[0] * 2, np.int64)
            new_p[:count] = prices[:count]
            new_d[:count] = depths[:count]
            prices, depths = new_p, new_d
        for j in range(count, lo, -1):
            prices[j] = prices[j - 1]
            depths[j] = depths[j - 1]
        prices[lo] = price
        depths[lo] = size
        return prices, depths, count + 1

    @njit(cache=True)
    def _ladder_remove(prices, depths, count, price, size):
        """Remove size from price's depth; drop the level when emptied."""
        lo, hi = 0, count
        while lo < hi:
            mid = (lo + hi) >> 1
            if prices[mid] < price:
                lo = mid + 1
            else:
                hi = mid
        left = depths[lo] - size
        if left > 0:
            depths[lo] = left
            return count
        for j in range(lo, count - 1):
            prices[j] = prices[j + 1]
            depths[j] = depths[j + 1]
        return count - 1

    @njit(cache=True)
    def _replay_kernel(kind, oid, size, price, side, levels, ask_sent, bid_sent):
        n = kind.shape[0]
        feats = np.empty((n, 4 * levels), np.int64)
        flat = feats.reshape(-1)
        incomplete = np.zeros(n, np.uint8)

        ask_p = np.empty(256, np.int64)
        ask_d = np.empty(256, np.int64)
        n_ask = 0
        bid_p = np.empty(256, np.int64)
        bid_d = np.empty(256, np.int64)
        n_bid = 0

        # order index: id -> side-signed price (ask positive, bid negative)
        # and id -> remaining size
        ord_price = _NumbaDict.empty(types.int64, types.int64)
        ord_rem = _NumbaDict.empty(types.int64, types.int64)

        for i in range(n):
            k = kind[i]
            o = oid[i]
            if k == 1:  # submission
                if o in ord_rem:
                    return feats, incomplete, _ERR_DUP_ID, i
                p = price[i]
                s = size[i]
                if side[i] == -1:  # ask
                    ask_p, ask_d, n_ask = _ladder_insert(ask_p, ask_d, n_ask, p, s)
                    ord_price[o] = p
                else:
                    bid_p, bid_d, n_bid = _ladder_insert(bid_p, bid_d, n_bid, p, s)
                    ord_price[o] = -p
                ord_rem[o] = s
                if n_ask > 0 and n_bid > 0 and bid_p[n_bid - 1] >= ask_p[0]:
                    return feats, incomplete, _ERR_CROSSED, i
            elif k == 2 or k == 3:  # deletion / execution
                if o not in ord_rem:
                    return feats, incomplete, _ERR_UNKNOWN_ID, i
                sp = ord_price[o]
                rem = ord_rem[o]
                take = size[i]
                if k == 2 and take > rem:
                    take = rem
                if k == 3 and take > rem:
                    return feats, incomplete, _ERR_BAD, i
                if sp > 0:
                    n_ask = _ladder_remove(ask_p, ask_d, n_ask, sp, take)
                else:
                    n_bid = _ladder_remove(bid_p, bid_d, n_bid, -sp, take)
                if take >= rem:
                    del ord_price[o]
                    del ord_rem[o]
                else:
                    ord_rem[o] = rem - take
            else:
                return feats, incomplete, _ERR_BAD, i

            # snapshot
            row = 4 * levels * i
            for lvl in range(levels):
                base = row + 4 * lvl
                if lvl < n_ask:
                    flat[base] = ask_p[lvl]
                    flat[base + 1] = ask_d[lvl]
                else:
                    flat[base] = ask_sent
                    flat[base + 1] = 0
                if lvl < n_bid:
                    flat[base + 2] = bid_p[n_bid - 1 - lvl]
                    flat[base + 3] = bid_d[n_bid - 1 - lvl]
                else:
                    flat[base + 2] = bid_sent
                    flat[base + 3] = 0
            if n_ask < levels or n_bid < levels:
                incomplete[i] = 1

        return feats, incomplete, _ERR_NONE, -1

    def _replay_numba(ev: EventArrays, levels: int):
        return _replay_kernel(
            ev.kind,
            ev.order_id,
            ev.size,
            ev.price,
            ev.side,
            levels,
            ASK_SENTINEL,
            BID_SENTINEL,
        )

else:  # pragma: no cover - numba lane absent
    _replay_numba = None


def replay(ev: EventArrays, levels: int = DEFAULT_LEVELS) -> tuple[np.ndarray, np.ndarray]:
    """Replay a day of events; snapshot after every event.

    Returns (features (n, 4L) int64 ticks, incomplete (n,) uint8).
    Identical streams produce byte-identical output regardless of lane.
    """
    impl = _replay_numba if NUMBA_ENABLED else _replay_python
    feats, incomplete, err, idx = impl(ev, levels)
    if err != _ERR_NONE:
        exc = _ERR_MESSAGES[err]
        raise exc(f"replay failed at event {idx} (code {err})")
    return feats, incomplete

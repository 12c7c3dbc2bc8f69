"""Book state machine: event application, snapshots, sampling, replay."""

import numpy as np
import pytest

from lobkit.book import (
    ASK_SENTINEL,
    BID_SENTINEL,
    BookState,
    EventArrays,
    EventKind,
    LobEvent,
    LobRecord,
    Side,
    apply_event,
    mid_price,
    replay,
    sample_records,
    snapshot,
    _replay_python,
)
from lobkit.errors import (
    ConfigError,
    CrossedBookAfterApply,
    DataError,
    IncompleteRecord,
    UnknownOrderId,
)


def ev(kind, oid, size, price, side, ts=0.0):
    return LobEvent(ts, kind, oid, size, price, side)


def test_submission_adds_depth():
    book = BookState()
    apply_event(book, ev(EventKind.SUBMISSION, 1, 100, 999_900, Side.BID))
    assert book.best_bid() == 999_900
    assert book.depth_at(Side.BID, 999_900) == 100


def test_full_execution_removes_level():
    book = BookState()
    apply_event(book, ev(EventKind.SUBMISSION, 1, 50, 1_000_100, Side.ASK))
    apply_event(book, ev(EventKind.EXECUTION, 1, 50, 1_000_100, Side.ASK))
    assert book.best_ask() is None
    assert book.n_levels(Side.ASK) == 0


def test_partial_deletion_then_overdelete_removes():
    book = BookState()
    apply_event(book, ev(EventKind.SUBMISSION, 1, 100, 999_900, Side.BID))
    apply_event(book, ev(EventKind.DELETION, 1, 30, 999_900, Side.BID))
    assert book.depth_at(Side.BID, 999_900) == 70
    # deletion size >= remaining removes the order entirely
    apply_event(book, ev(EventKind.DELETION, 1, 999, 999_900, Side.BID))
    assert book.n_levels(Side.BID) == 0
    assert 1 not in book.orders


def test_unknown_order_id():
    book = BookState()
    with pytest.raises(UnknownOrderId):
        apply_event(book, ev(EventKind.DELETION, 42, 10, 999_900, Side.BID))
    with pytest.raises(UnknownOrderId):
        apply_event(book, ev(EventKind.EXECUTION, 42, 10, 999_900, Side.BID))


def test_crossed_book_rejected():
    book = BookState()
    apply_event(book, ev(EventKind.SUBMISSION, 1, 10, 1_000_000, Side.ASK))
    with pytest.raises(CrossedBookAfterApply):
        apply_event(book, ev(EventKind.SUBMISSION, 2, 10, 1_000_000, Side.BID))


def test_duplicate_submission_rejected():
    book = BookState()
    apply_event(book, ev(EventKind.SUBMISSION, 1, 10, 1_000_000, Side.ASK))
    with pytest.raises(DataError):
        apply_event(book, ev(EventKind.SUBMISSION, 1, 10, 1_000_100, Side.ASK))


def test_snapshot_level1_layout():
    book = BookState()
    apply_event(book, ev(EventKind.SUBMISSION, 1, 100, 999_900, Side.BID))
    apply_event(book, ev(EventKind.SUBMISSION, 2, 50, 1_000_100, Side.ASK))
    rec = snapshot(book, levels=1)
    assert rec.features.tolist() == [1_000_100, 50, 999_900, 100]
    assert not rec.incomplete


def test_snapshot_padding_flags_incomplete():
    book = BookState()
    for i, price in enumerate((1_000_100, 1_000_200, 1_000_300)):
        apply_event(book, ev(EventKind.SUBMISSION, i + 1, 10, price, Side.ASK))
    apply_event(book, ev(EventKind.SUBMISSION, 99, 10, 999_900, Side.BID))
    rec = snapshot(book, levels=10)
    assert rec.incomplete
    # ask levels 4..10 sentinel-padded
    for lvl in range(3, 10):
        assert rec.features[4 * lvl] == ASK_SENTINEL
        assert rec.features[4 * lvl + 1] == 0
    for lvl in range(1, 10):
        assert rec.features[4 * lvl + 2] == BID_SENTINEL


def test_empty_book_snapshot_fully_sentinel():
    rec = snapshot(BookState(), levels=2)
    assert rec.incomplete
    assert rec.features.tolist() == [ASK_SENTINEL, 0, BID_SENTINEL, 0] * 2


def test_mid_price_examples():
    book = BookState()
    apply_event(book, ev(EventKind.SUBMISSION, 1, 100, 100_000, Side.BID))
    apply_event(book, ev(EventKind.SUBMISSION, 2, 50, 100_200, Side.ASK))
    assert mid_price(snapshot(book, 1)) == pytest.approx(10.01)


def test_mid_price_incomplete_raises():
    with pytest.raises(IncompleteRecord):
        mid_price(snapshot(BookState(), 1))


def test_mid_price_matches_tick_arithmetic(rng):
    # independent recomputation on the raw tick integers, then unscaled
    for _ in range(100):
        a = int(rng.integers(1, 10_000_000))
        b = int(rng.integers(1, a + 1))
        book = BookState()
        apply_event(book, ev(EventKind.SUBMISSION, 1, 10, b, Side.BID))
        apply_event(book, ev(EventKind.SUBMISSION, 2, 10, a + b, Side.ASK))
        rec = snapshot(book, 1)
        assert mid_price(rec) == ((a + b) + b) / 2 / 10_000


def _mk_record(complete=True, t=0):
    book = BookState()
    apply_event(book, ev(EventKind.SUBMISSION, 2 * t + 1, 10, 100_000 + t * 100, Side.BID))
    if complete:
        apply_event(book, ev(EventKind.SUBMISSION, 2 * t + 2, 10, 200_000 + t * 100, Side.ASK))
    return snapshot(book, 1, t=t)


def test_sample_records_counting():
    records = [_mk_record(t=t) for t in range(25)]
    out = sample_records(records, 10)
    assert [r.t for r in out] == [9, 19]


def test_sample_records_stride1_identity():
    records = [_mk_record(t=t) for t in range(7)]
    assert sample_records(records, 1) == records


def test_sample_records_drops_incomplete_first():
    records = [_mk_record(complete=(t % 2 == 0), t=t) for t in range(20)]
    out = sample_records(records, 5)
    # 10 complete records -> indices 4 and 9 within the filtered list
    assert len(out) == 2
    assert all(not r.incomplete for r in out)


def test_sample_records_bad_stride():
    with pytest.raises(ConfigError):
        sample_records([], 0)


# ---------------------------------------------------------------------------
# replay oracles
# ---------------------------------------------------------------------------


def brute_force_snapshot(events, upto, levels):
    """From-scratch rebuild with plain dicts, independent of BookState."""
    orders = {}
    for i in range(upto + 1):
        kind = int(events.kind[i])
        oid = int(events.order_id[i])
        if kind == 1:
            orders[oid] = [int(events.side[i]), int(events.price[i]), int(events.size[i])]
        else:
            side, price, rem = orders[oid]
            take = int(events.size[i])
            if kind == 2:
                take = min(take, rem)
            if take >= rem:
                del orders[oid]
            else:
                orders[oid][2] = rem - take
    bids, asks = {}, {}
    for side, price, rem in orders.values():
        (bids if side == 1 else asks)[price] = (bids if side == 1 else asks).get(price, 0) + rem
    row = []
    ask_prices = sorted(asks)
    bid_prices = sorted(bids, reverse=True)
    for lvl in range(levels):
        if lvl < len(ask_prices):
            row += [ask_prices[lvl], asks[ask_prices[lvl]]]
        else:
            row += [ASK_SENTINEL, 0]
        if lvl < len(bid_prices):
            row += [bid_prices[lvl], bids[bid_prices[lvl]]]
        else:
            row += [BID_SENTINEL, 0]
    return row


def test_replay_matches_brute_force_rebuild(small_day):
    n = 1000
    ev_small = EventArrays(
        small_day.events.timestamp[:n],
        small_day.events.kind[:n],
        small_day.events.order_id[:n],
        small_day.events.size[:n],
        small_day.events.price[:n],
        small_day.events.side[:n],
    )
    feats, _ = replay(ev_small, levels=10)
    for i in range(n):
        assert feats[i].tolist() == brute_force_snapshot(ev_small, i, 10), f"event {i}"


def test_replay_lanes_agree_and_match_vendor(small_day):
    feats, inc = replay(small_day.events, levels=10)
    feats_py, inc_py, err, idx = _replay_python(small_day.events, 10)
    assert err == 0
    assert np.array_equal(feats, feats_py)
    assert np.array_equal(inc, inc_py)
    assert np.array_equal(feats, small_day.vendor_snapshots)


def test_replay_deterministic(small_day):
    a, ia = replay(small_day.events)
    b, ib = replay(small_day.events)
    assert a.tobytes() == b.tobytes()
    assert ia.tobytes() == ib.tobytes()


def test_book_sanity_throughout(small_day):
    feats, inc = replay(small_day.events, levels=10)
    complete = feats[inc == 0]
    # best bid < best ask whenever both present
    assert np.all(complete[:, 2] < complete[:, 0])
    # ladder monotonicity and positive depths on complete records
    asks_p = complete[:, 0::4]
    bids_p = complete[:, 2::4]
    assert np.all(np.diff(asks_p, axis=1) > 0)
    assert np.all(np.diff(bids_p, axis=1) < 0)
    assert np.all(complete[:, 1::4] > 0)
    assert np.all(complete[:, 3::4] > 0)
    # mid strictly inside the touch
    mids = (complete[:, 0] + complete[:, 2]) / 2
    assert np.all(mids > complete[:, 2])
    assert np.all(mids < complete[:, 0])


def test_replay_surfaces_unknown_order():
    events = EventArrays(
        [0.0, 1.0],
        [int(EventKind.SUBMISSION), int(EventKind.DELETION)],
        [1, 999],
        [10, 10],
        [100_000, 100_000],
        [1, 1],
    )
    with pytest.raises(UnknownOrderId):
        replay(events)


def test_mid_price_locked_record_equals_that_price():
    # records from external sources may carry ask == bid; mid is total there
    feats = np.array([500_000, 10, 500_000, 20], dtype=np.int64)
    rec = LobRecord(t=0, features=feats, levels=1, incomplete=False)
    assert mid_price(rec) == 50.0

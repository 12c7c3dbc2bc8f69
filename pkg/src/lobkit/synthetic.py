"""Deterministic synthetic order-flow generator.

Produces one day of submission/deletion/execution events plus the
aligned top-L snapshots computed by the generator's own internal book.
Those snapshots serve as an independent reconstruction oracle: the
generator maintains its ladder with its own code path, so agreement
with :mod:`lobkit.book` replay is a real cross-check, not a tautology.

Randomness comes from numpy's counter-based Philox generator keyed on
(seed, stream id), so distinct stocks/days can generate in parallel and
still be reproducible. Draws are consumed from pre-filled blocks to
keep the per-event cost low.

Dynamics: a latent fair value follows a random walk whose increments
carry a slow AR(1) drift on top of white noise. Passive quotes anchor
to the fair value, aggressive executions and stale-quote cancellations
preferentially clear the book side blocking it, and submission sides
tilt with the drift, so the drift is visible both as mid momentum and
as book imbalance. The default parameters are calibrated so that
10-event-sampled mids labelled with theta = 0.002 land near the
published benchmark class mix across horizons (strongly stationary at
k=1, roughly balanced at k=5).
"""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from dataclasses import dataclass, replace

import numpy as np

from .book import ASK_SENTINEL, BID_SENTINEL, EventArrays
from .errors import ConfigError
from .ingest import DayStream


@dataclass(frozen=True)
class SyntheticConfig:
    base_price: float = 7.0  # currency units at the open
    tick: int = 100  # tick size in price-ticks (0.01 currency)
    levels: int = 10  # snapshot depth
    maintain_levels: int = 13  # keep at least this many live levels per side
    seed_levels: int = 14  # ladder depth seeded at the open
    seed_orders_per_level: int = 4
    seed_parked: int = 220  # far-resting orders seeded per side
    mix: tuple[float, float, float] = (0.6, 0.3, 0.1)  # sub / del / exec
    order_size_mean: float = 120.0
    exec_size_mean: float = 260.0
    # latent fair value: dF = mu + eps, per event, in ticks
    drift_rho: float = 0.945  # per-event persistence of mu
    drift_sigma: float = 0.6  # innovation std of mu, ticks/event
    noise_sigma: float = 1.15  # white component of dF, ticks/event
    track_gain: float = 1.2  # fair-value gap -> aggressive side bias
    mean_revert: float = 0.003  # per-event pull of fair value to the day anchor
    burst_p: float = 0.65  # continuation probability of execution sweeps
    stale_cancel_bias: float = 1.2  # cancellations target the blocking side
    refresh_cancel: float = 0.4  # cancellations that refresh a random touch
    cancel_burst_p: float = 0.9  # continuation probability of level pulls
    pull_depth_p: float = 0.9  # chance a refresh pull clears further levels
    join_cap_orders: float = 1.2  # queue-size cap (in mean orders) before quoting deeper
    backfill_spacing: int = 2  # tick spacing of depth-maintenance levels
    front_size_factor: float = 0.35  # at-touch orders are thinner than deep ones
    sub_drift_gain: float = 0.9  # drift -> passive submission side tilt
    size_gap_gain: float = 0.6  # fair-value gap -> deep order size tilt
    quote_offset_p: float = 0.55  # geometric tail for deeper placements
    improve_p: float = 1.0  # chance an improving quote is allowed to improve
    far_park_p: float = 0.45  # submissions resting far outside the visible book
    dt_mean: float = 0.05  # mean inter-event gap, seconds

    def __post_init__(self):
        if not math.isclose(sum(self.mix), 1.0, abs_tol=1e-9):
            raise ConfigError(f"event mix must sum to 1, got {self.mix}")
        if self.tick <= 0 or self.levels < 1:
            raise ConfigError("tick and levels must be positive")


class _BlockRng:
    """Scalar draws served from pre-filled Philox blocks."""

    BLOCK = 1 << 14

    def __init__(self, seed: int, stream: int):
        self._gen = np.random.Generator(np.random.Philox(key=[seed, stream]))
        self._u = self._gen.random(self.BLOCK)
        self._n = self._gen.standard_normal(self.BLOCK)
        self._iu = 0
        self._in = 0

    def uniform(self) -> float:
        if self._iu == self.BLOCK:
            self._u = self._gen.random(self.BLOCK)
            self._iu = 0
        v = self._u[self._iu]
        self._iu += 1
        return v

    def normal(self) -> float:
        if self._in == self.BLOCK:
            self._n = self._gen.standard_normal(self.BLOCK)
            self._in = 0
        v = self._n[self._in]
        self._in += 1
        return v


class _Ladder:
    """One book side for the generator: sorted prices, FIFO order queues."""

    __slots__ = ("prices", "depth", "queues")

    def __init__(self):
        self.prices: list[int] = []  # ascending
        self.depth: dict[int, int] = {}
        self.queues: dict[int, list[int]] = {}

    def add(self, price: int, oid: int, size: int) -> None:
        if price in self.depth:
            self.depth[price] += size
            self.queues[price].append(oid)
        else:
            insort(self.prices, price)
            self.depth[price] = size
            self.queues[price] = [oid]

    def reduce(self, price: int, oid: int, size: int, drop_order: bool) -> None:
        left = self.depth[price] - size
        if left > 0:
            self.depth[price] = left
            if drop_order:
                self.queues[price].remove(oid)
        else:
            self.prices.pop(bisect_left(self.prices, price))
            del self.depth[price]
            del self.queues[price]


def _stream_id(symbol: str, date: str) -> int:
    """Stable 63-bit stream key for (symbol, date)."""
    h = 1469598103934665603  # FNV-1a
    for ch in f"{symbol}|{date}".encode():
        h = ((h ^ ch) * 1099511628211) & ((1 << 63) - 1)
    return h


def generate_synthetic(
    seed: int,
    n_events: int,
    config: SyntheticConfig = SyntheticConfig(),
    symbol: str = "SYN",
    date: str = "2021-07-01",
    with_snapshots: bool = True,
) -> DayStream:
    """Generate one synthetic trading day.

    Deterministic for fixed (seed, config, symbol, date). Every deletion
    and execution references a live order, so replaying the stream never
    raises UnknownOrderId, and the book stays uncrossed throughout.
    """
    if n_events < 1:
        raise ConfigError(f"n_events must be >= 1, got {n_events}")
    cfg = config
    rng = _BlockRng(seed, _stream_id(symbol, date))
    L = cfg.levels
    tick = cfg.tick
    base_ticks = int(round(cfg.base_price * 10_000))

    ts = np.empty(n_events, dtype=np.float64)
    kind = np.empty(n_events, dtype=np.int8)
    oid_col = np.empty(n_events, dtype=np.int64)
    size_col = np.empty(n_events, dtype=np.int64)
    price_col = np.empty(n_events, dtype=np.int64)
    side_col = np.empty(n_events, dtype=np.int8)
    snaps = np.empty((n_events, 4 * L), dtype=np.int64) if with_snapshots else None

    bids = _Ladder()
    asks = _Ladder()
    orders: dict[int, list] = {}  # oid -> [side(+1 bid/-1 ask), price, remaining]
    live: list[int] = []
    live_pos: dict[int, int] = {}

    next_oid = 1
    clock = 34_200.0  # 09:30
    fair = float(base_ticks)  # latent fair value, ticks
    mu = 0.0  # drift, ticks per event
    i = 0

    # burst events would skew a fixed-probability draw away from cfg.mix,
    # so event types are drawn proportionally to their running deficit
    m_sub, m_del, m_exec = cfg.mix
    c_sub = c_del = c_exec = 0

    def draw_size(mean: float) -> int:
        return max(1, int(mean * math.exp(0.6 * rng.normal()) + 0.5))

    def register(side_val: int, price: int, size: int) -> int:
        nonlocal next_oid
        oid = next_oid
        next_oid += 1
        orders[oid] = [side_val, price, size]
        (bids if side_val == 1 else asks).add(price, oid, size)
        live_pos[oid] = len(live)
        live.append(oid)
        return oid

    def drop_live(oid: int) -> None:
        pos = live_pos.pop(oid)
        last = live.pop()
        if last != oid:
            live[pos] = last
            live_pos[last] = pos

    def emit(k: int, oid: int, size: int, price: int, side_val: int) -> None:
        nonlocal i, clock, c_sub, c_del, c_exec
        if k == 1:
            c_sub += 1
        elif k == 2:
            c_del += 1
        else:
            c_exec += 1
        clock += -math.log(1.0 - rng.uniform()) * cfg.dt_mean
        ts[i] = clock
        kind[i] = k
        oid_col[i] = oid
        size_col[i] = size
        price_col[i] = price
        side_col[i] = side_val
        if snaps is not None:
            row = snaps[i]
            na = len(asks.prices)
            nb = len(bids.prices)
            for lvl in range(L):
                b = 4 * lvl
                if lvl < na:
                    p = asks.prices[lvl]
                    row[b] = p
                    row[b + 1] = asks.depth[p]
                else:
                    row[b] = ASK_SENTINEL
                    row[b + 1] = 0
                if lvl < nb:
                    p = bids.prices[nb - 1 - lvl]
                    row[b + 2] = p
                    row[b + 3] = bids.depth[p]
                else:
                    row[b + 2] = BID_SENTINEL
                    row[b + 3] = 0
        i += 1

    def submit(side_val: int, price: int, size: int) -> None:
        oid = register(side_val, price, size)
        emit(1, oid, size, price, side_val)

    def delete_front(ladder: _Ladder) -> None:
        price = ladder.prices[0] if ladder is asks else ladder.prices[-1]
        oid = ladder.queues[price][0]
        side_val, _, remaining = orders[oid]
        ladder.reduce(price, oid, remaining, drop_order=True)
        del orders[oid]
        drop_live(oid)
        emit(2, oid, remaining, price, side_val)

    def first_gap(side_val: int) -> int:
        """First tick offset behind the touch with no resident level.

        An emptied side re-anchors at the fair value, clipped inside the
        opposite touch so the backfill can never cross the book.
        """
        grid_fair = int(math.floor(fair / tick)) * tick
        step = cfg.backfill_spacing * tick
        if side_val == 1:
            if not bids.prices:
                touch = grid_fair + tick
                if asks.prices:
                    touch = min(touch, asks.prices[0])
            else:
                touch = bids.prices[-1] + tick
            for off in range(1, cfg.maintain_levels + 3):
                if touch - off * step not in bids.depth:
                    return touch - off * step
            return touch - (cfg.maintain_levels + 3) * step
        if not asks.prices:
            touch = grid_fair - tick
            if bids.prices:
                touch = max(touch, bids.prices[-1])
        else:
            touch = asks.prices[0] - tick
        for off in range(1, cfg.maintain_levels + 3):
            if touch + off * step not in asks.depth:
                return touch + off * step
        return touch + (cfg.maintain_levels + 3) * step

    # --- seed the ladder (ordinary submission events, replayable) -----
    # dense visible levels plus a parked reservoir approximate the
    # steady-state book so short days spend no time maturing
    for lvl in range(cfg.seed_levels):
        for _ in range(cfg.seed_orders_per_level):
            if i + 2 > n_events:
                break
            submit(1, base_ticks - tick - lvl * tick, draw_size(cfg.order_size_mean))
            submit(-1, base_ticks + tick + lvl * tick, draw_size(cfg.order_size_mean))
    for _ in range(cfg.seed_parked):
        if i + 2 > n_events:
            break
        off = cfg.seed_levels + 1 + int(-math.log(1.0 - rng.uniform()) * 12)
        submit(1, max(tick, base_ticks - tick - off * tick), draw_size(cfg.order_size_mean))
        off = cfg.seed_levels + 1 + int(-math.log(1.0 - rng.uniform()) * 12)
        submit(-1, base_ticks + tick + off * tick, draw_size(cfg.order_size_mean))

    # --- main flow -----------------------------------------------------
    anchor = float(base_ticks)
    mu_cap = 2.0 * cfg.drift_sigma / math.sqrt(max(1e-9, 1.0 - cfg.drift_rho**2))
    while i < n_events:
        mu = cfg.drift_rho * mu + cfg.drift_sigma * rng.normal()
        mu = max(-mu_cap, min(mu_cap, mu))
        fair += (mu + cfg.noise_sigma * rng.normal()) * tick
        fair -= cfg.mean_revert * (fair - anchor)

        best_bid = bids.prices[-1] if bids.prices else None
        best_ask = asks.prices[0] if asks.prices else None
        book_mid = (
            (best_bid + best_ask) / 2.0
            if best_bid is not None and best_ask is not None
            else fair
        )
        gap = (fair - book_mid) / tick  # >0: fair value above the quotes

        lookahead = i + 40
        w_sub = max(0.001, m_sub * lookahead - c_sub)
        w_del = max(0.001, m_del * lookahead - c_del)
        w_exec = max(0.001, m_exec * lookahead - c_exec)
        u = rng.uniform() * (w_sub + w_del + w_exec)
        if u < w_sub or not live:
            # passive submission anchored to fair value
            nb, na = len(bids.prices), len(asks.prices)
            if nb < cfg.maintain_levels or na < cfg.maintain_levels:
                side_val = 1 if nb <= na else -1
                price = first_gap(side_val)
                if price <= 0:
                    price = tick
                submit(side_val, price, draw_size(cfg.order_size_mean))
            elif rng.uniform() < cfg.far_park_p:
                # parked liquidity outside the visible window; keeps the
                # visible book in steady state under the 60/30/10 mix
                side_val = 1 if rng.uniform() < 0.5 else -1
                depth_off = L + 1
                while depth_off < 6 * L and rng.uniform() < 0.85:
                    depth_off += 2
                if side_val == 1:
                    anchor_px = best_bid if best_bid is not None else int(fair)
                    price = anchor_px - depth_off * tick
                else:
                    anchor_px = best_ask if best_ask is not None else int(fair)
                    price = anchor_px + depth_off * tick
                if price <= 0:
                    price = tick
                submit(side_val, price, draw_size(cfg.order_size_mean))
            else:
                bias = max(-0.45, min(0.45, cfg.sub_drift_gain * mu))
                side_val = 1 if rng.uniform() < 0.5 + bias else -1
                offset = 1
                while offset < L and rng.uniform() < cfg.quote_offset_p:
                    offset += 1
                may_improve = rng.uniform() < cfg.improve_p
                if side_val == 1:
                    price = int(math.floor(fair / tick)) * tick - offset * tick
                    if best_bid is not None and price > best_bid + tick:
                        price = best_bid + tick  # improve one tick at a time
                    if best_bid is not None and price > best_bid and not may_improve:
                        price = best_bid  # join instead of improving
                    if best_ask is not None and price >= best_ask:
                        price = best_ask - tick
                else:
                    price = int(math.ceil(fair / tick)) * tick + offset * tick
                    if best_ask is not None and price < best_ask - tick:
                        price = best_ask - tick
                    if best_ask is not None and price < best_ask and not may_improve:
                        price = best_ask  # join instead of improving
                    if best_bid is not None and price <= best_bid:
                        price = best_bid + tick
                cap = cfg.join_cap_orders * cfg.order_size_mean
                table = bids.depth if side_val == 1 else asks.depth
                if table.get(price, 0) > cap:
                    price = price - tick if side_val == 1 else price + tick
                if price <= 0:
                    price = tick
                mean = cfg.order_size_mean * (cfg.front_size_factor if offset <= 1 else 1.0)
                if offset >= 2:
                    # confident liquidity: deep resting size leans with the
                    # fair-value gap, visible in depth without touching the
                    # front-of-book flow
                    lean = cfg.size_gap_gain * math.tanh(gap / 2.0) * side_val
                    mean *= max(0.25, 1.0 + lean)
                submit(side_val, price, draw_size(mean))

        elif u < w_sub + w_del:
            # cancellation: stale quotes blocking fair value go first, and
            # market makers refresh the touch even without a gap
            p_stale = min(0.98, abs(cfg.stale_cancel_bias * gap))
            if rng.uniform() < p_stale:
                ladder = asks if gap > 0 else bids
                if len(ladder.prices) >= cfg.maintain_levels - 2:
                    delete_front(ladder)
                    continue
            if rng.uniform() < cfg.refresh_cancel:
                ladder = asks if rng.uniform() < 0.5 else bids
                if len(ladder.prices) >= cfg.maintain_levels - 2:
                    levels_left = 1
                    while levels_left < 3 and rng.uniform() < cfg.pull_depth_p:
                        levels_left += 1
                    front_price = ladder.prices[0] if ladder is asks else ladder.prices[-1]
                    while i < n_events:
                        delete_front(ladder)
                        if front_price not in ladder.depth:
                            levels_left -= 1
                            if levels_left == 0 or not ladder.prices:
                                break
                            front_price = (
                                ladder.prices[0] if ladder is asks else ladder.prices[-1]
                            )
                            continue
                        if (
                            len(ladder.prices) < cfg.maintain_levels - 2
                            or rng.uniform() >= cfg.cancel_burst_p
                        ):
                            break
                    continue
            pick = live[int(rng.uniform() * len(live))]
            side_val, price, remaining = orders[pick]
            ladder = bids if side_val == 1 else asks
            if remaining > 1 and rng.uniform() < 0.3:
                part = max(1, remaining // 2)
                ladder.reduce(price, pick, part, drop_order=False)
                orders[pick][2] = remaining - part
                emit(2, pick, part, price, side_val)
            else:
                ladder.reduce(price, pick, remaining, drop_order=True)
                del orders[pick]
                drop_live(pick)
                emit(2, pick, remaining, price, side_val)

        else:
            # aggressive order sweeping the touch, tracking fair value;
            # one sweep emits a geometric burst of execution events
            p_hit_ask = 0.5 + max(-0.49, min(0.49, cfg.track_gain * gap / 2.0))
            hit_ask = rng.uniform() < p_hit_ask
            ladder = asks if hit_ask else bids
            if not ladder.prices:
                ladder = bids if hit_ask else asks
            while i < n_events:
                price = ladder.prices[0] if ladder is asks else ladder.prices[-1]
                front = ladder.queues[price][0]
                side_val, _, remaining = orders[front]
                amount = min(remaining, draw_size(cfg.exec_size_mean))
                ladder.reduce(price, front, amount, drop_order=(amount >= remaining))
                if amount >= remaining:
                    del orders[front]
                    drop_live(front)
                else:
                    orders[front][2] = remaining - amount
                emit(3, front, amount, price, side_val)
                if len(ladder.prices) < cfg.maintain_levels - 2 or rng.uniform() >= cfg.burst_p:
                    break

    events = EventArrays(ts, kind, oid_col, size_col, price_col, side_col)
    return DayStream(
        symbol=symbol,
        date=date,
        events=events,
        vendor_snapshots=snaps,
    )


def generate_days(
    seed: int,
    n_days: int,
    events_per_day: int,
    config: SyntheticConfig = SyntheticConfig(),
    symbol: str = "SYN",
    start_date: str = "2021-07-01",
) -> list[DayStream]:
    """Consecutive synthetic days; each day opens where the prior closed.

    Day streams are independent Philox streams (parallel-safe); price
    continuity across days comes from carrying the close forward.
    """
    from datetime import date as _date, timedelta

    y, m, d = (int(x) for x in start_date.split("-"))
    cur = _date(y, m, d)
    days = []
    cfg = config
    for _ in range(n_days):
        while cur.weekday() >= 5:
            cur += timedelta(days=1)
        day = generate_synthetic(seed, events_per_day, cfg, symbol, cur.isoformat())
        days.append(day)
        snaps = day.vendor_snapshots
        complete = snaps[(snaps[:, 0] != ASK_SENTINEL) & (snaps[:, 2] != BID_SENTINEL)]
        if len(complete):
            close_mid = (complete[-1, 0] + complete[-1, 2]) / 2
            cfg = replace(cfg, base_price=float(close_mid) / 10_000)
        cur += timedelta(days=1)
    return days

"""Trading simulation: event-period OHLC bars and a long-only strategy.

Bars aggregate non-overlapping windows of ``period`` mid-prices into
(open, high, low, close); a trailing partial window is dropped. The
strategy holds at most one share: an up signal while flat buys at the
next bar's open, a down signal while long sells at the next bar's open,
stationary does nothing, and any position left at the end liquidates at
the final close. A buy whose fill would land on the final bar is
skipped (there is no later bar to exit on), and a signal on the final
bar never trades at all. Fills are exact, with no fees or slippage, so
final equity equals the initial capital plus the sum of matched
(sell - buy) fills.

Equity is marked to each bar's close. The per-bar strategy loop is a
numba kernel with a plain-Python fallback lane (identical arithmetic).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import NUMBA_ENABLED, njit
from .errors import ConfigError, EmptySeries, SignalBarMismatch
from .labeling import TrendLabel

_BUY, _SELL, _LIQUIDATE = 0, 1, 2
_ACTION_NAMES = ("BUY", "SELL", "LIQUIDATE")


@dataclass(frozen=True)
class OhlcBar:
    open: float
    high: float
    low: float
    close: float
    index: int
    span: tuple[int, int]  # [start, end) indices into the mid series


def ohlc_aggregate(mids: np.ndarray, period: int) -> np.ndarray:
    """(n_bars, 4) array of open/high/low/close over ``period``-wide windows."""
    mids = np.asarray(mids, dtype=np.float64)
    if len(mids) == 0:
        raise EmptySeries("no mids to aggregate")
    if period < 1:
        raise ConfigError(f"period must be >= 1, got {period}")
    n_bars = len(mids) // period
    r = mids[: n_bars * period].reshape(n_bars, period)
    out = np.empty((n_bars, 4), dtype=np.float64)
    out[:, 0] = r[:, 0]
    out[:, 1] = r.max(axis=1)
    out[:, 2] = r.min(axis=1)
    out[:, 3] = r[:, -1]
    return out


def bars_as_records(bars: np.ndarray, period: int) -> list[OhlcBar]:
    return [
        OhlcBar(float(o), float(h), float(l), float(c), i, (i * period, (i + 1) * period))
        for i, (o, h, l, c) in enumerate(bars)
    ]


@dataclass
class Trade:
    bar_index: int
    action: str
    fill_price: float
    equity_after: float


@dataclass
class EquityCurve:
    equity: np.ndarray  # marked to close, one entry per bar
    trades: list[Trade]
    initial_capital: float
    final_return_pct: float = field(init=False)

    def __post_init__(self):
        final = float(self.equity[-1]) if len(self.equity) else self.initial_capital
        self.final_return_pct = (final - self.initial_capital) / self.initial_capital * 100.0


def _strategy_python(signals, opens, closes, capital, shares):
    n = len(opens)
    equity = np.empty(n, dtype=np.float64)
    t_bar = np.empty(n + 1, dtype=np.int64)
    t_act = np.empty(n + 1, dtype=np.int64)
    t_fill = np.empty(n + 1, dtype=np.float64)
    t_eq = np.empty(n + 1, dtype=np.float64)
    n_trades = 0

    cash = capital
    pos = 0
    pending = -1  # -1 none, 0 buy, 1 sell
    for i in range(n):
        if pending == _BUY and i < n - 1:
            cash -= opens[i] * shares
            pos += shares
            t_bar[n_trades] = i
            t_act[n_trades] = _BUY
            t_fill[n_trades] = opens[i]
            t_eq[n_trades] = cash + pos * opens[i]
            n_trades += 1
        elif pending == _SELL:
            cash += opens[i] * shares
            pos -= shares
            t_bar[n_trades] = i
            t_act[n_trades] = _SELL
            t_fill[n_trades] = opens[i]
            t_eq[n_trades] = cash + pos * opens[i]
            n_trades += 1
        pending = -1

        sig = signals[i]
        if i < n - 1:
            if sig == 0 and pos == 0:  # up, flat
                pending = _BUY
            elif sig == 2 and pos > 0:  # down, long
                pending = _SELL

        if i == n - 1 and pos > 0:
            cash += closes[i] * pos
            t_bar[n_trades] = i
            t_act[n_trades] = _LIQUIDATE
            t_fill[n_trades] = closes[i]
            t_eq[n_trades] = cash
            n_trades += 1
            pos = 0
        equity[i] = cash + pos * closes[i]
    return equity, t_bar, t_act, t_fill, t_eq, n_trades


if NUMBA_ENABLED:
    _strategy_kernel = njit(cache=True)(_strategy_python)
else:  # pragma: no cover
    _strategy_kernel = None


def run_strategy(
    signals: np.ndarray,
    bars: np.ndarray,
    capital: float = 10_000.0,
    shares_per_trade: int = 1,
) -> EquityCurve:
    """Run the long-only signal strategy over aligned signals and bars.

    ``signals`` holds one trend class per bar (0=U, 1=S, 2=D);
    ``bars`` is the (n, 4) OHLC array from :func:`ohlc_aggregate`.
    """
    bars = np.asarray(bars, dtype=np.float64)
    sig = np.asarray(
        [int(s) for s in signals] if not isinstance(signals, np.ndarray) else signals,
        dtype=np.int8,
    )
    if bars.ndim != 2 or bars.shape[1] != 4:
        raise ConfigError(f"bars must be (n, 4), got {bars.shape}")
    if len(sig) != len(bars):
        raise SignalBarMismatch(f"{len(sig)} signals vs {len(bars)} bars")
    if capital <= 0:
        raise ConfigError("capital must be positive")
    if len(bars) == 0:
        raise EmptySeries("no bars")

    impl = _strategy_kernel if NUMBA_ENABLED else _strategy_python
    equity, t_bar, t_act, t_fill, t_eq, n_trades = impl(
        sig, bars[:, 0].copy(), bars[:, 3].copy(), float(capital), int(shares_per_trade)
    )
    trades = [
        Trade(int(t_bar[j]), _ACTION_NAMES[int(t_act[j])], float(t_fill[j]), float(t_eq[j]))
        for j in range(n_trades)
    ]
    return EquityCurve(equity=equity, trades=trades, initial_capital=float(capital))


def write_trade_log(curve: EquityCurve, path) -> None:
    with open(path, "w") as fh:
        fh.write("bar_index,action,fill_price,equity_after\n")
        for t in curve.trades:
            fh.write(f"{t.bar_index},{t.action},{t.fill_price:.9g},{t.equity_after:.9g}\n")


def returns_report(curves: dict[str, dict[int, EquityCurve]]) -> dict:
    """Per-stock distribution of final returns across seeds."""
    report = {}
    for stock, by_seed in curves.items():
        rets = np.array(
            [by_seed[s].final_return_pct for s in sorted(by_seed)], dtype=np.float64
        )
        report[stock] = {
            "seeds": sorted(by_seed),
            "returns_pct": rets.tolist(),
            "min": float(rets.min()),
            "median": float(np.median(rets)),
            "max": float(rets.max()),
        }
    return report


def write_returns_csv(report: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write("stock,min_return_pct,median_return_pct,max_return_pct,n_seeds\n")
        for stock in sorted(report):
            r = report[stock]
            fh.write(
                f"{stock},{r['min']:.6g},{r['median']:.6g},{r['max']:.6g},{len(r['seeds'])}\n"
            )


def signals_from_labels(labels: np.ndarray) -> np.ndarray:
    """Convenience: trend labels already use the signal encoding."""
    return np.asarray([int(TrendLabel(int(v))) for v in np.asarray(labels)], dtype=np.int8)

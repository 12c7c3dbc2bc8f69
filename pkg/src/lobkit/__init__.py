"""lobkit: limit-order-book trend-prediction pipeline.

Book reconstruction from event streams, threshold trend labelling,
normalized benchmark dataset construction, a native baseline classifier
with a prediction-file interface for external models, ensembling,
reliability scoring, and signal backtesting.
"""

from ._accel import NUMBA_ENABLED, active_lane
from .book import (
    ASK_SENTINEL,
    BID_SENTINEL,
    PRICE_SCALE,
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
)
from .ingest import DayStream, Fi2010Set, parse_fi2010, parse_lobster_day
from .labeling import (
    LabelParams,
    TrendLabel,
    balance_threshold,
    class_distribution,
    future_avg_mid,
    label,
    label_series,
)
from .synthetic import SyntheticConfig, generate_days, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "ASK_SENTINEL",
    "BID_SENTINEL",
    "PRICE_SCALE",
    "BookState",
    "DayStream",
    "EventArrays",
    "EventKind",
    "Fi2010Set",
    "LabelParams",
    "LobEvent",
    "LobRecord",
    "NUMBA_ENABLED",
    "Side",
    "SyntheticConfig",
    "TrendLabel",
    "active_lane",
    "apply_event",
    "balance_threshold",
    "class_distribution",
    "future_avg_mid",
    "generate_days",
    "generate_synthetic",
    "label",
    "label_series",
    "mid_price",
    "parse_fi2010",
    "parse_lobster_day",
    "replay",
    "sample_records",
    "snapshot",
    "__version__",
]

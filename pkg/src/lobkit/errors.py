"""Exception taxonomy.

Three broad families, used by the CLI to pick exit codes: config/usage
problems (exit 1), data problems (exit 2), and internal invariant
violations (exit 3). Library code raises the specific subclasses.
"""


class LobkitError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LobkitError):
    """Bad user input: unknown options, invalid parameter combinations."""


class DataError(LobkitError):
    """Malformed, inconsistent, or out-of-contract input data."""


class InternalError(LobkitError):
    """A library invariant was violated; indicates a bug, not bad input."""


# --- book state machine ----------------------------------------------------


class UnknownOrderId(DataError):
    """Deletion/execution referenced an order the book never saw."""


class CrossedBookAfterApply(DataError):
    """Applying an event left best bid >= best ask."""


class IncompleteRecord(DataError):
    """Operation requires level-1 quotes on both sides."""


# --- ingest ----------------------------------------------------------------


class RowCountMismatch(DataError):
    """Message and orderbook files disagree on row count."""


class MalformedRow(DataError):
    """Unparseable row; carries the 1-based line number."""

    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {detail}" if detail else f"line {line_no}")


class NonMonotonicTimestamp(DataError):
    """Event timestamps decreased within one day's stream."""


class UnexpectedRowCount(DataError):
    """Benchmark matrix does not have the documented row layout."""


class LabelOutOfRange(DataError):
    """Benchmark label outside the {1, 2, 3} encoding."""


# --- labelling -------------------------------------------------------------


class HorizonOutOfBounds(DataError):
    """Fewer than k future samples available at the requested index."""


class EmptyInput(DataError):
    """Operation needs at least one element."""


class DegenerateSeries(DataError):
    """Constant mid series: every threshold yields 100% stationary."""


# --- dataset ---------------------------------------------------------------


class InsufficientDays(DataError):
    """Fewer trading days than the split specification requires."""


class ZeroVariance(DataError):
    """A feature family is constant; z-score undefined."""


class SeriesTooShort(DataError):
    """Series shorter than window + horizon."""


class IncompatibleParams(DataError):
    """Per-stock bundles disagree on (k, theta, h, stride, L)."""


class BadMagic(DataError):
    """File does not start with the dataset magic bytes."""


class VersionUnsupported(DataError):
    """Dataset file version newer than this reader."""


class TruncatedPayload(DataError):
    """Dataset file ends before the declared payload."""


class ChecksumMismatch(DataError):
    """Stored checksum does not match the payload."""


# --- predictor -------------------------------------------------------------


class DimensionMismatch(ConfigError):
    """Model input width does not match the observation width."""


class NonFiniteLoss(LobkitError):
    """Training diverged; carries the epoch/batch where loss went non-finite."""

    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")


class MissingHeader(DataError):
    """Prediction file lacks the column header row."""


class RowProbabilityInvalid(DataError):
    """Probability triplet is not a simplex within tolerance."""


class DuplicateIndex(DataError):
    """Prediction file repeats a sample index."""


# --- ensemble / metrics ----------------------------------------------------


class MisalignedSets(DataError):
    """Prediction sets do not cover the same samples in the same order."""


class EmptyMatrix(DataError):
    """Confusion matrix has zero total count."""


class NoDeclaredHorizons(ConfigError):
    """Score inputs declare no horizons to compare."""


# --- backtest --------------------------------------------------------------


class EmptySeries(DataError):
    """Price series is empty."""


class SignalBarMismatch(DataError):
    """Signal count does not match bar count."""

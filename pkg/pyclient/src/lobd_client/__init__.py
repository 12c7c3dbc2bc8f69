"""Thin reference client for LOBD dataset files and prediction CSVs.

Lets external model code load a LOBD dataset into numpy arrays and emit
prediction files the evaluation pipeline accepts, with no dependency on
the producing package. All semantics live in the producer; this client
only decodes and encodes the two interchange formats.

LOBD layout (little-endian): magic "LOBD", version u16, u32-length-
prefixed UTF-8 JSON metadata, float32 row-major tensor (n, h, 4L) with
the train/val/test splits concatenated, n label bytes (0=U 1=S 2=D),
and a trailing CRC32C over every preceding byte.
"""

from .reader import ClientDataset, load_dataset
from .writer import save_predictions
from .errors import (
    BadMagic,
    ChecksumMismatch,
    ClientError,
    InvalidSimplexRow,
    TruncatedPayload,
    VersionUnsupported,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagic",
    "ChecksumMismatch",
    "ClientDataset",
    "ClientError",
    "InvalidSimplexRow",
    "TruncatedPayload",
    "VersionUnsupported",
    "load_dataset",
    "save_predictions",
    "__version__",
]
